//! Binary PPM (P6) image codec — the raw-pixel ingestion format.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::ImageBuf;

/// Encode an image as a binary PPM (P6, maxval 255). The output is
/// byte-deterministic for a given image.
pub fn encode_ppm(img: &ImageBuf) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn write_ppm(img: &ImageBuf, path: &Path) -> Result<()> {
    std::fs::write(path, encode_ppm(img))?;
    Ok(())
}

/// Decode a binary PPM. Accepts arbitrary whitespace and `#` comments in
/// the header, as the format allows; requires maxval 255.
pub fn parse_ppm(bytes: &[u8], origin: &str) -> Result<ImageBuf> {
    let bad = |what: &str| Error::ImageFile(format!("{origin}: {what}"));
    if bytes.len() < 2 || &bytes[0..2] != b"P6" {
        return Err(bad("not a binary PPM (missing P6 magic)"));
    }
    let mut pos = 2usize;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comment lines between header fields.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if pos == start {
            return Err(bad("expected a decimal header field"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("digits are ASCII");
        *field = text.parse().map_err(|_| bad("header field out of range"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(bad(&format!("unsupported maxval {maxval}, expected 255")));
    }
    if width == 0 || height == 0 {
        return Err(bad("zero image dimension"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(bad("missing separator before pixel data"));
    }
    pos += 1;
    let expected = width * height * 3;
    let raster = &bytes[pos..];
    if raster.len() != expected {
        return Err(bad(&format!(
            "expected {expected} raster bytes for {width}x{height}, found {}",
            raster.len()
        )));
    }
    ImageBuf::from_raw(width as u32, height as u32, raster.to_vec())
}

pub fn read_ppm(path: &Path) -> Result<ImageBuf> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = std::fs::read(path)?;
    parse_ppm(&bytes, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> ImageBuf {
        let mut img = ImageBuf::new(w, h).unwrap();
        for y in 0..h {
            for x in 0..w {
                img.set_rgb(x, y, [(x % 256) as u8, (y % 256) as u8, ((x + y) % 256) as u8]);
            }
        }
        img
    }

    #[test]
    fn round_trip_preserves_every_byte() {
        let img = gradient(48, 128);
        let encoded = encode_ppm(&img);
        let back = parse_ppm(&encoded, "test").unwrap();
        assert_eq!(back, img);
        assert_eq!(encode_ppm(&back), encoded);
    }

    #[test]
    fn header_comments_and_whitespace_are_accepted() {
        let mut bytes = b"P6 # comment\n# another line\n 2\t3 # wide\n255\n".to_vec();
        bytes.extend_from_slice(&[7u8; 18]);
        let img = parse_ppm(&bytes, "test").unwrap();
        assert_eq!((img.width, img.height), (2, 3));
        assert_eq!(img.rgb(1, 2), [7, 7, 7]);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(parse_ppm(b"P5\n1 1\n255\nxxx", "t").is_err());
        assert!(parse_ppm(b"P6\n2 2\n255\nshort", "t").is_err());
        assert!(parse_ppm(b"P6\n1 1\n65535\n??????", "t").is_err());
        assert!(parse_ppm(b"P6\n1 1\n", "t").is_err());
        assert!(parse_ppm(b"P6\n0 4\n255\n", "t").is_err());
    }

    #[test]
    fn missing_file_is_a_distinct_error() {
        let err = read_ppm(Path::new("/nonexistent/deep/image.ppm")).unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)));
    }

    #[test]
    fn write_read_cycle_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let img = gradient(5, 4);
        write_ppm(&img, &path).unwrap();
        assert_eq!(read_ppm(&path).unwrap(), img);
    }
}
