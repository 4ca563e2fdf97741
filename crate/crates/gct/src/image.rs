//! Minimal in-memory RGB image.

use crate::error::{Error, Result};

/// Tightly packed 8-bit RGB image, row-major, no padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuf {
    pub width: u32,
    pub height: u32,
    /// `3 * width * height` bytes, RGB triplets in row-major order.
    pub data: Vec<u8>,
}

impl ImageBuf {
    /// Allocate a black image.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(ImageBuf {
            width,
            height,
            data: vec![0; 3 * width as usize * height as usize],
        })
    }

    /// Allocate an image filled with one color.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let mut img = ImageBuf::new(width, height)?;
        for px in img.data.chunks_exact_mut(3) {
            px.copy_from_slice(&rgb);
        }
        Ok(img)
    }

    /// Construct from raw RGB bytes.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let expected = 3 * width as usize * height as usize;
        if expected == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "raw image buffer has {} bytes, expected {expected}",
                data.len()
            )));
        }
        Ok(ImageBuf { width, height, data })
    }

    #[inline]
    fn idx(&self, x: u32, y: u32) -> usize {
        3 * (y as usize * self.width as usize + x as usize)
    }

    #[inline]
    pub fn rgb(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.idx(x, y);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_rgb(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = self.idx(x, y);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_round_trip() {
        let mut img = ImageBuf::new(4, 3).unwrap();
        img.set_rgb(2, 1, [10, 20, 30]);
        assert_eq!(img.rgb(2, 1), [10, 20, 30]);
        assert_eq!(img.rgb(0, 0), [0, 0, 0]);
    }

    #[test]
    fn raw_size_is_checked() {
        assert!(ImageBuf::from_raw(2, 2, vec![0; 11]).is_err());
        assert!(ImageBuf::from_raw(2, 2, vec![0; 12]).is_ok());
        assert!(ImageBuf::new(0, 5).is_err());
    }
}
