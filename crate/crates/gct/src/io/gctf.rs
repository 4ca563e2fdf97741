//! Binary per-patch feature file codec ("GCTF").
//!
//! Layout: magic bytes `GCTF`, little-endian u32 version (currently 1),
//! u32 patch count, u32 feature dimension, then `count * dim` 32-bit
//! little-endian floats in patch-major order. The format exists so any
//! external feature extractor can hand patch features to this pipeline
//! with a few lines of code.

use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};

pub const GCTF_MAGIC: &[u8; 4] = b"GCTF";
pub const GCTF_VERSION: u32 = 1;

/// Encode per-patch feature vectors. All vectors must share one dimension;
/// values are stored as f32.
pub fn encode_gctf(features: &[DVector<f64>]) -> Result<Vec<u8>> {
    if features.is_empty() {
        return Err(Error::InvalidArgument("cannot encode zero feature vectors".into()));
    }
    let dim = features[0].len();
    if dim == 0 {
        return Err(Error::Dimension("feature vectors must be non-empty".into()));
    }
    let mut out = Vec::with_capacity(16 + 4 * features.len() * dim);
    out.extend_from_slice(GCTF_MAGIC);
    out.extend_from_slice(&GCTF_VERSION.to_le_bytes());
    out.extend_from_slice(&(features.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for (i, f) in features.iter().enumerate() {
        if f.len() != dim {
            return Err(Error::Dimension(format!(
                "feature vector {i} has dim {}, expected {dim}",
                f.len()
            )));
        }
        for v in f.iter() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_gctf(features: &[DVector<f64>], path: &Path) -> Result<()> {
    std::fs::write(path, encode_gctf(features)?)?;
    Ok(())
}

pub fn parse_gctf(bytes: &[u8], origin: &str) -> Result<Vec<DVector<f64>>> {
    let bad = |what: String| Error::FeatureFile(format!("{origin}: {what}"));
    if bytes.len() < 16 {
        return Err(bad("file shorter than the 16-byte header".into()));
    }
    if &bytes[0..4] != GCTF_MAGIC {
        return Err(bad("missing GCTF magic".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != GCTF_VERSION {
        return Err(bad(format!("unsupported version {version}, expected {GCTF_VERSION}")));
    }
    let count = word(8) as usize;
    let dim = word(12) as usize;
    if count == 0 || dim == 0 {
        return Err(bad(format!("degenerate shape {count}x{dim}")));
    }
    let expected = 16 + 4 * count * dim;
    if bytes.len() != expected {
        return Err(bad(format!(
            "expected {expected} bytes for {count} patches of dim {dim}, found {}",
            bytes.len()
        )));
    }
    let mut features = Vec::with_capacity(count);
    let mut at = 16;
    for _ in 0..count {
        let mut v = DVector::zeros(dim);
        for d in 0..dim {
            let raw = f32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
            if !raw.is_finite() {
                return Err(bad(format!("non-finite value at byte {at}")));
            }
            v[d] = raw as f64;
            at += 4;
        }
        features.push(v);
    }
    Ok(features)
}

pub fn read_gctf(path: &Path) -> Result<Vec<DVector<f64>>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = std::fs::read(path)?;
    parse_gctf(&bytes, &path.display().to_string())
}
