//! Quantized body-configuration descriptors and their similarities.
//!
//! A body is summarized by 14 joints (head, neck, then left/right pairs of
//! shoulders, elbows, wrists, coxae, knees, ankles). For every ordered pair
//! of distinct joints we code the offset vector twice: its magnitude,
//! normalized by the largest pairwise joint distance and quantized into
//! uniform bins, and its direction, quantized into equal angular sectors.
//! The two 14x13 integer matrices are invariant to translation and uniform
//! scaling, which is exactly what a cross-camera comparison needs.

use crate::error::{Error, Result};

/// Number of body joints in a [`JointSet`].
pub const N_JOINTS: usize = 14;

/// Human-readable joint names in storage order.
pub const JOINT_NAMES: [&str; N_JOINTS] = [
    "head",
    "neck",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_coxa",
    "right_coxa",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

/// Pixel coordinates of the 14 joints plus a per-joint validity flag
/// (estimators may fail on occluded joints).
#[derive(Debug, Clone, PartialEq)]
pub struct JointSet {
    pub coords: [(f64, f64); N_JOINTS],
    pub valid: [bool; N_JOINTS],
}

impl JointSet {
    /// Build from optional per-joint coordinates; `None` marks an invalid
    /// joint.
    pub fn from_options(joints: &[Option<(f64, f64)>]) -> Result<Self> {
        if joints.len() != N_JOINTS {
            return Err(Error::InvalidArgument(format!(
                "expected {N_JOINTS} joints, got {}",
                joints.len()
            )));
        }
        let mut coords = [(0.0, 0.0); N_JOINTS];
        let mut valid = [false; N_JOINTS];
        for (i, j) in joints.iter().enumerate() {
            if let Some((x, y)) = *j {
                if !x.is_finite() || !y.is_finite() {
                    return Err(Error::Numerical(format!(
                        "joint {} has non-finite coordinates",
                        JOINT_NAMES[i]
                    )));
                }
                coords[i] = (x, y);
                valid[i] = true;
            }
        }
        Ok(JointSet { coords, valid })
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Quantized pairwise-offset descriptor of one body.
///
/// Row `i` codes the 13 joints `j != i` in ascending `j` order. Entries are
/// bin numbers in `1..=n_bins`; `0` marks a pair involving an invalid
/// joint.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PoseContext {
    /// Magnitude bins.
    pub psi: [[u8; N_JOINTS - 1]; N_JOINTS],
    /// Angle bins.
    pub phi: [[u8; N_JOINTS - 1]; N_JOINTS],
    pub n_bins: u8,
}

/// Compute the descriptor of a joint set.
///
/// Offset magnitudes are divided by the largest distance between two valid
/// joints, then quantized into `n_bins` uniform bins over `[0, 1]` (the
/// value 1 falls into the last bin). Offset angles are measured from the
/// positive x axis, counterclockwise in image coordinates (y grows
/// downward), and quantized into `n_bins` equal sectors of `[0, 360)`
/// degrees.
pub fn compute_pose_context(joints: &JointSet, n_bins: u8) -> Result<PoseContext> {
    if n_bins < 2 {
        return Err(Error::InvalidArgument(format!("n_bins must be >= 2, got {n_bins}")));
    }
    if joints.n_valid() < 2 {
        return Err(Error::InsufficientData(format!(
            "pose descriptor needs >= 2 valid joints, got {}",
            joints.n_valid()
        )));
    }
    let mut max_dist: f64 = 0.0;
    for i in 0..N_JOINTS {
        if !joints.valid[i] {
            continue;
        }
        for j in (i + 1)..N_JOINTS {
            if !joints.valid[j] {
                continue;
            }
            let (xi, yi) = joints.coords[i];
            let (xj, yj) = joints.coords[j];
            max_dist = max_dist.max(((xj - xi).powi(2) + (yj - yi).powi(2)).sqrt());
        }
    }
    if max_dist == 0.0 {
        return Err(Error::Numerical("all valid joints coincide".into()));
    }

    let bins = n_bins as f64;
    let mut psi = [[0u8; N_JOINTS - 1]; N_JOINTS];
    let mut phi = [[0u8; N_JOINTS - 1]; N_JOINTS];
    for i in 0..N_JOINTS {
        for j in 0..N_JOINTS {
            if j == i {
                continue;
            }
            let col = if j < i { j } else { j - 1 };
            if !joints.valid[i] || !joints.valid[j] {
                continue;
            }
            let (xi, yi) = joints.coords[i];
            let (xj, yj) = joints.coords[j];
            let dx = xj - xi;
            let dy = yj - yi;
            let mag = (dx * dx + dy * dy).sqrt() / max_dist;
            psi[i][col] = ((mag * bins).floor() as u8).min(n_bins - 1) + 1;
            let mut theta = dy.atan2(dx);
            if theta < 0.0 {
                theta += std::f64::consts::TAU;
            }
            let sector = ((theta / std::f64::consts::TAU) * bins).floor() as u8;
            phi[i][col] = sector.min(n_bins - 1) + 1;
        }
    }
    Ok(PoseContext { psi, phi, n_bins })
}

/// Squared cyclic distance between two bins on a ring of `n_bins` bins:
/// `alpha^2` where `alpha = min(|b1 - b2|, n_bins - |b1 - b2|)`.
pub fn cyclic_bin_distance(b1: u8, b2: u8, n_bins: u8) -> Result<f64> {
    if b1 == 0 || b1 > n_bins || b2 == 0 || b2 > n_bins {
        return Err(Error::InvalidArgument(format!(
            "bins must lie in 1..={n_bins}, got {b1} and {b2}"
        )));
    }
    let diff = b1.abs_diff(b2);
    let alpha = diff.min(n_bins - diff) as f64;
    Ok(alpha * alpha)
}

/// Magnitude- and angle-channel similarities between two descriptors,
/// averaged over the entries that are valid in both. Each channel maps a
/// per-entry distance through `exp(-d)`, so both factors lie in `(0, 1]`.
pub fn pose_similarity_parts(a: &PoseContext, b: &PoseContext) -> Result<(f64, f64)> {
    if a.n_bins != b.n_bins {
        return Err(Error::Dimension(format!(
            "descriptors quantized with {} vs {} bins",
            a.n_bins, b.n_bins
        )));
    }
    let mut s_mag = 0.0;
    let mut s_ang = 0.0;
    let mut count = 0usize;
    for i in 0..N_JOINTS {
        for c in 0..N_JOINTS - 1 {
            let (pa, pb) = (a.psi[i][c], b.psi[i][c]);
            if pa == 0 || pb == 0 {
                continue;
            }
            s_mag += (-(pa.abs_diff(pb) as f64)).exp();
            s_ang += (-cyclic_bin_distance(a.phi[i][c], b.phi[i][c], a.n_bins)?).exp();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InsufficientData(
            "descriptors share no jointly valid entries".into(),
        ));
    }
    Ok((s_mag / count as f64, s_ang / count as f64))
}

/// Overall similarity of two bodies: the product of the magnitude and angle
/// channel similarities. Lies in `(0, 1]`; equal descriptors give exactly 1.
pub fn pose_similarity(a: &PoseContext, b: &PoseContext) -> Result<f64> {
    let (s_mag, s_ang) = pose_similarity_parts(a, b)?;
    Ok(s_mag * s_ang)
}

/// Similarity between two image *pairs*: the probe bodies compared times
/// the gallery bodies compared.
pub fn pair_similarity(
    probe_a: &PoseContext,
    gallery_a: &PoseContext,
    probe_b: &PoseContext,
    gallery_b: &PoseContext,
) -> Result<f64> {
    Ok(pose_similarity(probe_a, probe_b)? * pose_similarity(gallery_a, gallery_b)?)
}
