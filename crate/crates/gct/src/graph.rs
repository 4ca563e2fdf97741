//! Patch decomposition and attributed patch graphs.
//!
//! An image is covered by a dense grid of fixed-size patches laid out on a
//! stride lattice. Patch rows are partitioned into contiguous stripes; the
//! matcher later works one stripe at a time. Each patch becomes a graph node
//! carrying its normalized center position and an appearance feature vector.

use nalgebra::DVector;

use crate::config::PatchConfig;
use crate::error::{Error, Result};
use crate::image::ImageBuf;

/// Dense patch-grid geometry for one image size.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PatchLayout {
    pub image_w: u32,
    pub image_h: u32,
    pub patch_w: u32,
    pub patch_h: u32,
    pub stride_w: u32,
    pub stride_h: u32,
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_stripes: usize,
    /// Inclusive `(first_row, last_row)` span of each stripe.
    stripe_spans: Vec<(usize, usize)>,
}

impl PatchLayout {
    /// Build the grid: anchors at every stride multiple such that the patch
    /// fits inside the image, so `n_rows = (h - patch_h) / stride_h + 1` and
    /// likewise for columns. Rows are split into `n_stripes` contiguous
    /// bands as evenly as possible, earlier stripes taking the remainder.
    pub fn new(
        image_w: u32,
        image_h: u32,
        patch_w: u32,
        patch_h: u32,
        stride_w: u32,
        stride_h: u32,
        n_stripes: usize,
    ) -> Result<Self> {
        if patch_w == 0 || patch_h == 0 || stride_w == 0 || stride_h == 0 {
            return Err(Error::InvalidArgument(
                "patch dimensions and strides must be >= 1".into(),
            ));
        }
        if patch_w > image_w || patch_h > image_h {
            return Err(Error::Dimension(format!(
                "patch {patch_w}x{patch_h} does not fit in image {image_w}x{image_h}"
            )));
        }
        if n_stripes == 0 {
            return Err(Error::InvalidArgument("n_stripes must be >= 1".into()));
        }
        let n_rows = ((image_h - patch_h) / stride_h) as usize + 1;
        let n_cols = ((image_w - patch_w) / stride_w) as usize + 1;
        if n_stripes > n_rows {
            return Err(Error::InvalidArgument(format!(
                "cannot cut {n_rows} patch rows into {n_stripes} stripes"
            )));
        }
        let base = n_rows / n_stripes;
        let rem = n_rows % n_stripes;
        let mut stripe_spans = Vec::with_capacity(n_stripes);
        let mut row = 0;
        for s in 0..n_stripes {
            let len = base + usize::from(s < rem);
            stripe_spans.push((row, row + len - 1));
            row += len;
        }
        Ok(PatchLayout {
            image_w,
            image_h,
            patch_w,
            patch_h,
            stride_w,
            stride_h,
            n_rows,
            n_cols,
            n_stripes,
            stripe_spans,
        })
    }

    /// Build a layout for an image size from a [`PatchConfig`].
    pub fn from_config(cfg: &PatchConfig, image_w: u32, image_h: u32) -> Result<Self> {
        PatchLayout::new(
            image_w,
            image_h,
            cfg.width,
            cfg.height,
            cfg.stride_w,
            cfg.stride_h,
            cfg.n_stripes,
        )
    }

    pub fn n_patches(&self) -> usize {
        self.n_rows * self.n_cols
    }

    /// Row-major patch index.
    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        row * self.n_cols + col
    }

    pub fn row_of(&self, index: usize) -> usize {
        index / self.n_cols
    }

    pub fn col_of(&self, index: usize) -> usize {
        index % self.n_cols
    }

    /// Top-left pixel of a patch.
    pub fn anchor(&self, index: usize) -> (u32, u32) {
        let r = self.row_of(index) as u32;
        let c = self.col_of(index) as u32;
        (c * self.stride_w, r * self.stride_h)
    }

    /// Pixel-space center of a patch. Always strictly inside the image.
    pub fn center(&self, index: usize) -> (f64, f64) {
        let (ax, ay) = self.anchor(index);
        (
            ax as f64 + self.patch_w as f64 / 2.0,
            ay as f64 + self.patch_h as f64 / 2.0,
        )
    }

    /// Inclusive row span `(first, last)` of one stripe.
    pub fn stripe_rows(&self, stripe: usize) -> Result<(usize, usize)> {
        self.stripe_spans.get(stripe).copied().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "stripe index {stripe} out of range ({} stripes)",
                self.n_stripes
            ))
        })
    }

    /// Which stripe a patch row belongs to.
    pub fn stripe_of_row(&self, row: usize) -> Result<usize> {
        self.stripe_spans
            .iter()
            .position(|&(a, b)| row >= a && row <= b)
            .ok_or_else(|| Error::InvalidArgument(format!("patch row {row} out of range")))
    }

    /// Row-major node indices of every patch whose row lies in
    /// `first..=last`.
    pub fn nodes_in_rows(&self, first: usize, last: usize) -> Vec<usize> {
        let mut nodes = Vec::with_capacity((last + 1 - first) * self.n_cols);
        for r in first..=last {
            for c in 0..self.n_cols {
                nodes.push(self.index(r, c));
            }
        }
        nodes
    }

    /// True when two layouts describe the same grid (so their patch indices
    /// are directly comparable).
    pub fn same_grid(&self, other: &PatchLayout) -> bool {
        self == other
    }
}

/// Per-channel color histograms over each patch.
///
/// Each channel histogram is L1-normalized (it sums to 1), and the three
/// channel histograms are concatenated: `3 * bins` values per patch. Global
/// scale normalization happens later, when the graph is built.
pub fn color_histogram_features(
    img: &ImageBuf,
    layout: &PatchLayout,
    bins: usize,
) -> Result<Vec<DVector<f64>>> {
    if bins == 0 || bins > 256 {
        return Err(Error::InvalidArgument(format!(
            "bins per channel must be in 1..=256, got {bins}"
        )));
    }
    if img.width != layout.image_w || img.height != layout.image_h {
        return Err(Error::LayoutMismatch(format!(
            "image is {}x{}, layout expects {}x{}",
            img.width, img.height, layout.image_w, layout.image_h
        )));
    }
    let area = (layout.patch_w * layout.patch_h) as f64;
    let mut features = Vec::with_capacity(layout.n_patches());
    for p in 0..layout.n_patches() {
        let (ax, ay) = layout.anchor(p);
        let mut hist = vec![0.0f64; 3 * bins];
        for y in ay..ay + layout.patch_h {
            for x in ax..ax + layout.patch_w {
                let rgb = img.rgb(x, y);
                for (c, &v) in rgb.iter().enumerate() {
                    hist[c * bins + (v as usize * bins) / 256] += 1.0;
                }
            }
        }
        for v in hist.iter_mut() {
            *v /= area;
        }
        features.push(DVector::from_vec(hist));
    }
    Ok(features)
}

/// Fully attributed patch graph of one image.
///
/// Node order follows the layout's row-major patch order. Positions are the
/// patch centers normalized by the image dimensions, so they live in
/// `[0, 1]^2` regardless of resolution; features are L2-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedGraph {
    pub layout: PatchLayout,
    /// Normalized `(x, y)` center per node.
    pub positions: Vec<(f64, f64)>,
    /// Unit-norm feature vector per node (all-zero inputs stay zero).
    pub features: Vec<DVector<f64>>,
}

impl AttributedGraph {
    /// Attach one feature vector per patch and normalize attributes.
    pub fn build(layout: PatchLayout, features: Vec<DVector<f64>>) -> Result<Self> {
        if features.len() != layout.n_patches() {
            return Err(Error::Dimension(format!(
                "{} feature vectors for {} patches",
                features.len(),
                layout.n_patches()
            )));
        }
        let dim = features.first().map(|f| f.len()).unwrap_or(0);
        let mut normalized = Vec::with_capacity(features.len());
        for (i, f) in features.into_iter().enumerate() {
            if f.len() != dim {
                return Err(Error::Dimension(format!(
                    "feature {} has dim {}, expected {dim}",
                    i,
                    f.len()
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("feature {i} contains a non-finite value")));
            }
            let norm = f.norm();
            normalized.push(if norm > 0.0 { f / norm } else { f });
        }
        let positions = (0..layout.n_patches())
            .map(|p| {
                let (cx, cy) = layout.center(p);
                (cx / layout.image_w as f64, cy / layout.image_h as f64)
            })
            .collect();
        Ok(AttributedGraph { layout, positions, features: normalized })
    }

    /// Decompose an image and attach built-in color histogram features.
    pub fn from_image(img: &ImageBuf, layout: PatchLayout, bins: usize) -> Result<Self> {
        let features = color_histogram_features(img, &layout, bins)?;
        AttributedGraph::build(layout, features)
    }

    pub fn n_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.first().map(|f| f.len()).unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn layout_48x128() -> PatchLayout {
        PatchLayout::new(48, 128, 32, 32, 8, 12, 4).unwrap()
    }

    #[test]
    fn grid_counts_for_reference_geometry() {
        let l = layout_48x128();
        assert_eq!(l.n_rows, 9);
        assert_eq!(l.n_cols, 3);
        assert_eq!(l.n_patches(), 27);
    }

    #[test]
    fn stripe_partition_gives_remainder_to_earliest() {
        let l = layout_48x128();
        assert_eq!(l.stripe_rows(0).unwrap(), (0, 2));
        assert_eq!(l.stripe_rows(1).unwrap(), (3, 4));
        assert_eq!(l.stripe_rows(2).unwrap(), (5, 6));
        assert_eq!(l.stripe_rows(3).unwrap(), (7, 8));
        assert_eq!(l.stripe_of_row(4).unwrap(), 1);
        assert_eq!(l.stripe_of_row(8).unwrap(), 3);
    }

    #[test]
    fn centers_lie_strictly_inside_the_image() {
        let l = layout_48x128();
        for p in 0..l.n_patches() {
            let (cx, cy) = l.center(p);
            assert!(cx > 0.0 && cx < 48.0, "center x {cx}");
            assert!(cy > 0.0 && cy < 128.0, "center y {cy}");
        }
        // First patch center sits at half the patch size.
        assert_eq!(l.center(0), (16.0, 16.0));
        // Second row starts one vertical stride down.
        assert_eq!(l.center(l.index(1, 0)), (16.0, 28.0));
    }

    #[test]
    fn oversized_patch_and_bad_stripes_are_rejected() {
        assert!(PatchLayout::new(30, 30, 32, 32, 8, 12, 1).is_err());
        assert!(PatchLayout::new(48, 128, 32, 32, 8, 12, 0).is_err());
        assert!(PatchLayout::new(48, 128, 32, 32, 8, 12, 10).is_err()); // only 9 rows
        assert!(PatchLayout::new(48, 128, 32, 32, 0, 12, 4).is_err());
    }

    #[test]
    fn uniform_patch_histogram_concentrates_in_one_bin() {
        // All-255 pixels with 2 bins: each channel histogram is (0, 1).
        let img = ImageBuf::filled(32, 32, [255, 255, 255]).unwrap();
        let l = PatchLayout::new(32, 32, 32, 32, 8, 12, 1).unwrap();
        let f = color_histogram_features(&img, &l, 2).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].as_slice(), &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn channel_histograms_sum_to_one() {
        let mut img = ImageBuf::new(48, 128).unwrap();
        for y in 0..128 {
            for x in 0..48 {
                img.set_rgb(x, y, [(x * 5) as u8, (y * 2) as u8, ((x + y) * 3) as u8]);
            }
        }
        let l = layout_48x128();
        let feats = color_histogram_features(&img, &l, 8).unwrap();
        for f in &feats {
            for c in 0..3 {
                let s: f64 = f.as_slice()[c * 8..(c + 1) * 8].iter().sum();
                assert_relative_eq!(s, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn graph_normalizes_positions_and_features() {
        // A 48x128 image: the patch centered at (24, 64) maps to (0.5, 0.5).
        let l = layout_48x128();
        let feats = vec![DVector::from_vec(vec![3.0, 4.0]); 27];
        let g = AttributedGraph::build(l.clone(), feats).unwrap();
        let idx = l.index(4, 1); // anchor (8, 48) + half patch = (24, 64)
        assert_eq!(l.center(idx), (24.0, 64.0));
        assert_relative_eq!(g.positions[idx].0, 0.5, epsilon = 1e-15);
        assert_relative_eq!(g.positions[idx].1, 0.5, epsilon = 1e-15);
        for f in &g.features {
            assert_relative_eq!(f.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_features_stay_zero() {
        let l = PatchLayout::new(32, 32, 32, 32, 8, 12, 1).unwrap();
        let g = AttributedGraph::build(l, vec![DVector::zeros(4)]).unwrap();
        assert_eq!(g.features[0].norm(), 0.0);
    }

    #[test]
    fn feature_count_mismatch_is_rejected() {
        let l = layout_48x128();
        let feats = vec![DVector::from_vec(vec![1.0]); 5];
        assert!(AttributedGraph::build(l, feats).is_err());
    }
}
