//! Candidate enumeration and pairwise affinity matrices.
//!
//! A match candidate pairs one probe node with one gallery node. Candidates
//! are enumerated probe-major: candidate `a` pairs probe slot `a / n2` with
//! gallery slot `a % n2`. The affinity matrix `K` holds unary
//! (node-to-node) scores on its diagonal and pairwise (edge-to-edge)
//! geometric/appearance consistency off the diagonal; entries that couple
//! two candidates sharing a probe or gallery node are zero, which is what
//! pushes the solver toward one-to-one assignments.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, PatchLayout};

/// Strictly greater than zero; `false` for NaN.
fn strictly_positive(v: f64) -> bool {
    v > 0.0
}

/// Search space of one stripe matching step: which probe nodes are being
/// assigned, and which gallery nodes they may map to. Indices are node ids
/// in the respective graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchProblem {
    pub probe_nodes: Vec<usize>,
    pub gallery_nodes: Vec<usize>,
}

impl MatchProblem {
    /// New problem; requires nonempty sides, no duplicate nodes, and at
    /// least as many gallery as probe nodes.
    pub fn new(probe_nodes: Vec<usize>, gallery_nodes: Vec<usize>) -> Result<Self> {
        if probe_nodes.is_empty() || gallery_nodes.is_empty() {
            return Err(Error::InvalidArgument("match problem has an empty side".into()));
        }
        if gallery_nodes.len() < probe_nodes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} gallery nodes cannot cover {} probe nodes",
                gallery_nodes.len(),
                probe_nodes.len()
            )));
        }
        for list in [&probe_nodes, &gallery_nodes] {
            let mut seen = list.clone();
            seen.sort_unstable();
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument("duplicate node in match problem".into()));
            }
        }
        Ok(MatchProblem { probe_nodes, gallery_nodes })
    }

    pub fn n1(&self) -> usize {
        self.probe_nodes.len()
    }

    pub fn n2(&self) -> usize {
        self.gallery_nodes.len()
    }

    /// Number of match candidates (`n1 * n2`).
    pub fn n_candidates(&self) -> usize {
        self.n1() * self.n2()
    }

    /// Decode a candidate index into local `(probe_slot, gallery_slot)`.
    pub fn decode(&self, candidate: usize) -> (usize, usize) {
        (candidate / self.n2(), candidate % self.n2())
    }
}

/// Gallery search space for one probe stripe: the gallery rows spanned by
/// the same stripe, extended `expand_rows` patch rows up and down (clamped
/// at the grid border).
pub fn stripe_search_space(
    probe: &PatchLayout,
    gallery: &PatchLayout,
    stripe: usize,
    expand_rows: usize,
) -> Result<MatchProblem> {
    if probe.n_stripes != gallery.n_stripes {
        return Err(Error::LayoutMismatch(format!(
            "probe has {} stripes, gallery {}",
            probe.n_stripes, gallery.n_stripes
        )));
    }
    let (p_first, p_last) = probe.stripe_rows(stripe)?;
    let (g_first, g_last) = gallery.stripe_rows(stripe)?;
    let lo = g_first.saturating_sub(expand_rows);
    let hi = (g_last + expand_rows).min(gallery.n_rows - 1);
    MatchProblem::new(
        probe.nodes_in_rows(p_first, p_last),
        gallery.nodes_in_rows(lo, hi),
    )
}

/// Unary affinity between a probe node and a gallery node: the product of
/// two exponential kernels, one on the positional offset and one on the
/// feature offset. Equal attributes give exactly 1.
pub fn node_affinity(
    p1: (f64, f64),
    p2: (f64, f64),
    f1: &DVector<f64>,
    f2: &DVector<f64>,
    sigma_pos: f64,
    sigma_feat: f64,
) -> f64 {
    let dp = ((p1.0 - p2.0).powi(2) + (p1.1 - p2.1).powi(2)).sqrt();
    let df = (f1 - f2).norm();
    (-dp / sigma_pos).exp() * (-df / sigma_feat).exp()
}

/// Pairwise affinity between candidates `(i1 -> i2)` and `(j1 -> j2)`:
/// how well the probe-side edge `(i1, j1)` agrees with the gallery-side
/// edge `(i2, j2)` in both displacement and feature offset. Candidates
/// with equal displacements and equal feature offsets score exactly 1.
#[allow(clippy::too_many_arguments)]
pub fn edge_affinity(
    p_i1: (f64, f64),
    p_j1: (f64, f64),
    p_i2: (f64, f64),
    p_j2: (f64, f64),
    f_i1: &DVector<f64>,
    f_j1: &DVector<f64>,
    f_i2: &DVector<f64>,
    f_j2: &DVector<f64>,
    sigma_pos: f64,
    sigma_feat: f64,
) -> f64 {
    let dx = (p_i1.0 - p_j1.0) - (p_i2.0 - p_j2.0);
    let dy = (p_i1.1 - p_j1.1) - (p_i2.1 - p_j2.1);
    let dp = (dx * dx + dy * dy).sqrt();
    let df = ((f_i1 - f_j1) - (f_i2 - f_j2)).norm();
    (-dp / sigma_pos).exp() * (-df / sigma_feat).exp()
}

/// Dense candidate-affinity matrix for one match problem.
#[derive(Debug, Clone)]
pub struct AffinityMatrix {
    pub n1: usize,
    pub n2: usize,
    /// `(n1*n2) x (n1*n2)`, symmetric, nonnegative.
    pub k: DMatrix<f64>,
}

impl AffinityMatrix {
    pub fn order(&self) -> usize {
        self.n1 * self.n2
    }
}

/// Assemble the affinity matrix of a match problem.
///
/// Diagonal entries hold node affinities of the candidates; off-diagonal
/// entries hold edge affinities, except that candidates sharing a probe or
/// gallery node get exactly zero. The result is symmetric by construction.
pub fn build_affinity_matrix(
    probe: &AttributedGraph,
    gallery: &AttributedGraph,
    problem: &MatchProblem,
    sigma_pos: f64,
    sigma_feat: f64,
) -> Result<AffinityMatrix> {
    if !strictly_positive(sigma_pos) || !strictly_positive(sigma_feat) {
        return Err(Error::InvalidArgument(format!(
            "kernel bandwidths must be > 0, got sigma_pos={sigma_pos} sigma_feat={sigma_feat}"
        )));
    }
    if probe.feature_dim() != gallery.feature_dim() {
        return Err(Error::Dimension(format!(
            "probe features have dim {}, gallery {}",
            probe.feature_dim(),
            gallery.feature_dim()
        )));
    }
    if let Some(&bad) = problem.probe_nodes.iter().find(|&&i| i >= probe.n_nodes()) {
        return Err(Error::InvalidArgument(format!("probe node {bad} out of range")));
    }
    if let Some(&bad) = problem.gallery_nodes.iter().find(|&&i| i >= gallery.n_nodes()) {
        return Err(Error::InvalidArgument(format!("gallery node {bad} out of range")));
    }

    let n1 = problem.n1();
    let n2 = problem.n2();
    let n = n1 * n2;
    let mut k = DMatrix::zeros(n, n);
    for a in 0..n {
        let (i1s, i2s) = problem.decode(a);
        let i1 = problem.probe_nodes[i1s];
        let i2 = problem.gallery_nodes[i2s];
        k[(a, a)] = node_affinity(
            probe.positions[i1],
            gallery.positions[i2],
            &probe.features[i1],
            &gallery.features[i2],
            sigma_pos,
            sigma_feat,
        );
        for b in (a + 1)..n {
            let (j1s, j2s) = problem.decode(b);
            if i1s == j1s || i2s == j2s {
                continue; // conflicting candidates stay at zero
            }
            let j1 = problem.probe_nodes[j1s];
            let j2 = problem.gallery_nodes[j2s];
            let v = edge_affinity(
                probe.positions[i1],
                probe.positions[j1],
                gallery.positions[i2],
                gallery.positions[j2],
                &probe.features[i1],
                &probe.features[j1],
                &gallery.features[i2],
                &gallery.features[j2],
                sigma_pos,
                sigma_feat,
            );
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
    }
    Ok(AffinityMatrix { n1, n2, k })
}
