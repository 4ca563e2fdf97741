//! Correspondence templates and their transfer to unseen image pairs.
//!
//! Training: every positive pair (two views of the same person) is matched
//! patch-to-patch once, and the resulting correspondence list is stored as
//! a template together with both views' body-configuration descriptors.
//! Testing: for a probe/gallery pair, the templates whose training pair had
//! the most similar body configurations are selected as references, their
//! per-patch pixel offsets are averaged into a vote, and the vote picks the
//! k nearest gallery patches per probe patch. The pair's distance is the
//! mean learned patch distance over those correspondences, so the heavy
//! graph matching never runs at test time.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, PatchLayout};
use crate::metric::{learn_metric, LearnedMetric};
use crate::pose::{compute_pose_context, pair_similarity, JointSet, PoseContext};
use crate::seed;
use crate::solver::match_image_pair;

/// One training pair's patch correspondences plus the body-configuration
/// descriptors of both images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceTemplate {
    pub pair_id: String,
    /// `(probe_patch, gallery_patch)` rows; row `i` has probe patch `i`.
    pub matches: Vec<(usize, usize)>,
    pub probe_pose: PoseContext,
    pub gallery_pose: PoseContext,
}

impl CorrespondenceTemplate {
    /// Validate and store a correspondence list. Matches may arrive in any
    /// order but must cover every probe patch exactly once and stay within
    /// the gallery grid.
    pub fn new(
        pair_id: String,
        mut matches: Vec<(usize, usize)>,
        probe_pose: PoseContext,
        gallery_pose: PoseContext,
        n_gallery: usize,
    ) -> Result<Self> {
        matches.sort_by_key(|m| m.0);
        for (i, &(p, g)) in matches.iter().enumerate() {
            if p != i {
                return Err(Error::InvalidArgument(format!(
                    "template {pair_id}: probe patches must be covered exactly once \
                     (position {i} holds probe patch {p})"
                )));
            }
            if g >= n_gallery {
                return Err(Error::InvalidArgument(format!(
                    "template {pair_id}: gallery patch {g} out of range (< {n_gallery})"
                )));
            }
        }
        if matches.is_empty() {
            return Err(Error::InvalidArgument(format!("template {pair_id} has no matches")));
        }
        Ok(CorrespondenceTemplate { pair_id, matches, probe_pose, gallery_pose })
    }

    /// Number of probe patches the template covers.
    pub fn n(&self) -> usize {
        self.matches.len()
    }
}

/// One positive training pair ready for template building.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub pair_id: String,
    pub probe: AttributedGraph,
    pub gallery: AttributedGraph,
    pub probe_joints: JointSet,
    pub gallery_joints: JointSet,
}

/// Everything training produces: the templates, the shared patch grid, the
/// learned patch metric, and the configuration that built them. Immutable
/// once built.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemplateStore {
    pub config: Config,
    pub layout: PatchLayout,
    pub metric: LearnedMetric,
    pub templates: Vec<CorrespondenceTemplate>,
}

impl TemplateStore {
    /// Patch count shared by every template.
    pub fn n_patches(&self) -> usize {
        self.layout.n_patches()
    }

    /// Structural checks for stores loaded from disk.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.templates.is_empty() {
            return Err(Error::InsufficientData("store holds no templates".into()));
        }
        let n = self.n_patches();
        for t in &self.templates {
            if t.n() != n {
                return Err(Error::LayoutMismatch(format!(
                    "template {} covers {} patches but the grid has {n}",
                    t.pair_id,
                    t.n()
                )));
            }
            if t.matches.iter().any(|&(_, g)| g >= n) {
                return Err(Error::LayoutMismatch(format!(
                    "template {} references a gallery patch outside the grid",
                    t.pair_id
                )));
            }
        }
        Ok(())
    }

    /// Full test-time scoring of one probe/gallery pair: select references
    /// by body-configuration similarity, ensemble their votes, and average
    /// the learned patch distance over the compact correspondences.
    pub fn score_pair(
        &self,
        probe: &AttributedGraph,
        gallery: &AttributedGraph,
        probe_pose: &PoseContext,
        gallery_pose: &PoseContext,
        r: usize,
        k: usize,
    ) -> Result<TransferDistance> {
        let picked = select_references(self, probe_pose, gallery_pose, r)?;
        let refs: Vec<&CorrespondenceTemplate> =
            picked.iter().map(|&i| &self.templates[i]).collect();
        let compact = ensemble_templates(&refs, &probe.layout, &gallery.layout, k)?;
        distance_ensemble(probe, gallery, &compact, &self.metric)
    }
}

/// Offset-voting result: per probe patch, the k gallery patches nearest to
/// the voted target location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompactTemplate {
    pub k: usize,
    /// `indices[j]` holds exactly `k` distinct gallery patch indices.
    pub indices: Vec<Vec<usize>>,
}

/// A transferred pair distance plus the number of patch-metric evaluations
/// it spent, for cost accounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferDistance {
    pub distance: f64,
    pub delta_evals: usize,
}

/// Learn a template per positive pair, then fit the patch metric from the
/// matched patches (same-class) and an equal number of seeded cross-pair
/// patch draws (different-class).
pub fn build_template_store(
    pairs: &[TrainingPair],
    cfg: &Config,
    master_seed: u64,
) -> Result<TemplateStore> {
    cfg.validate()?;
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "template training needs >= 2 positive pairs (one per identity) so \
             different-identity patch pairs exist, got {}",
            pairs.len()
        )));
    }
    let layout = pairs[0].probe.layout.clone();
    let dim = pairs[0].probe.feature_dim();
    for p in pairs {
        if !p.probe.layout.same_grid(&layout) || !p.gallery.layout.same_grid(&layout) {
            return Err(Error::LayoutMismatch(format!(
                "pair {} does not share the common patch grid",
                p.pair_id
            )));
        }
        if p.probe.feature_dim() != dim || p.gallery.feature_dim() != dim {
            return Err(Error::Dimension(format!(
                "pair {} has feature dim {}/{}, expected {dim}",
                p.pair_id,
                p.probe.feature_dim(),
                p.gallery.feature_dim()
            )));
        }
    }

    let mut templates = Vec::with_capacity(pairs.len());
    let mut similar = Vec::new();
    for p in pairs {
        let matches = match_image_pair(&p.probe, &p.gallery, cfg)?;
        let probe_pose = compute_pose_context(&p.probe_joints, cfg.pose.n_bins)?;
        let gallery_pose = compute_pose_context(&p.gallery_joints, cfg.pose.n_bins)?;
        let pairs_list: Vec<(usize, usize)> =
            matches.iter().map(|m| (m.probe, m.gallery)).collect();
        for &(i, j) in &pairs_list {
            similar.push((p.probe.features[i].clone(), p.gallery.features[j].clone()));
        }
        templates.push(CorrespondenceTemplate::new(
            p.pair_id.clone(),
            pairs_list,
            probe_pose,
            gallery_pose,
            p.gallery.n_nodes(),
        )?);
    }

    // Different-class pairs: a probe patch of one identity against a
    // gallery patch of another, drawn with a dedicated seed stream.
    let mut rng = seed::stream(master_seed, "metric.dissimilar", 0);
    let mut dissimilar = Vec::with_capacity(similar.len());
    while dissimilar.len() < similar.len() {
        let a = rng.gen_range(0..pairs.len());
        let b = rng.gen_range(0..pairs.len());
        if a == b {
            continue;
        }
        let i = rng.gen_range(0..pairs[a].probe.n_nodes());
        let j = rng.gen_range(0..pairs[b].gallery.n_nodes());
        dissimilar.push((pairs[a].probe.features[i].clone(), pairs[b].gallery.features[j].clone()));
    }
    let metric = learn_metric(&similar, &dissimilar, &cfg.metric)?;

    Ok(TemplateStore { config: cfg.clone(), layout, metric, templates })
}

/// Indices of the templates whose training pair most resembles the test
/// pair's body configurations, best first. Similarity ties break on
/// ascending `pair_id`. At most `min(r, store size)` indices are returned.
pub fn select_references(
    store: &TemplateStore,
    probe_pose: &PoseContext,
    gallery_pose: &PoseContext,
    r: usize,
) -> Result<Vec<usize>> {
    if r == 0 {
        return Err(Error::InvalidArgument("reference count must be >= 1".into()));
    }
    if store.templates.is_empty() {
        return Err(Error::InsufficientData("store holds no templates".into()));
    }
    let mut sims = Vec::with_capacity(store.templates.len());
    for t in &store.templates {
        sims.push(pair_similarity(&t.probe_pose, &t.gallery_pose, probe_pose, gallery_pose)?);
    }
    let mut order: Vec<usize> = (0..store.templates.len()).collect();
    order.sort_by(|&a, &b| {
        sims[b]
            .partial_cmp(&sims[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| store.templates[a].pair_id.cmp(&store.templates[b].pair_id))
            .then(a.cmp(&b))
    });
    order.truncate(r.min(store.templates.len()));
    Ok(order)
}

fn check_pair_layout(
    probe: &AttributedGraph,
    gallery: &AttributedGraph,
    n_expected: usize,
) -> Result<()> {
    if probe.n_nodes() != n_expected {
        return Err(Error::LayoutMismatch(format!(
            "probe has {} patches but the templates cover {n_expected}",
            probe.n_nodes()
        )));
    }
    if probe.feature_dim() != gallery.feature_dim() {
        return Err(Error::Dimension(format!(
            "probe/gallery feature dims differ: {} vs {}",
            probe.feature_dim(),
            gallery.feature_dim()
        )));
    }
    Ok(())
}

fn project_all(metric: &LearnedMetric, graph: &AttributedGraph) -> Result<Vec<DVector<f64>>> {
    graph.features.iter().map(|f| metric.project(f)).collect()
}

/// Mean learned patch distance over every correspondence of every
/// reference template: `R * n` metric evaluations for `R` references.
pub fn distance_full(
    probe: &AttributedGraph,
    gallery: &AttributedGraph,
    refs: &[&CorrespondenceTemplate],
    metric: &LearnedMetric,
) -> Result<TransferDistance> {
    if refs.is_empty() {
        return Err(Error::InsufficientData("no reference templates given".into()));
    }
    check_pair_layout(probe, gallery, refs[0].n())?;
    let probe_proj = project_all(metric, probe)?;
    let gallery_proj = project_all(metric, gallery)?;
    let mut sum = 0.0;
    let mut evals = 0usize;
    for t in refs {
        if t.n() != refs[0].n() {
            return Err(Error::LayoutMismatch(format!(
                "template {} covers {} patches, expected {}",
                t.pair_id,
                t.n(),
                refs[0].n()
            )));
        }
        for &(i, j) in &t.matches {
            if j >= gallery_proj.len() {
                return Err(Error::LayoutMismatch(format!(
                    "template {} references gallery patch {j} but the gallery has {}",
                    t.pair_id,
                    gallery_proj.len()
                )));
            }
            sum += metric.distance_projected(&probe_proj[i], &gallery_proj[j]);
            evals += 1;
        }
    }
    Ok(TransferDistance { distance: sum / evals as f64, delta_evals: evals })
}

/// Fuse reference templates into k candidates per probe patch by offset
/// voting: average the references' pixel offsets for the patch, move the
/// patch center by the mean offset, and keep the k gallery patches with
/// the nearest centers (ties to the lower index).
pub fn ensemble_templates(
    refs: &[&CorrespondenceTemplate],
    probe_layout: &PatchLayout,
    gallery_layout: &PatchLayout,
    k: usize,
) -> Result<CompactTemplate> {
    if refs.is_empty() {
        return Err(Error::InsufficientData("no reference templates given".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let n = probe_layout.n_patches();
    let n_gallery = gallery_layout.n_patches();
    if k > n_gallery {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the gallery patch count {n_gallery}"
        )));
    }
    for t in refs {
        if t.n() != n {
            return Err(Error::LayoutMismatch(format!(
                "template {} covers {} patches but the probe grid has {n}",
                t.pair_id,
                t.n()
            )));
        }
        if t.matches.iter().any(|&(_, g)| g >= n_gallery) {
            return Err(Error::LayoutMismatch(format!(
                "template {} references a gallery patch outside the grid",
                t.pair_id
            )));
        }
    }

    let gallery_centers: Vec<(f64, f64)> =
        (0..n_gallery).map(|j| gallery_layout.center(j)).collect();
    let mut indices = Vec::with_capacity(n);
    for i in 0..n {
        let (cx, cy) = probe_layout.center(i);
        let mut ox = 0.0;
        let mut oy = 0.0;
        for t in refs {
            let (gx, gy) = gallery_layout.center(t.matches[i].1);
            ox += gx - cx;
            oy += gy - cy;
        }
        let tx = cx + ox / refs.len() as f64;
        let ty = cy + oy / refs.len() as f64;
        let mut by_dist: Vec<(f64, usize)> = gallery_centers
            .iter()
            .enumerate()
            .map(|(j, &(gx, gy))| ((gx - tx).powi(2) + (gy - ty).powi(2), j))
            .collect();
        by_dist.sort_by(|a, b| {
            a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1))
        });
        indices.push(by_dist[..k].iter().map(|&(_, j)| j).collect());
    }
    Ok(CompactTemplate { k, indices })
}

/// Mean learned patch distance over the compact correspondences: exactly
/// `k * n` metric evaluations.
pub fn distance_ensemble(
    probe: &AttributedGraph,
    gallery: &AttributedGraph,
    compact: &CompactTemplate,
    metric: &LearnedMetric,
) -> Result<TransferDistance> {
    check_pair_layout(probe, gallery, compact.indices.len())?;
    let probe_proj = project_all(metric, probe)?;
    let gallery_proj = project_all(metric, gallery)?;
    let mut sum = 0.0;
    let mut evals = 0usize;
    for (i, cands) in compact.indices.iter().enumerate() {
        for &j in cands {
            if j >= gallery_proj.len() {
                return Err(Error::LayoutMismatch(format!(
                    "compact template references gallery patch {j} but the gallery has {}",
                    gallery_proj.len()
                )));
            }
            sum += metric.distance_projected(&probe_proj[i], &gallery_proj[j]);
            evals += 1;
        }
    }
    if evals == 0 {
        return Err(Error::InsufficientData("compact template is empty".into()));
    }
    Ok(TransferDistance { distance: sum / evals as f64, delta_evals: evals })
}
