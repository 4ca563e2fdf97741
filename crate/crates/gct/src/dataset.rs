//! In-memory dataset: manifest entries materialized into patch graphs and
//! body-configuration descriptors, indexed by identity.

use std::collections::BTreeMap;
use std::path::Path;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, PatchLayout};
use crate::io::manifest::{Manifest, ManifestEntry};
use crate::io::{gctf, ppm};
use crate::pose::{compute_pose_context, JointSet, PoseContext};

/// One image, fully materialized.
#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub image_id: String,
    pub identity: String,
    pub camera: u32,
    pub graph: AttributedGraph,
    pub joints: Option<JointSet>,
    pub pose: Option<PoseContext>,
}

/// All images of a dataset plus an identity index. Entry order follows the
/// manifest; identity iteration order is lexicographic, so every walk over
/// the dataset is deterministic.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub entries: Vec<DatasetEntry>,
    by_identity: BTreeMap<String, Vec<usize>>,
}

impl Dataset {
    pub fn from_entries(entries: Vec<DatasetEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InsufficientData("dataset has no entries".into()));
        }
        let mut by_identity: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut seen = std::collections::BTreeSet::new();
        for (i, e) in entries.iter().enumerate() {
            if !seen.insert(e.image_id.clone()) {
                return Err(Error::Manifest(format!("duplicate image_id {}", e.image_id)));
            }
            by_identity.entry(e.identity.clone()).or_default().push(i);
        }
        Ok(Dataset { entries, by_identity })
    }

    /// Load every manifest entry: decode pixels or features, lay out the
    /// patch grid, extract features, and compute the pose descriptor when
    /// joints are present.
    pub fn load(manifest_path: &Path, cfg: &Config) -> Result<Self> {
        cfg.validate()?;
        let (manifest, base) = Manifest::load(manifest_path)?;
        let mut entries = Vec::with_capacity(manifest.entries.len());
        for e in &manifest.entries {
            entries.push(materialize_entry(e, &base, cfg)?);
        }
        Dataset::from_entries(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Identities in lexicographic order.
    pub fn identities(&self) -> Vec<&str> {
        self.by_identity.keys().map(|s| s.as_str()).collect()
    }

    /// Indices of an identity's entries, in manifest order.
    pub fn entries_of(&self, identity: &str) -> &[usize] {
        self.by_identity.get(identity).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// The shared patch grid, or an error naming the first image that
    /// deviates from it.
    pub fn common_layout(&self) -> Result<&PatchLayout> {
        let layout = &self.entries[0].graph.layout;
        for e in &self.entries {
            if !e.graph.layout.same_grid(layout) {
                return Err(Error::LayoutMismatch(format!(
                    "image {} uses a different patch grid than {}",
                    e.image_id, self.entries[0].image_id
                )));
            }
        }
        Ok(layout)
    }
}

/// Materialize one manifest entry: decode its pixel or feature file
/// (relative to `base`), lay out the patch grid, extract features, and
/// compute the pose descriptor when joints are present.
pub fn materialize_entry(
    e: &ManifestEntry,
    base: &Path,
    cfg: &Config,
) -> Result<DatasetEntry> {
    let graph = match (&e.pixels_path, &e.features_path) {
        (Some(p), None) => {
            let img = ppm::read_ppm(&base.join(p))?;
            let layout = PatchLayout::from_config(&cfg.patch, img.width, img.height)?;
            AttributedGraph::from_image(&img, layout, cfg.features.bins_per_channel)?
        }
        (None, Some(p)) => {
            let feats = gctf::read_gctf(&base.join(p))?;
            let Some([w, h]) = e.image_size else {
                return Err(Error::Manifest(format!(
                    "{}: feature entries must carry image_size",
                    e.image_id
                )));
            };
            let layout = PatchLayout::from_config(&cfg.patch, w, h)?;
            if feats.len() != layout.n_patches() {
                return Err(Error::LayoutMismatch(format!(
                    "{}: feature file has {} patches but a {}x{} image lays out {}",
                    e.image_id,
                    feats.len(),
                    w,
                    h,
                    layout.n_patches()
                )));
            }
            AttributedGraph::build(layout, feats)?
        }
        _ => {
            return Err(Error::Manifest(format!(
                "{}: exactly one of pixels_path/features_path is required",
                e.image_id
            )))
        }
    };
    let joints = e.joint_set()?;
    let pose = match &joints {
        Some(js) => Some(compute_pose_context(js, cfg.pose.n_bins)?),
        None => None,
    };
    Ok(DatasetEntry {
        image_id: e.image_id.clone(),
        identity: e.identity.clone(),
        camera: e.camera,
        graph,
        joints,
        pose,
    })
}
