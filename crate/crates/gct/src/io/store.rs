//! Template-store persistence: one JSON file holding the configuration,
//! the patch grid, the learned metric, and every correspondence template.

use std::path::Path;

use crate::error::{Error, Result};
use crate::transfer::TemplateStore;

/// Serialize a store. The encoding is deterministic: saving, loading, and
/// saving again produces byte-identical files.
pub fn save_store(store: &TemplateStore, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(store)
        .map_err(|e| Error::InvalidArgument(format!("store serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_store(path: &Path) -> Result<TemplateStore> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let store: TemplateStore = serde_json::from_str(&text).map_err(|e| {
        Error::InvalidArgument(format!("store file {} is malformed: {e}", path.display()))
    })?;
    store.validate()?;
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::graph::PatchLayout;
    use crate::metric::LearnedMetric;
    use crate::pose::{PoseContext, N_JOINTS};
    use crate::transfer::CorrespondenceTemplate;

    fn toy_store() -> TemplateStore {
        let pose = PoseContext {
            psi: [[3; N_JOINTS - 1]; N_JOINTS],
            phi: [[5; N_JOINTS - 1]; N_JOINTS],
            n_bins: 8,
        };
        let layout = PatchLayout::new(32, 44, 32, 32, 8, 12, 1).unwrap();
        TemplateStore {
            config: Config::default(),
            layout,
            metric: LearnedMetric::euclidean(6).unwrap(),
            templates: vec![
                CorrespondenceTemplate::new(
                    "a".into(),
                    vec![(0, 1), (1, 0)],
                    pose.clone(),
                    pose.clone(),
                    2,
                )
                .unwrap(),
                CorrespondenceTemplate::new(
                    "b".into(),
                    vec![(0, 0), (1, 1)],
                    pose.clone(),
                    pose,
                    2,
                )
                .unwrap(),
            ],
        }
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        let store = toy_store();
        save_store(&store, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let loaded = load_store(&path).unwrap();
        assert_eq!(loaded.templates, store.templates);
        assert_eq!(loaded.layout, store.layout);
        save_store(&loaded, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }

    #[test]
    fn corrupt_and_missing_stores_are_distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        assert!(matches!(load_store(&path), Err(Error::MissingFile(_))));
        std::fs::write(&path, b"{ not json").unwrap();
        assert!(matches!(load_store(&path), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn loaded_stores_are_structurally_validated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        let mut store = toy_store();
        // A template shorter than the grid must be rejected at load time.
        store.templates[0].matches.pop();
        let text = serde_json::to_string(&store).unwrap();
        std::fs::write(&path, text).unwrap();
        assert!(matches!(load_store(&path), Err(Error::LayoutMismatch(_))));
    }
}
