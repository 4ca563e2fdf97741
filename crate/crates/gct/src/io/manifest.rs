//! Dataset manifest: a JSON index of images, identities, cameras, pixel or
//! feature sources, and optional joint annotations.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::{JointSet, N_JOINTS};

/// One image's row in the manifest. Exactly one of `pixels_path` (binary
/// PPM) and `features_path` (GCTF) must be present; feature-only entries
/// must also carry `image_size` so the patch grid can be laid out. Paths
/// are resolved relative to the manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub identity: String,
    pub camera: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixels_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features_path: Option<String>,
    /// `[width, height]` in pixels; required with `features_path`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_size: Option<[u32; 2]>,
    /// The 14 joint coordinates as `[x, y]` pixel pairs, or null when no
    /// estimate exists for the image.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joints: Option<[[f64; 2]; N_JOINTS]>,
}

impl ManifestEntry {
    /// The joints as a fully-valid joint set, if the entry has any.
    pub fn joint_set(&self) -> Result<Option<JointSet>> {
        match &self.joints {
            None => Ok(None),
            Some(pts) => {
                let opts: Vec<Option<(f64, f64)>> =
                    pts.iter().map(|p| Some((p[0], p[1]))).collect();
                Ok(Some(JointSet::from_options(&opts)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Parse and validate manifest JSON. Malformed JSON (including a
    /// joints array of the wrong length) is reported with the line and
    /// column from the parser.
    pub fn from_json_str(text: &str) -> Result<Manifest> {
        let manifest: Manifest = serde_json::from_str(text)
            .map_err(|e| Error::Manifest(format!("manifest parse error: {e}")))?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// Load a manifest file; the second return value is the directory the
    /// entry paths are relative to.
    pub fn load(path: &Path) -> Result<(Manifest, PathBuf)> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Manifest(format!("cannot read {}: {e}", path.display())))?;
        let manifest = Manifest::from_json_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok((manifest, base))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Manifest(format!("manifest serialization failed: {e}")))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Manifest("manifest lists no entries".into()));
        }
        let mut seen = BTreeSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            let at = |what: String| Error::Manifest(format!("entry {i} ({}): {what}", e.image_id));
            if e.image_id.is_empty() || e.identity.is_empty() {
                return Err(at("image_id and identity must be non-empty".into()));
            }
            if !seen.insert(&e.image_id) {
                return Err(at("duplicate image_id".into()));
            }
            match (&e.pixels_path, &e.features_path) {
                (Some(_), Some(_)) => {
                    return Err(at("give pixels_path or features_path, not both".into()))
                }
                (None, None) => {
                    return Err(at("one of pixels_path or features_path is required".into()))
                }
                (None, Some(_)) if e.image_size.is_none() => {
                    return Err(at("feature entries must carry image_size".into()))
                }
                _ => {}
            }
            if let Some([w, h]) = e.image_size {
                if w == 0 || h == 0 {
                    return Err(at(format!("degenerate image_size {w}x{h}")));
                }
            }
            if let Some(pts) = &e.joints {
                if pts.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                    return Err(at("joints must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry_json(id: &str, extra: &str) -> String {
        format!(
            r#"{{"image_id": "{id}", "identity": "a", "camera": 0,
                 "pixels_path": "imgs/{id}.ppm"{extra}}}"#
        )
    }

    #[test]
    fn minimal_manifest_parses() {
        let text = format!(r#"{{"entries": [{}]}}"#, entry_json("x", ""));
        let m = Manifest::from_json_str(&text).unwrap();
        assert_eq!(m.entries.len(), 1);
        assert!(m.entries[0].joints.is_none());
        assert!(m.entries[0].joint_set().unwrap().is_none());
    }

    #[test]
    fn wrong_joint_count_reports_the_line() {
        let joints: Vec<String> = (0..13).map(|i| format!("[{i}, {i}]")).collect();
        let text = format!(
            "{{\"entries\": [\n{}\n]}}",
            entry_json("x", &format!(", \"joints\": [{}]", joints.join(", ")))
        );
        let err = Manifest::from_json_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "error should cite a line: {msg}");
        assert!(matches!(err, Error::Manifest(_)));
    }

    #[test]
    fn semantic_validation_names_the_entry() {
        let dup = format!(r#"{{"entries": [{}, {}]}}"#, entry_json("x", ""), entry_json("x", ""));
        let err = Manifest::from_json_str(&dup).unwrap_err();
        assert!(err.to_string().contains("duplicate image_id"));

        let neither = r#"{"entries": [{"image_id": "x", "identity": "a", "camera": 0}]}"#;
        assert!(Manifest::from_json_str(neither).is_err());

        let both = format!(r#"{{"entries": [{}]}}"#, entry_json("x", r#", "features_path": "f""#));
        assert!(Manifest::from_json_str(&both).is_err());

        let feat_no_size = r#"{"entries": [{"image_id": "x", "identity": "a",
            "camera": 0, "features_path": "f.gctf"}]}"#;
        assert!(Manifest::from_json_str(feat_no_size).is_err());

        let feat_ok = r#"{"entries": [{"image_id": "x", "identity": "a",
            "camera": 0, "features_path": "f.gctf", "image_size": [48, 128]}]}"#;
        assert!(Manifest::from_json_str(feat_ok).is_ok());
    }

    #[test]
    fn joint_set_conversion_keeps_order() {
        let joints: Vec<String> = (0..14).map(|i| format!("[{i}, {}]", i * 2)).collect();
        let text = format!(
            r#"{{"entries": [{}]}}"#,
            entry_json("x", &format!(", \"joints\": [{}]", joints.join(", ")))
        );
        let m = Manifest::from_json_str(&text).unwrap();
        let js = m.entries[0].joint_set().unwrap().unwrap();
        assert_eq!(js.coords[3], (3.0, 6.0));
        assert!(js.valid.iter().all(|v| *v));
    }

    #[test]
    fn save_load_round_trip_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let m = Manifest {
            entries: vec![ManifestEntry {
                image_id: "a0".into(),
                identity: "a".into(),
                camera: 0,
                pixels_path: Some("a0.ppm".into()),
                features_path: None,
                image_size: None,
                joints: Some(std::array::from_fn(|i| [i as f64, 2.0 * i as f64])),
            }],
        };
        m.save(&path).unwrap();
        let (back, base) = Manifest::load(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(base, dir.path());
        let first = std::fs::read(&path).unwrap();
        back.save(&path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }

    #[test]
    fn missing_manifest_file_maps_to_missing_file() {
        let err = Manifest::load(Path::new("/nonexistent/manifest.json")).unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)));
    }
}
