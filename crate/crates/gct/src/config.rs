//! Pipeline configuration.
//!
//! All knobs live in one [`Config`] struct that serializes to/from JSON.
//! Every field has a default, so `{}` is a valid config file and partial
//! files override only what they mention.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Patch-grid geometry and stripe search parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PatchConfig {
    /// Patch width in pixels.
    pub width: u32,
    /// Patch height in pixels.
    pub height: u32,
    /// Horizontal stride between patch anchors.
    pub stride_w: u32,
    /// Vertical stride between patch anchors.
    pub stride_h: u32,
    /// Number of horizontal stripes the patch rows are partitioned into.
    pub n_stripes: usize,
    /// How many extra patch rows the gallery search space extends above and
    /// below a probe stripe.
    pub expand_rows: usize,
}

impl Default for PatchConfig {
    fn default() -> Self {
        PatchConfig {
            width: 32,
            height: 32,
            stride_w: 8,
            stride_h: 12,
            n_stripes: 4,
            expand_rows: 1,
        }
    }
}

/// Bandwidths of the exponential affinity kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AffinityConfig {
    /// Bandwidth for normalized spatial distances.
    pub sigma_pos: f64,
    /// Bandwidth for feature distances.
    pub sigma_feat: f64,
}

impl Default for AffinityConfig {
    fn default() -> Self {
        AffinityConfig { sigma_pos: 0.2, sigma_feat: 1.0 }
    }
}

/// Relaxed matching solver parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Exponent applied elementwise after each propagation step.
    pub beta: f64,
    /// Iteration cap.
    pub max_iters: usize,
    /// Convergence threshold on the max-norm change between iterates.
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { beta: 30.0, max_iters: 300, tol: 1e-8 }
    }
}

/// Pose descriptor quantization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoseConfig {
    /// Number of bins for both magnitude and angle quantization.
    pub n_bins: u8,
}

impl Default for PoseConfig {
    fn default() -> Self {
        PoseConfig { n_bins: 8 }
    }
}

/// Learned-metric parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    /// Dimensionality the difference vectors are reduced to before fitting
    /// (clamped to the input dimension).
    pub d_red: usize,
    /// Ridge added to both class covariances.
    pub reg: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig { d_red: 64, reg: 1e-4 }
    }
}

/// Correspondence-transfer parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferConfig {
    /// Number of reference templates consulted per test pair.
    #[serde(rename = "R")]
    pub r: usize,
    /// Number of candidate gallery patches kept per probe patch after voting.
    pub k: usize,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig { r: 100, k: 3 }
    }
}

/// Evaluation protocol parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    /// Number of seeded trials averaged into the reported curve.
    pub trials: usize,
    /// Master seed; every random draw in a run derives from it.
    pub seed: u64,
    /// Single-shot draws one gallery image per identity; multi-shot ranks
    /// against all gallery images with per-identity min aggregation.
    pub single_shot: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig { trials: 10, seed: 0, single_shot: true }
    }
}

/// Built-in feature extractor parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Histogram bins per color channel.
    pub bins_per_channel: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { bins_per_channel: 8 }
    }
}

/// Complete pipeline configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub patch: PatchConfig,
    pub affinity: AffinityConfig,
    pub solver: SolverConfig,
    pub pose: PoseConfig,
    pub metric: MetricConfig,
    pub transfer: TransferConfig,
    pub protocol: ProtocolConfig,
    pub features: FeatureConfig,
}

impl Config {
    /// Parse a JSON config string and validate it.
    pub fn from_json_str(text: &str) -> Result<Config> {
        let cfg: Config = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a JSON config file and validate it.
    pub fn from_json_file(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Config::from_json_str(&text)
    }

    /// Check every field against its documented domain.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite and > 0, got {v}")))
            }
        }
        if self.patch.width == 0 || self.patch.height == 0 {
            return Err(Error::Config("patch dimensions must be >= 1".into()));
        }
        if self.patch.stride_w == 0 || self.patch.stride_h == 0 {
            return Err(Error::Config("patch strides must be >= 1".into()));
        }
        if self.patch.n_stripes == 0 {
            return Err(Error::Config("n_stripes must be >= 1".into()));
        }
        positive("affinity.sigma_pos", self.affinity.sigma_pos)?;
        positive("affinity.sigma_feat", self.affinity.sigma_feat)?;
        positive("solver.beta", self.solver.beta)?;
        positive("solver.tol", self.solver.tol)?;
        if self.solver.max_iters == 0 {
            return Err(Error::Config("solver.max_iters must be >= 1".into()));
        }
        if self.pose.n_bins < 2 {
            return Err(Error::Config("pose.n_bins must be >= 2".into()));
        }
        if self.metric.d_red == 0 {
            return Err(Error::Config("metric.d_red must be >= 1".into()));
        }
        if !self.metric.reg.is_finite() || self.metric.reg < 0.0 {
            return Err(Error::Config(format!(
                "metric.reg must be finite and >= 0, got {}",
                self.metric.reg
            )));
        }
        if self.transfer.r == 0 {
            return Err(Error::Config("transfer.R must be >= 1".into()));
        }
        if self.transfer.k == 0 {
            return Err(Error::Config("transfer.k must be >= 1".into()));
        }
        if self.protocol.trials == 0 {
            return Err(Error::Config("protocol.trials must be >= 1".into()));
        }
        if self.features.bins_per_channel == 0 || self.features.bins_per_channel > 256 {
            return Err(Error::Config(format!(
                "features.bins_per_channel must be in 1..=256, got {}",
                self.features.bins_per_channel
            )));
        }
        Ok(())
    }
}
