//! Patch-graph correspondence transfer for person re-identification.
//!
//! The pipeline decomposes each pedestrian image into a dense grid of
//! overlapping patches, treats the grid as an attributed graph, and solves
//! a spatially constrained graph-matching problem between image pairs to
//! recover patch-level correspondences that survive viewpoint and pose
//! changes. At training time, correspondences computed on positive pairs
//! are stored as templates alongside a learned Mahalanobis patch metric.
//! At test time a probe/gallery pair is scored by *transferring* the
//! correspondences of the most similar training pairs — selected by a
//! body-configuration descriptor built from joint positions — instead of
//! solving a fresh matching, which makes scoring cheap and robust.
//!
//! Module map:
//!
//! - [`image`] / [`graph`]: RGB buffers, patch grids, color-histogram
//!   node features.
//! - [`affinity`] / [`solver`]: the pairwise affinity matrix over
//!   stripe-constrained candidate assignments, the relaxed power-iteration
//!   solver, greedy discretization with local refinement, and a
//!   brute-force oracle for small instances.
//! - [`pose`]: log-magnitude/angle joint-context histograms and their
//!   similarity kernels.
//! - [`metric`]: the difference-space Mahalanobis metric (PCA projection
//!   plus similar/dissimilar second-moment inversion).
//! - [`transfer`]: correspondence templates, reference selection, and the
//!   full/ensemble scoring rules with evaluation-count instrumentation.
//! - [`dataset`] / [`io`]: manifest-driven loading, PPM images, the
//!   binary patch-feature format, and template-store persistence.
//! - [`eval`]: half/half identity splits, CMC curves, and the
//!   repeated-trial evaluation protocol.
//! - [`synth`]: a deterministic synthetic pedestrian generator for
//!   end-to-end runs without external data.
//!
//! Everything downstream of a master seed is deterministic: seeds are
//! derived per domain ([`seed`]), parallel reductions are ordered, and
//! persisted artifacts are byte-stable across runs.

pub mod affinity;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod graph;
pub mod image;
pub mod io;
pub mod metric;
pub mod pose;
pub mod seed;
pub mod solver;
pub mod synth;
pub mod transfer;

pub use config::Config;
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use graph::{AttributedGraph, PatchLayout};
pub use metric::LearnedMetric;
pub use pose::{JointSet, PoseContext};
pub use solver::{match_image_pair, PatchMatch};
pub use transfer::{CorrespondenceTemplate, TemplateStore, TransferDistance};
