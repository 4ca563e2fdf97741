//! File formats: PPM images, GCTF feature files, dataset manifests, and
//! template-store persistence.

pub mod gctf;
pub mod manifest;
pub mod ppm;
pub mod store;
