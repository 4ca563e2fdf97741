use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps the first four variants to stable process exit codes
/// (manifest → 2, missing file → 3, config → 4, layout → 5); everything
/// else exits 1.
#[derive(Debug, Error)]
pub enum Error {
    /// Dataset manifest is syntactically or semantically invalid.
    #[error("malformed manifest: {0}")]
    Manifest(String),

    /// A file referenced by the manifest or command line does not exist.
    #[error("missing data file: {}", .0.display())]
    MissingFile(PathBuf),

    /// Configuration failed validation.
    #[error("invalid config: {0}")]
    Config(String),

    /// Patch-grid disagreement between images, stores, or feature files.
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    /// Operands have incompatible shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Not enough data to fit or evaluate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A matrix that must be inverted is singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// NaN or another numeric degeneracy was encountered.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A binary feature file is corrupt or has the wrong format.
    #[error("feature file: {0}")]
    FeatureFile(String),

    /// An image file is corrupt or has an unsupported format.
    #[error("image file: {0}")]
    ImageFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the `gct` binary for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Manifest(_) => 2,
            Error::MissingFile(_) => 3,
            Error::Config(_) => 4,
            Error::LayoutMismatch(_) => 5,
            _ => 1,
        }
    }
}
