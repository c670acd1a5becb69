use std::path::PathBuf;

/// Errors raised by mesh generation, assembly, and the solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate element {element}: |det B| = {det:e}")]
    DegenerateElement { element: usize, det: f64 },

    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("boundary facets have not been classified")]
    UnclassifiedBoundary,

    #[error("singular matrix: pivot {pivot:e} at column {column} (threshold {threshold:e})")]
    SingularMatrix {
        column: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("unisolvence failure on element {element}: condition estimate {condition:e}")]
    Unisolvence { element: usize, condition: f64 },

    #[error("exponent {exponent:.1} out of representable range on element {element}")]
    CoefficientOutOfRange { element: usize, exponent: f64 },

    #[error("linear solver failed: {0}")]
    SolverFailure(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
