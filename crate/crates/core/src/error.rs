use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("node index {index} out of range for {n} nodes")]
    OutOfBounds { index: usize, n: usize },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    Numeric(&'static str),

    #[error("linear solve did not converge: relative residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("graph generation failed: {0}")]
    Generation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
