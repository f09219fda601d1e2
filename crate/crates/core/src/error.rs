use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Operation called on a state that cannot serve it (e.g. an empty buffer).
    #[error("state error: {0}")]
    State(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A raw input sample was NaN or infinite.
    #[error("non-finite input sample {value} at t={t}")]
    NonFiniteInput { t: u64, value: f64 },

    /// A non-finite value appeared inside the numerical pipeline.
    #[error("numeric failure at t={t}{}: {what}", scale.map(|j| format!(", scale {j}")).unwrap_or_default())]
    Numeric {
        t: u64,
        scale: Option<usize>,
        what: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    /// AUC requested on labels that contain only one class.
    #[error("AUC undefined: labels contain a single class")]
    UndefinedAuc,

    #[error("empty input: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a scale index to a numeric error raised inside a per-scale tracker.
    pub(crate) fn at_scale(self, j: usize) -> Self {
        match self {
            Error::Numeric { t, what, .. } => Error::Numeric {
                t,
                scale: Some(j),
                what,
            },
            other => other,
        }
    }
}
