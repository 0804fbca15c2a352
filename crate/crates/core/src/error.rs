use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter, coefficient or configuration value violates its contract.
    #[error("invalid {field}: {reason}")]
    InvalidSpec { field: String, reason: String },

    #[error("noise evaluated at t={t} outside its cached window [{lo}, {hi}]")]
    NoiseWindow { t: f64, lo: f64, hi: f64 },

    #[error("integration exhausted max_steps={max_steps} before reaching t={target}")]
    MaxSteps { max_steps: usize, target: f64 },

    #[error("step size underflow at t={t} (h={h})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite state encountered at t={t}")]
    NonFinite { t: f64 },

    #[error("Hausdorff semi-distance of an empty point set")]
    EmptyPointSet,

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit status for this error: 2 for usage or configuration
    /// problems, 3 for runtime and numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpec { .. } | Error::Parse { .. } => 2,
            _ => 3,
        }
    }
}
