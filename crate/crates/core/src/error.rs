use thiserror::Error;

/// Errors raised by the integrator, the bundled models and the driver.
#[derive(Debug, Error)]
pub enum MarsError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("numerical corruption: {0}")]
    NumericalCorruption(String),

    #[error("index {index} out of range for a grid of {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("blow-up at step {step}: {reason}")]
    BlowUp { step: u64, reason: String },

    #[error("film rupture at step {step}: minimum height {min_height:e}")]
    Rupture { step: u64, min_height: f64 },

    #[error("marker proximity at step {step}: distance {distance:e} below {threshold:e}")]
    Proximity {
        step: u64,
        distance: f64,
        threshold: f64,
    },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = MarsError> = std::result::Result<T, E>;

impl MarsError {
    pub(crate) fn validation(field: &str, message: impl Into<String>) -> Self {
        MarsError::Validation {
            field: field.to_owned(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        MarsError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Stamp the macro-step index onto errors raised deep inside a step.
    pub fn at_step(self, step: u64) -> Self {
        match self {
            MarsError::BlowUp { reason, .. } => MarsError::BlowUp { step, reason },
            MarsError::Rupture { min_height, .. } => MarsError::Rupture { step, min_height },
            MarsError::Proximity {
                distance,
                threshold,
                ..
            } => MarsError::Proximity {
                step,
                distance,
                threshold,
            },
            other => other,
        }
    }

    /// Process exit status used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            MarsError::Config(_) | MarsError::Validation { .. } => 2,
            MarsError::BlowUp { .. } | MarsError::NumericalCorruption(_) => 3,
            MarsError::Rupture { .. } => 4,
            MarsError::Proximity { .. } | MarsError::Geometry(_) => 5,
            MarsError::IndexOutOfRange { .. } | MarsError::Io { .. } => 1,
        }
    }

    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            MarsError::Config(_) => "config",
            MarsError::Validation { .. } => "validation",
            MarsError::NumericalCorruption(_) => "numerical_corruption",
            MarsError::IndexOutOfRange { .. } => "index_out_of_range",
            MarsError::BlowUp { .. } => "blow_up",
            MarsError::Rupture { .. } => "rupture",
            MarsError::Proximity { .. } => "proximity",
            MarsError::Geometry(_) => "geometry",
            MarsError::Io { .. } => "io",
        }
    }
}
