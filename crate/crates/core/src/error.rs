use thiserror::Error;

/// A configuration value was rejected. `field` names the offending key.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error("acceleration {value} outside [-{max_decel}, {max_accel}]")]
    CommandOutOfBounds {
        value: f64,
        max_accel: f64,
        max_decel: f64,
    },
    /// No command in the three-level set is safe and the headway is already
    /// broken. Indicates an upstream invariant breach.
    #[error("car-following inconsistency: gap margin {margin:.4} m already violated")]
    Inconsistent { margin: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no delay records")]
    Empty,
    #[error("vehicle exited {0:.4} s before its free-flow arrival")]
    NegativeDelay(f64),
    #[error("exit time {exited} precedes spawn time {spawned}")]
    ExitBeforeSpawn { spawned: f64, exited: f64 },
    #[error("quantile level {0} outside [0, 1]")]
    BadQuantile(f64),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invariant violated at t={time:.1}s: {detail}")]
    Invariant { time: f64, detail: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
