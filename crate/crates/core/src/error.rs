use thiserror::Error;

/// Errors raised by the numerical engines and the command-line surface.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum VacuaError {
    #[error("t = {t} lies outside the domain of {what}")]
    Domain { what: String, t: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("singular coefficient at t = {t}: {reason}")]
    Singularity { t: f64, reason: String },

    #[error("window [{lo}, {hi}] is not covered by the trajectory span [{span_lo}, {span_hi}]")]
    Window {
        lo: f64,
        hi: f64,
        span_lo: f64,
        span_hi: f64,
    },

    #[error("reference integral {0:e} is degenerate")]
    ReferenceDegenerate(f64),

    #[error(
        "minimization did not converge after {evaluations} evaluations (best Z = {best_value:e})"
    )]
    Convergence {
        best_params: Vec<f64>,
        best_value: f64,
        evaluations: usize,
    },

    #[error("outside the validity regime: {0}")]
    Regime(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl VacuaError {
    pub fn domain(what: impl Into<String>, t: f64) -> Self {
        VacuaError::Domain {
            what: what.into(),
            t,
        }
    }

    /// True for errors that come from the numerics rather than from the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            VacuaError::Integration { .. }
                | VacuaError::Singularity { .. }
                | VacuaError::ReferenceDegenerate(_)
                | VacuaError::Convergence { .. }
        )
    }
}

impl From<std::io::Error> for VacuaError {
    fn from(e: std::io::Error) -> Self {
        VacuaError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, VacuaError>;
