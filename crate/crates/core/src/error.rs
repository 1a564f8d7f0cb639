use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot parse offspring law `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("invalid {name} = {value}: {reason}")]
    InvalidArgument {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("offspring law is degenerate (f(s) = s)")]
    DegenerateLaw,

    #[error("offspring mean {mean} is not above 1; no percolation threshold exists")]
    NotSupercritical { mean: f64 },

    #[error("retaining probability {p} is not above the critical value 1/m = {critical}")]
    BelowCritical { p: f64, critical: f64 },

    #[error("fixed-point iteration did not converge after {iterations} steps (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("model is critical: p f'(lambda) = {value}")]
    Critical { value: f64 },

    #[error("derivative f^({order})(lambda) vanishes: backbone degree {degree} cannot occur")]
    ImpossibleDegree { order: usize, degree: usize },

    #[error("extinction probability is 0: the cluster has no bushes")]
    NoBushes,

    #[error("formula needs p_0 = 0, law has p_0 = {p0}")]
    PositiveP0 { p0: f64 },

    #[error("{what}: routes disagree ({a} vs {b})")]
    RouteMismatch { what: &'static str, a: f64, b: f64 },

    #[error("rejection sampler exceeded {cap} attempts")]
    RejectionCap { cap: u64 },

    #[error("cluster arena is full ({cap} nodes)")]
    ArenaFull { cap: usize },
}

impl Error {
    /// True for failures caused by numerics rather than by the caller's input.
    pub fn is_convergence(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::Critical { .. }
                | Error::RouteMismatch { .. }
                | Error::RejectionCap { .. }
                | Error::ArenaFull { .. }
        )
    }
}
