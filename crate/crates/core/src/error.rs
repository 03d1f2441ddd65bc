use thiserror::Error;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vacuum: minimum density {min:e} is below floor/10 (floor {floor:e})")]
    Vacuum { min: f64, floor: f64 },

    #[error("velocity is not a gradient: antisymmetric gradient max-norm {defect:e}")]
    NotGradient { defect: f64 },

    #[error("nonzero winding on axis {axis}: circulation {circulation:e}")]
    Winding { axis: usize, circulation: f64 },

    #[error("mass mismatch: {left:e} vs {right:e}")]
    MassMismatch { left: f64, right: f64 },

    #[error("invalid parameters: {0}")]
    Param(String),

    #[error("degenerate quantity: {0}")]
    Degenerate(String),

    #[error("blow-up at t = {time}: max-norm {norm:e}")]
    Blowup { time: f64, norm: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("implicit solve did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
