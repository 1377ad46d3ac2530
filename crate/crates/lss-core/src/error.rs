use crate::dynamics::Trajectory;

/// Errors shared by every module of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A derivative or cost evaluation produced NaN/inf.
    #[error("non-finite value in {context} at z = {coords:?}{}",
            coord_index.map(|i| format!(" (coordinate {i})")).unwrap_or_default())]
    NonFinite {
        context: &'static str,
        coords: Vec<f64>,
        coord_index: Option<usize>,
    },

    /// An iterate left the finite range (or the ||z|| > 1e6 guard fired).
    /// Carries the last finite state and, for trajectory runners, the
    /// partial trajectory recorded so far.
    #[error("dynamics diverged at step {step} (last finite state {last_finite:?})")]
    Divergence {
        step: u64,
        last_finite: Vec<f64>,
        partial: Option<Box<Trajectory>>,
    },

    #[error("singular solve at z = {coords:?} (min singular value {min_singular_value:.3e})")]
    SingularSolve {
        coords: Vec<f64>,
        min_singular_value: f64,
    },

    /// The block S/A split disagrees with (J + J^T)/2 beyond tolerance,
    /// which means a user-supplied cost is not a consistent C^2 function.
    #[error("inconsistent Jacobian: block-symmetric part deviates from (J+J^T)/2 by {max_dev:.3e}")]
    InconsistentJacobian { max_dev: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
