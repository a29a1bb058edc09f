use thiserror::Error;

/// Errors produced by the solvers and the configuration layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A requested value lies outside the feasible range of the problem.
    /// `bound` names the violated bound so callers can report it.
    #[error("infeasible: {detail} (violated bound: {bound})")]
    Infeasible { detail: String, bound: String },

    #[error("solver did not converge within {max_iter} iterations (last residual {residual:.3e})")]
    NonConvergence { max_iter: usize, residual: f64 },

    /// The masked adjoint norm fell below the degeneracy floor on an active
    /// cell. The continuous theory rules this out for t < T; hitting it
    /// signals a discretization pathology rather than a recoverable state.
    #[error("degenerate adjoint: masked adjoint norm {norm:.3e} below floor {floor:.3e} at t = {t}")]
    DegenerateAdjoint { t: f64, norm: f64, floor: f64 },

    /// The free-flow terminal state already coincides with the target, so
    /// the reach distance collapses to zero and the optimality system loses
    /// meaning.
    #[error("degenerate target: reach distance {reach:.3e} is numerically zero")]
    DegenerateTarget { reach: f64 },

    #[error("bracket search failed: r(tau, k*M0) never fell below r within {k_max} steps")]
    BracketFailed { k_max: usize },

    #[error("closed-loop instability: per-step norm {norm:.3e} exceeds 10x initial norm {initial:.3e}")]
    Instability { norm: f64, initial: f64 },

    #[error("oracle did not converge: {0}")]
    Oracle(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 configuration, 2 infeasible
    /// problem data, 3 solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Io(_) => 1,
            Error::Infeasible { .. } | Error::DegenerateTarget { .. } => 2,
            Error::NonConvergence { .. }
            | Error::DegenerateAdjoint { .. }
            | Error::BracketFailed { .. }
            | Error::Instability { .. }
            | Error::Oracle(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
