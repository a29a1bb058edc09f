//! Spectral solvers for three optimal control problems on the internally
//! controlled 1-D heat equation on (0, 1) with homogeneous Dirichlet ends:
//!
//! * **optimal target** — given a norm bound M and an activation time tau,
//!   steer as close as possible to a target profile z_d at the horizon T;
//! * **optimal norm** — given a target ball B(z_d, r) and tau, find the
//!   smallest norm bound that still reaches the ball;
//! * **optimal time** — given M and r, find the latest activation time that
//!   still reaches the ball.
//!
//! The three problems are linked: the reach-distance map
//! (tau, M) -> r(tau, M) is strictly decreasing in M and strictly increasing
//! in tau, and the optimal norm / optimal time are its partial inverses.
//! The [`norm`] and [`time`] modules realize them as bisections over
//! repeated solves of the two-point boundary value problem in [`bvp`];
//! [`feedback`] turns the optimal norm value into a sampled-data feedback
//! law, and [`verify`] checks the inverse identities and monotonicity
//! numerically.
//!
//! States live in the sine eigenbasis of the Dirichlet Laplacian, so the
//! uncontrolled flow is exact; see [`spectral`].

pub mod bvp;
pub mod cli;
pub mod config;
pub mod error;
pub mod feedback;
pub mod norm;
pub mod spectral;
pub mod time;
pub mod verify;

pub use bvp::{oracle_op, reach_distance, solve_bvp, BvpSolution};
pub use config::ProblemConfig;
pub use error::{Error, Result};
pub use feedback::{
    feedback_control, optimal_norm_value, simulate_activated, simulate_closed_loop,
    ClosedLoopRun, FeedbackScenario,
};
pub use norm::{find_bracket, free_reach, optimal_norm, BisectionTrace, NormSolution};
pub use spectral::{build_domain, ControlTrajectory, Field, SpectralDomain, StateTrajectory, TimeGrid};
pub use time::{optimal_time, TimeSolution};
pub use verify::{run_verification, CheckRecord, CheckStatus, VerificationReport};
