//! Variance analysis of the REINFORCE policy-gradient estimator on
//! stochastic linear-quadratic regulator problems.
//!
//! - [`ctrlmath`]: dense linear algebra, Riccati solving, pole placement.
//! - [`lqrmodel`]: problem/policy types and closed-form moment evaluation.
//! - [`rollout`]: keyed, reproducible trajectory simulation.
//! - [`pg`]: the single-trajectory gradient estimator, Monte-Carlo moments,
//!   finite-difference oracle and a plain REINFORCE training loop.
//! - [`bounds`]: closed-form upper bound on `E[tr(g'g)]` and the scalar lower bound.
//! - [`probgen`]: random problem and eigenvalue-prototype generation.

pub mod bounds;
pub mod ctrlmath;
mod error;
pub mod lqrmodel;
pub mod pg;
pub mod probgen;
pub mod rollout;

pub use ctrlmath::Mat;
pub use error::{Error, Result};
pub use lqrmodel::{GaussianPolicy, LqrProblem};
pub use rollout::{RngKey, StreamContext, Trajectory};
