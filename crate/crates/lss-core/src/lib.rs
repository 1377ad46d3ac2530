//! Local symplectic surgery (LSS) and competing gradient dynamics for
//! two-player zero-sum continuous games.
//!
//! The crate provides:
//! - [`game`]: games, strategy points, and exact evaluation of the cost,
//!   the game vector field omega = (D_x f, -D_y f), and its Jacobian with
//!   the block S + A split;
//! - [`autodiff`]: forward-mode dual numbers, J^T-vector products via
//!   nested duals, and Jv from two J^T-vector products;
//! - [`dynamics`]: simGD, two-timescale simGD, consensus optimization,
//!   SGA, the adjusted field h, LSS, TVLSS, and an RK4 integrator;
//! - [`equilibria`]: Newton multistart for critical points and spectral
//!   classification (Nash / non-Nash LASE / unstable / non-hyperbolic);
//! - [`stochastic`]: bounded martingale-difference noise, noisy runs, and
//!   lock-in probability estimation.

pub mod autodiff;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod game;
pub mod parallel;
pub mod stochastic;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
