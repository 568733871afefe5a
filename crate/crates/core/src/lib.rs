//! Transition densities of Wiener, Bessel and Ornstein-Uhlenbeck processes, the
//! bridges derived from them, and executable checks of the identities that tie
//! them together.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: gamma, modified Bessel functions of the first kind, sine-power integrals.
//! * [`linalg`]: matrix exponential, controllability Gramians, Lyapunov solver.
//! * [`models`]: the transition-density kernels and a polar-coordinate oracle for the radial ones.
//! * [`bridges`]: ratio and zero-endpoint limit constructions plus closed-form bridge kernels.
//! * [`verify`]: adaptive quadrature and the numerical checks, emitting JSON reports.
//! * [`sample`]: exact path samplers and Kolmogorov-Smirnov tests.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bridges;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod models;
pub mod sample;
pub mod specfun;
pub mod verify;

pub use bridges::{BridgeConstruction, BridgeDensity, BridgeSpec};
pub use error::{Error, Result};
pub use kernel::{MarkovKernel, StateSpace, Transition};
pub use linalg::{DiffusionMatrix, Gramian, SquareMatrix};
pub use models::{kappa, ProcessModel};
pub use sample::{KsResult, PathSample};
pub use specfun::BesselOrder;
pub use verify::{QuadratureConfig, VerificationReport};
