//! Sparse Legendre surrogates for Gaussian-process regressors.
//!
//! The pipeline simulates the prior of the expansion weights on a
//! space-filling set, conditions it on data to get posterior-mean weights,
//! and prunes the expansion with a nonnegative garrote whose budget is
//! picked by held-out prediction error. The resulting polynomial model is
//! cheap to evaluate and to optimize, which the [`control`] module uses to
//! drive a plant toward a reference output one polynomial minimization at a
//! time.
//!
//! Data-parallel loops (garrote paths, correlation matrices, multi-start
//! minimization) run on rayon when the `parallel` feature is enabled and
//! fall back to plain iterators otherwise; see [`exec::Execution`].

// `!(x > 0.0)` style checks are there to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod basis;
pub mod control;
pub mod error;
pub mod exec;
pub mod io;
pub mod kernel;
pub mod polyopt;
pub mod polynomial;
pub mod scenarios;

pub use approx::{fit_surrogate, FitOptions, GarrotePath, PriorSimulation, SurrogateModel};
pub use basis::{BasisSpec, Domain, MultiIndex};
pub use control::{run_control, ControlConfig, ControlTrace};
pub use error::{Error, Result};
pub use exec::Execution;
pub use kernel::{KernelConfig, TrainingSet};
pub use polyopt::PolyCost;

/// A point in the input space.
pub type Point = Vec<f64>;
