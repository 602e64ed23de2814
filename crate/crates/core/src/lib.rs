//! Sparse linear regression with the random lasso bootstrap ensemble.
//!
//! The crate provides the penalized least-squares solvers the ensemble is
//! built from (lasso, adaptive lasso, elastic net, ridge, OLS), the two-step
//! ensemble itself, validation and K-fold tuning of its subset sizes, and a
//! simulation harness with the relative-model-error and selection metrics
//! used to compare methods.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod rng;
pub mod simbench;
pub mod solvers;
pub mod tuning;

pub use data::{center, predict, CenteredView, CoefficientVector, Dataset};
pub use error::{Error, Result};
