//! Nonparametric modal regression in reproducing kernel Hilbert spaces.
//!
//! The crate fits kernel estimators of the conditional mode by minimizing a
//! kernel-induced (correntropy) loss with iteratively re-weighted least
//! squares, and ships the tooling to study them: Huber and least-absolute
//! baselines, cross-validation, seeded toy data, quadrature checks of the
//! population risk, and a contamination harness.

pub mod data;
pub mod error;
pub mod experiment;
pub mod kernels;
pub mod losses;
pub mod metrics;
pub mod model_select;
pub mod quadrature;
pub mod risk_oracle;
pub mod robustness;
pub mod solver;

pub use error::{Error, Result};
