//! Explainable predictive modeling for high-dimensional, small-sample
//! spectral regression.
//!
//! The crate is organised around six pieces:
//!
//! - [`spectra`]: datasets on a wavenumber axis, file I/O, trimming,
//!   standardization, scenario splits and a seeded synthetic generator with
//!   known ground-truth feature locations.
//! - [`models`]: OLS/ridge, epsilon-SVR (SMO dual solver), an MLP trained by
//!   backpropagation, random forests, and seeded hyperparameter search.
//! - [`selectors`]: model-based feature rankings (PCA, PLS, forest
//!   impurity, ridge coefficients) and subset extraction.
//! - [`explainers`]: model-agnostic attributions (Shapley, LIME, global
//!   surrogate) and their global rankings.
//! - [`metrics`]: MSE and the binned-Jaccard correctness score against
//!   expert feature locations.
//! - [`harness`]: repeated-split scenario evaluation and report emission.
//!
//! Every stochastic routine takes an explicit seed; repeated calls with the
//! same inputs are bit-identical.

pub mod error;
pub mod explainers;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod selectors;
pub mod spectra;

pub use error::{Error, LoadError, Result};
pub use nalgebra;

/// Dense, column-major matrix used for all observation × feature data.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense column vector.
pub type Vector = nalgebra::DVector<f64>;

/// Version string embedded in serialized models and reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
