//! Weighted least-squares regression by iterative series expansion.
//!
//! A response is modelled as a base model (zero, constant or linear) plus a
//! greedily grown series `sum alpha_j * f(beta_j, g(x))`. Every iteration
//! picks the frequency `beta_j` whose optimally scaled basis function removes
//! the most weighted sum of squares from the current residuals, so the
//! training SS never increases.
//!
//! ```
//! use iterfit::{fit, BaseKind, Dataset, FitConfig, FrequencyBand};
//!
//! let xs: Vec<f64> = (0..40).map(|i| i as f64 * 10.0 / 39.0).collect();
//! let ys: Vec<f64> = xs.iter().map(|x| 0.7 * (1.3 * x).sin()).collect();
//! let data = Dataset::from_xy(&xs, &ys).unwrap();
//! let cfg = FitConfig {
//!     band: FrequencyBand::new(0.1, 3.0, 512).unwrap(),
//!     refine_steps: 40,
//!     max_iterations: 1,
//!     base: BaseKind::Zero,
//!     ..FitConfig::default()
//! };
//! let (model, report) = fit(&data, &cfg).unwrap();
//! assert!((model.terms[0].beta - 1.3).abs() < 1e-3);
//! assert!(report.final_ss() < 1e-4 * report.initial_ss);
//! ```

// `!(a > b)` is used on purpose where NaN must fall into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod cli;
pub mod dataset;
pub mod eclipse;
pub mod error;
pub mod fitter;
pub mod model;

pub use basis::{basis_energy, evaluate_basis, Basis, BasisFamily, BasisKind, FrequencyBand, InputTransform};
pub use dataset::{
    collapse_duplicates, residuals, validate_dataset, weighted_ss, Dataset, Observation, ResidualVector,
};
pub use error::{Error, Result};
pub use fitter::{
    early_stopping_check, fit, make_base_model, optimal_coefficient, search_beta, split_dataset, BaseKind, BaseModel,
    BetaCandidate, EarlyStop, FitConfig, FitReport, IterationRecord, StopReason,
};
pub use model::{ModelMetadata, SeriesModel, Term};
