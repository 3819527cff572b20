//! Steady-state quantum correlations of a Laguerre-Gaussian cavity with two
//! rotating mirrors and an intracavity optical parametric amplifier.
//!
//! The pipeline is: [`model`] turns physical parameters into the linearised
//! drift and diffusion matrices, [`linalg`] solves for the steady-state
//! covariance matrix, [`measures`] extracts logarithmic negativities, the
//! residual contangle and Rényi-2 Gaussian steering, and [`sweep`] maps that
//! over parameter grids. [`validation`] holds independent oracles and
//! [`io`] the configuration and result-file formats.

pub mod constants;
pub mod error;
pub mod io;
pub mod linalg;
pub mod measures;
pub mod model;
pub mod sweep;
pub mod validation;

pub use error::{Error, Result};
pub use linalg::{CovarianceMatrix, Mode};
pub use measures::{full_report, CorrelationReport, Measures, SteeringClass};
pub use model::{DerivedParams, LinearModel, SteadyState, SystemParams};
