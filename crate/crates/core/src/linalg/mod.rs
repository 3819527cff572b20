//! Dense kernels for small Gaussian-state problems: general real eigenvalues,
//! the steady-state Lyapunov solve, and covariance-matrix manipulation.
//!
//! Everything here works on `n ≤ 16` dense matrices and is allocation-light
//! and free of shared state.

mod covariance;
mod eigen;
mod lyapunov;

pub use covariance::{min_pt_symplectic, CovarianceMatrix, Mode, SymplecticForm};
pub use eigen::{eigenvalues, max_real_part, real_schur, RealSchur, MAX_DIM};
pub use lyapunov::{lyapunov_residual, solve_lyapunov};
