//! Complex linear algebra and polynomial numerics shared by the rest of the crate.
//!
//! Everything here is a pure function of its inputs. Numerical thresholds live
//! in [`Tolerances`] so callers (and tests) can tighten them in one place.

mod dft;
mod eig;
mod lstsq;
mod matrix;
mod poly;
mod spectral;

pub use dft::dft_response;
pub use eig::{sym_eig, sym_eig_with, EigenResult};
pub use lstsq::{default_ridge, ridge_pinv_solve, ridge_pinv_solve_with, RidgeSolution};
pub use matrix::{checked_vector, dotc, norm2, norm2_sqr, ComplexMatrix, ComplexVector, RealMatrix, C64};
pub use poly::{poly_eval, poly_from_roots, poly_roots, poly_roots_with};
pub use spectral::{eigenvalues_general, spectral_radius, spectral_radius_with};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("matrix is not symmetric (max |a_ij - a_ji| = {max_asymmetry:e})")]
    NonSymmetric { max_asymmetry: f64 },
    #[error("{routine} did not converge after {iterations} iterations")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
        /// Best iterate at the point of giving up, when the routine has one.
        best: Option<Vec<C64>>,
    },
    #[error("system is numerically singular (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty input")]
    Empty,
    #[error("input contains NaN or infinite entries")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Numerical thresholds for the routines in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative symmetry tolerance accepted by [`sym_eig`].
    pub symmetry: f64,
    /// Cyclic Jacobi sweep cap.
    pub jacobi_max_sweeps: usize,
    /// Jacobi stops once the off-diagonal Frobenius norm drops below this
    /// fraction of the full Frobenius norm.
    pub jacobi_offdiag: f64,
    /// Condition estimate above which an unregularized solve is refused.
    pub max_condition: f64,
    /// Scale of the default ridge, `scale · trace(AᴴA) / cols`.
    pub ridge_scale: f64,
    pub roots_max_iterations: usize,
    /// Accepted backward error of a computed polynomial root.
    pub roots_residual: f64,
    pub power_max_iterations: usize,
    /// Relative step-to-step change at which power iteration is converged.
    pub power_step_tol: f64,
    /// Hessenberg QR iteration cap per eigenvalue.
    pub qr_iterations_per_eigenvalue: usize,
}

pub const DEFAULT_TOLERANCES: Tolerances = Tolerances {
    symmetry: 1e-10,
    jacobi_max_sweeps: 100,
    jacobi_offdiag: 1e-15,
    max_condition: 1e12,
    ridge_scale: 1e-6,
    roots_max_iterations: 500,
    roots_residual: 1e-8,
    power_max_iterations: 2000,
    power_step_tol: 1e-13,
    qr_iterations_per_eigenvalue: 60,
};

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT_TOLERANCES
    }
}
