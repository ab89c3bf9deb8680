//! Quantisation condition of the point scatterer and its solutions.

mod pole_sum;
mod secular;
mod solve;
mod tail;

pub use pole_sum::PoleSum;
pub use secular::{
    compute_c0, eval_secular, partial_c0, verify_truncation, SecularFunction, SecularValue,
    MIN_CUTOFF,
};
pub use solve::{
    brute_force_roots, intervals_up_to, solve, solve_strong, solve_weak, strong_window,
    write_eigenvalue_csv, CouplingSpec, EigenvalueRecord, DEFAULT_DELTA,
};
pub use tail::{Tail, TailPart};

use crate::lattice::LatticeError;

/// Exponent `θ = 131/416` of the best known circle-law remainder.
pub const HUXLEY_THETA: f64 = crate::lattice::HUXLEY_EXPONENT;

#[derive(Debug, thiserror::Error)]
pub enum SpectrumError {
    #[error("λ = {0} is a norm of the lattice (pole of the secular function)")]
    AtPole(f64),
    #[error("table cutoff {cutoff} is too small; need at least {needed}")]
    InsufficientCutoff { needed: f64, cutoff: f64 },
    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no sign change found in interval {j}; the table or tolerances are inconsistent")]
    BracketFailure { j: usize },
    #[error("no ground state above {limit}")]
    NoGroundState { limit: f64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}
