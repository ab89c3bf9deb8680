//! Dual lattices of flat tori: norms, multiplicities and counting functions.

mod aspect;
mod store;
mod table;
mod torus;

pub use aspect::{Aspect, IRRATIONAL_MIN_DIGITS};
pub use store::{export_csv, load_table, save_table, FORMAT_VERSION};
pub use table::{
    build_norm_table, CircleLawReport, NormEntry, NormTable, GROUPING_TOLERANCE, HUXLEY_EXPONENT,
};
pub use torus::{ExactForm, LatticeClass, TorusSpec};

#[derive(Debug, thiserror::Error)]
pub enum LatticeError {
    #[error("aspect parameter must be strictly positive, got {0}")]
    NonPositiveAspect(String),
    #[error("cannot parse aspect parameter {0:?}")]
    MalformedAspect(String),
    #[error("cutoff must be finite and non-negative, got {0}")]
    InvalidCutoff(f64),
    #[error("norms of {first:?} and {second:?} agree to within grouping tolerance near {norm}; supply more aspect digits")]
    Collision {
        first: Vec<i64>,
        second: Vec<i64>,
        norm: f64,
    },
    #[error("x = {x} exceeds the table cutoff {cutoff}")]
    OutOfRange { x: f64, cutoff: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a norm table file")]
    BadMagic,
    #[error("unsupported table format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt table file: {0}")]
    Corrupt(String),
}
