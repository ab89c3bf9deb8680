use std::f64::consts::PI;

use serde::Serialize;

use super::pole_sum::PoleSum;
use super::tail::Tail;
use super::{SpectrumError, HUXLEY_THETA};
use crate::lattice::NormTable;

/// Smallest table cutoff for which the integral tail is trusted.
pub const MIN_CUTOFF: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecularValue {
    pub lambda: f64,
    pub value: f64,
    pub tail_error_bound: f64,
}

/// `F(λ) = Σ_j r(n_j) [1/(n_j-λ) - n_j/(n_j²+1)]` over the whole dual lattice:
/// the table's norms summed exactly, the rest through [`Tail`].
#[derive(Debug)]
pub struct SecularFunction<'a> {
    table: &'a NormTable,
    poles: PoleSum,
    /// `Σ_{n <= X} r n/(n²+1)`.
    constant: f64,
    tail: Tail,
    c0: f64,
    c0_bound: f64,
}

impl<'a> SecularFunction<'a> {
    pub fn new(table: &'a NormTable) -> Result<Self, SpectrumError> {
        require_cutoff(table, MIN_CUTOFF)?;
        let weights: Vec<f64> = table.multiplicities().iter().map(|&r| r as f64).collect();
        let constant = table
            .norms()
            .iter()
            .zip(&weights)
            .map(|(n, w)| w * n / (n * n + 1.0))
            .sum();
        let tail = Tail::new(table);
        let c0_tail = tail.c0();
        let c0 = partial_c0(table) + c0_tail.value;
        Ok(SecularFunction {
            table,
            poles: PoleSum::new(table.norms().to_vec(), weights),
            constant,
            tail,
            c0,
            c0_bound: c0_tail.bound,
        })
    }

    pub fn table(&self) -> &'a NormTable {
        self.table
    }

    /// `c0 = Σ r/(n²+1)`, tail included.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn c0_error_bound(&self) -> f64 {
        self.c0_bound
    }

    /// Largest `|λ|` the table supports.
    pub fn max_lambda(&self) -> f64 {
        self.table.cutoff() / 2.0
    }

    pub(crate) fn check(&self, lambda: f64) -> Result<(), SpectrumError> {
        if !lambda.is_finite() || lambda.abs() > self.max_lambda() {
            return Err(SpectrumError::InsufficientCutoff {
                needed: 2.0 * lambda.abs(),
                cutoff: self.table.cutoff(),
            });
        }
        if self.table.norms().binary_search_by(|n| n.total_cmp(&lambda)).is_ok() {
            return Err(SpectrumError::AtPole(lambda));
        }
        Ok(())
    }

    pub fn eval(&self, lambda: f64) -> Result<SecularValue, SpectrumError> {
        self.check(lambda)?;
        let (tail, _) = self.tail.secular(lambda);
        Ok(SecularValue {
            lambda,
            value: self.poles.eval(lambda).0 - self.constant + tail.value,
            tail_error_bound: tail.bound,
        })
    }

    /// Value and λ-derivative without argument checks.
    pub(crate) fn value_and_slope(&self, lambda: f64) -> (f64, f64) {
        let (s, ds) = self.poles.eval(lambda);
        let (tail, dtail) = self.tail.secular(lambda);
        (s - self.constant + tail.value, ds + dtail)
    }

    /// Same value as [`eval`](Self::eval), summed term by term over the table.
    pub fn eval_direct(&self, lambda: f64) -> Result<f64, SpectrumError> {
        self.check(lambda)?;
        let sum: f64 = self
            .table
            .entries()
            .map(|e| e.multiplicity as f64 * (1.0 / (e.norm - lambda) - e.norm / (e.norm * e.norm + 1.0)))
            .sum();
        Ok(sum + self.tail.secular(lambda).0.value)
    }
}

fn require_cutoff(table: &NormTable, needed: f64) -> Result<(), SpectrumError> {
    if table.cutoff() < needed {
        return Err(SpectrumError::InsufficientCutoff {
            needed,
            cutoff: table.cutoff(),
        });
    }
    Ok(())
}

/// `Σ r(n)/(n²+1)` over the table only.
pub fn partial_c0(table: &NormTable) -> f64 {
    table
        .entries()
        .map(|e| e.multiplicity as f64 / (e.norm * e.norm + 1.0))
        .sum()
}

/// `c0 = Σ r(n)/(n²+1)` over the full lattice.
pub fn compute_c0(table: &NormTable) -> Result<f64, SpectrumError> {
    Ok(SecularFunction::new(table)?.c0())
}

pub fn eval_secular(table: &NormTable, lambda: f64) -> Result<SecularValue, SpectrumError> {
    SecularFunction::new(table)?.eval(lambda)
}

/// Sum of the secular terms with `|n - λ| >= λ^δ`, plus `π log λ`.
///
/// On a 2D torus the outside-window sum behaves like `-π log λ + O(1)`, so
/// the returned discrepancy stays bounded as λ grows.
pub fn verify_truncation(table: &NormTable, lambda: f64, delta: f64) -> Result<f64, SpectrumError> {
    if table.torus().dimension() != 2 {
        return Err(SpectrumError::InvalidArgument(
            "the truncation estimate concerns 2D tori".into(),
        ));
    }
    if !(lambda >= 10.0) {
        return Err(SpectrumError::InvalidArgument(format!(
            "λ must be at least 10, got {lambda}"
        )));
    }
    check_delta(delta)?;
    let width = lambda.powf(delta);
    require_cutoff(table, (2.0 * lambda).max(lambda + 10.0 * width).max(MIN_CUTOFF))?;
    let outside: f64 = table
        .entries()
        .filter(|e| (e.norm - lambda).abs() >= width)
        .map(|e| e.multiplicity as f64 * (1.0 / (e.norm - lambda) - e.norm / (e.norm * e.norm + 1.0)))
        .sum();
    let tail = Tail::new(table).secular(lambda).0.value;
    Ok(outside + tail + PI * lambda.ln())
}

pub(crate) fn check_delta(delta: f64) -> Result<(), SpectrumError> {
    if !(delta > HUXLEY_THETA && delta < 1.0) {
        return Err(SpectrumError::InvalidCoupling(format!(
            "window exponent δ must lie in ({HUXLEY_THETA:.4}, 1), got {delta}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_norm_table, NormTable, TorusSpec};

    fn square(x: f64) -> NormTable {
        build_norm_table(&TorusSpec::square(), x).unwrap()
    }

    #[test]
    fn c0_of_the_origin_alone_is_one() {
        let t = build_norm_table(&TorusSpec::square(), 0.0).unwrap();
        assert_eq!(partial_c0(&t), 1.0);
        assert!(matches!(compute_c0(&t), Err(SpectrumError::InsufficientCutoff { .. })));
    }

    #[test]
    fn c0_is_stable_under_doubling_the_cutoff() {
        let a = compute_c0(&square(1e4)).unwrap();
        let b = compute_c0(&square(2e4)).unwrap();
        assert!(a > 0.0);
        assert!((a - b).abs() < 1e-6 * a, "{a} vs {b}");
    }

    #[test]
    fn tree_and_direct_evaluations_agree() {
        let t = square(4000.0);
        let f = SecularFunction::new(&t).unwrap();
        for lambda in [-7.5, 0.5, 12.25, 999.1, 1999.0] {
            let a = f.eval(lambda).unwrap().value;
            let b = f.eval_direct(lambda).unwrap();
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "λ={lambda}: {a} vs {b}");
        }
    }

    #[test]
    fn rejects_poles_and_uncovered_arguments() {
        let t = square(2000.0);
        let f = SecularFunction::new(&t).unwrap();
        assert!(matches!(f.eval(25.0), Err(SpectrumError::AtPole(_))));
        assert!(matches!(f.eval(1500.0), Err(SpectrumError::InsufficientCutoff { .. })));
        assert!(matches!(f.eval(f64::NAN), Err(SpectrumError::InsufficientCutoff { .. })));
    }

    #[test]
    fn pole_residue_matches_multiplicity() {
        let t = square(2000.0);
        let f = SecularFunction::new(&t).unwrap();
        for (n, r) in [(25.0, 12.0), (5.0, 8.0), (1.0, 4.0)] {
            let eps = 2f64.powi(-30);
            let v = f.eval(n - eps).unwrap().value;
            assert!((eps * v - r).abs() < 1e-6 * r);
            let v = f.eval(n + eps).unwrap().value;
            assert!((-eps * v - r).abs() < 1e-6 * r);
        }
    }

    #[test]
    fn value_at_minus_one_is_negative() {
        let v = eval_secular(&square(1e4), -1.0).unwrap();
        assert!(v.value < 0.0);
    }

    #[test]
    fn truncation_partition_is_additive() {
        // With λ below every nonzero norm's window, the outside sum is the
        // full secular value minus the inside-window terms.
        let t = square(2000.0);
        let lambda: f64 = 10.5;
        let delta = 0.5;
        let width = lambda.powf(delta);
        let inside: f64 = t
            .entries()
            .filter(|e| (e.norm - lambda).abs() < width)
            .map(|e| e.multiplicity as f64 * (1.0 / (e.norm - lambda) - e.norm / (e.norm * e.norm + 1.0)))
            .sum();
        let full = eval_secular(&t, lambda).unwrap().value;
        let d = verify_truncation(&t, lambda, delta).unwrap();
        assert!((d - (full - inside + PI * lambda.ln())).abs() < 1e-9);
    }

    #[test]
    fn truncation_arguments_are_validated() {
        let t = square(2000.0);
        assert!(matches!(verify_truncation(&t, 5.0, 0.5), Err(SpectrumError::InvalidArgument(_))));
        assert!(matches!(verify_truncation(&t, 50.0, 0.3), Err(SpectrumError::InvalidCoupling(_))));
        assert!(matches!(
            verify_truncation(&t, 1500.0, 0.5),
            Err(SpectrumError::InsufficientCutoff { .. })
        ));
    }
}
