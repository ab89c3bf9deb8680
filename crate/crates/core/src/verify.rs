//! Named numerical checks of the asymptotic statements, each with a measured
//! value, a threshold and a verdict.

use serde::{Deserialize, Serialize};

use crate::lattice::{LatticeClass, LatticeError, NormTable, TorusSpec};
use crate::spectrum::{solve, verify_truncation, CouplingSpec, SpectrumError, DEFAULT_DELTA};
use crate::stats::{distinct_density, gap_report, landau_ratio, trend, StatsError};
use crate::util::ls_slope;

/// `B` in `N(x) ~ B x / √(log x)` for sums of two squares.
pub const LANDAU_RAMANUJAN: f64 = 0.764_223_653_589_220_7;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn below(name: &str, measured: f64, threshold: f64, detail: String) -> Self {
        Check {
            name: name.into(),
            measured,
            threshold,
            pass: measured < threshold,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub torus: TorusSpec,
    pub x: f64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Log-spaced thresholds `x, x/10, x/100, ...` down to `floor`, ascending.
fn decades(x: f64, floor: f64, count: usize) -> Vec<f64> {
    let mut t: Vec<f64> = (0..count)
        .map(|i| x / 10f64.powi(i as i32))
        .filter(|&t| t >= floor)
        .collect();
    t.reverse();
    t
}

/// Fitted exponent of `sup |E|` over dyadic windows `[t/2, t]`, against the
/// trivial exponent `(d-1)/2`.
pub fn circle_law_check(table: &NormTable, x: f64) -> Check {
    let dim = table.torus().dimension() as f64;
    let mut ts = Vec::new();
    let mut t = x;
    while t >= 100.0 && ts.len() < 16 {
        ts.push(t);
        t /= 2.0;
    }
    ts.reverse();
    let logs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let sups: Vec<f64> = ts
        .iter()
        .map(|&t| table.max_remainder(t / 2.0, t).max(1.0).ln())
        .collect();
    let slope = if ts.len() >= 3 { ls_slope(&logs, &sups) } else { f64::NAN };
    Check {
        name: "circle_law_remainder".into(),
        measured: slope,
        threshold: (dim - 1.0) / 2.0,
        pass: slope < (dim - 1.0) / 2.0,
        detail: format!("fitted exponent of the lattice-count remainder over {} windows", ts.len()),
    }
}

/// Relative deviation of `N(x)√(log x)/x` from the Landau–Ramanujan constant.
pub fn landau_check(table: &NormTable, x: f64) -> Result<Check, VerifyError> {
    let ratio = landau_ratio(table, x)?;
    Ok(Check::below(
        "landau_constant",
        (ratio - LANDAU_RAMANUJAN).abs() / LANDAU_RAMANUJAN,
        0.10,
        format!("N(x)·√(log x)/x = {ratio:.6}"),
    ))
}

/// Relative deviation of `N(x)/x` from `π/4`.
pub fn irrational_density_check(table: &NormTable, x: f64) -> Result<Check, VerifyError> {
    let density = distinct_density(table, x)?;
    let target = std::f64::consts::FRAC_PI_4;
    Ok(Check::below(
        "irrational_density",
        (density - target).abs() / target,
        0.05,
        format!("N(x)/x = {density:.6}"),
    ))
}

/// Slope and range of the truncation discrepancy over log-spaced λ.
pub fn truncation_check(table: &NormTable, lambdas: &[f64], delta: f64) -> Result<Check, VerifyError> {
    let values = lambdas
        .iter()
        .map(|&l| verify_truncation(table, l, delta))
        .collect::<Result<Vec<_>, _>>()?;
    let t = trend(lambdas, &values);
    Ok(Check {
        name: "truncation_boundedness".into(),
        measured: t.slope.abs(),
        threshold: 0.05,
        pass: t.bounded && t.range < 5.0,
        detail: format!("range {:.4} (limit 5) over λ = {:?}", t.range, lambdas),
    })
}

/// Spread `max/min` of `⟨d⟩ log x / ⟨δ⟩` across thresholds.
pub fn clumping_check(table: &NormTable, thresholds: &[f64], phi: f64) -> Result<Check, VerifyError> {
    let x = thresholds.iter().cloned().fold(0.0, f64::max);
    let records = solve(table, &CouplingSpec::weak(phi)?, x)?;
    let values = thresholds
        .iter()
        .map(|&t| gap_report(table, &records, t).map(|g| g.log_weighted_ratio))
        .collect::<Result<Vec<_>, _>>()?;
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Check {
        name: "gap_clumping".into(),
        measured: max / min,
        threshold: 2.0,
        pass: thresholds.len() >= 2 && max / min < 2.0,
        detail: format!("⟨d⟩·log x/⟨δ⟩ = {values:?} at x = {thresholds:?}"),
    })
}

/// Deviation of `⟨d⟩/⟨δ⟩` from one half.
pub fn midpoint_check(table: &NormTable, x: f64, phi: f64) -> Result<Check, VerifyError> {
    let records = solve(table, &CouplingSpec::weak(phi)?, x)?;
    let g = gap_report(table, &records, x)?;
    Ok(Check::below(
        "gap_midpoint",
        (g.ratio - 0.5).abs(),
        0.05,
        format!("⟨d⟩/⟨δ⟩ = {:.6}", g.ratio),
    ))
}

/// Table cutoff needed by [`run_suite`] at threshold `x`.
pub fn suite_cutoff(x: f64) -> f64 {
    (2.0 * x).max(2e3)
}

/// Runs every check that applies to the table's torus at threshold `x`, with
/// weak coupling `φ = 0` where a spectrum is needed.
pub fn run_suite(table: &NormTable, x: f64) -> Result<VerifyReport, VerifyError> {
    let needed = suite_cutoff(x);
    if table.cutoff() < needed {
        return Err(SpectrumError::InsufficientCutoff {
            needed,
            cutoff: table.cutoff(),
        }
        .into());
    }
    let torus = table.torus();
    let mut checks = vec![circle_law_check(table, x)];
    match torus.dimension() {
        2 => {
            if *torus == TorusSpec::square() {
                checks.push(landau_check(table, x)?);
            }
            if torus.lattice_class() == LatticeClass::Irrational {
                checks.push(irrational_density_check(table, x)?);
            }
            let lambdas: Vec<f64> = [1e2, 3e2, 1e3, 3e3, 1e4, 3e4, 1e5]
                .into_iter()
                .filter(|&l| l <= x)
                .collect();
            if lambdas.len() >= 3 {
                checks.push(truncation_check(table, &lambdas, DEFAULT_DELTA)?);
            }
            let thresholds = decades(x, 1e2, 3);
            if thresholds.len() >= 2 {
                checks.push(clumping_check(table, &thresholds, 0.0)?);
            }
        }
        _ => checks.push(midpoint_check(table, x, 0.0)?),
    }
    Ok(VerifyReport {
        torus: torus.clone(),
        x,
        checks,
    })
}
