use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use super::torus::{ExactForm, TorusSpec};
use super::LatticeError;

/// Relative tolerance below which two float norms are treated as a candidate collision.
pub const GROUPING_TOLERANCE: f64 = 1e-12;

/// Best known exponent in the circle-law remainder.
pub const HUXLEY_EXPONENT: f64 = 131.0 / 416.0;

/// Distinct Laplace eigenvalues `|ξ|²` of a flat torus with their multiplicities,
/// complete up to `cutoff`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormTable {
    torus: TorusSpec,
    cutoff: f64,
    norms: Vec<f64>,
    multiplicities: Vec<u32>,
    keys: Option<Vec<u128>>,
    cumulative: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEntry {
    pub norm: f64,
    pub multiplicity: u32,
    pub key: Option<u128>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleLawReport {
    pub x: f64,
    pub lattice_count: u64,
    /// `lattice_count - πx` (2D) or `lattice_count - 4πx^{3/2}/3` (3D).
    pub remainder: f64,
    pub huxley_exponent: f64,
    pub distinct_count: usize,
}

/// Enumerates all dual-lattice vectors with `|ξ|² <= cutoff` and groups them by norm.
pub fn build_norm_table(torus: &TorusSpec, cutoff: f64) -> Result<NormTable, LatticeError> {
    build_with_order(torus, cutoff, false)
}

pub(crate) fn build_with_order(
    torus: &TorusSpec,
    cutoff: f64,
    reversed: bool,
) -> Result<NormTable, LatticeError> {
    if !cutoff.is_finite() || cutoff < 0.0 {
        return Err(LatticeError::InvalidCutoff(cutoff));
    }
    torus.validate()?;
    let mut reps = orbit_representatives(torus, cutoff);
    if reversed {
        reps.reverse();
    }
    match torus.exact_form() {
        Some(form) => {
            let mut keyed: Vec<(u128, u32)> = reps
                .iter()
                .map(|(idx, mult, _)| (form.key(&idx[..torus.dimension()]), *mult))
                .collect();
            keyed.sort_unstable();
            let mut keys: Vec<u128> = Vec::new();
            let mut mults: Vec<u32> = Vec::new();
            for (key, mult) in keyed {
                if keys.last() == Some(&key) {
                    *mults.last_mut().unwrap() += mult;
                } else {
                    keys.push(key);
                    mults.push(mult);
                }
            }
            let norms = keys.iter().map(|&k| form.norm(k)).collect();
            Ok(NormTable::assemble(torus.clone(), cutoff, norms, mults, Some(keys)))
        }
        None => {
            reps.sort_by(|a, b| a.2.total_cmp(&b.2));
            for pair in reps.windows(2) {
                let (lo, hi) = (&pair[0], &pair[1]);
                if hi.2 - lo.2 <= GROUPING_TOLERANCE * hi.2.max(1.0) {
                    check_distinct(torus, &lo.0[..torus.dimension()], &hi.0[..torus.dimension()])?;
                }
            }
            let norms = reps.iter().map(|r| r.2).collect();
            let mults = reps.iter().map(|r| r.1).collect();
            Ok(NormTable::assemble(torus.clone(), cutoff, norms, mults, None))
        }
    }
}

type Rep = ([i64; 3], u32, f64);

/// One representative per sign orbit (all indices `>= 0`), with the orbit size.
fn orbit_representatives(torus: &TorusSpec, cutoff: f64) -> Vec<Rep> {
    let dim = torus.dimension();
    let coeffs = torus.axis_coefficients();
    let bounds = torus.index_bounds(cutoff);
    let exact = torus.exact_form();
    let value = |idx: &[i64]| -> f64 {
        match &exact {
            Some(form) => form.norm(form.key(idx)),
            None => idx
                .iter()
                .zip(&coeffs)
                .map(|(&m, c)| c * (m * m) as f64)
                .sum(),
        }
    };
    let orbit = |idx: &[i64]| 1u32 << idx.iter().filter(|&&m| m != 0).count();
    // Loop limits come from the quadratic form; the slack absorbs rounding and
    // the exact `value <= cutoff` test decides membership.
    let limit = |rest: f64, c: f64, bound: i64| {
        (((rest.max(0.0) / c).sqrt()).floor() as i64 + 1).min(bound)
    };
    (0..=bounds[0])
        .into_par_iter()
        .flat_map_iter(|m| {
            let mut out = Vec::new();
            let rest = cutoff - coeffs[0] * (m * m) as f64;
            let mut push = |idx: [i64; 3]| {
                let v = value(&idx[..dim]);
                if v <= cutoff {
                    out.push((idx, orbit(&idx[..dim]), v));
                }
            };
            if rest >= -1e-9 * cutoff.max(1.0) {
                for n in 0..=limit(rest, coeffs[1], bounds[1]) {
                    if dim == 2 {
                        push([m, n, 0]);
                        continue;
                    }
                    let rest2 = rest - coeffs[1] * (n * n) as f64;
                    if rest2 < -1e-9 * cutoff.max(1.0) {
                        break;
                    }
                    for k in 0..=limit(rest2, coeffs[2], bounds[2]) {
                        push([m, n, k]);
                    }
                }
            }
            out.into_iter()
        })
        .collect()
}

/// Decides a near-collision of two orbit representatives in exact arithmetic on
/// the supplied aspect digits.
fn check_distinct(torus: &TorusSpec, a: &[i64], b: &[i64]) -> Result<(), LatticeError> {
    let coeffs = torus.exact_axis_coefficients();
    let exact = |idx: &[i64]| -> BigRational {
        idx.iter()
            .zip(&coeffs)
            .map(|(&m, c)| c * BigRational::from_integer((m * m).into()))
            .sum()
    };
    let (na, nb) = (exact(a), exact(b));
    let diff = (&na - &nb).abs().to_f64().unwrap_or(0.0);
    let scale = nb.to_f64().unwrap_or(1.0).max(1.0);
    let digits = torus
        .aspects()
        .iter()
        .filter_map(|x| x.significant_digits())
        .min()
        .unwrap_or(30);
    let resolution = 10f64.powi(-(digits as i32 - 8)) * scale;
    if diff <= resolution {
        return Err(LatticeError::Collision {
            first: a.to_vec(),
            second: b.to_vec(),
            norm: nb.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

impl NormTable {
    pub(crate) fn assemble(
        torus: TorusSpec,
        cutoff: f64,
        norms: Vec<f64>,
        multiplicities: Vec<u32>,
        keys: Option<Vec<u128>>,
    ) -> Self {
        let cumulative = multiplicities
            .iter()
            .scan(0u64, |acc, &r| {
                *acc += r as u64;
                Some(*acc)
            })
            .collect();
        NormTable {
            torus,
            cutoff,
            norms,
            multiplicities,
            keys,
            cumulative,
        }
    }

    pub fn torus(&self) -> &TorusSpec {
        &self.torus
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    /// Whether norms carry exact integer keys.
    pub fn is_exact(&self) -> bool {
        self.keys.is_some()
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    pub fn keys(&self) -> Option<&[u128]> {
        self.keys.as_deref()
    }

    pub fn exact_form(&self) -> Option<ExactForm> {
        self.keys.as_ref().and(self.torus.exact_form())
    }

    pub fn entry(&self, j: usize) -> NormEntry {
        NormEntry {
            norm: self.norms[j],
            multiplicity: self.multiplicities[j],
            key: self.keys.as_ref().map(|k| k[j]),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = NormEntry> + '_ {
        (0..self.len()).map(|j| self.entry(j))
    }

    /// Number of entries with norm `<= x`.
    pub(crate) fn rank(&self, x: f64) -> usize {
        self.norms.partition_point(|&n| n <= x)
    }

    fn check_range(&self, x: f64) -> Result<(), LatticeError> {
        if x.is_nan() || x > self.cutoff {
            return Err(LatticeError::OutOfRange {
                x,
                cutoff: self.cutoff,
            });
        }
        Ok(())
    }

    /// `Σ_{n_j <= x} r(n_j)`: the number of dual vectors with `|ξ|² <= x`.
    pub fn counting(&self, x: f64) -> Result<u64, LatticeError> {
        self.check_range(x)?;
        Ok(match self.rank(x) {
            0 => 0,
            k => self.cumulative[k - 1],
        })
    }

    /// `N(x) = #{n_j <= x}`, multiplicities ignored.
    pub fn distinct_counting(&self, x: f64) -> Result<usize, LatticeError> {
        self.check_range(x)?;
        Ok(self.rank(x))
    }

    pub fn total_count(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }

    /// Lattice count minus its Weyl term at `x`.
    pub fn remainder(&self, x: f64) -> Result<f64, LatticeError> {
        Ok(self.counting(x)? as f64 - self.torus.weyl_term(x))
    }

    /// Largest `|N(t) - Weyl(t)|` over `t` in `[lo, hi]`, sampled just before
    /// and at every norm in the range (where the extremes occur).
    pub fn max_remainder(&self, lo: f64, hi: f64) -> f64 {
        let hi = hi.min(self.cutoff);
        let start = self.norms.partition_point(|&n| n < lo);
        let end = self.rank(hi);
        let mut worst: f64 = 0.0;
        for j in start..end {
            let before = if j == 0 { 0 } else { self.cumulative[j - 1] };
            let w = self.torus.weyl_term(self.norms[j]);
            worst = worst
                .max((before as f64 - w).abs())
                .max((self.cumulative[j] as f64 - w).abs());
        }
        if end > 0 {
            worst = worst.max((self.cumulative[end - 1] as f64 - self.torus.weyl_term(hi)).abs());
        }
        worst
    }

    pub fn circle_law(&self, x: f64) -> Result<CircleLawReport, LatticeError> {
        Ok(CircleLawReport {
            x,
            lattice_count: self.counting(x)?,
            remainder: self.remainder(x)?,
            huxley_exponent: HUXLEY_EXPONENT,
            distinct_count: self.distinct_counting(x)?,
        })
    }

    /// Table restricted to norms `<= cutoff`.
    pub fn truncated(&self, cutoff: f64) -> Result<NormTable, LatticeError> {
        self.check_range(cutoff)?;
        let k = self.rank(cutoff);
        Ok(NormTable::assemble(
            self.torus.clone(),
            cutoff,
            self.norms[..k].to_vec(),
            self.multiplicities[..k].to_vec(),
            self.keys.as_ref().map(|keys| keys[..k].to_vec()),
        ))
    }
}
