use std::f64::consts::PI;
use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::secular::{check_delta, SecularFunction};
use super::SpectrumError;
use crate::lattice::NormTable;
use crate::util::fmt17;

pub const DEFAULT_DELTA: f64 = 0.5;

/// Leftmost point tried when bracketing a ground state with no table limit.
const GROUND_STATE_FLOOR: f64 = -1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "lowercase")]
pub enum CouplingSpec {
    /// Fixed extension parameter `φ ∈ (-π, π)`.
    Weak { phi: f64 },
    /// Fixed physical coupling `α ≠ 0` with energy window `|n - λ| < λ^δ`.
    Strong { alpha: f64, delta: f64 },
}

impl CouplingSpec {
    pub fn weak(phi: f64) -> Result<Self, SpectrumError> {
        let c = CouplingSpec::Weak { phi };
        c.validate()?;
        Ok(c)
    }

    pub fn strong(alpha: f64, delta: f64) -> Result<Self, SpectrumError> {
        let c = CouplingSpec::Strong { alpha, delta };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), SpectrumError> {
        match *self {
            CouplingSpec::Weak { phi } => {
                if !(phi > -PI && phi < PI) {
                    return Err(SpectrumError::InvalidCoupling(format!(
                        "φ must lie strictly inside (-π, π), got {phi}"
                    )));
                }
            }
            CouplingSpec::Strong { alpha, delta } => {
                if alpha == 0.0 || !alpha.is_finite() {
                    return Err(SpectrumError::InvalidCoupling(format!(
                        "α must be finite and nonzero, got {alpha}"
                    )));
                }
                check_delta(delta)?;
            }
        }
        Ok(())
    }
}

/// A new eigenvalue `λ_j ∈ (n_{j-1}, n_j)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRecord {
    pub j: usize,
    pub lambda: f64,
    pub left_norm: Option<f64>,
    pub right_norm: f64,
    /// `n_j - λ_j`.
    pub d: f64,
    /// `|F(λ) - target|` at the returned root.
    pub residual: f64,
}

/// Interval indices `j` with `n_j <= x`.
pub fn intervals_up_to(table: &NormTable, x: f64) -> Result<Range<usize>, SpectrumError> {
    Ok(0..table.distinct_counting(x)?)
}

/// Solves every interval with `n_j <= x` in the given regime.
pub fn solve(
    table: &NormTable,
    coupling: &CouplingSpec,
    x: f64,
) -> Result<Vec<EigenvalueRecord>, SpectrumError> {
    coupling.validate()?;
    let js = intervals_up_to(table, x)?;
    match *coupling {
        CouplingSpec::Weak { phi } => solve_weak(&SecularFunction::new(table)?, phi, js),
        CouplingSpec::Strong { alpha, delta } => solve_strong(table, alpha, delta, js),
    }
}

/// Roots of `F(λ) = c0 tan(φ/2)`, one per interval.
pub fn solve_weak(
    sec: &SecularFunction,
    phi: f64,
    js: Range<usize>,
) -> Result<Vec<EigenvalueRecord>, SpectrumError> {
    CouplingSpec::weak(phi)?;
    let table = sec.table();
    check_range(table, &js)?;
    if let Some(last) = js.end.checked_sub(1) {
        let n = table.norms()[last];
        if n > sec.max_lambda() {
            return Err(SpectrumError::InsufficientCutoff {
                needed: 2.0 * n,
                cutoff: table.cutoff(),
            });
        }
    }
    let target = sec.c0() * (phi / 2.0).tan();
    let g = |lambda: f64| {
        let (v, dv) = sec.value_and_slope(lambda);
        (v - target, dv)
    };
    js.into_par_iter()
        .map(|j| {
            let bracket = Bracket::new(table, j, |lo| {
                ground_bracket(lo, -sec.max_lambda(), |x| g(x).0)
            })?;
            finish(table, j, bracket, g)
        })
        .collect()
}

/// Roots of the windowed condition `Σ_{window} r [1/(n-λ) - n/(n²+1)] = 1/α`.
///
/// The window for interval `j` is `|n_k - n_j| < n_j^δ`, anchored at the
/// interval's right end and always containing both bracketing norms. When
/// `α < 0` there is no solution below `n_0 = 0`, and the ground state is
/// omitted.
pub fn solve_strong(
    table: &NormTable,
    alpha: f64,
    delta: f64,
    js: Range<usize>,
) -> Result<Vec<EigenvalueRecord>, SpectrumError> {
    CouplingSpec::strong(alpha, delta)?;
    check_range(table, &js)?;
    if let Some(last) = js.end.checked_sub(1) {
        let n = table.norms()[last];
        let reach = n + n.powf(delta);
        if reach > table.cutoff() {
            return Err(SpectrumError::InsufficientCutoff {
                needed: reach,
                cutoff: table.cutoff(),
            });
        }
    }
    let target = 1.0 / alpha;
    let solved: Vec<Option<EigenvalueRecord>> = js
        .into_par_iter()
        .map(|j| {
            let window = strong_window(table, j, delta);
            let norms = &table.norms()[window.clone()];
            let mults = &table.multiplicities()[window];
            let constant: f64 = norms
                .iter()
                .zip(mults)
                .map(|(n, &r)| r as f64 * n / (n * n + 1.0))
                .sum();
            let g = |lambda: f64| {
                let (mut v, mut dv) = (-constant - target, 0.0);
                for (n, &r) in norms.iter().zip(mults) {
                    let inv = 1.0 / (n - lambda);
                    v += r as f64 * inv;
                    dv += r as f64 * inv * inv;
                }
                (v, dv)
            };
            let bracket = Bracket::new(table, j, |lo| {
                ground_bracket(lo, GROUND_STATE_FLOOR, |x| g(x).0)
            });
            match bracket {
                Ok(b) => finish(table, j, b, g).map(Some),
                Err(SpectrumError::NoGroundState { .. }) if j == 0 => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(solved.into_iter().flatten().collect())
}

/// Indices of the norms entering the strong-coupling sum for interval `j`.
pub fn strong_window(table: &NormTable, j: usize, delta: f64) -> Range<usize> {
    let norms = table.norms();
    let anchor = norms[j];
    let width = anchor.powf(delta);
    let lo = norms.partition_point(|&n| n <= anchor - width);
    let hi = norms.partition_point(|&n| n < anchor + width);
    lo.min(j.saturating_sub(1))..hi.max(j + 1)
}

fn check_range(table: &NormTable, js: &Range<usize>) -> Result<(), SpectrumError> {
    if js.end > table.len() {
        return Err(SpectrumError::InvalidArgument(format!(
            "interval index {} beyond the {} norms in the table",
            js.end - 1,
            table.len()
        )));
    }
    Ok(())
}

/// Open interval `(a, b)` known to hold exactly one root, with the poles at its ends.
struct Bracket {
    j: usize,
    left: Option<(f64, f64)>,
    right: (f64, f64),
    a: f64,
    b: f64,
}

impl Bracket {
    fn new(
        table: &NormTable,
        j: usize,
        ground: impl FnOnce(f64) -> Result<f64, SpectrumError>,
    ) -> Result<Self, SpectrumError> {
        let norms = table.norms();
        let weight = |k: usize| table.multiplicities()[k] as f64;
        let right = (norms[j], weight(j));
        if j == 0 {
            let a = ground(norms[0])?;
            return Ok(Bracket {
                j,
                left: None,
                right,
                a,
                b: norms[0],
            });
        }
        Ok(Bracket {
            j,
            left: Some((norms[j - 1], weight(j - 1))),
            right,
            a: norms[j - 1],
            b: norms[j],
        })
    }

    fn pole_part(&self, x: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut dv = 0.0;
        for (p, w) in self.left.into_iter().chain([self.right]) {
            let inv = 1.0 / (p - x);
            v += w * inv;
            dv += w * inv * inv;
        }
        (v, dv)
    }
}

/// Walks left from `n_0` by doubling until `f` is negative.
fn ground_bracket(n0: f64, floor: f64, f: impl Fn(f64) -> f64) -> Result<f64, SpectrumError> {
    let mut step = 1.0;
    loop {
        let x = n0 - step;
        if x < floor {
            return Err(SpectrumError::NoGroundState { limit: floor });
        }
        if f(x) < 0.0 {
            return Ok(x);
        }
        step *= 2.0;
    }
}

fn finish(
    table: &NormTable,
    j: usize,
    bracket: Bracket,
    g: impl Fn(f64) -> (f64, f64),
) -> Result<EigenvalueRecord, SpectrumError> {
    let lambda = find_root(&bracket, &g)?;
    let right = table.norms()[j];
    Ok(EigenvalueRecord {
        j,
        lambda,
        left_norm: (j > 0).then(|| table.norms()[j - 1]),
        right_norm: right,
        d: right - lambda,
        residual: g(lambda).0.abs(),
    })
}

/// Safeguarded root search inside a bracket whose ends are poles (or a point
/// with a negative value, for the ground state).
///
/// Each step replaces the function by its two bracketing pole terms plus a
/// linear model of the remainder, and moves to the root of that model; the
/// bracket is updated from the sign of every evaluation, and a bisection step
/// is taken whenever the model proposes a point outside it.
fn find_root(br: &Bracket, g: &impl Fn(f64) -> (f64, f64)) -> Result<f64, SpectrumError> {
    let (mut a, mut b) = (br.a, br.b);
    let mut x = match br.left {
        Some(_) => 0.5 * (a + b),
        None => a,
    };
    for iter in 0..200 {
        let (v, dv) = g(x);
        if v == 0.0 {
            return Ok(x);
        }
        if !v.is_finite() {
            return Err(SpectrumError::BracketFailure { j: br.j });
        }
        if v < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let (pv, pdv) = br.pole_part(x);
        let rest = v - pv;
        let slope = (dv - pdv).max(0.0);
        let mut y = model_root(br, x, rest, slope, a, b);
        if !(y > a && y < b) || iter > 60 {
            y = 0.5 * (a + b);
        }
        let step = (y - x).abs();
        x = y;
        if step <= tolerance(br, x) || b - a <= tolerance(br, x) {
            if !(x > br.left.map_or(f64::NEG_INFINITY, |p| p.0) && x < br.right.0) {
                return Err(SpectrumError::BracketFailure { j: br.j });
            }
            return Ok(x);
        }
    }
    Err(SpectrumError::BracketFailure { j: br.j })
}

fn tolerance(br: &Bracket, x: f64) -> f64 {
    let scale = x.abs().max(1.0);
    let pole_gap = match br.left {
        Some((lo, _)) => (x - lo).min(br.right.0 - x),
        None => br.right.0 - x,
    };
    (1e-13 * scale).min(1e-6 * pole_gap).max(4.0 * f64::EPSILON * scale)
}

/// Root of `rest + slope (y - x) + Σ_poles w/(p - y)` in `(a, b)`, by bisection
/// on the (increasing) model.
fn model_root(br: &Bracket, x: f64, rest: f64, slope: f64, a: f64, b: f64) -> f64 {
    let model = |y: f64| rest + slope * (y - x) + br.pole_part(y).0;
    let (mut lo, mut hi) = (a, b);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if model(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of `F(λ) - target` on `[a, b]` found by a grid scan with step
/// `grid_step` and bisection to width `1e-10`, with `F` summed directly.
///
/// Sign changes across a norm are poles, not roots, and are never reported.
pub fn brute_force_roots(
    sec: &SecularFunction,
    target: f64,
    interval: (f64, f64),
    grid_step: f64,
) -> Vec<f64> {
    let (a, b) = interval;
    let h = |x: f64| sec.eval_direct(x).map(|v| v - target).ok();
    let norms = sec.table().norms();
    let first = norms.partition_point(|&n| n <= a);
    let last = norms.partition_point(|&n| n < b);
    let mut breaks: Vec<(f64, bool)> = vec![(a, norms.get(first.wrapping_sub(1)) == Some(&a))];
    breaks.extend(norms[first..last].iter().map(|&n| (n, true)));
    breaks.push((b, norms.get(last) == Some(&b)));
    let mut roots = Vec::new();
    for seg in breaks.windows(2) {
        let ((s, s_pole), (e, e_pole)) = (seg[0], seg[1]);
        // Sample points with their signs; pole ends get the limiting sign.
        let mut samples: Vec<(f64, f64)> = Vec::new();
        if s_pole {
            samples.push((s, -1.0));
        }
        let i0 = ((s - a) / grid_step).floor() as i64;
        let i1 = ((e - a) / grid_step).ceil() as i64;
        for i in i0..=i1 {
            let t = a + i as f64 * grid_step;
            let inside = (t > s || (t == s && !s_pole)) && (t < e || (t == e && !e_pole));
            if inside {
                if let Some(v) = h(t) {
                    samples.push((t, v));
                }
            }
        }
        if e_pole {
            samples.push((e, 1.0));
        }
        for w in samples.windows(2) {
            let ((l, lv), (r, rv)) = (w[0], w[1]);
            if lv == 0.0 {
                roots.push(l);
            } else if lv.signum() != rv.signum() && rv != 0.0 {
                roots.push(bisect(&h, l, r, lv));
            }
        }
    }
    roots
}

fn bisect(h: &impl Fn(f64) -> Option<f64>, mut l: f64, mut r: f64, lv: f64) -> f64 {
    while r - l > 1e-10 {
        let m = 0.5 * (l + r);
        if m <= l || m >= r {
            break;
        }
        match h(m) {
            Some(v) if v.signum() == lv.signum() => l = m,
            Some(_) => r = m,
            None => break,
        }
    }
    0.5 * (l + r)
}

/// Writes records as `j,lambda,left_norm,right_norm,d_j,residual`.
pub fn write_eigenvalue_csv<W: Write>(records: &[EigenvalueRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "j,lambda,left_norm,right_norm,d_j,residual")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.j,
            fmt17(r.lambda),
            r.left_norm.map(fmt17).unwrap_or_default(),
            fmt17(r.right_norm),
            fmt17(r.d),
            fmt17(r.residual)
        )?;
    }
    Ok(())
}
