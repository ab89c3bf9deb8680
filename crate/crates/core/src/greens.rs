//! Green's-function eigenstates `g_λ = G_λ / ‖G_λ‖` and their matrix elements.
//!
//! `G_λ(x) = Σ_ξ c_ξ e^{i⟨ξ,x⟩}` with `c_ξ = e^{-i⟨ξ,x0⟩} / (|ξ|² - λ)`, kept on
//! a dense box of dual-lattice indices and truncated at `|ξ|² <= cutoff`.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::lattice::{LatticeError, NormTable, TorusSpec};
use crate::spectrum::{EigenvalueRecord, Tail};
use crate::util::fmt17;

#[derive(Debug, thiserror::Error)]
pub enum GreensError {
    #[error("λ = {0} is a norm of the lattice")]
    AtPole(f64),
    #[error("coefficient cutoff {cutoff} is too small; need at least {needed}")]
    InsufficientCutoff { needed: f64, cutoff: f64 },
    #[error("observable frequency {zeta:?} reaches beyond the coefficient cutoff")]
    SupportTooLarge { zeta: Vec<i64> },
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Coefficient cutoff used when none is given.
pub fn default_cutoff(dim: usize, lambda: f64) -> f64 {
    let margin = if dim == 2 { 1e4 } else { 1e3 };
    (4.0 * lambda).max(lambda + margin)
}

#[derive(Clone, Debug)]
pub struct GreensState {
    torus: TorusSpec,
    lambda: f64,
    x0: Vec<f64>,
    cutoff: f64,
    /// Half-widths of the index box.
    bounds: Vec<i64>,
    coeffs: Vec<Complex64>,
    /// `Σ |c_ξ|²` over the retained coefficients.
    retained: f64,
    /// `‖G_λ‖²` including the tail beyond the cutoff.
    l2_norm_sq: f64,
    /// Fraction of `‖G_λ‖²` carried by the discarded coefficients.
    tail_mass: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatrixElement {
    pub value: Complex64,
    /// Bound on the effect of the discarded coefficients.
    pub uncertainty: f64,
}

/// Symbol `a(x, φ) = Σ â(ζ,k) e^{i⟨ζ,x⟩} e^{ikφ}`, keyed by the dual-lattice
/// index of `ζ` and the angular frequency `k`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observable {
    terms: BTreeMap<(Vec<i64>, i32), Complex64>,
}

impl Observable {
    pub fn new() -> Self {
        Self::default()
    }

    /// `a ≡ 1`.
    pub fn constant(dim: usize) -> Self {
        Self::new().with(vec![0; dim], 0, Complex64::new(1.0, 0.0))
    }

    /// `a = e^{i⟨ζ,x⟩}`.
    pub fn position(zeta: Vec<i64>) -> Self {
        Self::new().with(zeta, 0, Complex64::new(1.0, 0.0))
    }

    /// `a = e^{ikφ}` on a 2D torus.
    pub fn momentum(k: i32) -> Self {
        Self::new().with(vec![0, 0], k, Complex64::new(1.0, 0.0))
    }

    pub fn with(mut self, zeta: Vec<i64>, k: i32, coefficient: Complex64) -> Self {
        *self.terms.entry((zeta, k)).or_default() += coefficient;
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[i64], i32, Complex64)> {
        self.terms.iter().map(|((z, k), c)| (z.as_slice(), *k, *c))
    }

    fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }
}

pub fn build_greens_state(
    table: &NormTable,
    lambda: f64,
    x0: &[f64],
    cutoff: Option<f64>,
) -> Result<GreensState, GreensError> {
    let torus = table.torus().clone();
    let dim = torus.dimension();
    if x0.len() != dim {
        return Err(GreensError::Unsupported(format!(
            "scatterer position has {} coordinates on a {dim}D torus",
            x0.len()
        )));
    }
    let cutoff = cutoff.unwrap_or_else(|| default_cutoff(dim, lambda));
    let needed = (2.0 * lambda.abs()).max(1e3);
    if !(cutoff >= needed) {
        return Err(GreensError::InsufficientCutoff { needed, cutoff });
    }
    if table.cutoff() < cutoff {
        return Err(GreensError::InsufficientCutoff {
            needed: cutoff,
            cutoff: table.cutoff(),
        });
    }
    if table.norms().binary_search_by(|n| n.total_cmp(&lambda)).is_ok() {
        return Err(GreensError::AtPole(lambda));
    }
    let bounds = torus.index_bounds(cutoff);
    let axis = torus.axis_coefficients();
    let exact = torus.exact_form();
    let shape: Vec<usize> = bounds.iter().map(|&b| (2 * b + 1) as usize).collect();
    let size: usize = shape.iter().product();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); size];
    let mut retained = 0.0;
    let mut idx = vec![0i64; dim];
    for (flat, c) in coeffs.iter_mut().enumerate() {
        unflatten(flat, &bounds, &mut idx);
        let norm = match &exact {
            Some(form) => form.norm(form.key(&idx)),
            None => idx.iter().zip(&axis).map(|(&m, a)| a * (m * m) as f64).sum(),
        };
        if norm > cutoff {
            continue;
        }
        let xi = torus.dual_vector(&idx);
        let phase: f64 = -xi.iter().zip(x0).map(|(a, b)| a * b).sum::<f64>();
        *c = Complex64::from_polar(1.0 / (norm - lambda), phase);
        retained += c.norm_sqr();
    }
    let tail = Tail::new(&table.truncated(cutoff)?).inverse_square(lambda);
    let volume = torus.volume();
    let total = retained + tail.value.max(0.0);
    Ok(GreensState {
        torus,
        lambda,
        x0: x0.to_vec(),
        cutoff,
        bounds,
        coeffs,
        retained,
        l2_norm_sq: volume * total,
        tail_mass: (tail.value.max(0.0) + tail.bound) / total,
    })
}

fn unflatten(mut flat: usize, bounds: &[i64], idx: &mut [i64]) {
    for d in (0..bounds.len()).rev() {
        let w = (2 * bounds[d] + 1) as usize;
        idx[d] = (flat % w) as i64 - bounds[d];
        flat /= w;
    }
}

impl GreensState {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn torus(&self) -> &TorusSpec {
        &self.torus
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_norm_sq
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Half-widths of the coefficient box.
    pub fn bounds(&self) -> &[i64] {
        &self.bounds
    }

    fn flat(&self, idx: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for (d, &m) in idx.iter().enumerate() {
            let b = self.bounds[d];
            if m.abs() > b {
                return None;
            }
            flat = flat * (2 * b + 1) as usize + (m + b) as usize;
        }
        Some(flat)
    }

    /// `c_ξ` for the dual vector with index `idx` (zero outside the cutoff).
    pub fn coefficient(&self, idx: &[i64]) -> Complex64 {
        self.flat(idx)
            .map_or(Complex64::new(0.0, 0.0), |f| self.coeffs[f])
    }

    /// Nonzero coefficients with their indices.
    pub fn coefficients(&self) -> impl Iterator<Item = (Vec<i64>, Complex64)> + '_ {
        let mut idx = vec![0i64; self.bounds.len()];
        self.coeffs.iter().enumerate().filter_map(move |(flat, &c)| {
            if c == Complex64::new(0.0, 0.0) {
                return None;
            }
            unflatten(flat, &self.bounds, &mut idx);
            Some((idx.clone(), c))
        })
    }

    /// `(ξ̂/|ξ|)^k` for a 2D index, with the zero mode acted on only by `k = 0`.
    fn angular(&self, idx: &[i64], k: i32) -> Complex64 {
        if k == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if idx.iter().all(|&m| m == 0) {
            return Complex64::new(0.0, 0.0);
        }
        let xi = self.torus.dual_vector(idx);
        let unit = Complex64::new(xi[0], xi[1]).unscale(xi[0].hypot(xi[1]));
        unit.powi(k)
    }

    /// `⟨Op(a) g_λ, g_λ⟩`.
    pub fn matrix_element(&self, obs: &Observable) -> Result<MatrixElement, GreensError> {
        let dim = self.bounds.len();
        let shell = self.lambda.max(0.0).sqrt();
        let reach = self.cutoff.sqrt();
        for (zeta, k, _) in obs.terms() {
            if zeta.len() != dim {
                return Err(GreensError::Unsupported(format!(
                    "frequency {zeta:?} does not match a {dim}D torus"
                )));
            }
            if k != 0 && dim != 2 {
                return Err(GreensError::Unsupported(
                    "angular symbols are implemented on 2D tori only".into(),
                ));
            }
            let len: f64 = self.torus.dual_vector(zeta).iter().map(|v| v * v).sum::<f64>().sqrt();
            if shell + len > reach {
                return Err(GreensError::SupportTooLarge { zeta: zeta.to_vec() });
            }
        }
        let mut total = Complex64::new(0.0, 0.0);
        let mut shifted = vec![0i64; dim];
        for (zeta, k, a) in obs.terms() {
            let mut sum = Complex64::new(0.0, 0.0);
            for (idx, c) in self.coefficients() {
                for d in 0..dim {
                    shifted[d] = idx[d] + zeta[d];
                }
                let partner = self.coefficient(&shifted);
                if partner == Complex64::new(0.0, 0.0) {
                    continue;
                }
                sum += self.angular(&idx, k) * c * partner.conj();
            }
            total += a * sum;
        }
        let tau = self.tail_mass;
        Ok(MatrixElement {
            value: total / self.retained,
            uncertainty: (2.0 * tau.sqrt() + 2.0 * tau) * obs.l1_norm(),
        })
    }

    /// Angular moments `⟨Op(e^{ikφ}) g, g⟩` for `k = 1..=k_max`.
    pub fn momentum_profile(&self, k_max: u32) -> Result<Vec<Complex64>, GreensError> {
        if self.bounds.len() != 2 {
            return Err(GreensError::Unsupported(
                "momentum moments are implemented on 2D tori only".into(),
            ));
        }
        let mut moments = vec![Complex64::new(0.0, 0.0); k_max as usize];
        for (idx, c) in self.coefficients() {
            if idx.iter().all(|&m| m == 0) {
                continue;
            }
            let w = c.norm_sqr();
            let unit = self.angular(&idx, 1);
            let mut p = unit;
            for m in moments.iter_mut() {
                *m += p * w;
                p *= unit;
            }
        }
        Ok(moments.into_iter().map(|m| m / self.retained).collect())
    }

    /// Share of the retained mass on the shell `|ξ|² = norm` (relative tolerance `1e-9`).
    pub fn shell_mass_fraction(&self, norm: f64) -> f64 {
        let axis = self.torus.axis_coefficients();
        let on_shell: f64 = self
            .coefficients()
            .filter(|(idx, _)| {
                let n: f64 = idx.iter().zip(&axis).map(|(&m, a)| a * (m * m) as f64).sum();
                (n - norm).abs() <= 1e-9 * norm.max(1.0)
            })
            .map(|(_, c)| c.norm_sqr())
            .sum();
        on_shell / self.retained
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub j: usize,
    pub lambda: f64,
    pub zeta: Vec<i64>,
    pub value: Complex64,
    pub tail_bound: f64,
}

/// Position matrix elements `M_j(ζ) = ⟨e^{i⟨ζ,x⟩} g_{λ_j}, g_{λ_j}⟩` for every
/// record and every `ζ`, ordered by record then `ζ`.
pub fn equidistribution_scan(
    table: &NormTable,
    records: &[EigenvalueRecord],
    x0: &[f64],
    zetas: &[Vec<i64>],
) -> Result<Vec<ScanRow>, GreensError> {
    let rows: Vec<Vec<ScanRow>> = records
        .par_iter()
        .map(|r| {
            let state = build_greens_state(table, r.lambda, x0, None)?;
            zetas
                .iter()
                .map(|z| {
                    let m = state.matrix_element(&Observable::position(z.clone()))?;
                    Ok(ScanRow {
                        j: r.j,
                        lambda: r.lambda,
                        zeta: z.clone(),
                        value: m.value,
                        tail_bound: m.uncertainty,
                    })
                })
                .collect()
        })
        .collect::<Result<_, GreensError>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Writes `j,lambda,re_M,im_M,zeta_or_k,tail_bound`; `ζ` is written as its
/// indices joined by `:`.
pub fn write_scan_csv<W: Write>(rows: &[ScanRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "j,lambda,re_M,im_M,zeta_or_k,tail_bound")?;
    for r in rows {
        let zeta: Vec<String> = r.zeta.iter().map(|m| m.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.j,
            fmt17(r.lambda),
            fmt17(r.value.re),
            fmt17(r.value.im),
            zeta.join(":"),
            fmt17(r.tail_bound)
        )?;
    }
    Ok(())
}
