//! Contribution of the norms beyond a table's cutoff to lattice sums.
//!
//! For a summand `f` the missing part `Σ_{n > X} r(n) f(n)` is written as a
//! Stieltjes integral against the counting function `N = W + E`, with `W` the
//! Weyl term. Integrating by parts,
//!
//! ```text
//! Σ_{n>X} r f(n) = ∫_X^∞ f W'(t) dt - f(X) E(X) - ∫_X^∞ E f' dt .
//! ```
//!
//! The first two terms are evaluated; the last is bounded by
//! `sup|E| · |f(X)|` for summands that are monotone beyond `X`, with `sup|E|`
//! estimated from the observed remainder on `[X/2, X]`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::lattice::NormTable;

const PANELS: usize = 4;
const NODES: usize = 24;

/// Safety factor applied to the observed remainder when bounding it beyond `X`.
const REMAINDER_GROWTH: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailPart {
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug)]
pub struct Tail {
    dim: usize,
    cutoff: f64,
    /// `E(X)`, the counting remainder at the cutoff.
    edge_remainder: f64,
    /// Estimate of `sup_{t >= X} |E(t)|`.
    remainder_sup: f64,
    rule: Option<GaussLegendre>,
}

impl Tail {
    pub fn new(table: &NormTable) -> Self {
        let cutoff = table.cutoff();
        let torus = table.torus();
        let edge_remainder = table.remainder(cutoff).unwrap_or(0.0);
        let remainder_sup = REMAINDER_GROWTH * table.max_remainder(cutoff / 2.0, cutoff);
        let dim = torus.dimension();
        let rule = (dim == 3).then(|| GaussLegendre::new(NonZeroUsize::new(NODES).unwrap()));
        Tail {
            dim,
            cutoff,
            edge_remainder,
            remainder_sup,
            rule,
        }
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    fn finish(&self, integral: f64, f_edge: f64) -> TailPart {
        TailPart {
            value: integral - f_edge * self.edge_remainder,
            bound: self.remainder_sup * f_edge.abs(),
        }
    }

    /// `∫_X^∞ g(t) W'(t) dt` in 3D, via `t = X/u²`.
    fn weyl_integral_3d(&self, g: impl Fn(f64) -> f64) -> f64 {
        let rule = self.rule.as_ref().expect("3D rule");
        let x = self.cutoff;
        let scale = 4.0 * PI * x.powf(1.5);
        let h = 1.0 / PANELS as f64;
        (0..PANELS)
            .map(|p| {
                let (a, b) = (p as f64 * h, (p + 1) as f64 * h);
                rule.integrate(a, b, |u| {
                    let u2 = u * u;
                    scale * g(x / u2) / (u2 * u2)
                })
            })
            .sum()
    }

    /// Tail of `Σ r(n) [1/(n-λ) - n/(n²+1)]` and its λ-derivative.
    pub fn secular(&self, lambda: f64) -> (TailPart, f64) {
        let x = self.cutoff;
        let f = |t: f64| (1.0 + t * lambda) / ((t - lambda) * (t * t + 1.0));
        let df = |t: f64| 1.0 / ((t - lambda) * (t - lambda));
        let (integral, d_integral) = match self.dim {
            2 => (
                PI * (0.5 * (x * x + 1.0).ln() - (x - lambda).ln()),
                PI / (x - lambda),
            ),
            _ => (self.weyl_integral_3d(f), self.weyl_integral_3d(df)),
        };
        let part = self.finish(integral, f(x));
        (part, d_integral - df(x) * self.edge_remainder)
    }

    /// Tail of `Σ r(n) / (n²+1)`.
    pub fn c0(&self) -> TailPart {
        let x = self.cutoff;
        let f = |t: f64| 1.0 / (t * t + 1.0);
        let integral = match self.dim {
            2 => PI * (1.0 / x).atan(),
            _ => self.weyl_integral_3d(f),
        };
        self.finish(integral, f(x))
    }

    /// Tail of `Σ r(n) / (n-λ)²`.
    pub fn inverse_square(&self, lambda: f64) -> TailPart {
        let x = self.cutoff;
        let f = |t: f64| 1.0 / ((t - lambda) * (t - lambda));
        let integral = match self.dim {
            2 => PI / (x - lambda),
            _ => self.weyl_integral_3d(f),
        };
        self.finish(integral, f(x))
    }
}
