use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::aspect::{recognize_rational, Aspect};
use super::LatticeError;

/// Largest denominator accepted when recognising rational form coefficients.
const MAX_FORM_DENOMINATOR: u64 = 1_000_000;

/// Digits of headroom kept between an irrational input's precision and the
/// tolerance used to decide that a derived quantity is rational.
const RECOGNITION_GUARD_DIGITS: usize = 5;

/// Flat torus `R^d / 2π L0`.
///
/// * 2D: `L0 = Z(a,0) ⊕ Z(0,1/a)`, dual lattice `{(m/a, n a)}`.
/// * 3D: `L0 = Z(a,0,0) ⊕ Z(0,b,0) ⊕ Z(0,0,1/(ab))`, dual `{(m/a, n/b, k ab)}`.
///
/// Aspects are stored squared (`a²`, `b²`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "dimension")]
pub enum TorusSpec {
    #[serde(rename = "2")]
    Flat2 { a2: Aspect },
    #[serde(rename = "3")]
    Flat3 { a2: Aspect, b2: Aspect },
}

/// Arithmetic type of the dual lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeClass {
    /// The norm form is a rational multiple of an integral form (2D: `a⁴ ∈ Q`).
    Rational,
    Irrational,
}

/// Integral quadratic form with `|ξ|² = key / (den · a²)`, `key = Σ coeffs[i] m_i²`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactForm {
    pub coeffs: Vec<u64>,
    pub den: u64,
    /// `a²` as `(num, den)` when rational; norms are then exact fractions.
    pub a2_rational: Option<(u64, u64)>,
    inv_scale: f64,
}

impl ExactForm {
    pub fn key(&self, idx: &[i64]) -> u128 {
        idx.iter()
            .zip(&self.coeffs)
            .map(|(&m, &c)| (m.unsigned_abs() as u128).pow(2) * c as u128)
            .sum()
    }

    /// Float value of the norm with key `key`.
    pub fn norm(&self, key: u128) -> f64 {
        match self.norm_fraction(key) {
            Some((num, den)) => num as f64 / den as f64,
            None => key as f64 * self.inv_scale,
        }
    }

    /// Reduced fraction for the norm when `a²` is rational.
    pub fn norm_fraction(&self, key: u128) -> Option<(u128, u128)> {
        let (p, q) = self.a2_rational?;
        let num = key * q as u128;
        let den = self.den as u128 * p as u128;
        let g = num.gcd(&den);
        Some((num / g, den / g))
    }
}

impl TorusSpec {
    pub fn square() -> Self {
        TorusSpec::Flat2 { a2: Aspect::one() }
    }

    pub fn cubic() -> Self {
        TorusSpec::Flat3 {
            a2: Aspect::one(),
            b2: Aspect::one(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            TorusSpec::Flat2 { .. } => 2,
            TorusSpec::Flat3 { .. } => 3,
        }
    }

    /// Area (2D) or volume (3D) of the torus: `(2π)^d` times the unit covolume.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dimension() as i32)
    }

    pub fn aspects(&self) -> Vec<&Aspect> {
        match self {
            TorusSpec::Flat2 { a2 } => vec![a2],
            TorusSpec::Flat3 { a2, b2 } => vec![a2, b2],
        }
    }

    /// Per-axis coefficients `c_i` with `|ξ|² = Σ c_i m_i²`.
    pub fn axis_coefficients(&self) -> Vec<f64> {
        match self {
            TorusSpec::Flat2 { a2 } => {
                let a = a2.value();
                vec![1.0 / a, a]
            }
            TorusSpec::Flat3 { a2, b2 } => {
                let (a, b) = (a2.value(), b2.value());
                vec![1.0 / a, 1.0 / b, a * b]
            }
        }
    }

    /// Exact per-axis coefficients as rationals (of the stored representations).
    pub(crate) fn exact_axis_coefficients(&self) -> Vec<BigRational> {
        match self {
            TorusSpec::Flat2 { a2 } => {
                let a = a2.exact();
                vec![a.recip(), a]
            }
            TorusSpec::Flat3 { a2, b2 } => {
                let (a, b) = (a2.exact(), b2.exact());
                vec![a.recip(), b.recip(), a * b]
            }
        }
    }

    /// Cartesian coordinates of the dual vector with integer index `idx`.
    pub fn dual_vector(&self, idx: &[i64]) -> Vec<f64> {
        match self {
            TorusSpec::Flat2 { a2 } => {
                let a = a2.value().sqrt();
                vec![idx[0] as f64 / a, idx[1] as f64 * a]
            }
            TorusSpec::Flat3 { a2, b2 } => {
                let (a, b) = (a2.value().sqrt(), b2.value().sqrt());
                vec![idx[0] as f64 / a, idx[1] as f64 / b, idx[2] as f64 * a * b]
            }
        }
    }

    /// Period lengths of the torus along each axis (`2π` times the `L0` generators).
    pub fn periods(&self) -> Vec<f64> {
        let tau = 2.0 * PI;
        match self {
            TorusSpec::Flat2 { a2 } => {
                let a = a2.value().sqrt();
                vec![tau * a, tau / a]
            }
            TorusSpec::Flat3 { a2, b2 } => {
                let (a, b) = (a2.value().sqrt(), b2.value().sqrt());
                vec![tau * a, tau * b, tau / (a * b)]
            }
        }
    }

    /// Largest `|m_i|` with `c_i m_i² <= x`.
    pub fn index_bounds(&self, x: f64) -> Vec<i64> {
        self.axis_coefficients()
            .iter()
            .map(|c| (x.max(0.0) / c).sqrt().floor() as i64 + 1)
            .collect()
    }

    /// Leading term of the lattice point count `#{ξ : |ξ|² <= x}`.
    pub fn weyl_term(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self.dimension() {
            2 => PI * x,
            _ => 4.0 / 3.0 * PI * x.powf(1.5),
        }
    }

    /// Derivative of [`weyl_term`](Self::weyl_term): the mean density of `|ξ|²`.
    pub fn weyl_density(&self, t: f64) -> f64 {
        match self.dimension() {
            2 => PI,
            _ => 2.0 * PI * t.max(0.0).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        for a in self.aspects() {
            if !(a.value() > 0.0 && a.value().is_finite()) {
                return Err(LatticeError::NonPositiveAspect(a.to_string()));
            }
        }
        Ok(())
    }

    /// Integral form for the norms when the coefficient ratios are rational.
    ///
    /// Exact aspects give exact ratios; irrational-tagged aspects are checked
    /// for ratios that agree with a small-denominator rational to within the
    /// precision of the supplied digits (for 2D this is the test `a⁴ ∈ Q`).
    pub fn exact_form(&self) -> Option<ExactForm> {
        let coeffs = self.exact_axis_coefficients();
        let lead = coeffs[0].clone();
        let min_digits = self
            .aspects()
            .iter()
            .filter_map(|a| a.significant_digits())
            .min();
        let mut ratios = Vec::with_capacity(coeffs.len());
        for c in &coeffs {
            let r = c / &lead;
            let r = match min_digits {
                None => r,
                Some(d) => {
                    let exp = d.saturating_sub(RECOGNITION_GUARD_DIGITS);
                    let tol = BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(10), exp));
                    recognize_rational(&r, MAX_FORM_DENOMINATOR, &tol)?
                }
            };
            ratios.push(r);
        }
        let den = ratios
            .iter()
            .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let int_coeffs: Option<Vec<u64>> = ratios
            .iter()
            .map(|r| (r * BigRational::from_integer(den.clone())).to_integer().to_u64())
            .collect();
        let den = den.to_u64()?;
        let int_coeffs = int_coeffs?;
        let a2 = self.aspects()[0];
        let a2_rational = match *a2 {
            Aspect::Rational { num, den } => Some((num, den)),
            Aspect::Irrational { .. } => None,
        };
        Some(ExactForm {
            coeffs: int_coeffs,
            den,
            a2_rational,
            inv_scale: 1.0 / (den as f64 * a2.value()),
        })
    }

    pub fn lattice_class(&self) -> LatticeClass {
        if self.exact_form().is_some() {
            LatticeClass::Rational
        } else {
            LatticeClass::Irrational
        }
    }
}

impl fmt::Display for TorusSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TorusSpec::Flat2 { a2 } => write!(f, "T2[a^2={a2}]"),
            TorusSpec::Flat3 { a2, b2 } => write!(f, "T3[a^2={a2}, b^2={b2}]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t2(s: &str) -> TorusSpec {
        TorusSpec::Flat2 { a2: s.parse().unwrap() }
    }

    #[test]
    fn rational_aspect_gives_common_denominator_form() {
        // a² = 3/2: key = 4 m² + 9 n² over pq = 6.
        let form = t2("3/2").exact_form().unwrap();
        assert_eq!(form.coeffs, vec![4, 9]);
        assert_eq!(form.norm_fraction(form.key(&[1, 1])), Some((13, 6)));
        let direct = 1.0 / 1.5 + 1.5;
        assert!((form.norm(form.key(&[1, 1])) - direct).abs() < 1e-15);
    }

    #[test]
    fn square_root_aspect_is_rational_by_fourth_power() {
        let torus = t2("sqrt(2)");
        assert_eq!(torus.lattice_class(), LatticeClass::Rational);
        let form = torus.exact_form().unwrap();
        assert_eq!(form.coeffs, vec![1, 2]);
        assert!(form.norm_fraction(1).is_none());
        let expected = 9.0 / 2f64.sqrt();
        assert!((form.norm(form.key(&[3, 0])) - expected).abs() < 1e-14);
        assert_eq!(form.key(&[3, 0]), form.key(&[1, 2]));
    }

    #[test]
    fn generic_aspects_are_irrational() {
        assert_eq!(t2("sqrt(sqrt(2))").lattice_class(), LatticeClass::Irrational);
        let t3 = TorusSpec::Flat3 {
            a2: "sqrt(2)".parse().unwrap(),
            b2: "sqrt(3)".parse().unwrap(),
        };
        assert_eq!(t3.lattice_class(), LatticeClass::Irrational);
        assert_eq!(TorusSpec::cubic().exact_form().unwrap().coeffs, vec![1, 1, 1]);
    }

    #[test]
    fn dual_vectors_match_axis_coefficients() {
        let torus = TorusSpec::Flat3 {
            a2: "2".parse().unwrap(),
            b2: "sqrt(3)".parse().unwrap(),
        };
        let idx = [3i64, -2, 5];
        let v = torus.dual_vector(&idx);
        let norm: f64 = v.iter().map(|x| x * x).sum();
        let via_coeffs: f64 = torus
            .axis_coefficients()
            .iter()
            .zip(idx)
            .map(|(c, m)| c * (m * m) as f64)
            .sum();
        assert!((norm - via_coeffs).abs() < 1e-12 * norm);
        // Periods pair with the dual lattice: ⟨ξ, period_i e_i⟩ = 2π m_i.
        let p = torus.periods();
        for i in 0..3 {
            let phase = v[i] * p[i] / (2.0 * PI);
            assert!((phase - idx[i] as f64).abs() < 1e-12);
        }
    }
}
