//! Spacing and gap statistics of norm and eigenvalue sequences.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::lattice::{LatticeError, NormTable};
use crate::spectrum::EigenvalueRecord;
use crate::util::{fmt17, ls_slope};

pub const HISTOGRAM_BINS: usize = 50;
pub const HISTOGRAM_MAX: f64 = 5.0;
/// Minimum number of gaps for a spacing report.
pub const MIN_GAPS: usize = 10;
/// A trend counts as bounded when `|slope vs log x|` stays below this.
pub const TREND_SLOPE_LIMIT: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("need at least {MIN_GAPS} gaps below the threshold, found {found}")]
    TooFewGaps { found: usize },
    #[error("sequence is not strictly increasing at position {index}")]
    NotIncreasing { index: usize },
    #[error("empty sample")]
    Empty,
    #[error("no eigenvalue for {} interval(s), first missing: {:?}", .missing.len(), &.missing[..missing.len().min(10)])]
    MissingIntervals { missing: Vec<usize> },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Named spacing distributions with mean 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceCdf {
    /// Density `e^{-s}`.
    Poisson,
    /// Density `4s e^{-2s}`.
    SemiPoisson,
}

impl ReferenceCdf {
    pub fn cdf(self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            ReferenceCdf::Poisson => -(-s).exp_m1(),
            ReferenceCdf::SemiPoisson => 1.0 - (1.0 + 2.0 * s) * (-2.0 * s).exp(),
        }
    }

    pub fn density(self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        match self {
            ReferenceCdf::Poisson => (-s).exp(),
            ReferenceCdf::SemiPoisson => 4.0 * s * (-2.0 * s).exp(),
        }
    }

    /// Quantile function, for `p` in `[0, 1)`.
    pub fn inverse(self, p: f64) -> f64 {
        match self {
            ReferenceCdf::Poisson => -(-p).ln_1p(),
            ReferenceCdf::SemiPoisson => {
                let (mut lo, mut hi) = (0.0, 1.0);
                while self.cdf(hi) < p {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Normalised over the samples inside the binned range.
    pub density: Vec<f64>,
    /// Samples beyond the last edge.
    pub overflow: usize,
}

impl Histogram {
    pub fn uniform(sample: &[f64], bins: usize, max: f64) -> Self {
        let width = max / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| i as f64 * width).collect();
        let mut counts = vec![0usize; bins];
        let mut overflow = 0;
        for &s in sample {
            let b = (s / width).floor();
            if b >= 0.0 && (b as usize) < bins {
                counts[b as usize] += 1;
            } else if s == max {
                counts[bins - 1] += 1;
            } else {
                overflow += 1;
            }
        }
        let inside: usize = counts.iter().sum();
        let density = counts
            .iter()
            .map(|&c| if inside == 0 { 0.0 } else { c as f64 / (inside as f64 * width) })
            .collect();
        Histogram {
            edges,
            counts,
            density,
            overflow,
        }
    }

    /// Writes `bin_left,bin_right,density`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_left,bin_right,density")?;
        for (i, d) in self.density.iter().enumerate() {
            writeln!(out, "{},{},{}", fmt17(self.edges[i]), fmt17(self.edges[i + 1]), fmt17(*d))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingReport {
    pub x: f64,
    pub count: usize,
    pub mean_spacing: f64,
    pub normalized: Vec<f64>,
    pub histogram: Histogram,
    pub ks_vs_poisson: f64,
    pub ks_vs_semipoisson: f64,
}

/// Gaps between consecutive members `<= x` of a strictly increasing sequence.
pub fn spacings(sequence: &[f64], x: f64) -> Result<Vec<f64>, StatsError> {
    let end = sequence.partition_point(|&s| s <= x);
    let mut gaps = Vec::with_capacity(end.saturating_sub(1));
    for i in 1..end {
        let g = sequence[i] - sequence[i - 1];
        if !(g > 0.0) {
            return Err(StatsError::NotIncreasing { index: i });
        }
        gaps.push(g);
    }
    Ok(gaps)
}

/// Spacings normalised to mean one.
pub fn normalized_spacings(sequence: &[f64], x: f64) -> Result<Vec<f64>, StatsError> {
    let gaps = spacings(sequence, x)?;
    if gaps.len() < MIN_GAPS {
        return Err(StatsError::TooFewGaps { found: gaps.len() });
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    Ok(gaps.into_iter().map(|g| g / mean).collect())
}

pub fn spacing_report(sequence: &[f64], x: f64) -> Result<SpacingReport, StatsError> {
    let gaps = spacings(sequence, x)?;
    if gaps.len() < MIN_GAPS {
        return Err(StatsError::TooFewGaps { found: gaps.len() });
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let normalized: Vec<f64> = gaps.iter().map(|g| g / mean).collect();
    Ok(SpacingReport {
        x,
        count: gaps.len(),
        mean_spacing: mean,
        histogram: Histogram::uniform(&normalized, HISTOGRAM_BINS, HISTOGRAM_MAX),
        ks_vs_poisson: ks_distance(&normalized, ReferenceCdf::Poisson)?,
        ks_vs_semipoisson: ks_distance(&normalized, ReferenceCdf::SemiPoisson)?,
        normalized,
    })
}

/// Kolmogorov–Smirnov distance between a sample's empirical CDF and a reference.
pub fn ks_distance(sample: &[f64], reference: ReferenceCdf) -> Result<f64, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let f = reference.cdf(s);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max))
}

/// Kolmogorov–Smirnov distance between two empirical distributions.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// KS distance between the normalised spacings of two sequences up to `x`.
pub fn compare_spacings(a: &[f64], b: &[f64], x: f64) -> Result<f64, StatsError> {
    ks_two_sample(&normalized_spacings(a, x)?, &normalized_spacings(b, x)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub x: f64,
    /// `⟨d_j⟩_x = (1/N(x)) Σ_{n_j <= x} (n_j - λ_j)`, ground state included when present.
    pub mean_d: f64,
    /// `⟨δ_j⟩_x = (1/N(x)) Σ_{n_j <= x} (n_j - n_{j-1})`.
    pub mean_delta: f64,
    pub ratio: f64,
    pub log_weighted_ratio: f64,
}

pub fn gap_report(
    table: &NormTable,
    records: &[EigenvalueRecord],
    x: f64,
) -> Result<GapReport, StatsError> {
    let count = table.distinct_counting(x)?;
    let mut d = vec![None; count];
    for r in records.iter().filter(|r| r.j < count) {
        d[r.j] = Some(r.d);
    }
    // The ground state (j = 0) may legitimately be absent under strong coupling
    // with negative α; every interval above the first norm must be covered.
    let missing: Vec<usize> = (1..count).filter(|&j| d[j].is_none()).collect();
    if !missing.is_empty() {
        return Err(StatsError::MissingIntervals { missing });
    }
    if count < 2 {
        return Err(StatsError::TooFewGaps { found: count.saturating_sub(1) });
    }
    let n = count as f64;
    let mean_d = d.iter().flatten().sum::<f64>() / n;
    let norms = table.norms();
    let mean_delta = (norms[count - 1] - norms[0]) / n;
    let ratio = mean_d / mean_delta;
    Ok(GapReport {
        x,
        mean_d,
        mean_delta,
        ratio,
        log_weighted_ratio: ratio * x.ln(),
    })
}

/// `N(x) √(log x) / x`, which tends to the Landau–Ramanujan constant for `Z²`.
pub fn landau_ratio(table: &NormTable, x: f64) -> Result<f64, StatsError> {
    Ok(table.distinct_counting(x)? as f64 * x.ln().sqrt() / x)
}

/// `N(x) / x`.
pub fn distinct_density(table: &NormTable, x: f64) -> Result<f64, StatsError> {
    Ok(table.distinct_counting(x)? as f64 / x)
}

/// Arrival times of a unit-rate Poisson process.
pub fn poisson_process(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    (0..n)
        .map(|_| {
            let e: f64 = Exp1.sample(&mut rng);
            t += e;
            t
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
    /// Least-squares slope of the values against `log x`.
    pub slope: f64,
    pub range: f64,
    pub bounded: bool,
}

pub fn trend(thresholds: &[f64], values: &[f64]) -> Trend {
    let logs: Vec<f64> = thresholds.iter().map(|x| x.ln()).collect();
    let slope = if thresholds.len() >= 2 { ls_slope(&logs, values) } else { f64::NAN };
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Trend {
        thresholds: thresholds.to_vec(),
        values: values.to_vec(),
        slope,
        range: max - min,
        bounded: thresholds.len() >= 3 && slope.abs() < TREND_SLOPE_LIMIT,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_cdfs() {
        for r in [ReferenceCdf::Poisson, ReferenceCdf::SemiPoisson] {
            // Densities integrate to the CDF.
            let h = 1e-4;
            let mut acc = 0.0;
            for i in 0..30_000 {
                let s = (i as f64 + 0.5) * h;
                acc += r.density(s) * h;
            }
            assert!((acc - r.cdf(3.0)).abs() < 1e-7);
            for p in [0.1, 0.5, 0.9] {
                assert!((r.cdf(r.inverse(p)) - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn arithmetic_sequence() {
        let seq: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let r = spacing_report(&seq, 100.0).unwrap();
        assert_eq!(r.count, 100);
        assert!(r.normalized.iter().all(|&s| (s - 1.0).abs() < 1e-15));
        // Point mass at 1 vs exponential: sup is at s = 1, max(1-e^{-1}, e^{-1}).
        assert!((r.ks_vs_poisson - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn too_few_gaps_and_bad_input() {
        let seq: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(spacing_report(&seq, 100.0), Err(StatsError::TooFewGaps { found: 9 })));
        let seq = [0.0, 1.0, 1.0, 2.0];
        assert!(matches!(spacings(&seq, 5.0), Err(StatsError::NotIncreasing { index: 2 })));
        assert!(matches!(ks_distance(&[], ReferenceCdf::Poisson), Err(StatsError::Empty)));
    }

    #[test]
    fn ks_examples() {
        let r = ReferenceCdf::Poisson;
        let two = [r.inverse(0.25), r.inverse(0.75)];
        assert!((ks_distance(&two, r).unwrap() - 0.25).abs() < 1e-12);
        let constant = vec![0.7; 100];
        assert!(ks_distance(&constant, r).unwrap() >= 0.5);
        let a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert!((ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn poisson_sampler_passes_its_own_test() {
        let pts = poisson_process(100_001, 7);
        let r = spacing_report(&pts, f64::INFINITY).unwrap();
        assert!(r.ks_vs_poisson < 0.01, "{}", r.ks_vs_poisson);
        assert!(r.ks_vs_semipoisson > 0.05);
        assert_eq!(poisson_process(10, 3), poisson_process(10, 3));
    }

    #[test]
    fn trend_of_flat_and_growing_series() {
        let xs = [1e3, 1e4, 1e5];
        assert!(trend(&xs, &[1.0, 1.01, 0.99]).bounded);
        assert!(!trend(&xs, &[1.0, 2.0, 3.0]).bounded);
        assert!(!trend(&xs[..2], &[1.0, 1.0]).bounded);
    }

    #[test]
    fn gap_report_on_square_torus() {
        use crate::lattice::{build_norm_table, TorusSpec};
        use crate::spectrum::{solve, CouplingSpec};
        let table = build_norm_table(&TorusSpec::square(), 2000.0).unwrap();
        let recs = solve(&table, &CouplingSpec::weak(0.0).unwrap(), 500.0).unwrap();
        let g = gap_report(&table, &recs, 500.0).unwrap();
        assert!(g.mean_d > 0.0 && g.ratio > 0.0 && g.ratio < 1.0);
        // Direct recomputation from the definitions.
        let n = table.distinct_counting(500.0).unwrap();
        let d: f64 = recs.iter().filter(|r| r.j < n).map(|r| r.right_norm - r.lambda).sum();
        assert!((g.mean_d - d / n as f64).abs() < 1e-12);
        let delta: f64 = (1..n).map(|j| table.norms()[j] - table.norms()[j - 1]).sum();
        assert!((g.mean_delta - delta / n as f64).abs() < 1e-12);

        let holes: Vec<_> = recs.iter().filter(|r| r.j != 3 && r.j != 7).cloned().collect();
        match gap_report(&table, &holes, 500.0) {
            Err(StatsError::MissingIntervals { missing }) => assert_eq!(missing, vec![3, 7]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ratio_vanishes_near_phi_pi() {
        use crate::lattice::{build_norm_table, TorusSpec};
        use crate::spectrum::{solve, CouplingSpec};
        let table = build_norm_table(&TorusSpec::square(), 2000.0).unwrap();
        let r0 = gap_report(&table, &solve(&table, &CouplingSpec::weak(0.0).unwrap(), 300.0).unwrap(), 300.0)
            .unwrap()
            .ratio;
        let r1 = gap_report(&table, &solve(&table, &CouplingSpec::weak(std::f64::consts::PI - 1.6e-3).unwrap(), 300.0).unwrap(), 300.0)
            .unwrap()
            .ratio;
        assert!(r1 < 0.1 * r0, "{r0} {r1}");
    }

    proptest! {
        #[test]
        fn normalisation_and_histogram_mass(gaps in proptest::collection::vec(1e-3f64..10.0, 11..400)) {
            let seq: Vec<f64> = gaps.iter().scan(0.0, |t, g| { *t += g; Some(*t) }).collect();
            let r = spacing_report(&seq, f64::INFINITY).unwrap();
            let mean = r.normalized.iter().sum::<f64>() / r.count as f64;
            prop_assert!((mean - 1.0).abs() < 1e-12);
            prop_assert!(r.normalized.iter().all(|&s| s > 0.0));
            let width = HISTOGRAM_MAX / HISTOGRAM_BINS as f64;
            let mass: f64 = r.histogram.density.iter().map(|d| d * width).sum();
            prop_assert!((mass - 1.0).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&r.ks_vs_poisson));
        }

        #[test]
        fn reports_are_prefix_consistent(gaps in proptest::collection::vec(0.1f64..3.0, 30..200), cut in 0.3f64..0.9) {
            let seq: Vec<f64> = gaps.iter().scan(0.0, |t, g| { *t += g; Some(*t) }).collect();
            let x = seq[seq.len() - 1] * cut;
            let full = spacings(&seq, f64::INFINITY).unwrap();
            let part = spacings(&seq, x).unwrap();
            prop_assert_eq!(&full[..part.len()], &part[..]);
        }
    }
}
