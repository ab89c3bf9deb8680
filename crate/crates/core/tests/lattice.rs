use proptest::prelude::*;
use scatterlab_core::lattice::{
    build_norm_table, export_csv, load_table, save_table, Aspect, LatticeClass, LatticeError,
    TorusSpec,
};

/// `#{(m, n) : p m² + q n² <= k}` by direct enumeration with integer arithmetic.
fn count_form(p: u64, q: u64, k: u64) -> u64 {
    let mut total = 0u64;
    let mmax = (k / p).isqrt() as i64;
    for m in -mmax..=mmax {
        let rest = k - p * (m * m) as u64;
        total += 2 * (rest / q).isqrt() + 1;
    }
    total
}

#[test]
fn square_counts_match_direct_enumeration() {
    let table = build_norm_table(&TorusSpec::square(), 1e6).unwrap();
    for k in [0u64, 1, 2, 25, 1000, 12_345, 100_000, 1_000_000] {
        assert_eq!(table.counting(k as f64).unwrap(), count_form(1, 1, k), "k = {k}");
    }
}

#[test]
fn circle_law_remainder_fits_a_single_power() {
    let table = build_norm_table(&TorusSpec::square(), 1e6).unwrap();
    let ratios: Vec<f64> = [1e4, 1e5, 1e6]
        .iter()
        .map(|&x| {
            let direct = count_form(1, 1, x as u64) as f64 - std::f64::consts::PI * x;
            let report = table.circle_law(x).unwrap();
            assert!((report.remainder - direct).abs() < 1e-6);
            report.remainder.abs() / x.powf(0.4)
        })
        .collect();
    let c = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(c < 1.0, "{ratios:?}");
}

#[test]
fn rational_aspect_counts() {
    // a² = 3/2: |ξ|² = (4m² + 9n²)/6.
    let torus = TorusSpec::Flat2 { a2: "3/2".parse().unwrap() };
    let table = build_norm_table(&torus, 500.0).unwrap();
    for k in [0u64, 6, 100, 2999] {
        assert_eq!(table.counting(k as f64 / 6.0).unwrap(), count_form(4, 9, k), "k = {k}");
    }
}

#[test]
fn cubic_counts() {
    let table = build_norm_table(&TorusSpec::cubic(), 400.0).unwrap();
    let mut direct = 0u64;
    for a in -20i64..=20 {
        for b in -20i64..=20 {
            for c in -20i64..=20 {
                direct += (a * a + b * b + c * c <= 400) as u64;
            }
        }
    }
    assert_eq!(table.counting(400.0).unwrap(), direct);
}

#[test]
fn generic_irrational_density() {
    let torus = TorusSpec::Flat2 {
        a2: "3.14159265358979323846264338327950288419716939937510".parse().unwrap(),
    };
    let table = build_norm_table(&torus, 1e5).unwrap();
    assert_eq!(torus.lattice_class(), LatticeClass::Irrational);
    let density = table.distinct_counting(1e5).unwrap() as f64 / 1e5;
    assert!((density / std::f64::consts::FRAC_PI_4 - 1.0).abs() < 0.05, "{density}");
}

#[test]
fn save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for torus in [
        TorusSpec::square(),
        TorusSpec::Flat2 { a2: "sqrt(2)".parse().unwrap() },
        TorusSpec::Flat3 { a2: "sqrt(2)".parse().unwrap(), b2: "sqrt(3)".parse().unwrap() },
    ] {
        let table = build_norm_table(&torus, 300.0).unwrap();
        let path = dir.path().join("t.slnt");
        save_table(&table, &path).unwrap();
        let back = load_table(&path).unwrap();
        assert_eq!(back.norms(), table.norms());
        assert_eq!(back.multiplicities(), table.multiplicities());
        assert_eq!(back.torus(), table.torus());
        let (mut a, mut b) = (Vec::new(), Vec::new());
        export_csv(&table, &mut a).unwrap();
        export_csv(&back, &mut b).unwrap();
        assert_eq!(a, b);
    }
    let path = dir.path().join("bad.slnt");
    std::fs::write(&path, b"not a table").unwrap();
    assert!(load_table(&path).is_err());
}

#[test]
fn invalid_aspects() {
    assert!(matches!("0".parse::<Aspect>(), Err(LatticeError::NonPositiveAspect(_))));
    assert!("abc".parse::<Aspect>().is_err());
    assert!(build_norm_table(&TorusSpec::square(), -1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn rational_tori_conserve_lattice_points(p in 1u64..8, q in 1u64..8, k in 0u64..3000) {
        prop_assume!(gcd(p, q) == 1);
        // a² = p/q: |ξ|² = (q² m² + p² n²)/(pq).
        let torus = TorusSpec::Flat2 { a2: Aspect::rational(p, q).unwrap() };
        let x = k as f64 / (p * q) as f64;
        let table = build_norm_table(&torus, x + 1.0).unwrap();
        prop_assert_eq!(table.counting(x).unwrap(), count_form(q * q, p * p, k));
        let total: u64 = table.multiplicities().iter().map(|&r| r as u64).sum();
        prop_assert_eq!(total, table.total_count());
        // ξ and -ξ share a norm.
        prop_assert!(table.multiplicities()[1..].iter().all(|r| r % 2 == 0));
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}
