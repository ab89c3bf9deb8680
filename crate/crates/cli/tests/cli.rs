use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scatterlab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("RUST_LOG", "info")
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

/// Sums of two squares up to `x`, counted directly.
fn sums_of_two_squares(x: u64) -> usize {
    (0..=x)
        .filter(|&n| (0..=n.isqrt()).any(|a| (n - a * a).isqrt().pow(2) == n - a * a))
        .count()
}

#[test]
fn norms_with_warm_cache() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(dir.path(), &["norms", "--torus", "square", "--xmax", "100"]);
    ok(&first);
    let csv = dir.path().join("norms.csv");
    assert_eq!(data_rows(&csv), sums_of_two_squares(100));
    let before = fs::read(&csv).unwrap();
    let meta = fs::read_to_string(dir.path().join("norms.csv.meta.json")).unwrap();

    let second = run(dir.path(), &["norms", "--torus", "square", "--xmax", "100"]);
    ok(&second);
    assert!(String::from_utf8_lossy(&second.stderr).contains("cache hit"));
    assert_eq!(fs::read(&csv).unwrap(), before);
    assert_eq!(fs::read_to_string(dir.path().join("norms.csv.meta.json")).unwrap(), meta);

    let sidecar: serde_json::Value = serde_json::from_str(&meta).unwrap();
    assert_eq!(sidecar["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(sidecar["config"]["x"], 100.0);
    assert_eq!(sidecar["table_cache"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn usage_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["norms", "--aspect", "0", "--xmax", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), &["solve", "--phi", "4"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), &["norms", "--torus", "hexagonal"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("norms.csv").exists());
}

#[test]
fn solve_row_counts_and_thread_independence() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cache = cache.to_str().unwrap();
    let weak_dir = dir.path().join("weak");
    ok(&run(&weak_dir, &["solve", "--phi", "0", "--xmax", "1000", "--cache-dir", cache, "--threads", "1"]));
    let strong_dir = dir.path().join("strong");
    ok(&run(
        &strong_dir,
        &["solve", "--coupling", "strong", "--alpha", "1", "--delta", "0.5", "--xmax", "1000", "--cache-dir", cache],
    ));
    let wide_dir = dir.path().join("wide");
    ok(&run(&wide_dir, &["solve", "--phi", "0", "--xmax", "1000", "--cache-dir", cache, "--threads", "8"]));

    // One row per interval below 1000; the first is the ground state.
    let expected = sums_of_two_squares(1000);
    let weak = fs::read_to_string(weak_dir.join("eigenvalues.csv")).unwrap();
    let strong = fs::read_to_string(strong_dir.join("eigenvalues.csv")).unwrap();
    assert_eq!(weak.lines().count() - 1, expected);
    assert_eq!(strong.lines().count() - 1, expected);
    assert_ne!(weak, strong);
    assert_eq!(weak, fs::read_to_string(wide_dir.join("eigenvalues.csv")).unwrap());
}

#[test]
fn stats_on_synthetic_and_file_input() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(dir.path(), &["stats", "--synthetic", "poisson", "--count", "100000", "--seed", "3"]));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
    assert!(report["spacing"]["ks_vs_poisson"].as_f64().unwrap() < 0.01);
    assert_eq!(data_rows(&dir.path().join("histogram.csv")), 50);
    let hist = fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    assert_eq!(hist.lines().next().unwrap(), "bin_left,bin_right,density");

    let input = dir.path().join("seq.csv");
    let body: String = (0..=40).map(|i| format!("{}\n", i * 3)).collect();
    fs::write(&input, format!("lambda\n{body}")).unwrap();
    let sub = dir.path().join("file");
    ok(&run(&sub, &["stats", "--input", input.to_str().unwrap()]));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(sub.join("stats.json")).unwrap()).unwrap();
    assert_eq!(report["spacing"]["count"], 40);
    assert_eq!(report["spacing"]["mean_spacing"], 3.0);

    let too_short = dir.path().join("short.csv");
    fs::write(&too_short, "1\n2\n3\n").unwrap();
    let out = run(&sub, &["stats", "--input", too_short.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stats_of_a_spectrum_include_gaps() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(dir.path(), &["stats", "--phi", "0", "--xmax", "500"]));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
    let ratio = report["gaps"]["ratio"].as_f64().unwrap();
    assert!(ratio > 0.0 && ratio < 1.0);
}

#[test]
fn equidist_scan_layout() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(dir.path(), &["equidist", "--phi", "0", "--xmax", "300", "--count", "20", "--zeta", "1,0", "--zeta", "1,1"]));
    let csv = fs::read_to_string(dir.path().join("equidist.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "j,lambda,re_M,im_M,zeta_or_k,tail_bound");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 40);
    assert!(rows[0].contains(",1:0,") && rows[1].contains(",1:1,"));
}

#[test]
fn verify_report_shape() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(dir.path(), &["verify", "--torus", "square", "--xmax", "10000"]));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 4);
    for c in checks {
        assert!(c["name"].is_string());
        assert!(c["measured"].is_number());
        assert!(c["threshold"].is_number());
        assert!(c["pass"].is_boolean());
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "torus = \"square\"\nxmax = 50.0\n").unwrap();
    ok(&run(dir.path(), &["norms", "--config", cfg.to_str().unwrap(), "--xmax", "100"]));
    assert_eq!(data_rows(&dir.path().join("norms.csv")), sums_of_two_squares(100));
    fs::write(&cfg, "torus = \"square\"\nbogus = 1\n").unwrap();
    let out = run(dir.path(), &["norms", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
