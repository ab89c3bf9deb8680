use std::fs;
use std::path::Path;

use log::{debug, info};
use serde::Serialize;
use sha2::{Digest, Sha256};

use scatterlab_core::greens::{equidistribution_scan, write_scan_csv};
use scatterlab_core::lattice::{export_csv, NormTable};
use scatterlab_core::spectrum::{solve, write_eigenvalue_csv, CouplingSpec, EigenvalueRecord};
use scatterlab_core::stats::{gap_report, poisson_process, spacing_report, GapReport, SpacingReport};
use scatterlab_core::verify::{run_suite, suite_cutoff};

use crate::cache::{self, CacheInfo};
use crate::config::RunConfig;
use crate::error::CliError;

const DEFAULT_SYNTHETIC_COUNT: usize = 100_000;
const DEFAULT_SCAN_COUNT: usize = 200;

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    file: &'a str,
    sha256: String,
    config: &'a RunConfig,
    table_cache: Option<&'a CacheInfo>,
}

/// Writes `bytes` to `<out>/<name>` and its description to `<name>.meta.json`.
fn emit(cfg: &RunConfig, cache: Option<&CacheInfo>, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out_dir)?;
    if let Some(c) = cache {
        debug!("norm table {} ({})", c.path.display(), if c.hit { "cached" } else { "built" });
    }
    let path = cfg.out_dir.join(name);
    fs::write(&path, bytes)?;
    let sidecar = Sidecar {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        file: name,
        sha256: Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect(),
        config: cfg,
        table_cache: cache,
    };
    let mut meta = serde_json::to_vec_pretty(&sidecar)?;
    meta.push(b'\n');
    fs::write(cfg.out_dir.join(format!("{name}.meta.json")), meta)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn coupling_or_default(cfg: &RunConfig) -> CouplingSpec {
    cfg.coupling.unwrap_or(CouplingSpec::Weak { phi: 0.0 })
}

/// Table cutoff that covers solving every interval up to `x`.
fn solve_cutoff(x: f64) -> f64 {
    (2.0 * x).max(1e3)
}

fn spectrum(cfg: &RunConfig, cutoff: f64) -> Result<(NormTable, CacheInfo, Vec<EigenvalueRecord>), CliError> {
    let (table, info) = cache::table(&cfg.cache_dir, &cfg.torus, cutoff)?;
    let records = solve(&table, &coupling_or_default(cfg), cfg.x)?;
    info!("{} eigenvalues up to {}", records.len(), cfg.x);
    Ok((table, info, records))
}

pub fn norms(cfg: &RunConfig) -> Result<(), CliError> {
    let (table, info) = cache::table(&cfg.cache_dir, &cfg.torus, cfg.x)?;
    let mut csv = Vec::new();
    export_csv(&table, &mut csv)?;
    info!("{} distinct norms up to {}", table.len(), cfg.x);
    emit(cfg, Some(&info), "norms.csv", &csv)
}

pub fn solve_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let (_, info, records) = spectrum(cfg, solve_cutoff(cfg.x))?;
    let mut csv = Vec::new();
    write_eigenvalue_csv(&records, &mut csv)?;
    emit(cfg, Some(&info), "eigenvalues.csv", &csv)
}

#[derive(Serialize)]
struct StatsOutput<'a> {
    source: String,
    spacing: &'a SpacingReport,
    gaps: Option<GapReport>,
}

/// Reads one number per line, or a CSV column named `lambda` or `norm`.
fn read_sequence(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut column = 0;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if i == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            column = record
                .iter()
                .position(|h| h == "lambda" || h == "norm")
                .ok_or_else(|| CliError::Usage(format!("{}: no `lambda` or `norm` column", path.display())))?;
            continue;
        }
        let field = record.get(column).unwrap_or_default();
        let v = field
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("{}: line {}: `{field}` is not a number", path.display(), i + 1)))?;
        values.push(v);
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

pub fn stats(cfg: &RunConfig) -> Result<(), CliError> {
    let x = if cfg.x_given { cfg.x } else { f64::INFINITY };
    let (source, report, gaps, cache) = if let Some(path) = &cfg.input {
        let seq = read_sequence(path)?;
        (format!("file {}", path.display()), spacing_report(&seq, x)?, None, None)
    } else if let Some(kind) = &cfg.synthetic {
        if kind != "poisson" {
            return Err(CliError::Usage(format!("unknown synthetic sampler `{kind}`")));
        }
        let n = cfg.count.unwrap_or(DEFAULT_SYNTHETIC_COUNT);
        let seq = poisson_process(n, cfg.seed);
        (format!("poisson process, n = {n}, seed = {}", cfg.seed), spacing_report(&seq, x)?, None, None)
    } else if let Some(coupling) = cfg.coupling {
        let (table, info, records) = spectrum(cfg, solve_cutoff(cfg.x))?;
        let seq: Vec<f64> = records.iter().map(|r| r.lambda).collect();
        let gaps = gap_report(&table, &records, cfg.x)?;
        (format!("eigenvalues, {coupling:?}"), spacing_report(&seq, cfg.x)?, Some(gaps), Some(info))
    } else {
        let (table, info) = cache::table(&cfg.cache_dir, &cfg.torus, cfg.x)?;
        ("distinct norms".to_string(), spacing_report(table.norms(), cfg.x)?, None, Some(info))
    };
    info!(
        "{} gaps, mean {:.6}, KS vs Poisson {:.5}, KS vs semi-Poisson {:.5}",
        report.count, report.mean_spacing, report.ks_vs_poisson, report.ks_vs_semipoisson
    );
    let mut hist = Vec::new();
    report.histogram.write_csv(&mut hist)?;
    let out = StatsOutput {
        source,
        spacing: &report,
        gaps,
    };
    emit(cfg, cache.as_ref(), "stats.json", &json(&out)?)?;
    emit(cfg, cache.as_ref(), "histogram.csv", &hist)
}

pub fn equidist(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.torus.dimension() != 2 {
        return Err(CliError::Usage("observable scans are implemented on 2D tori only".into()));
    }
    let cutoff = solve_cutoff(cfg.x).max(4.0 * cfg.x).max(cfg.x + 1e4);
    let (table, info, records) = spectrum(cfg, cutoff)?;
    let excited: Vec<EigenvalueRecord> = records.into_iter().filter(|r| r.j > 0).collect();
    let count = cfg.count.unwrap_or(DEFAULT_SCAN_COUNT).min(excited.len());
    let picked: Vec<EigenvalueRecord> = match count {
        0 => Vec::new(),
        1 => vec![excited[excited.len() - 1]],
        n => (0..n).map(|i| excited[i * (excited.len() - 1) / (n - 1)]).collect(),
    };
    let zetas = if cfg.zetas.is_empty() { vec![vec![1, 0]] } else { cfg.zetas.clone() };
    let rows = equidistribution_scan(&table, &picked, &[0.0, 0.0], &zetas)?;
    let mut csv = Vec::new();
    write_scan_csv(&rows, &mut csv)?;
    emit(cfg, Some(&info), "equidist.csv", &csv)
}

pub fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let (table, info) = cache::table(&cfg.cache_dir, &cfg.torus, suite_cutoff(cfg.x))?;
    let report = run_suite(&table, cfg.x)?;
    for c in &report.checks {
        info!(
            "{} {}: measured {:.6} threshold {} ({})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.threshold,
            c.detail
        );
    }
    emit(cfg, Some(&info), "verify.json", &json(&report)?)
}
