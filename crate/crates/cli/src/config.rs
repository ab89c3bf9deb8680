//! Run settings: a TOML file overlaid by command-line flags (flags win).

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use scatterlab_core::lattice::{Aspect, TorusSpec};
use scatterlab_core::spectrum::{CouplingSpec, DEFAULT_DELTA};

use crate::error::CliError;

/// Settings shared by all subcommands. Every field can also be set in the
/// config file under the same name (with `_` for `-`).
#[derive(Args, Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Torus preset: `square`, `cubic`, `flat2` or `flat3`.
    #[arg(long, global = true)]
    pub torus: Option<String>,
    /// First aspect a² (e.g. `1`, `3/2`, `sqrt(2)`, or a decimal with 30+ digits).
    #[arg(long, global = true)]
    pub aspect: Option<String>,
    /// Second aspect b² (3D only).
    #[arg(long, global = true)]
    pub aspect_b: Option<String>,
    /// Dimension when no preset is given.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// `weak` or `strong`.
    #[arg(long, global = true)]
    pub coupling: Option<String>,
    /// Weak-coupling phase in (-π, π).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Strong-coupling strength (nonzero).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Strong-coupling window exponent.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Energy threshold x.
    #[arg(long, global = true)]
    pub xmax: Option<f64>,
    /// Directory for cached norm tables (default: `<out>/cache`).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Output directory (default: current directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for synthetic samplers.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sample size for synthetic samplers, or number of eigenvalues to scan.
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// Observable frequency as comma-separated indices; repeatable.
    #[arg(long, global = true)]
    #[serde(default)]
    pub zeta: Vec<String>,
    /// Input sequence file for `stats` (one number per line, or CSV with a
    /// `lambda` or `norm` column).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Synthetic input for `stats`: `poisson`.
    #[arg(long, global = true)]
    pub synthetic: Option<String>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// `self` with unset fields taken from `base`.
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            torus: self.torus.or(base.torus),
            aspect: self.aspect.or(base.aspect),
            aspect_b: self.aspect_b.or(base.aspect_b),
            dim: self.dim.or(base.dim),
            coupling: self.coupling.or(base.coupling),
            phi: self.phi.or(base.phi),
            alpha: self.alpha.or(base.alpha),
            delta: self.delta.or(base.delta),
            xmax: self.xmax.or(base.xmax),
            cache_dir: self.cache_dir.or(base.cache_dir),
            out: self.out.or(base.out),
            threads: self.threads.or(base.threads),
            seed: self.seed.or(base.seed),
            count: self.count.or(base.count),
            zeta: if self.zeta.is_empty() { base.zeta } else { self.zeta },
            input: self.input.or(base.input),
            synthetic: self.synthetic.or(base.synthetic),
        }
    }
}

/// Fully resolved settings; echoed into every sidecar.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub experiment: String,
    pub torus: TorusSpec,
    pub coupling: Option<CouplingSpec>,
    pub x: f64,
    /// Whether `x` came from the user rather than the default.
    #[serde(skip)]
    pub x_given: bool,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub threads: Option<usize>,
    pub seed: u64,
    pub count: Option<usize>,
    pub zetas: Vec<Vec<i64>>,
    pub input: Option<PathBuf>,
    pub synthetic: Option<String>,
}

fn aspect(s: Option<&str>) -> Result<Aspect, CliError> {
    match s {
        None => Ok(Aspect::one()),
        Some(s) => Ok(s.parse()?),
    }
}

fn torus(s: &Settings) -> Result<TorusSpec, CliError> {
    let dim = match s.torus.as_deref() {
        Some("square") | Some("cubic") if s.aspect.is_some() || s.aspect_b.is_some() => {
            return Err(CliError::Usage("presets `square` and `cubic` take no aspects".into()))
        }
        Some("square") => return Ok(TorusSpec::square()),
        Some("cubic") => return Ok(TorusSpec::cubic()),
        Some("flat2") => 2,
        Some("flat3") => 3,
        Some(other) => return Err(CliError::Usage(format!("unknown torus `{other}`"))),
        None => s.dim.unwrap_or(2),
    };
    if s.dim.is_some_and(|d| d != dim) {
        return Err(CliError::Usage(format!("--dim {} contradicts the torus preset", s.dim.unwrap())));
    }
    let spec = match dim {
        2 if s.aspect_b.is_some() => return Err(CliError::Usage("--aspect-b needs a 3D torus".into())),
        2 => TorusSpec::Flat2 { a2: aspect(s.aspect.as_deref())? },
        3 => TorusSpec::Flat3 {
            a2: aspect(s.aspect.as_deref())?,
            b2: aspect(s.aspect_b.as_deref())?,
        },
        d => return Err(CliError::Usage(format!("dimension must be 2 or 3, got {d}"))),
    };
    spec.validate()?;
    Ok(spec)
}

fn coupling(s: &Settings) -> Result<Option<CouplingSpec>, CliError> {
    let spec = match s.coupling.as_deref() {
        None if s.phi.is_none() && s.alpha.is_none() => return Ok(None),
        None | Some("weak") if s.alpha.is_none() => CouplingSpec::weak(s.phi.unwrap_or(0.0))?,
        None | Some("strong") if s.phi.is_none() => {
            let alpha = s.alpha.ok_or_else(|| CliError::Usage("strong coupling needs --alpha".into()))?;
            CouplingSpec::strong(alpha, s.delta.unwrap_or(DEFAULT_DELTA))?
        }
        Some(c @ ("weak" | "strong")) => {
            return Err(CliError::Usage(format!("--phi and --alpha conflict under {c} coupling")))
        }
        None => return Err(CliError::Usage("--phi and --alpha are mutually exclusive".into())),
        Some(other) => return Err(CliError::Usage(format!("unknown coupling `{other}`"))),
    };
    Ok(Some(spec))
}

fn zeta(s: &str) -> Result<Vec<i64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("malformed --zeta `{s}`")))
}

impl RunConfig {
    pub fn resolve(experiment: &str, s: &Settings) -> Result<Self, CliError> {
        let x = s.xmax.unwrap_or(1e3);
        if !(x.is_finite() && x > 0.0) {
            return Err(CliError::Usage(format!("--xmax must be positive, got {x}")));
        }
        if s.threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        let out_dir = s.out.clone().unwrap_or_else(|| PathBuf::from("."));
        Ok(RunConfig {
            experiment: experiment.to_string(),
            torus: torus(s)?,
            coupling: coupling(s)?,
            x,
            x_given: s.xmax.is_some(),
            cache_dir: s.cache_dir.clone().unwrap_or_else(|| out_dir.join("cache")),
            out_dir,
            threads: s.threads,
            seed: s.seed.unwrap_or(0),
            count: s.count,
            zetas: s.zeta.iter().map(|z| zeta(z)).collect::<Result<_, _>>()?,
            input: s.input.clone(),
            synthetic: s.synthetic.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file: Settings = toml::from_str("xmax = 500.0\nphi = 1.0\naspect = \"3/2\"").unwrap();
        let flags = Settings {
            xmax: Some(200.0),
            ..Default::default()
        };
        let merged = flags.over(file);
        let cfg = RunConfig::resolve("solve", &merged).unwrap();
        assert_eq!(cfg.x, 200.0);
        assert_eq!(cfg.coupling, Some(CouplingSpec::Weak { phi: 1.0 }));
        assert_eq!(cfg.torus, TorusSpec::Flat2 { a2: "3/2".parse().unwrap() });
    }

    #[test]
    fn torus_and_coupling_resolution() {
        let s = Settings {
            torus: Some("flat3".into()),
            aspect: Some("sqrt(2)".into()),
            aspect_b: Some("sqrt(3)".into()),
            alpha: Some(-1.0),
            ..Default::default()
        };
        let cfg = RunConfig::resolve("solve", &s).unwrap();
        assert_eq!(cfg.torus.dimension(), 3);
        assert!(matches!(cfg.coupling, Some(CouplingSpec::Strong { alpha, .. }) if alpha == -1.0));

        for bad in [
            Settings { aspect: Some("0".into()), ..Default::default() },
            Settings { torus: Some("square".into()), aspect: Some("2".into()), ..Default::default() },
            Settings { phi: Some(1.0), alpha: Some(1.0), ..Default::default() },
            Settings { coupling: Some("strong".into()), ..Default::default() },
            Settings { zeta: vec!["1,x".into()], ..Default::default() },
            Settings { dim: Some(4), ..Default::default() },
        ] {
            assert!(matches!(RunConfig::resolve("solve", &bad), Err(CliError::Usage(_))), "{bad:?}");
        }
        assert!(toml::from_str::<Settings>("unknown = 1").is_err());
    }
}
