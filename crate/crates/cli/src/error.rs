use scatterlab_core::greens::GreensError;
use scatterlab_core::lattice::LatticeError;
use scatterlab_core::spectrum::SpectrumError;
use scatterlab_core::stats::StatsError;
use scatterlab_core::verify::VerifyError;

/// Failure classes, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("precision: {0}")]
    Precision(String),
    #[error("coverage: {0}")]
    Coverage(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Precision(_) => 3,
            CliError::Coverage(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(format!("input file: {e}"))
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        let msg = e.to_string();
        match e {
            LatticeError::NonPositiveAspect(_)
            | LatticeError::MalformedAspect(_)
            | LatticeError::InvalidCutoff(_) => CliError::Usage(msg),
            LatticeError::Collision { .. } => CliError::Precision(msg),
            LatticeError::OutOfRange { .. } => CliError::Coverage(msg),
            _ => CliError::Io(msg),
        }
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        let msg = e.to_string();
        match e {
            SpectrumError::InvalidCoupling(_) | SpectrumError::InvalidArgument(_) => CliError::Usage(msg),
            SpectrumError::InsufficientCutoff { .. } => CliError::Coverage(msg),
            SpectrumError::Lattice(l) => l.into(),
            _ => CliError::Precision(msg),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        let msg = e.to_string();
        match e {
            StatsError::MissingIntervals { .. } => CliError::Coverage(msg),
            StatsError::Lattice(l) => l.into(),
            _ => CliError::Usage(msg),
        }
    }
}

impl From<GreensError> for CliError {
    fn from(e: GreensError) -> Self {
        let msg = e.to_string();
        match e {
            GreensError::AtPole(_) => CliError::Precision(msg),
            GreensError::InsufficientCutoff { .. } | GreensError::SupportTooLarge { .. } => {
                CliError::Coverage(msg)
            }
            GreensError::Unsupported(_) => CliError::Usage(msg),
            GreensError::Lattice(l) => l.into(),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Lattice(e) => e.into(),
            VerifyError::Spectrum(e) => e.into(),
            VerifyError::Stats(e) => e.into(),
        }
    }
}
