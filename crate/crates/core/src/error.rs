use std::fmt;

use crate::propagator::Frame;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("wavelength {wavelength_nm:.1} nm is outside the supported window {min_nm}-{max_nm} nm")]
    Domain {
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },

    #[error("no phase-matching angle: {0}")]
    NoRoot(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid pump: {0}")]
    InvalidPump(String),

    #[error("pump normalization failed: a fraction {mass_cut:.3e} of the spectrum falls outside the propagation window")]
    Normalization { mass_cut: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("integration unstable: field norm {norm:.3e} exceeds bound {bound:.3e}; increase the step count")]
    Instability { norm: f64, bound: f64 },

    #[error(
        "symplectic invariant violated: unitarity residual {unitarity:.3e}, \
         symmetry residual {symmetry:.3e}, tolerance {tolerance:.3e}"
    )]
    SymplecticViolation {
        unitarity: f64,
        symmetry: f64,
        tolerance: f64,
    },

    #[error("Green pair is already in the {0} frame")]
    FrameState(Frame),

    #[error("frame mismatch: {0}")]
    FrameMismatch(String),

    #[error("degenerate block {start}..{end} not resolved: off-diagonal residual {residual:.3e}")]
    Degeneracy {
        start: usize,
        end: usize,
        residual: f64,
    },

    #[error("decomposition does not reconstruct its input: relative error {0:.3e}")]
    Reconstruction(f64),

    #[error("Hermite-Gauss fit of order {order} failed: relative residual {residual:.3}")]
    FitFailure { order: usize, residual: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("matrix is not symmetric: relative asymmetry {0:.3e}")]
    NotSymmetric(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time window {window_fs:.1} fs too short: need more than {required_fs:.1} fs")]
    Wraparound { window_fs: f64, required_fs: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Process exit status for the command-line front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Failure = 1,
    Config = 2,
    Invariant = 3,
    Convergence = 4,
}

impl Error {
    pub fn exit_status(&self) -> ExitStatus {
        match self {
            Error::Config(_) | Error::Json(_) | Error::InvalidGrid(_) | Error::InvalidPump(_) => {
                ExitStatus::Config
            }
            Error::Domain { .. } | Error::NoRoot(_) | Error::Unsupported(_) => ExitStatus::Config,
            Error::SymplecticViolation { .. }
            | Error::Reconstruction(_)
            | Error::Degeneracy { .. }
            | Error::NotSymmetric(_)
            | Error::FrameMismatch(_)
            | Error::GridMismatch(_)
            | Error::Normalization { .. }
            | Error::Wraparound { .. } => ExitStatus::Invariant,
            Error::Instability { .. } | Error::FitFailure { .. } => ExitStatus::Convergence,
            _ => ExitStatus::Failure,
        }
    }
}

impl fmt::Display for ExitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as i32)
    }
}
