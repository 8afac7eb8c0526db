use thiserror::Error;

/// Errors produced by the simulator and compiler.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("incompatible units: cannot convert {from} to {to}")]
    IncompatibleUnits { from: String, to: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("index {index} out of range for {len} states")]
    Index { index: usize, len: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    Convergence { sweeps: usize, off_norm: f64 },

    #[error("fit did not converge after {attempts} multi-start attempts")]
    FitConvergence { attempts: usize },

    #[error("model has no disorder specification")]
    MissingDisorderSpec,

    #[error("quadrature did not converge: estimated error {estimate:e}")]
    Integration { estimate: f64 },

    #[error("integrator step failed at t = {t} (step {h:e})")]
    Step { t: f64, h: f64 },

    #[error("time grid error: {0}")]
    Grid(String),

    #[error("horizon {horizon} ps lies outside the time grid [{start}, {end}]")]
    Horizon { horizon: f64, start: f64, end: f64 },

    #[error("singular coupler: detuning delta_ij is zero")]
    SingularCoupler,

    #[error("target coupling {target} GHz unreachable without coupler-mediated terms")]
    Unreachable { target: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::FitConvergence { .. }
                | Error::Integration { .. }
                | Error::Step { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
