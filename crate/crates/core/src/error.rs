use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("basis size {dim} too small (minimum {min})")]
    BasisTooSmall { dim: usize, min: usize },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("requested {requested} levels but only {available} are available")]
    TooManyLevels { requested: usize, available: usize },

    #[error("level {level} is not converged at basis size {dim}")]
    UnconvergedLevel { level: usize, dim: usize },

    #[error("no converged basis size up to {budget}; worst residual {residual_ghz:e} GHz")]
    NotConverged { budget: usize, residual_ghz: f64 },

    #[error("at flux {flux}: {source}")]
    AtFlux {
        flux: f64,
        #[source]
        source: Box<CoreError>,
    },

    #[error("dressed-state assignment ambiguous for bare state {state:?} (max overlap {overlap:.3})")]
    AmbiguousAssignment { state: (usize, usize), overlap: f64 },

    #[error("gauge discontinuity in band {band} at quasicharge {quasicharge:.4} (overlap {overlap:.3}); refine the quasicharge grid")]
    GaugeDiscontinuity {
        band: usize,
        quasicharge: f64,
        overlap: f64,
    },

    #[error("integration unstable: trace drift {drift:e}")]
    TraceDrift { drift: f64 },

    #[error("density matrix lost positivity: minimum eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("{mechanism}: {source}")]
    Mechanism {
        mechanism: &'static str,
        #[source]
        source: Box<CoreError>,
    },

    #[error("problem is unidentifiable: {0}")]
    Unidentifiable(String),

    #[error("root bracketing failed: {0}")]
    NoRoot(String),
}

impl CoreError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        CoreError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn mechanism(mechanism: &'static str, err: CoreError) -> Self {
        CoreError::Mechanism {
            mechanism,
            source: Box::new(err),
        }
    }

    pub(crate) fn at_flux(flux: f64, err: CoreError) -> Self {
        CoreError::AtFlux {
            flux,
            source: Box::new(err),
        }
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
