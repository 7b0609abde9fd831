use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("log-volume {0} exceeds the representable range")]
    Range(f64),
    #[error("series needs at least {needed} training observations, got {got}")]
    UnfitSeries { needed: usize, got: usize },
    #[error("energy became non-finite at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("non-finite potential at the sampler state")]
    DivergedState,
    #[error("fit failed: {0}")]
    FitFailure(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Range(_) => "range",
            Error::UnfitSeries { .. } => "unfit_series",
            Error::Divergence { .. } => "divergence",
            Error::DivergedState => "diverged_state",
            Error::FitFailure(_) => "fit_failure",
        }
    }
}
