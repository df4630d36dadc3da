use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parametrization: generator `{generator}`: {reason}")]
    InvalidParametrization { generator: String, reason: String },

    #[error("zero-likelihood observation at round {round} (symbol {symbol})")]
    ZeroLikelihood { round: usize, symbol: usize },

    #[error("derivative at bound: parameter `{0}` is not strictly inside [0, 1]")]
    DerivativeAtBound(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    UnknownSymbol { symbol: usize, alphabet: usize },

    #[error("sequence too short: need at least {needed}, got {got}")]
    SequenceTooShort { needed: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("all {restarts} restarts rejected")]
    AllRestartsRejected { restarts: usize },

    #[error("fit reports were produced on different datasets")]
    FingerprintMismatch,

    #[error("fit did not converge (residual norm {residual_norm:.3e})")]
    FitNotConverged { residual_norm: f64 },

    #[error("labels are degenerate: {positives} positives, {negatives} negatives")]
    DegenerateLabels { positives: usize, negatives: usize },

    #[error("no accepted shots at M = {0}")]
    NoAcceptedShots(usize),

    #[error("steady state undefined: leakage and seepage rates are both zero")]
    ZeroRates,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("protocol mismatch: {0}")]
    ProtocolMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input), used for CLI exit codes.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroLikelihood { .. }
                | Error::DerivativeAtBound(_)
                | Error::AllRestartsRejected { .. }
                | Error::FitNotConverged { .. }
                | Error::NoAcceptedShots(_)
                | Error::InvalidParametrization { .. }
        )
    }
}
