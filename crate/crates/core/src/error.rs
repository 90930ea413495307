use thiserror::Error;

/// Errors raised across the pipeline.
///
/// Variants split into two families: validation errors (bad input, bad
/// configuration) and numerical failures (instability, infeasibility,
/// singular solves). [`Error::is_numerical`] tells them apart; the CLI maps
/// the two families to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("system is not stable: {0}")]
    Unstable(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("singular: {0}")]
    Singular(String),

    #[error("rank-deficient regressor for output channel {channel}")]
    RankDeficient { channel: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// True for failures caused by the numbers rather than by the input shape.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Unstable(_) | Error::Infeasible(_) | Error::Singular(_) | Error::RankDeficient { .. }
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Invalid(_) => "invalid",
            Error::Dimension(_) => "dimension",
            Error::Unstable(_) => "unstable",
            Error::Infeasible(_) => "infeasible",
            Error::Singular(_) => "singular",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Config(_) => "config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
