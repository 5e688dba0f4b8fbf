use thiserror::Error;

/// Errors raised by the analysis core.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("omega {0} lies outside [0, 1]")]
    OmegaOutOfRange(String),

    #[error("invalid decision rule code {0:?}: expected four letters from G, Y, W")]
    InvalidRuleCode(String),

    #[error("invalid bet {0:?}: expected one of G, Y, W")]
    InvalidBet(String),

    #[error("invalid draw outcome {0:?}: expected one of GG, GY, YG, YY")]
    InvalidDrawOutcome(String),

    #[error("invalid rational {0:?}")]
    InvalidRational(String),

    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("polynomial of degree {0} cannot represent an act (degree must be at most 3)")]
    DegreeTooHigh(usize),

    #[error("invalid binomial input: {0}")]
    InvalidBinomial(String),

    #[error("reachability search exceeded its budget of {0} visited acts")]
    BudgetExceeded(usize),

    #[error("dataset error: {0}")]
    Dataset(String),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
