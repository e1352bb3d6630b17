use thiserror::Error;

/// Errors raised by the solvers, market constructors and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite {what} for player {player}")]
    NonFiniteEvaluation { player: usize, what: &'static str },

    #[error("strategy {value} of player {player} lies outside [{lo}, {hi}]")]
    OutOfDomain {
        player: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("perceived marginal profit of player {player} has no sign change and no boundary maximizer")]
    NoSignChange { player: usize },

    #[error("perceived second derivative {value} of player {player} is not negative")]
    SocViolation { player: usize, value: f64 },

    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("evaluation failed on {failed} of {total} sampled points")]
    SampleFailure { failed: usize, total: usize },

    #[error("payoff of player {player} increases without bound along the scan")]
    UnboundedObjective { player: usize },

    #[error("implied bias left the admissible range for player {player}")]
    NoInteriorNae { player: usize },

    #[error("audit did not find constant signs for {0}")]
    IndefiniteSigns(&'static str),

    #[error("degenerate denominator in {0}")]
    DegenerateDenominator(&'static str),

    #[error("no real root in {0}")]
    ComplexRoot(&'static str),

    #[error("equilibrium demand of player {player} is {demand}, not positive")]
    NonPositiveDemand { player: usize, demand: f64 },

    #[error("game failed the assumption audit: {0}")]
    AuditFailed(String),

    #[error("sampled arm '{0}' is empty")]
    InsufficientVariation(&'static str),

    #[error("the policy never switched within the horizon")]
    NoSwitches,

    #[error("implied bias {0} is not positive")]
    NonPositiveAlpha(f64),

    #[error("iterate norm {norm:e} exceeded the bound at step {step}")]
    Divergence { step: usize, norm: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
