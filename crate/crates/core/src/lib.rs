//! Equilibria of games in which each player acts on a biased estimate of
//! its own demand sensitivity.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod bias;
pub mod calculus;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod markets;
pub mod merger;
pub mod microfound;
pub mod nae;
mod optim;
pub mod reply;

pub use audit::{
    audit_assumptions, Assumption, AuditReport, AuditStatus, SamplingPlan, Sign, Witness,
};
pub use bias::{BiasFunction, BiasKind, BiasProfile};
pub use calculus::{
    derivative_report, perceived_marginal_profit, perceived_second_derivative, DerivativeMethod,
    DerivativeReport,
};
pub use equilibrium::{solve_alpha_equilibrium, SolveReport, SolverSettings};
pub use error::{Error, Result};
pub use game::{negate_relabel, CustomGame, GameKind, GameModel, GameSpec, Interval, StrategyProfile};
pub use markets::{
    advertising_equilibrium, advertising_nae, price_alpha_equilibrium, price_duopoly_nae,
    price_symmetric_nae, symmetric_alpha_star, team_production_nae, AdvertisingMarket, CircleGame,
    LinearPriceMarket, TeamProductionSpec,
};
pub use merger::{
    economist_prediction, estimate_marginal_cost, postmerger_outcomes, MergerOutcome, MergerScenario,
    PriceTable,
};
pub use dynamics::{
    run_adjustment, run_replacement, AdjustmentConfig, AdjustmentTrajectory, CandidatePool,
    PeriodRecord, ReplacementConfig, ReplacementProbability, ReplacementRun, UpdateRule,
};
pub use microfound::{
    ad_targeting_analytic, ad_targeting_bias, ad_targeting_monte_carlo, discount_elasticity,
    joint_cells, shock_discount_alpha, AdEstimate, AdFormula, AdPolicy, AdTargetingExperiment,
    DiscountEstimate, DiscountExperiment, Mode, ShockDiscountSpec, PRNG_ALGORITHM,
};
pub use reply::perceived_best_reply;
pub use nae::{
    certify, slope_identity_residuals, classify_directions, constrained_equilibrium, solve_nae,
    stackelberg_best, verify_nae, AuditMode, Check, SlopeIdentityTerm, Classification,
    ConstrainedEquilibrium, Deviation, DeviationGrid, NaeMethod, NaeReport, NaeSettings,
    NaeVerdict, NashReference, ParetoCheck, ParetoRelation, StackelbergResult,
};
