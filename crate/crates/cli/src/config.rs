//! Scenario files: one JSON object naming a game, a task and its settings.

use std::path::{Path, PathBuf};

use naeq_core::{
    AdPolicy, AdTargetingExperiment, AdjustmentConfig, AdvertisingMarket, CircleGame,
    DiscountExperiment, GameSpec, LinearPriceMarket, MergerScenario, NaeSettings,
    ReplacementConfig, SamplingPlan, ShockDiscountSpec, SolverSettings, TeamProductionSpec,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    SolveAlphaEq,
    SolveNae,
    Audit,
    Verify,
    Merger,
    SimulateMicrofound,
    SimulateDynamics,
    Sweep,
}

impl Task {
    pub fn stochastic(self) -> bool {
        matches!(self, Task::SimulateMicrofound | Task::SimulateDynamics)
    }
}

/// How NAE are computed when a closed form exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NaeMethodChoice {
    #[default]
    Auto,
    Generic,
}

/// Bias profiles to evaluate: an explicit list, or every combination of
/// the grid values across players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSpec {
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub profiles: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicsMode {
    #[default]
    Replacement,
    Adjustment,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsBlock {
    pub mode: DynamicsMode,
    pub replacement: ReplacementConfig,
    pub adjustment: AdjustmentConfig,
    /// Bias profile held fixed during adjustment.
    pub alpha: Option<Vec<f64>>,
    /// Write per-period rows for every replication.
    pub trajectories: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub param: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub task: Task,
    pub grid: Vec<GridAxis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Kept as raw JSON so sweeps can override single fields.
    pub game: Value,
    pub task: Task,
    #[serde(default)]
    pub alphas: Option<AlphaSpec>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub method: NaeMethodChoice,
    #[serde(default)]
    pub nae: NaeSettings,
    #[serde(default)]
    pub audit: SamplingPlan,
    #[serde(default)]
    pub dynamics: DynamicsBlock,
    #[serde(default)]
    pub replications: Option<usize>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// The game block, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GameBlock {
    MotivatingExample,
    LinearPrice {
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
        #[serde(default)]
        w: Option<Vec<f64>>,
    },
    SymmetricPrice {
        n: usize,
        a: f64,
        b: f64,
        c: f64,
    },
    Advertising {
        a: [f64; 2],
        b: [f64; 2],
        c: [f64; 2],
        p: [f64; 2],
    },
    TeamProduction {
        n: usize,
        theta: f64,
        gamma: f64,
    },
    Circle {
        #[serde(default = "default_intercept")]
        intercept: f64,
        epsilon: f64,
    },
    Merger {
        a: f64,
        b: f64,
        c: f64,
    },
    DiscountExperiment {
        a: f64,
        b: f64,
        c: f64,
        p_low: f64,
        p_high: f64,
        mu_low: f64,
        gamma: [f64; 2],
        rho: f64,
        samples: usize,
    },
    AdTargeting {
        #[serde(default)]
        mu: f64,
        x_low: f64,
        x_high: f64,
        horizon: usize,
        #[serde(default = "default_batches")]
        batches: usize,
        #[serde(default = "default_policy")]
        policy: AdPolicy,
    },
    ShockDiscount {
        dx: f64,
        eps: f64,
    },
}

fn default_intercept() -> f64 {
    120.0
}

fn default_batches() -> usize {
    100
}

fn default_policy() -> AdPolicy {
    AdPolicy::Threshold
}

/// A validated game, ready for a task.
#[derive(Debug, Clone)]
pub enum Built {
    Price(LinearPriceMarket),
    Advertising(AdvertisingMarket),
    Team(TeamProductionSpec),
    Circle(CircleGame),
    Merger(MergerScenario),
    Discount(DiscountExperiment),
    AdTargeting(AdTargetingExperiment),
    Shock(ShockDiscountSpec),
}

impl Built {
    pub fn game(&self) -> Option<GameSpec> {
        match self {
            Built::Price(m) => Some(m.spec()),
            Built::Advertising(m) => Some(m.spec()),
            Built::Team(t) => Some(t.spec()),
            Built::Circle(c) => Some(c.spec()),
            _ => None,
        }
    }
}

impl GameBlock {
    pub fn build(&self) -> naeq_core::Result<Built> {
        use naeq_core::Error;
        Ok(match self.clone() {
            GameBlock::MotivatingExample => Built::Price(LinearPriceMarket::motivating_example()),
            GameBlock::LinearPrice { a, b, c, w } => {
                let n = a.len();
                let w = w.unwrap_or_else(|| vec![1.0 / n.max(1) as f64; n]);
                Built::Price(LinearPriceMarket::new(a, b, c, w)?)
            }
            GameBlock::SymmetricPrice { n, a, b, c } => {
                Built::Price(LinearPriceMarket::symmetric(n, a, b, c)?)
            }
            GameBlock::Advertising { a, b, c, p } => {
                Built::Advertising(AdvertisingMarket::new(a, b, c, p)?)
            }
            GameBlock::TeamProduction { n, theta, gamma } => {
                Built::Team(TeamProductionSpec::new(n, theta, gamma)?)
            }
            GameBlock::Circle { intercept, epsilon } => Built::Circle(CircleGame::new(intercept, epsilon)?),
            GameBlock::Merger { a, b, c } => Built::Merger(MergerScenario::new(a, b, c)?),
            GameBlock::DiscountExperiment {
                a,
                b,
                c,
                p_low,
                p_high,
                mu_low,
                gamma,
                rho,
                samples,
            } => {
                if samples < 2 {
                    return Err(Error::InvalidParameter("need at least 2 samples".into()));
                }
                let e = DiscountExperiment {
                    a,
                    b,
                    c,
                    p_low,
                    p_high,
                    mu_low,
                    gamma,
                    rho,
                    samples,
                    seed: 0,
                };
                e.validate()?;
                Built::Discount(e)
            }
            GameBlock::AdTargeting {
                mu,
                x_low,
                x_high,
                horizon,
                batches,
                policy,
            } => {
                let e = AdTargetingExperiment {
                    mu,
                    x_low,
                    x_high,
                    horizon,
                    seed: 0,
                    policy,
                    batches,
                };
                e.validate()?;
                Built::AdTargeting(e)
            }
            GameBlock::ShockDiscount { dx, eps } => {
                let s = ShockDiscountSpec { dx, eps };
                naeq_core::shock_discount_alpha(&s)?;
                Built::Shock(s)
            }
        })
    }
}

/// Parses a scenario, reporting the line and column of syntax and schema
/// errors.
pub fn parse(text: &str, path: &Path) -> Result<ScenarioConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn field(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.into(),
        message: message.into(),
    }
}

/// Decodes and builds a game block; constructor errors are reported
/// against `at`.
pub fn build_game(value: &Value, at: &str) -> Result<(GameBlock, Built), CliError> {
    let block: GameBlock = serde_json::from_value(value.clone()).map_err(|e| field(at, e.to_string()))?;
    let built = block.build().map_err(|e| field(at, e.to_string()))?;
    Ok((block, built))
}

/// Every bias profile named by the spec, checked against `n`.
pub fn profiles(spec: &AlphaSpec, n: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let mut out = Vec::new();
    if let Some(list) = &spec.profiles {
        for (k, p) in list.iter().enumerate() {
            if p.len() != n {
                return Err(field(
                    format!("alphas.profiles[{k}]"),
                    format!("expected {n} entries, found {}", p.len()),
                ));
            }
            out.push(p.clone());
        }
    }
    if let Some(grid) = &spec.grid {
        if grid.is_empty() {
            return Err(field("alphas.grid", "grid is empty"));
        }
        let total = grid.len().checked_pow(n as u32).filter(|&t| t <= 4096);
        if total.is_none() {
            return Err(field("alphas.grid", "more than 4096 profiles"));
        }
        let mut acc: Vec<Vec<f64>> = vec![Vec::new()];
        for _ in 0..n {
            acc = acc
                .into_iter()
                .flat_map(|p| {
                    grid.iter().map(move |&a| {
                        let mut q = p.clone();
                        q.push(a);
                        q
                    })
                })
                .collect();
        }
        out.extend(acc);
    }
    for (k, p) in out.iter().enumerate() {
        if p.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(field(format!("alphas[{k}]"), "biases must be positive and finite"));
        }
    }
    if out.is_empty() {
        return Err(field("alphas", "no bias profiles given"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_expands_in_row_major_order() {
        let spec = AlphaSpec {
            grid: Some(vec![0.6, 1.0]),
            profiles: None,
        };
        let p = profiles(&spec, 2).unwrap();
        assert_eq!(p, vec![vec![0.6, 0.6], vec![0.6, 1.0], vec![1.0, 0.6], vec![1.0, 1.0]]);
    }

    #[test]
    fn parse_error_has_position() {
        let e = parse("{\n \"name\": 3\n}", Path::new("x.json")).unwrap_err();
        match e {
            CliError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_game_field_is_rejected() {
        let v = serde_json::json!({"kind": "merger", "a": 20, "b": 1, "c": 0.5, "d": 1});
        assert!(build_game(&v, "game").is_err());
    }
}
