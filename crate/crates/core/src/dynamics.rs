//! Two adjustment stories: prices nudged along perceived marginal profit
//! within a period, and firms hiring and firing analysts between periods.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bias::BiasProfile;
use crate::calculus::{demand_partial, perceived_marginal_profit};
use crate::equilibrium::{default_start, solve_alpha_equilibrium, SolverSettings};
use crate::error::{Error, Result};
use crate::game::{GameKind, GameSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateRule {
    /// `x_i += step * perceived marginal profit`, projected to the interval.
    PerceivedGradient,
    /// `x_i += step * x_i * (1 - perceived elasticity)`: raise the price
    /// while demand looks inelastic, cut it while it looks elastic.
    ElasticityThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdjustmentConfig {
    pub step: f64,
    pub max_steps: usize,
    pub tolerance: f64,
    pub initial: Option<Vec<f64>>,
    pub rule: UpdateRule,
    /// Largest admissible sup-norm of an iterate.
    pub divergence_bound: f64,
}

impl Default for AdjustmentConfig {
    fn default() -> Self {
        Self {
            step: 0.1,
            max_steps: 100_000,
            tolerance: 1e-6,
            initial: None,
            rule: UpdateRule::PerceivedGradient,
            divergence_bound: 1e9,
        }
    }
}

impl AdjustmentConfig {
    pub fn validate(&self, game: &GameSpec) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter("adjustment step must be positive".into()));
        }
        if !(self.tolerance > 0.0) || !(self.divergence_bound > 0.0) || self.max_steps == 0 {
            return Err(Error::InvalidParameter(
                "tolerance, divergence bound and step budget must be positive".into(),
            ));
        }
        if self.rule == UpdateRule::ElasticityThreshold && game.kind() != GameKind::LinearPrice {
            return Err(Error::InvalidParameter(
                "the elasticity rule applies to price games only".into(),
            ));
        }
        if let Some(x) = &self.initial {
            game.check_profile(x)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentTrajectory {
    pub path: Vec<Vec<f64>>,
    pub steps: usize,
    /// True when the endpoint lies within tolerance of an alpha-equilibrium.
    pub converged: bool,
    /// Alpha-equilibrium found from the endpoint, if any.
    pub equilibrium: Option<Vec<f64>>,
    pub distance: f64,
}

fn direction(game: &GameSpec, bias: &BiasProfile, x: &[f64], i: usize, rule: UpdateRule) -> Result<f64> {
    match rule {
        UpdateRule::PerceivedGradient => perceived_marginal_profit(game, bias, x, i),
        UpdateRule::ElasticityThreshold => {
            let q = game.demand(i, x);
            if q <= 0.0 {
                return Err(Error::NonPositiveDemand { player: i, demand: q });
            }
            let s = bias.function().apply(demand_partial(game, i, i, x)?, bias[i]);
            let eta = -s * x[i] / q;
            Ok(x[i] * (1.0 - eta))
        }
    }
}

/// Iterates the update rule until the move is negligible, then checks the
/// endpoint against an alpha-equilibrium solved from it.
pub fn run_adjustment(
    game: &GameSpec,
    bias: &BiasProfile,
    cfg: &AdjustmentConfig,
) -> Result<AdjustmentTrajectory> {
    cfg.validate(game)?;
    if bias.len() != game.n() {
        return Err(Error::InvalidParameter("bias profile length mismatch".into()));
    }
    let n = game.n();
    let mut x = cfg.initial.clone().unwrap_or_else(|| default_start(game));
    let mut path = vec![x.clone()];
    let mut steps = 0;
    while steps < cfg.max_steps {
        let mut next = x.clone();
        for i in 0..n {
            let d = direction(game, bias, &x, i, cfg.rule)?;
            next[i] = game.interval(i).clamp(x[i] + cfg.step * d);
        }
        steps += 1;
        let norm = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !norm.is_finite() || norm > cfg.divergence_bound {
            return Err(Error::Divergence { step: steps, norm });
        }
        let moved = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
            .fold(0.0, f64::max);
        x = next;
        path.push(x.clone());
        if moved <= 1e-3 * cfg.tolerance {
            break;
        }
    }
    let settings = SolverSettings {
        initial: Some(x.clone()),
        ..SolverSettings::default()
    };
    let eq = solve_alpha_equilibrium(game, bias, &settings).ok().map(|r| r.x.0);
    let distance = eq.as_ref().map_or(f64::INFINITY, |e| {
        e.iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
            .fold(0.0, f64::max)
    });
    Ok(AdjustmentTrajectory {
        path,
        steps,
        converged: distance <= cfg.tolerance,
        equilibrium: eq,
        distance,
    })
}

/// Where new analysts come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum CandidatePool {
    /// A replacement is drawn uniformly from the listed biases.
    Discrete { values: Vec<f64> },
    /// A replacement perturbs the incumbent by a normal step, clamped to
    /// `[lo, hi]`; occupancy is counted on bins of width `bin`.
    Interval { lo: f64, hi: f64, mutation: f64, bin: f64 },
}

/// Chance that a firm replaces its analyst at a review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum ReplacementProbability {
    Constant { p: f64 },
    /// `base * logistic(sharpness * (avg - profit) / |avg|)`, with `avg` the
    /// firm's own trailing average profit.
    Logistic { base: f64, sharpness: f64 },
}

impl ReplacementProbability {
    pub fn eval(&self, profit: f64, trailing: f64) -> f64 {
        match *self {
            Self::Constant { p } => p,
            Self::Logistic { base, sharpness } => {
                let z = sharpness * (trailing - profit) / trailing.abs().max(1e-12);
                base / (1.0 + (-z).exp())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplacementConfig {
    pub pool: CandidatePool,
    /// Periods between reviews.
    pub review_period: usize,
    pub probability: ReplacementProbability,
    /// Periods in the trailing profit average.
    pub window: usize,
    pub revert_on_worse: bool,
    pub horizon: usize,
    pub seed: u64,
    pub initial: Option<Vec<f64>>,
    pub solver: SolverSettings,
}

impl Default for ReplacementConfig {
    fn default() -> Self {
        Self {
            pool: CandidatePool::Discrete { values: vec![0.6, 1.0] },
            review_period: 1,
            probability: ReplacementProbability::Logistic {
                base: 0.2,
                sharpness: 50.0,
            },
            window: 10,
            revert_on_worse: true,
            horizon: 10_000,
            seed: 0,
            initial: None,
            solver: SolverSettings::default(),
        }
    }
}

impl ReplacementConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        match &self.pool {
            CandidatePool::Discrete { values } => {
                if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return bad("candidate pool must hold positive biases");
                }
            }
            CandidatePool::Interval { lo, hi, mutation, bin } => {
                if !(*lo > 0.0 && lo < hi && hi.is_finite() && *mutation > 0.0 && *bin > 0.0) {
                    return bad("need 0 < lo < hi, mutation > 0 and bin > 0");
                }
            }
        }
        let p_ok = match self.probability {
            ReplacementProbability::Constant { p } => (0.0..=1.0).contains(&p),
            ReplacementProbability::Logistic { base, sharpness } => {
                (0.0..=1.0).contains(&base) && sharpness >= 0.0 && sharpness.is_finite()
            }
        };
        if !p_ok {
            return bad("replacement probability must lie in [0, 1]");
        }
        if self.review_period == 0 || self.window == 0 || self.horizon < self.review_period {
            return bad("need review period >= 1, window >= 1 and horizon >= one review period");
        }
        if let Some(a) = &self.initial {
            if a.len() != n || a.iter().any(|v| !(*v > 0.0)) {
                return bad("initial biases must be positive, one per player");
            }
        }
        Ok(())
    }

    fn start(&self, n: usize) -> Vec<f64> {
        if let Some(a) = &self.initial {
            return a.clone();
        }
        let a = match &self.pool {
            CandidatePool::Discrete { values } => {
                if values.contains(&1.0) {
                    1.0
                } else {
                    values[0]
                }
            }
            CandidatePool::Interval { lo, hi, .. } => 1.0f64.clamp(*lo, *hi),
        };
        vec![a; n]
    }

    fn draw(&self, current: f64, rng: &mut ChaCha8Rng) -> f64 {
        match &self.pool {
            CandidatePool::Discrete { values } => values[rng.random_range(0..values.len())],
            CandidatePool::Interval { lo, hi, mutation, .. } => {
                let z: f64 = rng.sample(StandardNormal);
                (current + mutation * z).clamp(*lo, *hi)
            }
        }
    }

    fn bin(&self, alpha: &[f64]) -> Vec<f64> {
        match &self.pool {
            CandidatePool::Discrete { .. } => alpha.to_vec(),
            CandidatePool::Interval { bin, .. } => alpha.iter().map(|a| (a / bin).round() * bin).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: usize,
    pub alpha: Vec<f64>,
    /// Empty when the inner solve failed.
    pub x: Vec<f64>,
    pub profits: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplacementRun {
    pub path: Vec<PeriodRecord>,
    /// Bias profiles and period counts, most frequent first.
    pub occupancy: Vec<(Vec<f64>, usize)>,
    pub modal: Vec<f64>,
    pub modal_share: f64,
    pub invalid_periods: usize,
    pub replacements: usize,
    pub reverts: usize,
}

struct Pending {
    old: f64,
    profit_before: f64,
}

type Outcome = (Vec<f64>, Vec<f64>);

/// Plays the alpha-equilibrium each period and lets firms swap analysts.
pub fn run_replacement(game: &GameSpec, cfg: &ReplacementConfig) -> Result<ReplacementRun> {
    let n = game.n();
    cfg.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut alpha = cfg.start(n);
    // Bias bits -> (x, profits), or None when the solve failed.
    let mut memo: HashMap<Vec<u64>, Option<Outcome>> = HashMap::new();
    let mut history: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut pending: Vec<Option<Pending>> = (0..n).map(|_| None).collect();
    let mut path = Vec::with_capacity(cfg.horizon);
    let mut counts: HashMap<Vec<u64>, (Vec<f64>, usize)> = HashMap::new();
    let (mut invalid, mut replacements, mut reverts) = (0, 0, 0);

    for period in 0..cfg.horizon {
        let key: Vec<u64> = alpha.iter().map(|a| a.to_bits()).collect();
        let outcome = memo
            .entry(key)
            .or_insert_with(|| {
                let bias = BiasProfile::new(alpha.clone()).ok()?;
                match solve_alpha_equilibrium(game, &bias, &cfg.solver) {
                    Ok(r) => Some((r.x.0, r.profits)),
                    Err(e) => {
                        log::debug!("period {period}: inner solve failed at {alpha:?}: {e}");
                        None
                    }
                }
            })
            .clone();
        let Some((x, profits)) = outcome else {
            invalid += 1;
            path.push(PeriodRecord {
                period,
                alpha: alpha.clone(),
                x: Vec::new(),
                profits: Vec::new(),
            });
            continue;
        };
        let binned = cfg.bin(&alpha);
        let bkey: Vec<u64> = binned.iter().map(|a| a.to_bits()).collect();
        counts.entry(bkey).or_insert((binned, 0)).1 += 1;
        path.push(PeriodRecord {
            period,
            alpha: alpha.clone(),
            x,
            profits: profits.clone(),
        });

        let review = (period + 1) % cfg.review_period == 0;
        for i in 0..n {
            let h = &mut history[i];
            let trailing = if h.is_empty() {
                profits[i]
            } else {
                let k = h.len().min(cfg.window);
                h[h.len() - k..].iter().sum::<f64>() / k as f64
            };
            h.push(profits[i]);
            if !review {
                continue;
            }
            if let Some(p) = pending[i].take() {
                if cfg.revert_on_worse && profits[i] < p.profit_before {
                    alpha[i] = p.old;
                    reverts += 1;
                    continue;
                }
            }
            let prob = cfg.probability.eval(profits[i], trailing);
            if rng.random::<f64>() < prob {
                let new = cfg.draw(alpha[i], &mut rng);
                if new != alpha[i] {
                    pending[i] = Some(Pending {
                        old: alpha[i],
                        profit_before: profits[i],
                    });
                    alpha[i] = new;
                    replacements += 1;
                }
            }
        }
    }

    let valid = cfg.horizon - invalid;
    let mut occupancy: Vec<(Vec<f64>, usize)> = counts.into_values().collect();
    occupancy.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
    });
    let (modal, modal_share) = occupancy
        .first()
        .map(|(a, c)| (a.clone(), *c as f64 / valid.max(1) as f64))
        .unwrap_or_default();
    Ok(ReplacementRun {
        path,
        occupancy,
        modal,
        modal_share,
        invalid_periods: invalid,
        replacements,
        reverts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markets::LinearPriceMarket;

    #[test]
    fn logistic_probability_is_decreasing_in_profit() {
        let p = ReplacementProbability::Logistic {
            base: 0.2,
            sharpness: 50.0,
        };
        assert!(p.eval(90.0, 100.0) > p.eval(100.0, 100.0));
        assert!(p.eval(100.0, 100.0) > p.eval(110.0, 100.0));
        assert!((p.eval(100.0, 100.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn elasticity_rule_needs_price_game() {
        let g = crate::markets::TeamProductionSpec::new(2, 10.0, 0.3).unwrap().spec();
        let cfg = AdjustmentConfig {
            rule: UpdateRule::ElasticityThreshold,
            ..Default::default()
        };
        assert!(cfg.validate(&g).is_err());
    }

    #[test]
    fn zero_probability_keeps_initial_profile() {
        let g = LinearPriceMarket::motivating_example().spec();
        let cfg = ReplacementConfig {
            probability: ReplacementProbability::Constant { p: 0.0 },
            horizon: 50,
            ..Default::default()
        };
        let run = run_replacement(&g, &cfg).unwrap();
        assert!(run.path.iter().all(|r| r.alpha == vec![1.0, 1.0]));
        assert_eq!(run.modal_share, 1.0);
    }
}
