//! Naive analytics equilibria: bias profiles from which no player gains by
//! hiring a differently biased analyst, anticipating re-equilibration.

mod classify;
mod constrained;
mod leader;
mod verify;

pub use classify::{classify_directions, Check, Classification, ParetoCheck, ParetoRelation};
pub use constrained::{constrained_equilibrium, ConstrainedEquilibrium};
pub use leader::{stackelberg_best, StackelbergResult};
pub use verify::{
    certify, slope_identity_residuals, verify_nae, SlopeIdentityTerm, Deviation, DeviationGrid, NaeVerdict,
};

use serde::{Deserialize, Serialize};

use crate::audit::{audit_assumptions, AuditReport, SamplingPlan};
use crate::bias::{BiasFunction, BiasProfile};
use crate::equilibrium::{alpha_eq, default_start, SolverSettings};
use crate::error::{Error, Result};
use crate::game::{GameSpec, StrategyProfile};
use constrained::raw_implied_alpha;
use leader::Leader;

/// What to do with the assumption audit before solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMode {
    /// Refuse to solve when an assumption fails.
    Require,
    /// Solve anyway and record a warning.
    Warn,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NaeSettings {
    /// Settings for every inner alpha- and constrained-equilibrium solve.
    pub inner: SolverSettings,
    pub damping: f64,
    pub tolerance: f64,
    pub max_outer: usize,
    /// Truncation of the bias domain used while solving.
    pub alpha_bounds: (f64, f64),
    pub bias: BiasFunction,
    pub initial_alpha: Option<Vec<f64>>,
    /// Grid size of the leader's coarse scan.
    pub scan_points: usize,
    /// Follow the leader optimum locally after the first outer iteration.
    pub local_search: bool,
    /// Relative step for response slopes `d x_j / d x_i`.
    pub slope_step: f64,
    /// Consecutive clipped outer iterations before giving up.
    pub clip_patience: usize,
    pub audit: AuditMode,
    pub audit_plan: SamplingPlan,
    /// Run deviation-grid verification and the derived diagnostics.
    pub certify: bool,
    pub deviation_grid: DeviationGrid,
}

impl Default for NaeSettings {
    fn default() -> Self {
        Self {
            inner: SolverSettings::default(),
            damping: 0.5,
            tolerance: 1e-8,
            max_outer: 500,
            alpha_bounds: (0.05, 20.0),
            bias: BiasFunction::default(),
            initial_alpha: None,
            scan_points: 33,
            local_search: true,
            slope_step: 1e-4,
            clip_patience: 25,
            audit: AuditMode::Require,
            audit_plan: SamplingPlan::default(),
            certify: true,
            deviation_grid: DeviationGrid::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NaeMethod {
    ClosedForm,
    Generic,
}

/// Unbiased Nash equilibrium used as the comparison point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashReference {
    pub x: StrategyProfile,
    pub demands: Vec<f64>,
    pub profits: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaeReport {
    pub method: NaeMethod,
    pub alpha_star: BiasProfile,
    pub x_star: StrategyProfile,
    pub demands: Vec<f64>,
    pub profits: Vec<f64>,
    pub nash_reference: NashReference,
    /// Unbiased best reply to the opponents' NAE strategies, per player.
    pub unbiased_replies: Vec<f64>,
    /// Per-player residual of the bias characterization via response slopes.
    pub slope_identity: Vec<SlopeIdentityTerm>,
    /// `pi_i(x*)` minus the best leader payoff found, per player.
    pub stackelberg_gaps: Vec<f64>,
    /// `|x_i* - X_i^SL|` per player.
    pub leader_distance: Vec<f64>,
    pub verification: Option<NaeVerdict>,
    pub classification: Option<Classification>,
    pub audit: Option<AuditReport>,
    pub outer_iterations: usize,
    /// Bias profile after every outer iteration.
    pub trajectory: Vec<Vec<f64>>,
    /// Distinct alpha*-equilibria found by multi-start.
    pub fixed_points: Vec<StrategyProfile>,
    pub warnings: Vec<String>,
}

impl NaeReport {
    pub fn slope_identity_residual(&self) -> Vec<f64> {
        self.slope_identity.iter().map(|c| c.relative).collect()
    }

    /// Verified by the deviation grid, with non-negative leader gaps.
    pub fn is_verified(&self, tol: f64) -> bool {
        self.verification.as_ref().is_some_and(|v| v.holds)
            && self.stackelberg_gaps.iter().all(|&g| g >= -tol)
    }
}

/// Builds a report around a known `(alpha, x)` pair.
pub(crate) fn assemble(
    game: &GameSpec,
    method: NaeMethod,
    alpha: BiasProfile,
    x: Vec<f64>,
    settings: &NaeSettings,
) -> Result<NaeReport> {
    let n = game.n();
    let nash = alpha_eq(game, &settings.bias, &vec![1.0; n], &x, &settings.inner)?.x;
    let unbiased_replies = (0..n)
        .map(|i| crate::reply::best_reply(game, &settings.bias, 1.0, &x, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(NaeReport {
        method,
        alpha_star: alpha,
        demands: game.demands(&x),
        profits: game.payoffs(&x),
        x_star: StrategyProfile(x),
        nash_reference: NashReference {
            demands: game.demands(&nash),
            profits: game.payoffs(&nash),
            x: StrategyProfile(nash),
        },
        unbiased_replies,
        slope_identity: Vec::new(),
        stackelberg_gaps: Vec::new(),
        leader_distance: Vec::new(),
        verification: None,
        classification: None,
        audit: None,
        outer_iterations: 0,
        trajectory: Vec::new(),
        fixed_points: Vec::new(),
        warnings: Vec::new(),
    })
}

/// Outer fixed point: each player's bias is set to the one that makes its
/// Stackelberg-leader strategy a perceived best reply.
pub fn solve_nae(game: &GameSpec, settings: &NaeSettings) -> Result<NaeReport> {
    settings.inner.validate()?;
    if !(settings.damping > 0.0 && settings.damping <= 1.0) {
        return Err(Error::InvalidParameter("outer damping outside (0, 1]".into()));
    }
    let n = game.n();
    let f = settings.bias;
    let (amin, amax) = settings.alpha_bounds;
    let mut warnings = Vec::new();

    let audit = match settings.audit {
        AuditMode::Skip => None,
        mode => {
            let mut plan = settings.audit_plan.clone();
            if plan.start.is_none() {
                plan.start.clone_from(&settings.inner.initial);
            }
            let report = audit_assumptions(game, &f, &plan)?;
            if !report.all_ok() {
                let failed: Vec<String> = report
                    .passed
                    .iter()
                    .filter(|(_, s)| !s.ok())
                    .map(|(a, _)| format!("{a:?}"))
                    .collect();
                let msg = format!("assumptions failed: {}", failed.join(", "));
                if mode == AuditMode::Require {
                    return Err(Error::AuditFailed(msg));
                }
                warnings.push(msg);
            }
            Some(report)
        }
    };

    let mut alpha = match &settings.initial_alpha {
        Some(a) if a.len() == n => a.clone(),
        Some(_) => return Err(Error::InvalidParameter("initial alpha length mismatch".into())),
        None => vec![1.0; n],
    };
    let start = settings
        .inner
        .initial
        .clone()
        .unwrap_or_else(|| default_start(game));
    let mut warm = alpha_eq(game, &f, &alpha, &start, &settings.inner)?.x;
    let mut leaders: Vec<Option<f64>> = vec![None; n];
    let mut clipped_for = vec![0usize; n];
    let mut trajectory = vec![alpha.clone()];
    let mut converged = false;
    let mut iterations = 0;
    let mut gap = f64::INFINITY;

    for it in 0..settings.max_outer {
        iterations = it + 1;
        let mut target = alpha.clone();
        for i in 0..n {
            let mut leader = Leader {
                game,
                f: &f,
                alpha: &alpha,
                i,
                s: &settings.inner,
                warm: warm.clone(),
                anchor: warm.clone(),
                evals: 0,
            };
            let found = match (settings.local_search, leaders[i]) {
                (true, Some(t0)) => leader.local(t0)?,
                _ => None,
            };
            let (t, _) = match found {
                Some(r) => r,
                None => leader.scan(warm[i], settings.scan_points)?,
            };
            let profile = leader.profile(t)?;
            leaders[i] = Some(t);
            let raw = raw_implied_alpha(game, &f, &profile, i)?
                .ok_or(Error::NoInteriorNae { player: i })?;
            let clipped = raw.clamp(amin, amax);
            if clipped != raw {
                clipped_for[i] += 1;
                if clipped_for[i] >= settings.clip_patience {
                    return Err(Error::NoInteriorNae { player: i });
                }
            } else {
                clipped_for[i] = 0;
            }
            target[i] = clipped;
        }
        gap = alpha
            .iter()
            .zip(&target)
            .map(|(a, t)| (a - t).abs())
            .fold(0.0, f64::max);
        for (a, t) in alpha.iter_mut().zip(&target) {
            *a += settings.damping * (t - *a);
        }
        trajectory.push(alpha.clone());
        if let Ok(s) = alpha_eq(game, &f, &alpha, &warm, &settings.inner) {
            warm = s.x;
        }
        log::debug!("outer iteration {it}: alpha {alpha:?}, gap {gap:e}");
        if gap <= settings.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("NAE outer loop did not converge; trajectory {trajectory:?}");
        return Err(Error::NonConvergence {
            iterations,
            residual: gap,
        });
    }
    if alpha.iter().any(|&a| a <= amin || a >= amax) {
        return Err(Error::NoInteriorNae {
            player: alpha.iter().position(|&a| a <= amin || a >= amax).unwrap_or(0),
        });
    }

    let x = alpha_eq(game, &f, &alpha, &warm, &settings.inner)?.x;
    let profile = BiasProfile::with_function(alpha, f)?;
    let mut report = assemble(game, NaeMethod::Generic, profile, x, settings)?;
    report.outer_iterations = iterations;
    report.trajectory = trajectory;
    report.warnings = warnings;
    if settings.certify {
        certify(game, &mut report, settings)?;
    }
    if let Some(a) = audit.as_ref().filter(|_| n > 1) {
        if a.definite_signs().is_ok() {
            let nash = report.nash_reference.x.clone();
            report.classification = Some(classify_directions(game, a, &report, &nash)?);
        } else {
            report
                .warnings
                .push("audit signs are not constant; directions not classified".into());
        }
    }
    report.audit = audit;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markets::LinearPriceMarket;

    fn example() -> GameSpec {
        LinearPriceMarket::motivating_example().spec()
    }

    #[test]
    fn pinned_follower_replies() {
        let g = example();
        let s = SolverSettings::default();
        let a = BiasProfile::new(vec![1.0, 0.6]).unwrap();
        let c = constrained_equilibrium(&g, 0, 25.0, &a, &s).unwrap();
        assert!((c.profile[1] - 25.0).abs() < 1e-8);
        assert!((c.implied_alpha_i.unwrap() - 0.6).abs() < 1e-6);
        let a = BiasProfile::new(vec![1.0, 1.0]).unwrap();
        let c = constrained_equilibrium(&g, 0, 25.0, &a, &s).unwrap();
        assert!((c.profile[1] - 20.0).abs() < 1e-8);
    }

    #[test]
    fn leader_strategies() {
        let g = example();
        let s = NaeSettings::default();
        let r = stackelberg_best(&g, 0, &BiasProfile::new(vec![1.0, 0.6]).unwrap(), &s).unwrap();
        assert!((r.x_i - 25.0).abs() < 1e-6, "{}", r.x_i);
        assert!((r.value - 375.0).abs() < 1e-6);
        let r = stackelberg_best(&g, 0, &BiasProfile::new(vec![1.0, 1.0]).unwrap(), &s).unwrap();
        assert!((r.x_i - 28.0 / 1.36).abs() < 1e-6, "{}", r.x_i);
    }

    #[test]
    fn deviation_verdicts() {
        let g = example();
        let s = SolverSettings::default();
        let grid = DeviationGrid::default();
        let a = BiasProfile::new(vec![0.6, 0.6]).unwrap();
        assert!(verify_nae(&g, &a, &[25.0, 25.0], &grid, &s).unwrap().holds);
        let ne = 20.0 / 1.2;
        let v = verify_nae(&g, &BiasProfile::unbiased(2), &[ne, ne], &grid, &s).unwrap();
        assert!(!v.holds);
        assert!(v.worst.unwrap().profit > 287.0);
    }

    #[test]
    fn motivating_nae() {
        let r = solve_nae(&example(), &NaeSettings::default()).unwrap();
        for i in 0..2 {
            assert!((r.alpha_star[i] - 0.6).abs() < 1e-4, "{:?}", r.alpha_star);
            assert!((r.x_star[i] - 25.0).abs() < 1e-6, "{:?}", r.x_star);
            assert!(r.slope_identity[i].relative < 1e-4);
        }
        assert!(r.is_verified(1e-6));
        let c = r.classification.unwrap();
        assert!(c.reply_direction.holds && c.bias_direction.holds);
        assert_eq!(c.pareto.holds, Some(true));
    }
}
