//! Checks of a candidate NAE: unilateral bias deviations, response-slope
//! characterization of the bias and leader-strategy comparisons.

use serde::{Deserialize, Serialize};

use super::constrained::solve_pinned;
use super::leader::stackelberg_best;
use super::{NaeReport, NaeSettings};
use crate::bias::BiasProfile;
use crate::calculus::{demand_partial, inside};
use crate::equilibrium::{alpha_eq, default_start, SolverSettings};
use crate::error::{Error, Result};
use crate::game::{GameSpec, StrategyProfile};

/// Bias values each player tries as a unilateral deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviationGrid {
    pub alphas: Vec<f64>,
    /// Relative payoff gain above which a deviation counts as profitable.
    pub tolerance: f64,
}

impl DeviationGrid {
    /// `points` log-spaced values on `[lo, hi]`.
    pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && points >= 2) {
            return Err(Error::InvalidParameter("deviation grid needs 0 < lo < hi and 2+ points".into()));
        }
        let step = (hi / lo).ln() / (points - 1) as f64;
        Ok(Self {
            alphas: (0..points).map(|k| lo * (step * k as f64).exp()).collect(),
            tolerance: 1e-7,
        })
    }
}

impl Default for DeviationGrid {
    fn default() -> Self {
        Self::log_spaced(0.05, 5.0, 101).expect("valid default grid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub player: usize,
    pub alpha: f64,
    pub x: Vec<f64>,
    pub profit: f64,
    /// Payoff gain relative to `max(1, |pi_i(x*)|)`.
    pub relative_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaeVerdict {
    pub holds: bool,
    pub worst_violation: f64,
    pub worst: Option<Deviation>,
    /// `(player, alpha, error)` for deviations whose equilibrium was not found.
    pub inconclusive: Vec<(usize, f64, String)>,
    pub checked: usize,
}

/// Re-solves the alpha-equilibrium for every unilateral deviation on the grid.
pub fn verify_nae(
    game: &GameSpec,
    alpha: &BiasProfile,
    x: &[f64],
    grid: &DeviationGrid,
    settings: &SolverSettings,
) -> Result<NaeVerdict> {
    let n = game.n();
    if alpha.len() != n || x.len() != n {
        return Err(Error::InvalidParameter("bias or profile length mismatch".into()));
    }
    let f = alpha.function();
    let mut worst: Option<Deviation> = None;
    let mut inconclusive = Vec::new();
    let mut checked = 0;
    for i in 0..n {
        let base = game.payoff(i, x);
        let scale = base.abs().max(1.0);
        let mut warm = x.to_vec();
        for &a in &grid.alphas {
            if !f.in_domain(a) {
                continue;
            }
            let mut dev = alpha.to_vec();
            dev[i] = a;
            checked += 1;
            match alpha_eq(game, f, &dev, &warm, settings) {
                Ok(s) => {
                    let profit = game.payoff(i, &s.x);
                    let rel = (profit - base) / scale;
                    if worst.as_ref().is_none_or(|w| rel > w.relative_gain) {
                        worst = Some(Deviation {
                            player: i,
                            alpha: a,
                            x: s.x.clone(),
                            profit,
                            relative_gain: rel,
                        });
                    }
                    warm = s.x;
                }
                Err(e) => inconclusive.push((i, a, e.to_string())),
            }
        }
    }
    let worst_violation = worst.as_ref().map_or(f64::NEG_INFINITY, |w| w.relative_gain);
    Ok(NaeVerdict {
        holds: worst_violation <= grid.tolerance && inconclusive.is_empty(),
        worst_violation,
        worst,
        inconclusive,
        checked,
    })
}

/// One player's terms in `f(s, alpha) = s + sum_j (dx_j/dx_i) dq_i/dx_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeIdentityTerm {
    pub player: usize,
    /// `d q_i / d x_i`.
    pub own_sensitivity: f64,
    pub biased: f64,
    /// Response slopes `d x_j / d x_i` of the re-equilibrating opponents.
    pub slopes: Vec<f64>,
    pub indirect: f64,
    pub residual: f64,
    pub relative: f64,
}

/// Residuals of the bias characterization, with response slopes from
/// central differences of constrained equilibria.
pub fn slope_identity_residuals(
    game: &GameSpec,
    alpha: &BiasProfile,
    x: &[f64],
    settings: &NaeSettings,
) -> Result<Vec<SlopeIdentityTerm>> {
    let n = game.n();
    let f = alpha.function();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let h = settings.slope_step * x[i].abs().max(1.0);
        let c = inside(game.interval(i), x[i], h);
        let up = solve_pinned(game, f, alpha, i, c + h, x, &settings.inner)?;
        let dn = solve_pinned(game, f, alpha, i, c - h, x, &settings.inner)?;
        let slopes: Vec<f64> = (0..n)
            .map(|j| if j == i { 1.0 } else { (up[j] - dn[j]) / (2.0 * h) })
            .collect();
        let s = demand_partial(game, i, i, x)?;
        let mut indirect = 0.0;
        let mut size = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            let t = slopes[j] * demand_partial(game, i, j, x)?;
            indirect += t;
            size += t.abs();
        }
        let biased = f.apply(s, alpha[i]);
        let residual = biased - s - indirect;
        let scale = s.abs().max(biased.abs()).max(size).max(f64::MIN_POSITIVE);
        out.push(SlopeIdentityTerm {
            player: i,
            own_sensitivity: s,
            biased,
            slopes,
            indirect,
            residual,
            relative: residual.abs() / scale,
        });
    }
    Ok(out)
}

/// Fills the diagnostic fields of a report: response-slope residuals,
/// leader gaps, deviation verdict and the list of alpha*-equilibria.
pub fn certify(game: &GameSpec, report: &mut NaeReport, settings: &NaeSettings) -> Result<()> {
    let n = game.n();
    let alpha = report.alpha_star.clone();
    let x = report.x_star.0.clone();
    report.slope_identity = slope_identity_residuals(game, &alpha, &x, settings)?;

    let mut leader_settings = settings.clone();
    leader_settings.inner.initial = Some(x.clone());
    report.stackelberg_gaps.clear();
    report.leader_distance.clear();
    for i in 0..n {
        let sl = stackelberg_best(game, i, &alpha, &leader_settings)?;
        report.stackelberg_gaps.push(game.payoff(i, &x) - sl.value);
        report.leader_distance.push((x[i] - sl.x_i).abs());
    }

    report.verification = Some(verify_nae(game, &alpha, &x, &settings.deviation_grid, &settings.inner)?);
    report.fixed_points = fixed_points(game, &alpha, &x, &settings.inner);
    if report.fixed_points.len() > 1 {
        report.warnings.push(format!(
            "{} distinct equilibria at the NAE bias profile",
            report.fixed_points.len()
        ));
    }
    Ok(())
}

/// Distinct alpha-equilibria reached from a spread of starting points.
fn fixed_points(game: &GameSpec, alpha: &BiasProfile, x: &[f64], s: &SolverSettings) -> Vec<StrategyProfile> {
    let f = alpha.function();
    let mut starts = vec![x.to_vec(), default_start(game)];
    for m in [0.25, 0.5, 2.0, 4.0] {
        starts.push(
            x.iter()
                .enumerate()
                .map(|(i, &v)| game.interval(i).clamp(v * m))
                .collect(),
        );
    }
    let mut found: Vec<StrategyProfile> = Vec::new();
    for st in starts {
        let Ok(sol) = alpha_eq(game, f, alpha, &st, s) else {
            continue;
        };
        let dup = found.iter().any(|p| {
            p.iter()
                .zip(&sol.x)
                .all(|(a, b)| (a - b).abs() <= 1e-6 * a.abs().max(1.0))
        });
        if !dup {
            found.push(StrategyProfile(sol.x));
        }
    }
    found
}
