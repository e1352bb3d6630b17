//! Sign predictions for the direction of the NAE bias and strategies,
//! compared with what the solver found.

use serde::{Deserialize, Serialize};

use super::NaeReport;
use crate::audit::{AuditReport, Sign};
use crate::error::Result;
use crate::game::GameSpec;

const MARGIN: f64 = 1e-8;

/// A predicted sign against the per-player observed signs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub predicted: Sign,
    pub observed: Vec<Sign>,
    pub holds: bool,
}

impl Check {
    fn new(predicted: Sign, observed: Vec<Sign>) -> Self {
        let holds = observed.iter().all(|&s| s == predicted);
        Self {
            predicted,
            observed,
            holds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParetoRelation {
    /// Every player earns strictly more at the NAE.
    NaeDominates,
    /// Every player earns strictly more at the Nash equilibrium.
    NashDominates,
    Equal,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoCheck {
    pub observed: ParetoRelation,
    /// `None` when no prediction applies.
    pub predicted: Option<ParetoRelation>,
    /// Direction of `x* - x^NE` when a prediction applies.
    pub strategy_direction: Option<Check>,
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub comp: Sign,
    pub extr: Sign,
    pub partial: Sign,
    /// `sign(x_i* - BR_i(x_-i*))` against `sign(comp * extr)`.
    pub reply_direction: Check,
    /// `sign(alpha_i* - 1)` against `-sign(partial * extr * comp)`.
    pub bias_direction: Check,
    pub pareto: ParetoCheck,
}

fn observed(a: &[f64], b: &[f64]) -> Vec<Sign> {
    a.iter()
        .zip(b)
        .map(|(x, y)| Sign::of(x - y, MARGIN * x.abs().max(y.abs()).max(1.0)))
        .collect()
}

fn symmetric(v: &[f64]) -> bool {
    v.iter().all(|a| (a - v[0]).abs() <= MARGIN * v[0].abs().max(1.0))
}

/// Compares the solver output with the sign predictions implied by the
/// audited signs of complementarity, externalities and the own partial.
pub fn classify_directions(
    game: &GameSpec,
    audit: &AuditReport,
    nae: &NaeReport,
    nash: &[f64],
) -> Result<Classification> {
    let (comp, extr, partial) = audit.definite_signs()?;
    let x = nae.x_star.as_slice();
    let reply_direction = Check::new(comp.product(extr), observed(x, &nae.unbiased_replies));
    let ones = vec![1.0; x.len()];
    let bias_direction = Check::new(
        partial.product(extr).product(comp).negate(),
        observed(&nae.alpha_star, &ones),
    );

    let pi_star = &nae.profits;
    let pi_ne = game.payoffs(nash);
    let gains = observed(pi_star, &pi_ne);
    let observed_rel = if gains.iter().all(|&s| s == Sign::Positive) {
        ParetoRelation::NaeDominates
    } else if gains.iter().all(|&s| s == Sign::Negative) {
        ParetoRelation::NashDominates
    } else if gains.iter().all(|&s| s == Sign::Zero) {
        ParetoRelation::Equal
    } else {
        ParetoRelation::Mixed
    };
    let (predicted, strategy_direction) = match comp {
        Sign::Positive => (
            Some(ParetoRelation::NaeDominates),
            Some(Check::new(extr, observed(x, nash))),
        ),
        Sign::Negative if symmetric(&nae.alpha_star) && symmetric(x) => {
            (Some(ParetoRelation::NashDominates), None)
        }
        _ => (None, None),
    };
    let holds = predicted.map(|p| p == observed_rel && strategy_direction.as_ref().is_none_or(|c| c.holds));
    Ok(Classification {
        comp,
        extr,
        partial,
        reply_direction,
        bias_direction,
        pareto: ParetoCheck {
            observed: observed_rel,
            predicted,
            strategy_direction,
            holds,
        },
    })
}
