//! (x_i, alpha_-i)-equilibria: player i is pinned, the others best reply.

use serde::{Deserialize, Serialize};

use crate::bias::{BiasFunction, BiasProfile};
use crate::calculus::{demand_partial, marginal_slope, profit_partials};
use crate::equilibrium::{default_start, SolverSettings, System};
use crate::error::{Error, Result};
use crate::game::{GameSpec, StrategyProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedEquilibrium {
    pub pinned_player: usize,
    pub pinned_strategy: f64,
    pub profile: StrategyProfile,
    /// Bias under which the pinned strategy is a perceived best reply.
    pub implied_alpha_i: Option<f64>,
}

pub(crate) fn solve_pinned(
    game: &GameSpec,
    f: &BiasFunction,
    alpha: &[f64],
    i: usize,
    xi: f64,
    start: &[f64],
    s: &SolverSettings,
) -> Result<Vec<f64>> {
    let mut x0 = start.to_vec();
    x0[i] = xi;
    let sys = System {
        game,
        f,
        alpha,
        pinned: Some(i),
    };
    // Leader payoffs are differenced, so follower noise must sit well below
    // the difference step.
    let x = sys.solve(&x0, s)?.x;
    Ok(sys.refine(x, s.tolerance * 1e-4))
}

/// The bias solving player i's perceived FOC at `x`, before any domain check.
pub(crate) fn raw_implied_alpha(game: &GameSpec, f: &BiasFunction, x: &[f64], i: usize) -> Result<Option<f64>> {
    let q = game.demand(i, x);
    let (dx, dq) = profit_partials(game, i, x[i], q)?;
    let s = demand_partial(game, i, i, x)?;
    Ok(f.invert_foc(dx, dq, s))
}

/// Implied bias if it lies in the domain and satisfies the perceived SOC.
pub(crate) fn implied_alpha(game: &GameSpec, f: &BiasFunction, x: &[f64], i: usize) -> Result<Option<f64>> {
    let Some(a) = raw_implied_alpha(game, f, x, i)? else {
        return Ok(None);
    };
    if !f.in_domain(a) {
        return Ok(None);
    }
    let soc = marginal_slope(game, f, a, x, i, i)?;
    Ok((soc < 0.0).then_some(a))
}

/// Solves the biased FOCs of every player except `i`, whose strategy is
/// fixed at `x_i`. Entry `i` of `alpha` is ignored.
pub fn constrained_equilibrium(
    game: &GameSpec,
    i: usize,
    x_i: f64,
    alpha: &BiasProfile,
    settings: &SolverSettings,
) -> Result<ConstrainedEquilibrium> {
    settings.validate()?;
    let n = game.n();
    if i >= n || alpha.len() != n {
        return Err(Error::InvalidParameter("player index or bias length mismatch".into()));
    }
    let iv = game.interval(i);
    if !x_i.is_finite() || !iv.contains(x_i) {
        return Err(Error::OutOfDomain {
            player: i,
            value: x_i,
            lo: iv.lo,
            hi: iv.hi,
        });
    }
    let start = settings.initial.clone().unwrap_or_else(|| default_start(game));
    let f = alpha.function();
    let x = solve_pinned(game, f, alpha, i, x_i, &start, settings)?;
    let implied = implied_alpha(game, f, &x, i)?;
    Ok(ConstrainedEquilibrium {
        pinned_player: i,
        pinned_strategy: x_i,
        profile: StrategyProfile(x),
        implied_alpha_i: implied,
    })
}
