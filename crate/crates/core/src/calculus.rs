//! True and perceived marginal profits.
//!
//! The perceived marginal profit of player i is
//! `d pi_i/d x_i + d pi_i/d q_i * f(d q_i/d x_i, alpha_i)`.

use serde::{Deserialize, Serialize};

use crate::bias::{BiasFunction, BiasProfile};
use crate::error::{Error, Result};
use crate::game::{GameSpec, Interval};

/// Step for first derivatives.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Step for second derivatives.
pub fn fd_step2(x: f64) -> f64 {
    f64::EPSILON.powf(0.25) * x.abs().max(1.0)
}

/// Moves `x` at least `h` inside the interval.
pub(crate) fn inside(iv: Interval, x: f64, h: f64) -> f64 {
    if iv.hi - iv.lo <= 2.0 * h {
        return 0.5 * (iv.lo + iv.hi);
    }
    x.max(iv.lo + h).min(iv.hi - h)
}

fn finite(v: f64, player: usize, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteEvaluation { player, what })
    }
}

/// `(d pi_i/d x_i, d pi_i/d q_i)` at own strategy `own` and demand `q`.
pub fn profit_partials(game: &GameSpec, i: usize, own: f64, q: f64) -> Result<(f64, f64)> {
    let (dx, dq) = match game.profit_partials(i, own, q) {
        Some(p) => p,
        None => {
            let hx = fd_step(own);
            let hq = fd_step(q);
            let dx = (game.profit(i, own + hx, q) - game.profit(i, own - hx, q)) / (2.0 * hx);
            let dq = (game.profit(i, own, q + hq) - game.profit(i, own, q - hq)) / (2.0 * hq);
            (dx, dq)
        }
    };
    Ok((
        finite(dx, i, "own partial")?,
        finite(dq, i, "demand margin")?,
    ))
}

/// `d q_i / d x_j` at `x`.
pub fn demand_partial(game: &GameSpec, i: usize, j: usize, x: &[f64]) -> Result<f64> {
    let d = match game.demand_partial(i, j, x) {
        Some(d) => d,
        None => {
            let h = fd_step(x[j]);
            let c = inside(game.interval(j), x[j], h);
            let mut y = x.to_vec();
            y[j] = c + h;
            let up = game.demand(i, &y);
            y[j] = c - h;
            let dn = game.demand(i, &y);
            (up - dn) / (2.0 * h)
        }
    };
    finite(d, i, "demand sensitivity")
}

/// Perceived marginal profit without validation of `x`. Boundary points are
/// evaluated one finite-difference step inside.
pub(crate) fn marginal(
    game: &GameSpec,
    f: &BiasFunction,
    alpha_i: f64,
    x: &[f64],
    i: usize,
) -> Result<f64> {
    let iv = game.interval(i);
    let h = fd_step(x[i]);
    let xi = inside(iv, x[i], h);
    if xi != x[i] {
        let mut y = x.to_vec();
        y[i] = xi;
        return marginal_at(game, f, alpha_i, &y, i);
    }
    marginal_at(game, f, alpha_i, x, i)
}

fn marginal_at(game: &GameSpec, f: &BiasFunction, alpha_i: f64, x: &[f64], i: usize) -> Result<f64> {
    let q = finite(game.demand(i, x), i, "demand")?;
    let (dx, dq) = profit_partials(game, i, x[i], q)?;
    let s = demand_partial(game, i, i, x)?;
    finite(dx + dq * f.apply(s, alpha_i), i, "perceived marginal profit")
}

/// `d/d x_j` of player i's perceived marginal profit (central difference).
pub(crate) fn marginal_slope(
    game: &GameSpec,
    f: &BiasFunction,
    alpha_i: f64,
    x: &[f64],
    i: usize,
    j: usize,
) -> Result<f64> {
    let h = fd_step2(x[j]);
    let c = inside(game.interval(j), x[j], h);
    let mut y = x.to_vec();
    y[j] = c + h;
    let up = marginal(game, f, alpha_i, &y, i)?;
    y[j] = c - h;
    let dn = marginal(game, f, alpha_i, &y, i)?;
    finite((up - dn) / (2.0 * h), i, "perceived second derivative")
}

/// Total effect of `x_j` on player i's payoff, `d pi_i / d x_j` for j != i.
pub(crate) fn externality(game: &GameSpec, x: &[f64], i: usize, j: usize) -> Result<f64> {
    let q = finite(game.demand(i, x), i, "demand")?;
    let (_, dq) = profit_partials(game, i, x[i], q)?;
    Ok(dq * demand_partial(game, i, j, x)?)
}

/// Evaluates the biased first-order condition of player `i` at `x`.
pub fn perceived_marginal_profit(
    game: &GameSpec,
    bias: &BiasProfile,
    x: &[f64],
    i: usize,
) -> Result<f64> {
    game.check_profile(x)?;
    if bias.len() != game.n() {
        return Err(Error::InvalidParameter("bias profile length mismatch".into()));
    }
    marginal(game, bias.function(), bias[i], x, i)
}

/// Perceived second derivative `d/dx_i` of the biased FOC.
pub fn perceived_second_derivative(
    game: &GameSpec,
    bias: &BiasProfile,
    x: &[f64],
    i: usize,
) -> Result<f64> {
    game.check_profile(x)?;
    marginal_slope(game, bias.function(), bias[i], x, i, i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMethod {
    Analytic,
    CentralDifference,
}

/// The terms of player i's first-order condition at a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub player: usize,
    pub own_partial: f64,
    pub demand_margin: f64,
    pub own_sensitivity: f64,
    /// `d q_i / d x_j` for every j; entry i repeats `own_sensitivity`.
    pub cross_sensitivity: Vec<f64>,
    /// `d^2 pi_i / d x_i d x_j` for every j; entry i is the own second derivative.
    pub cross_second: Vec<f64>,
    pub method: DerivativeMethod,
    pub step: f64,
}

pub fn derivative_report(game: &GameSpec, x: &[f64], i: usize) -> Result<DerivativeReport> {
    game.check_profile(x)?;
    let n = game.n();
    let h = fd_step(x[i]);
    let mut y = x.to_vec();
    y[i] = inside(game.interval(i), x[i], h);
    let q = finite(game.demand(i, &y), i, "demand")?;
    let (own_partial, demand_margin) = profit_partials(game, i, y[i], q)?;
    let cross_sensitivity = (0..n)
        .map(|j| demand_partial(game, i, j, &y))
        .collect::<Result<Vec<_>>>()?;
    let f = BiasFunction::default();
    let cross_second = (0..n)
        .map(|j| marginal_slope(game, &f, 1.0, &y, i, j))
        .collect::<Result<Vec<_>>>()?;
    let analytic =
        game.profit_partials(i, y[i], q).is_some() && game.demand_partial(i, i, &y).is_some();
    Ok(DerivativeReport {
        player: i,
        own_partial,
        demand_margin,
        own_sensitivity: cross_sensitivity[i],
        cross_sensitivity,
        cross_second,
        method: if analytic {
            DerivativeMethod::Analytic
        } else {
            DerivativeMethod::CentralDifference
        },
        step: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{CustomGame, Interval};

    fn motivating_fd() -> GameSpec {
        GameSpec::new(CustomGame::new(
            vec![Interval::non_negative(); 2],
            |i, x| 20.0 - x[i] + 0.8 * x[1 - i],
            |_, own, q| own * q,
        ))
        .unwrap()
    }

    #[test]
    fn motivating_marginals_by_differences() {
        let g = motivating_fd();
        let b = BiasProfile::new(vec![0.6, 1.0]).unwrap();
        let v = perceived_marginal_profit(&g, &b, &[25.0, 25.0], 0).unwrap();
        assert!(v.abs() < 1e-6, "{v}");
        let v = perceived_marginal_profit(&g, &b, &[25.0, 25.0], 1).unwrap();
        assert!((v + 10.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn report_terms() {
        let g = motivating_fd();
        let r = derivative_report(&g, &[25.0, 20.0], 0).unwrap();
        assert_eq!(r.method, DerivativeMethod::CentralDifference);
        assert!((r.own_partial - 11.0).abs() < 1e-6);
        assert!((r.demand_margin - 25.0).abs() < 1e-6);
        assert!((r.own_sensitivity + 1.0).abs() < 1e-6);
        assert!((r.cross_sensitivity[1] - 0.8).abs() < 1e-6);
        assert!((r.cross_second[1] - 0.8).abs() < 1e-5);
        assert!((r.cross_second[0] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn boundary_is_evaluated_inside() {
        let g = motivating_fd();
        let b = BiasProfile::unbiased(2);
        let v = perceived_marginal_profit(&g, &b, &[0.0, 0.0], 0).unwrap();
        assert!((v - 20.0).abs() < 1e-4);
        assert!(matches!(
            perceived_marginal_profit(&g, &b, &[-1.0, 0.0], 0),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn non_finite_is_reported() {
        let g = GameSpec::new(CustomGame::new(
            vec![Interval::non_negative()],
            |_, x| 1.0 / (x[0] - 2.0),
            |_, own, q| own * q,
        ))
        .unwrap();
        let b = BiasProfile::unbiased(1);
        // demand is infinite at x = 2
        let r = perceived_marginal_profit(&g, &b, &[2.0], 0);
        assert!(matches!(r, Err(Error::NonFiniteEvaluation { .. })));
    }
}
