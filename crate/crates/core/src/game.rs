//! Game representation: strategy intervals, demand and profit evaluators.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed strategy interval; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "interval [{lo}, {hi}] is empty"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn non_negative() -> Self {
        Self {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn negated(&self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    /// A finite interior point, used when nothing better is known.
    pub fn reference_point(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo + self.lo.abs().max(1.0),
            (false, true) => self.hi - self.hi.abs().max(1.0),
            (false, false) => 0.0,
        }
    }
}

/// Tag for the family a game belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    LinearPrice,
    Advertising,
    TeamProduction,
    CircleExample,
    Custom,
}

/// An n-player game in which each payoff depends on the own strategy and
/// the own demand, `pi_i(x_i, q_i(x))`.
///
/// Analytic derivatives are optional. When absent, central differences
/// are used.
pub trait GameModel: Send + Sync + fmt::Debug {
    fn players(&self) -> usize;
    fn interval(&self, i: usize) -> Interval;
    fn demand(&self, i: usize, x: &[f64]) -> f64;
    fn profit(&self, i: usize, own: f64, demand: f64) -> f64;

    fn kind(&self) -> GameKind {
        GameKind::Custom
    }

    /// `(d pi_i / d x_i, d pi_i / d q_i)` holding the other argument fixed.
    fn profit_partials(&self, _i: usize, _own: f64, _demand: f64) -> Option<(f64, f64)> {
        None
    }

    /// `d q_i / d x_j`.
    fn demand_partial(&self, _i: usize, _j: usize, _x: &[f64]) -> Option<f64> {
        None
    }

    /// True when perceived best replies are affine in opponents' strategies.
    fn affine_best_replies(&self) -> bool {
        matches!(self.kind(), GameKind::LinearPrice | GameKind::CircleExample)
    }
}

/// Shared, immutable handle to a game.
#[derive(Clone)]
pub struct GameSpec {
    model: Arc<dyn GameModel>,
}

impl fmt::Debug for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.model.fmt(f)
    }
}

impl Deref for GameSpec {
    type Target = dyn GameModel;
    fn deref(&self) -> &Self::Target {
        self.model.as_ref()
    }
}

impl GameSpec {
    pub fn new(model: impl GameModel + 'static) -> Result<Self> {
        Self::from_arc(Arc::new(model))
    }

    pub fn from_arc(model: Arc<dyn GameModel>) -> Result<Self> {
        let n = model.players();
        if n == 0 {
            return Err(Error::InvalidParameter("a game needs at least one player".into()));
        }
        for i in 0..n {
            let iv = model.interval(i);
            Interval::new(iv.lo, iv.hi)?;
        }
        Ok(Self { model })
    }

    pub fn n(&self) -> usize {
        self.model.players()
    }

    pub fn intervals(&self) -> Vec<Interval> {
        (0..self.n()).map(|i| self.model.interval(i)).collect()
    }

    pub fn demands(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|i| self.model.demand(i, x)).collect()
    }

    /// Payoff of player `i` at profile `x`.
    pub fn payoff(&self, i: usize, x: &[f64]) -> f64 {
        self.model.profit(i, x[i], self.model.demand(i, x))
    }

    pub fn payoffs(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|i| self.payoff(i, x)).collect()
    }

    pub fn check_profile(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::InvalidParameter(format!(
                "profile has {} entries, game has {} players",
                x.len(),
                self.n()
            )));
        }
        for (i, &xi) in x.iter().enumerate() {
            let iv = self.model.interval(i);
            if !xi.is_finite() || !iv.contains(xi) {
                return Err(Error::OutOfDomain {
                    player: i,
                    value: xi,
                    lo: iv.lo,
                    hi: iv.hi,
                });
            }
        }
        Ok(())
    }
}

/// A point in the strategy box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile(pub Vec<f64>);

impl StrategyProfile {
    pub fn new(game: &GameSpec, x: Vec<f64>) -> Result<Self> {
        game.check_profile(&x)?;
        Ok(Self(x))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for StrategyProfile {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

type DemandFn = dyn Fn(usize, &[f64]) -> f64 + Send + Sync;
type ProfitFn = dyn Fn(usize, f64, f64) -> f64 + Send + Sync;

/// A game assembled from closures. Derivatives come from finite differences.
#[derive(Clone)]
pub struct CustomGame {
    intervals: Vec<Interval>,
    demand: Arc<DemandFn>,
    profit: Arc<ProfitFn>,
}

impl CustomGame {
    pub fn new(
        intervals: Vec<Interval>,
        demand: impl Fn(usize, &[f64]) -> f64 + Send + Sync + 'static,
        profit: impl Fn(usize, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            intervals,
            demand: Arc::new(demand),
            profit: Arc::new(profit),
        }
    }
}

impl fmt::Debug for CustomGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomGame")
            .field("intervals", &self.intervals)
            .finish_non_exhaustive()
    }
}

impl GameModel for CustomGame {
    fn players(&self) -> usize {
        self.intervals.len()
    }
    fn interval(&self, i: usize) -> Interval {
        self.intervals[i]
    }
    fn demand(&self, i: usize, x: &[f64]) -> f64 {
        (self.demand)(i, x)
    }
    fn profit(&self, i: usize, own: f64, demand: f64) -> f64 {
        (self.profit)(i, own, demand)
    }
}

/// The game with every strategy replaced by its negation.
#[derive(Debug, Clone)]
pub struct Relabeled {
    inner: GameSpec,
}

impl Relabeled {
    fn flip(x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| -v).collect()
    }
}

impl GameModel for Relabeled {
    fn players(&self) -> usize {
        self.inner.n()
    }
    fn interval(&self, i: usize) -> Interval {
        self.inner.interval(i).negated()
    }
    fn demand(&self, i: usize, x: &[f64]) -> f64 {
        self.inner.demand(i, &Self::flip(x))
    }
    fn profit(&self, i: usize, own: f64, demand: f64) -> f64 {
        self.inner.profit(i, -own, demand)
    }
    fn kind(&self) -> GameKind {
        self.inner.kind()
    }
    fn profit_partials(&self, i: usize, own: f64, demand: f64) -> Option<(f64, f64)> {
        self.inner
            .profit_partials(i, -own, demand)
            .map(|(dx, dq)| (-dx, dq))
    }
    fn demand_partial(&self, i: usize, j: usize, x: &[f64]) -> Option<f64> {
        self.inner.demand_partial(i, j, &Self::flip(x)).map(|d| -d)
    }
    fn affine_best_replies(&self) -> bool {
        self.inner.affine_best_replies()
    }
}

/// Relabels strategies `x_i -> -x_i`.
pub fn negate_relabel(game: &GameSpec) -> GameSpec {
    GameSpec {
        model: Arc::new(Relabeled {
            inner: game.clone(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> GameSpec {
        GameSpec::new(CustomGame::new(
            vec![Interval::non_negative(); 2],
            |i, x| 20.0 - x[i] + 0.8 * x[1 - i],
            |_, own, q| own * q,
        ))
        .unwrap()
    }

    #[test]
    fn relabel_flips_intervals_and_preserves_payoffs() {
        let g = toy();
        let r = negate_relabel(&g);
        assert_eq!(r.interval(0), Interval::new(f64::NEG_INFINITY, 0.0).unwrap());
        let x = [12.0, 7.0];
        let y = [-12.0, -7.0];
        assert_eq!(g.payoffs(&x), r.payoffs(&y));
    }

    #[test]
    fn profile_validation() {
        let g = toy();
        assert!(StrategyProfile::new(&g, vec![1.0, 2.0]).is_ok());
        assert!(matches!(
            StrategyProfile::new(&g, vec![-1.0, 2.0]),
            Err(Error::OutOfDomain { player: 0, .. })
        ));
        assert!(StrategyProfile::new(&g, vec![1.0]).is_err());
    }

    #[test]
    fn empty_interval_rejected() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(GameSpec::new(CustomGame::new(vec![], |_, _| 0.0, |_, _, _| 0.0)).is_err());
    }
}
