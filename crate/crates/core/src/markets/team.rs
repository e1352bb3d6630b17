//! Team production: every player receives `q = theta (prod_j x_j)^gamma`
//! and pays its own effort, `pi_i = q - x_i`.

use serde::{Deserialize, Serialize};

use crate::bias::BiasProfile;
use crate::equilibrium::SolverSettings;
use crate::error::{Error, Result};
use crate::game::{GameKind, GameModel, GameSpec, Interval, StrategyProfile};
use crate::nae::{solve_nae, AuditMode, NaeReport, NaeSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamProductionSpec {
    pub n: usize,
    pub theta: f64,
    pub gamma: f64,
}

impl TeamProductionSpec {
    pub fn new(n: usize, theta: f64, gamma: f64) -> Result<Self> {
        if n == 0 || !(theta > 0.0) || !(gamma > 0.0) || n as f64 * gamma >= 1.0 {
            return Err(Error::InvalidParameter(
                "need n >= 1, theta > 0 and 0 < n gamma < 1".into(),
            ));
        }
        Ok(Self { n, theta, gamma })
    }

    pub fn spec(&self) -> GameSpec {
        GameSpec::new(self.clone()).expect("validated team")
    }

    fn output(&self, x: &[f64]) -> f64 {
        self.theta * x.iter().map(|v| v.max(0.0).powf(self.gamma)).product::<f64>()
    }

    /// Unbiased best reply `(gamma theta prod_{j != i} x_j^gamma)^(1/(1-gamma))`.
    pub fn best_reply(&self, x: &[f64], i: usize) -> f64 {
        let others: f64 = x
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| v.max(0.0).powf(self.gamma))
            .product();
        (self.gamma * self.theta * others).powf(1.0 / (1.0 - self.gamma))
    }

    /// Lowest positive Nash equilibrium, by best-reply iteration from a
    /// near-zero profile.
    pub fn lowest_nash(&self) -> Result<StrategyProfile> {
        let mut x = vec![1e-9; self.n];
        for it in 0..100_000 {
            let next: Vec<f64> = (0..self.n).map(|i| self.best_reply(&x, i)).collect();
            let gap = x
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
                .fold(0.0, f64::max);
            x = next;
            if gap <= 1e-14 {
                log::debug!("lowest Nash after {it} best-reply rounds");
                return Ok(StrategyProfile(x));
            }
        }
        Err(Error::NonConvergence {
            iterations: 100_000,
            residual: f64::NAN,
        })
    }

    /// Alpha-equilibrium efforts `x_i = alpha_i gamma q`, with
    /// `q^(1 - n gamma) = theta gamma^(n gamma) (prod alpha)^gamma`.
    pub fn alpha_equilibrium(&self, alpha: &BiasProfile) -> Result<StrategyProfile> {
        if alpha.len() != self.n {
            return Err(Error::InvalidParameter("bias profile length mismatch".into()));
        }
        let ng = self.n as f64 * self.gamma;
        let prod: f64 = alpha.iter().product();
        let q = (self.theta * self.gamma.powf(ng) * prod.powf(self.gamma)).powf(1.0 / (1.0 - ng));
        Ok(StrategyProfile(alpha.iter().map(|a| a * self.gamma * q).collect()))
    }

    /// Derived NAE bias `1 / (1 - (n - 1) gamma)`, the same for every player.
    pub fn alpha_star(&self) -> f64 {
        1.0 / (1.0 - (self.n as f64 - 1.0) * self.gamma)
    }
}

impl GameModel for TeamProductionSpec {
    fn players(&self) -> usize {
        self.n
    }
    fn interval(&self, _i: usize) -> Interval {
        Interval::non_negative()
    }
    fn demand(&self, _i: usize, x: &[f64]) -> f64 {
        self.output(x)
    }
    fn profit(&self, _i: usize, own: f64, demand: f64) -> f64 {
        demand - own
    }
    fn kind(&self) -> GameKind {
        GameKind::TeamProduction
    }
    fn profit_partials(&self, _i: usize, _own: f64, _demand: f64) -> Option<(f64, f64)> {
        Some((-1.0, 1.0))
    }
    fn demand_partial(&self, _i: usize, j: usize, x: &[f64]) -> Option<f64> {
        if x.iter().any(|&v| v <= 0.0) {
            return None;
        }
        Some(self.gamma * self.output(x) / x[j])
    }
}

/// NAE by the generic solver, compared with the lowest Nash equilibrium.
pub fn team_production_nae(t: &TeamProductionSpec, settings: &NaeSettings) -> Result<NaeReport> {
    let game = t.spec();
    let lne = t.lowest_nash()?;
    let mut s = settings.clone();
    if s.inner.initial.is_none() {
        s.inner = SolverSettings {
            initial: Some(lne.0.clone()),
            ..s.inner
        };
    }
    let mut report = solve_nae(&game, &s)?;
    let pi_lne = game.payoffs(&lne);
    report.nash_reference.profits = pi_lne.clone();
    report.nash_reference.demands = game.demands(&lne);
    report.nash_reference.x = lne.clone();
    for i in 0..t.n {
        let a = report.alpha_star[i];
        let x = report.x_star[i];
        if t.n > 1 && !(a > 1.0 && x > lne[i] && report.profits[i] > pi_lne[i]) {
            report.warnings.push(format!(
                "player {i}: expected alpha > 1 and gains over the lowest Nash equilibrium"
            ));
        }
    }
    if s.audit == AuditMode::Skip {
        report.warnings.push("assumption audit skipped".into());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_nash_closed_form() {
        let t = TeamProductionSpec::new(2, 10.0, 0.3).unwrap();
        let x = t.lowest_nash().unwrap();
        let want = (0.3f64 * 10.0).powf(1.0 / 0.4);
        assert!(x.iter().all(|&v| (v - want).abs() < 1e-9 * want));
    }

    #[test]
    fn alpha_equilibrium_is_biased_foc() {
        let t = TeamProductionSpec::new(3, 10.0, 0.2).unwrap();
        let alpha = BiasProfile::new(vec![1.2, 0.9, 1.5]).unwrap();
        let x = t.alpha_equilibrium(&alpha).unwrap();
        let q = t.output(&x);
        for i in 0..3 {
            assert!((alpha[i] * 0.2 * q / x[i] - 1.0).abs() < 1e-12);
        }
    }
}
