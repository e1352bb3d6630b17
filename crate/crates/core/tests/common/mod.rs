//! Seeded instance generators shared by the integration and acceptance
//! targets. Each draws until the constructor and the closed form accept.

#![allow(dead_code)]

use naeq_core::{
    advertising_nae, audit_assumptions, price_duopoly_nae, price_symmetric_nae, AdvertisingMarket,
    BiasFunction, GameSpec, LinearPriceMarket, NaeReport, NaeSettings, SamplingPlan,
    TeamProductionSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws that violate an assumption somewhere near their equilibria are
/// outside every closed form's scope.
fn audited(g: &GameSpec) -> bool {
    audit_assumptions(g, &BiasFunction::default(), &SamplingPlan::default()).is_ok_and(|a| a.all_ok())
}

fn sign(r: &mut ChaCha8Rng) -> f64 {
    if r.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

pub fn duopoly(r: &mut ChaCha8Rng) -> (LinearPriceMarket, NaeReport) {
    loop {
        let s = sign(r);
        let bt = [r.random_range(0.5..2.0), r.random_range(0.5..2.0)];
        let hi = if s > 0.0 { 0.8 } else { 0.3 };
        let ct = [s * r.random_range(0.05..hi) * bt[0], s * r.random_range(0.05..hi) * bt[1]];
        let a = [r.random_range(10.0..30.0), r.random_range(10.0..30.0)];
        if let Ok(m) = LinearPriceMarket::duopoly_direct(a, bt, ct) {
            if let Ok(rep) = price_duopoly_nae(&m) {
                if rep.demands.iter().all(|&q| q > 0.0) && audited(&m.spec()) {
                    return (m, rep);
                }
            }
        }
    }
}

pub fn symmetric(r: &mut ChaCha8Rng, n: usize) -> (LinearPriceMarket, NaeReport) {
    loop {
        let b = r.random_range(0.5..3.0);
        let c = sign(r) * r.random_range(0.1..0.9) * b;
        let a = r.random_range(5.0..50.0);
        if let Ok(m) = LinearPriceMarket::symmetric(n, a, b, c) {
            if let Ok(rep) = price_symmetric_nae(&m) {
                if rep.demands.iter().all(|&q| q > 0.0) && audited(&m.spec()) {
                    return (m, rep);
                }
            }
        }
    }
}

pub fn advertising(r: &mut ChaCha8Rng) -> (AdvertisingMarket, NaeReport) {
    loop {
        let s = sign(r);
        let p = [r.random_range(0.5..2.0), r.random_range(0.5..2.0)];
        let b = [r.random_range(0.5..2.0), r.random_range(0.5..2.0)];
        let c = [s * r.random_range(0.05..0.9) / p[0], s * r.random_range(0.05..0.9) / p[1]];
        let a = [r.random_range(1.0..10.0), r.random_range(1.0..10.0)];
        if let Ok(m) = AdvertisingMarket::new(a, b, c, p) {
            if let Ok(rep) = advertising_nae(&m) {
                if audited(&m.spec()) {
                    return (m, rep);
                }
            }
        }
    }
}

pub fn team(r: &mut ChaCha8Rng, n: usize) -> TeamProductionSpec {
    let theta = r.random_range(1.0..20.0);
    let gamma = r.random_range(0.05..0.9 / n as f64);
    TeamProductionSpec::new(n, theta, gamma).expect("drawn inside the admissible region")
}

/// Largest relative gap between two vectors.
pub fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-300))
        .fold(0.0, f64::max)
}

/// A suite game with the start its solves should use.
pub struct SuiteGame {
    pub label: String,
    pub game: GameSpec,
    /// Team production also has a zero equilibrium; solves start from the
    /// lowest positive Nash profile instead.
    pub start: Option<Vec<f64>>,
}

impl SuiteGame {
    fn new(label: String, game: GameSpec) -> Self {
        Self { label, game, start: None }
    }

    pub fn settings(&self, base: &NaeSettings) -> NaeSettings {
        let mut s = base.clone();
        if s.inner.initial.is_none() {
            s.inner.initial.clone_from(&self.start);
        }
        s
    }
}

/// Families of the suite with a short label.
pub fn suite(per_family: usize, seed: u64) -> Vec<SuiteGame> {
    let mut r = rng(seed);
    let mut out = vec![SuiteGame::new("motivating".into(), LinearPriceMarket::motivating_example().spec())];
    for k in 0..per_family {
        out.push(SuiteGame::new(format!("duopoly-{k}"), duopoly(&mut r).0.spec()));
        let n = 2 + k % 5;
        out.push(SuiteGame::new(format!("symmetric-n{n}-{k}"), symmetric(&mut r, n).0.spec()));
        out.push(SuiteGame::new(format!("advertising-{k}"), advertising(&mut r).0.spec()));
        let n = 2 + k % 2;
        let t = team(&mut r, n);
        out.push(SuiteGame {
            label: format!("team-n{n}-{k}"),
            game: t.spec(),
            start: Some(t.lowest_nash().expect("positive Nash profile").0),
        });
    }
    out
}
