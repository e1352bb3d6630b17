//! Advertising duopoly: `q_i = a_i + b_i sqrt(x_i) + c_i sqrt(x_i x_j)` and
//! `pi_i = p_i q_i - x_i`.

use serde::{Deserialize, Serialize};

use crate::bias::BiasProfile;
use crate::error::{Error, Result};
use crate::game::{GameKind, GameModel, GameSpec, Interval, StrategyProfile};
use crate::nae::{NaeMethod, NaeReport, NaeSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvertisingMarket {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
    pub p: [f64; 2],
}

impl AdvertisingMarket {
    pub fn new(a: [f64; 2], b: [f64; 2], c: [f64; 2], p: [f64; 2]) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if a.iter().chain(&b).chain(&c).chain(&p).any(|v| !v.is_finite()) {
            return bad("advertising parameters must be finite");
        }
        if a.iter().chain(&b).chain(&p).any(|&v| v <= 0.0) {
            return bad("a, b and p must be positive");
        }
        if c[0] * c[1] < 0.0 {
            return bad("interaction terms must share one sign");
        }
        for i in 0..2 {
            let j = 1 - i;
            if c[i].abs() >= 1.0 / p[i] {
                return bad("|c_i| must be below 1/p_i");
            }
            if c[i] < 0.0 && c[i].abs() >= b[i] / (b[j] * p[j]) {
                return bad("negative interaction too strong");
            }
        }
        Ok(Self { a, b, c, p })
    }

    pub fn symmetric(a: f64, b: f64, c: f64, p: f64) -> Result<Self> {
        Self::new([a; 2], [b; 2], [c; 2], [p; 2])
    }

    /// Budget cap keeping the rival's demand increasing in its own budget.
    pub fn budget_cap(&self, i: usize) -> f64 {
        let j = 1 - i;
        if self.c[j] < 0.0 {
            (self.b[j] / self.c[j].abs()).powi(2)
        } else {
            f64::INFINITY
        }
    }

    pub fn spec(&self) -> GameSpec {
        GameSpec::new(self.clone()).expect("validated market")
    }
}

impl GameModel for AdvertisingMarket {
    fn players(&self) -> usize {
        2
    }
    fn interval(&self, i: usize) -> Interval {
        Interval::new(0.0, self.budget_cap(i)).expect("positive cap")
    }
    fn demand(&self, i: usize, x: &[f64]) -> f64 {
        let j = 1 - i;
        self.a[i] + self.b[i] * x[i].sqrt() + self.c[i] * (x[i] * x[j]).sqrt()
    }
    fn profit(&self, i: usize, own: f64, demand: f64) -> f64 {
        self.p[i] * demand - own
    }
    fn kind(&self) -> GameKind {
        GameKind::Advertising
    }
    fn profit_partials(&self, i: usize, _own: f64, _demand: f64) -> Option<(f64, f64)> {
        Some((-1.0, self.p[i]))
    }
    fn demand_partial(&self, i: usize, j: usize, x: &[f64]) -> Option<f64> {
        let k = 1 - i;
        let at = if i == j { i } else { k };
        if x[at] <= 0.0 || x[k] < 0.0 {
            return None;
        }
        Some(if i == j {
            (self.b[i] + self.c[i] * x[k].sqrt()) / (2.0 * x[i].sqrt())
        } else {
            self.c[i] * x[i].sqrt() / (2.0 * x[k].sqrt())
        })
    }
}

/// Closed-form alpha-equilibrium budgets.
pub fn advertising_equilibrium(m: &AdvertisingMarket, alpha: &BiasProfile) -> Result<StrategyProfile> {
    if alpha.len() != 2 {
        return Err(Error::InvalidParameter("advertising needs two biases".into()));
    }
    let (p, b, c) = (m.p, m.b, m.c);
    let den = 4.0 - p[0] * p[1] * alpha[0] * alpha[1] * c[0] * c[1];
    if den <= 0.0 {
        return Err(Error::DegenerateDenominator("advertising budgets"));
    }
    let x: Vec<f64> = (0..2)
        .map(|i| {
            let j = 1 - i;
            let root = p[i] * alpha[i] * (2.0 * b[i] + c[i] * p[j] * alpha[j] * b[j]) / den;
            root * root
        })
        .collect();
    for (i, &v) in x.iter().enumerate() {
        let cap = m.budget_cap(i);
        if v > cap {
            return Err(Error::OutOfDomain {
                player: i,
                value: v,
                lo: 0.0,
                hi: cap,
            });
        }
    }
    Ok(StrategyProfile(x))
}

/// The common NAE bias `2 / (1 + sqrt(1 - c_1 c_2 p_1 p_2))`, in `(1, 2)`
/// whenever the interaction is non-zero.
pub fn advertising_alpha_star(m: &AdvertisingMarket) -> Result<f64> {
    let k = m.c[0] * m.c[1] * m.p[0] * m.p[1];
    if k >= 1.0 {
        return Err(Error::ComplexRoot("advertising bias"));
    }
    Ok(2.0 / (1.0 + (1.0 - k).sqrt()))
}

pub fn advertising_nae(m: &AdvertisingMarket) -> Result<NaeReport> {
    let a = advertising_alpha_star(m)?;
    let alpha = BiasProfile::new(vec![a, a])?;
    let x = advertising_equilibrium(m, &alpha)?;
    crate::nae::assemble(&m.spec(), NaeMethod::ClosedForm, alpha, x.0, &NaeSettings::default())
}
