//! Price competition with linear demand in own price and a weighted mean
//! price: `q_i = a_i - b_i x_i + c_i sum_j w_j x_j`.

use serde::{Deserialize, Serialize};

use crate::bias::BiasProfile;
use crate::error::{Error, Result};
use crate::game::{GameKind, GameModel, GameSpec, Interval, StrategyProfile};
use crate::nae::{NaeMethod, NaeReport, NaeSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPriceMarket {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub w: Vec<f64>,
}

impl LinearPriceMarket {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let n = a.len();
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if n == 0 || b.len() != n || c.len() != n || w.len() != n {
            return bad("a, b, c and w must have the same non-zero length");
        }
        if a.iter().chain(&b).chain(&c).chain(&w).any(|v| !v.is_finite()) {
            return bad("market parameters must be finite");
        }
        if a.iter().any(|&v| v <= 0.0) || b.iter().any(|&v| v <= 0.0) {
            return bad("a and b must be positive");
        }
        if w.iter().any(|&v| v <= 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return bad("weights must be positive and sum to one");
        }
        let pos = c.iter().any(|&v| v > 0.0);
        let neg = c.iter().any(|&v| v < 0.0);
        if pos && neg {
            return bad("cross slopes must share one sign");
        }
        for i in 0..n {
            if c[i].abs() >= b[i] {
                return bad("|c_i| must be below b_i");
            }
            if c[i] < 0.0 {
                let s: f64 = (0..n).filter(|&j| j != i).map(|j| c[j].abs() / b[j]).sum();
                if s >= 1.0 / w[i] {
                    return bad("complements too strong for a bounded equilibrium");
                }
            }
        }
        Ok(Self { a, b, c, w })
    }

    /// `n` identical firms with equal weights.
    pub fn symmetric(n: usize, a: f64, b: f64, c: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one firm".into()));
        }
        let w = 1.0 / n as f64;
        let mut w = vec![w; n];
        // Keep the weights summing to one exactly in floating point.
        let rest: f64 = w[1..].iter().sum();
        w[0] = 1.0 - rest;
        Self::new(vec![a; n], vec![b; n], vec![c; n], w)
    }

    /// Duopoly in the direct form `q_i = a_i - bt_i x_i + ct_i x_j`.
    pub fn duopoly_direct(a: [f64; 2], bt: [f64; 2], ct: [f64; 2]) -> Result<Self> {
        Self::new(
            a.to_vec(),
            vec![bt[0] + ct[0], bt[1] + ct[1]],
            vec![2.0 * ct[0], 2.0 * ct[1]],
            vec![0.5, 0.5],
        )
    }

    /// `q_i = 20 - x_i + 0.8 x_j`.
    pub fn motivating_example() -> Self {
        Self::duopoly_direct([20.0, 20.0], [1.0, 1.0], [0.8, 0.8]).expect("valid parameters")
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// Own slope net of the mean-price feedback, `b_i - c_i w_i`.
    pub fn b_tilde(&self, i: usize) -> f64 {
        self.b[i] - self.c[i] * self.w[i]
    }

    /// Duopoly cross coefficient `c_i w_j`.
    pub fn c_tilde(&self, i: usize) -> Result<f64> {
        if self.n() != 2 {
            return Err(Error::InvalidParameter("direct-form coefficients need two firms".into()));
        }
        Ok(self.c[i] * self.w[1 - i])
    }

    pub fn mean_price(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, x)| w * x).sum()
    }

    pub fn spec(&self) -> GameSpec {
        GameSpec::new(self.clone()).expect("validated market")
    }

    fn is_symmetric(&self) -> bool {
        let same = |v: &[f64]| v.iter().all(|&y| (y - v[0]).abs() <= 1e-12 * v[0].abs().max(1.0));
        same(&self.a) && same(&self.b) && same(&self.c) && same(&self.w)
    }
}

impl GameModel for LinearPriceMarket {
    fn players(&self) -> usize {
        self.n()
    }
    fn interval(&self, _i: usize) -> Interval {
        Interval::non_negative()
    }
    fn demand(&self, i: usize, x: &[f64]) -> f64 {
        self.a[i] - self.b[i] * x[i] + self.c[i] * self.mean_price(x)
    }
    fn profit(&self, _i: usize, own: f64, demand: f64) -> f64 {
        own * demand
    }
    fn kind(&self) -> GameKind {
        GameKind::LinearPrice
    }
    fn profit_partials(&self, _i: usize, own: f64, demand: f64) -> Option<(f64, f64)> {
        Some((demand, own))
    }
    fn demand_partial(&self, i: usize, j: usize, _x: &[f64]) -> Option<f64> {
        Some(if i == j {
            -self.b_tilde(i)
        } else {
            self.c[i] * self.w[j]
        })
    }
}

/// Closed-form alpha-equilibrium prices: one linear equation in the mean
/// price, then each firm's biased reply.
pub fn price_alpha_equilibrium(m: &LinearPriceMarket, alpha: &BiasProfile) -> Result<StrategyProfile> {
    let n = m.n();
    if alpha.len() != n {
        return Err(Error::InvalidParameter("bias profile length mismatch".into()));
    }
    let d: Vec<f64> = (0..n).map(|i| m.b[i] + alpha[i] * m.b_tilde(i)).collect();
    let num: f64 = (0..n).map(|i| m.w[i] * m.a[i] / d[i]).sum();
    let den = 1.0 - (0..n).map(|i| m.w[i] * m.c[i] / d[i]).sum::<f64>();
    if den.abs() <= 1e-14 || d.iter().any(|&v| v.abs() <= 1e-14) {
        return Err(Error::DegenerateDenominator("mean-price equation"));
    }
    let xbar = num / den;
    let x: Vec<f64> = (0..n).map(|i| (m.a[i] + m.c[i] * xbar) / d[i]).collect();
    for (i, &v) in x.iter().enumerate() {
        if v < 0.0 {
            return Err(Error::OutOfDomain {
                player: i,
                value: v,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        let q = m.demand(i, &x);
        if q <= 0.0 {
            return Err(Error::NonPositiveDemand { player: i, demand: q });
        }
    }
    Ok(StrategyProfile(x))
}

/// Unbiased Nash prices.
pub fn price_nash(m: &LinearPriceMarket) -> Result<StrategyProfile> {
    price_alpha_equilibrium(m, &BiasProfile::unbiased(m.n()))
}

/// The common duopoly NAE bias `sqrt(1 - ct_1 ct_2 / (bt_1 bt_2))`.
pub fn duopoly_alpha_star(m: &LinearPriceMarket) -> Result<f64> {
    let k = m.c_tilde(0)? * m.c_tilde(1)? / (m.b_tilde(0) * m.b_tilde(1));
    if k >= 1.0 {
        return Err(Error::ComplexRoot("duopoly bias"));
    }
    Ok((1.0 - k).sqrt())
}

pub fn price_duopoly_nae(m: &LinearPriceMarket) -> Result<NaeReport> {
    let a = duopoly_alpha_star(m)?;
    let alpha = BiasProfile::new(vec![a, a])?;
    let x = price_alpha_equilibrium(m, &alpha)?;
    crate::nae::assemble(&m.spec(), NaeMethod::ClosedForm, alpha, x.0, &NaeSettings::default())
}

/// Symmetric-oligopoly NAE bias for `n` firms with common `b` and `c` in
/// the weighted-mean form.
///
/// With `r = b_tilde / c_tilde = n b / c - 1` the bias solves a quadratic;
/// the root is written as `1 - alpha` to stay accurate when `|r|` is large.
pub fn symmetric_alpha_star(n: usize, b: f64, c: f64) -> Result<f64> {
    if n == 0 || !(b > 0.0) || !c.is_finite() || c.abs() >= b {
        return Err(Error::InvalidParameter("need n >= 1, b > 0 and |c| < b".into()));
    }
    if n == 1 || c == 0.0 {
        return Ok(1.0);
    }
    let nf = n as f64;
    let r = nf * b / c - 1.0;
    let disc = (nf - 2.0).powi(2) - 4.0 * (nf - 1.0) + 4.0 * r * (r - nf + 2.0);
    if disc < 0.0 {
        return Err(Error::ComplexRoot("symmetric oligopoly bias"));
    }
    let ra = r.abs();
    let den = ra * (2.0 * ra - r.signum() * (nf - 2.0) + disc.sqrt());
    if den <= 0.0 {
        return Err(Error::DegenerateDenominator("symmetric oligopoly bias"));
    }
    let alpha = 1.0 - 2.0 * (nf - 1.0) / den;
    if alpha <= 0.0 {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    Ok(alpha)
}

/// Symmetric alpha-equilibrium price `a / ((1 + alpha) b - c (1 + alpha / n))`.
pub fn symmetric_price(n: usize, a: f64, b: f64, c: f64, alpha: f64) -> Result<f64> {
    let den = (1.0 + alpha) * b - c * (1.0 + alpha / n as f64);
    if den <= 0.0 {
        return Err(Error::DegenerateDenominator("symmetric price"));
    }
    Ok(a / den)
}

pub fn price_symmetric_nae(m: &LinearPriceMarket) -> Result<NaeReport> {
    if !m.is_symmetric() {
        return Err(Error::InvalidParameter("market is not symmetric".into()));
    }
    let n = m.n();
    let a = symmetric_alpha_star(n, m.b[0], m.c[0])?;
    let x = symmetric_price(n, m.a[0], m.b[0], m.c[0], a)?;
    let alpha = BiasProfile::new(vec![a; n])?;
    crate::nae::assemble(&m.spec(), NaeMethod::ClosedForm, alpha, vec![x; n], &NaeSettings::default())
}
