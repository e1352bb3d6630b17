//! Where biased estimates come from: a price experiment whose discounts are
//! correlated with the rival's, an advertising policy that reacts to sales
//! shocks, and a discount confounded with a demand shock.

use num_traits::Num;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator used by every simulation, recorded in run metadata.
pub const PRNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9) seeded with seed_from_u64";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Analytic,
    MonteCarlo,
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Inverse Mills ratio `phi(z) / Phi(z)`.
fn mills(z: f64) -> f64 {
    normal_pdf(z) / normal_cdf(z)
}

/// Joint probabilities `(LL, LH, HL, HH)` of the two firms' prices when
/// the low price has share `mu` and the discount correlation is `g`.
pub fn joint_cells<T: Num + Copy>(mu: T, g: T) -> [T; 4] {
    let one = T::one();
    let mix = mu * (one - mu);
    [
        mu * mu + mix * g,
        mix * (one - g),
        mix * (one - g),
        (one - mu) * (one - mu) + mix * g,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountExperiment {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub p_low: f64,
    pub p_high: f64,
    /// Share of periods at the low price.
    pub mu_low: f64,
    /// Sloppiness of each firm's analyst.
    pub gamma: [f64; 2],
    pub rho: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountEstimate {
    pub eta_hat: f64,
    /// True elasticity with denominator `a - (b + c) P` (rival term with the wrong sign).
    pub eta_true_naive: f64,
    /// True elasticity with denominator `a - (b - c) P`, from average demand.
    pub eta_true_derived: f64,
    pub implied_alpha: f64,
    /// Standard error of `eta_hat` (Monte Carlo only).
    pub std_error: Option<f64>,
    pub samples: usize,
}

impl DiscountExperiment {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        let vals = [self.a, self.b, self.c, self.p_low, self.p_high, self.mu_low, self.rho];
        if vals.iter().chain(&self.gamma).any(|v| !v.is_finite()) {
            return bad("experiment parameters must be finite");
        }
        if !(self.p_low < self.p_high) || self.p_low < 0.0 {
            return bad("need 0 <= p_low < p_high");
        }
        if !(self.mu_low > 0.0 && self.mu_low < 1.0) {
            return bad("discount share must lie in (0, 1)");
        }
        if self.gamma.iter().any(|g| !(0.0..=1.0).contains(g)) || !(-1.0..=1.0).contains(&self.rho) {
            return bad("need gamma in [0, 1] and rho in [-1, 1]");
        }
        if joint_cells(self.mu_low, self.correlation()).iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("joint price distribution has a cell outside [0, 1]");
        }
        if self.a - (self.b - self.c) * self.mean_price() <= 0.0 {
            return bad("average demand must be positive");
        }
        Ok(())
    }

    /// `gamma_1 gamma_2 rho`.
    pub fn correlation(&self) -> f64 {
        self.gamma[0] * self.gamma[1] * self.rho
    }

    pub fn mean_price(&self) -> f64 {
        self.mu_low * self.p_low + (1.0 - self.mu_low) * self.p_high
    }

    fn analytic(&self) -> DiscountEstimate {
        let p = self.mean_price();
        let slope = self.b - self.c * self.correlation();
        DiscountEstimate {
            eta_hat: slope * p / (self.a - (self.b - self.c) * p),
            eta_true_naive: self.b * p / (self.a - (self.b + self.c) * p),
            eta_true_derived: self.b * p / (self.a - (self.b - self.c) * p),
            implied_alpha: slope / self.b,
            std_error: None,
            samples: 0,
        }
    }

    fn monte_carlo(&self) -> Result<DiscountEstimate> {
        let mut out = self.analytic();
        let t = self.samples;
        let cells = joint_cells(self.mu_low, self.correlation());
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        // Per-draw moments: low-price indicator, demand in low periods, demand.
        let mut sum = [0.0f64; 3];
        let mut cross = [[0.0f64; 3]; 3];
        let (c0, c1, c2) = (cells[0], cells[0] + cells[1], cells[0] + cells[1] + cells[2]);
        for _ in 0..t {
            let u: f64 = rng.random();
            let (own, rival) = if u < c0 {
                (self.p_low, self.p_low)
            } else if u < c1 {
                (self.p_low, self.p_high)
            } else if u < c2 {
                (self.p_high, self.p_low)
            } else {
                (self.p_high, self.p_high)
            };
            let q = self.a - self.b * own + self.c * rival;
            let low = if own == self.p_low { 1.0 } else { 0.0 };
            let z = [low, low * q, q];
            for i in 0..3 {
                sum[i] += z[i];
                for j in 0..3 {
                    cross[i][j] += z[i] * z[j];
                }
            }
        }
        let n = t as f64;
        let m: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let (f, sl, s) = (m[0], m[1], m[2]);
        if f <= 0.0 || f >= 1.0 || t < 2 {
            return Err(Error::InsufficientVariation("a price arm is empty"));
        }
        let q_low = sl / f;
        let q_high = (s - sl) / (1.0 - f);
        let dp = self.p_high - self.p_low;
        let p = self.mean_price();
        let eta = -((q_high - q_low) / s) * (p / dp);
        // Delta method on eta(f, sl, s).
        let k = p / dp;
        let grad = [
            -k / s * ((s - sl) / ((1.0 - f) * (1.0 - f)) + sl / (f * f)),
            -k / s * (-1.0 / (1.0 - f) - 1.0 / f),
            -k * (1.0 / (1.0 - f) / s - (q_high - q_low) / (s * s)),
        ];
        let mut var = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let cov = (cross[i][j] / n - m[i] * m[j]) * n / (n - 1.0);
                var += grad[i] * grad[j] * cov;
            }
        }
        out.eta_hat = eta;
        out.implied_alpha = (q_low - q_high) / dp / self.b;
        out.std_error = Some((var / n).max(0.0).sqrt());
        out.samples = t;
        Ok(out)
    }
}

/// Elasticity estimated from the discount experiment, with the truth and
/// the implied bias.
pub fn discount_elasticity(e: &DiscountExperiment, mode: Mode) -> Result<DiscountEstimate> {
    e.validate()?;
    match mode {
        Mode::Analytic => Ok(e.analytic()),
        Mode::MonteCarlo => e.monte_carlo(),
    }
}

/// How the budget is chosen each period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdPolicy {
    /// High budget after sales below the target, low otherwise.
    Threshold,
    /// High or low with equal probability, independent of sales.
    FairCoin,
}

/// Which closed form to evaluate for the threshold policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdFormula {
    /// Conditional mean of the shock after a high-budget period is
    /// `+phi(x_H) / Phi(x_H)`; agrees with simulation.
    Corrected,
    /// Same term entering with a minus sign.
    Naive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdTargetingExperiment {
    pub mu: f64,
    pub x_low: f64,
    pub x_high: f64,
    pub horizon: usize,
    pub seed: u64,
    pub policy: AdPolicy,
    /// Batches for the standard error; switches within a batch share shocks.
    pub batches: usize,
}

impl AdTargetingExperiment {
    pub fn new(x_low: f64, x_high: f64, horizon: usize, seed: u64) -> Result<Self> {
        let e = Self {
            mu: 0.0,
            x_low,
            x_high,
            horizon,
            seed,
            policy: AdPolicy::Threshold,
            batches: 100,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_low >= 0.0 && self.x_high > self.x_low && self.x_high.is_finite() && self.mu.is_finite()) {
            return Err(Error::InvalidParameter("need 0 <= x_low < x_high and finite mu".into()));
        }
        if self.batches < 2 || self.horizon < 2 * self.batches {
            return Err(Error::InvalidParameter("need at least 2 batches of 2 periods".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdEstimate {
    pub estimate: f64,
    pub std_error: Option<f64>,
    /// Number of low-to-high and high-to-low switches observed.
    pub switches: (usize, usize),
}

/// Closed form of the switch-conditioned effect estimate under the
/// threshold policy.
pub fn ad_targeting_analytic(e: &AdTargetingExperiment, formula: AdFormula) -> Result<f64> {
    e.validate()?;
    if e.policy == AdPolicy::FairCoin {
        return Ok(1.0);
    }
    let d = e.x_high - e.x_low;
    let left = 1.0 + mills(-e.x_low) / d;
    let right = match formula {
        AdFormula::Corrected => 1.0 + mills(e.x_high) / d,
        AdFormula::Naive => 1.0 - mills(e.x_high) / d,
    };
    Ok(0.5 * (left + right))
}

/// Simulated estimate with a batch-means standard error.
pub fn ad_targeting_monte_carlo(e: &AdTargetingExperiment) -> Result<AdEstimate> {
    e.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(e.seed);
    let per = e.horizon / e.batches;
    // Per batch: (sum of up moves, count up, sum of down moves, count down).
    let mut stats = vec![[0.0f64; 4]; e.batches];
    let mut high = false;
    let mut prev: Option<(bool, f64)> = None;
    for t in 0..per * e.batches {
        let x = if high { e.x_high } else { e.x_low };
        let eps: f64 = rng.sample(StandardNormal);
        let sales = e.mu + x + eps;
        if let Some((was_high, last)) = prev {
            let b = &mut stats[t / per];
            match (was_high, high) {
                (false, true) => {
                    b[0] += sales - last;
                    b[1] += 1.0;
                }
                (true, false) => {
                    b[2] += sales - last;
                    b[3] += 1.0;
                }
                _ => {}
            }
        }
        prev = Some((high, sales));
        high = match e.policy {
            AdPolicy::Threshold => sales < e.mu,
            AdPolicy::FairCoin => rng.random::<bool>(),
        };
    }
    let k = e.batches as f64;
    let mut m = [0.0f64; 4];
    for b in &stats {
        for i in 0..4 {
            m[i] += b[i] / k;
        }
    }
    let switches = ((m[1] * k).round() as usize, (m[3] * k).round() as usize);
    if switches.0 == 0 || switches.1 == 0 {
        return Err(Error::NoSwitches);
    }
    let d = e.x_high - e.x_low;
    // Down moves are divided by x_L - x_H = -d.
    let estimate = 0.5 * (m[0] / m[1] - m[2] / m[3]) / d;
    let grad = [
        0.5 / (m[1] * d),
        -0.5 * m[0] / (m[1] * m[1] * d),
        -0.5 / (m[3] * d),
        0.5 * m[2] / (m[3] * m[3] * d),
    ];
    let mut var = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let cov: f64 = stats.iter().map(|b| (b[i] - m[i]) * (b[j] - m[j])).sum::<f64>() / (k - 1.0);
            var += grad[i] * grad[j] * cov;
        }
    }
    Ok(AdEstimate {
        estimate,
        std_error: Some((var / k).max(0.0).sqrt()),
        switches,
    })
}

pub fn ad_targeting_bias(e: &AdTargetingExperiment, mode: Mode) -> Result<AdEstimate> {
    match mode {
        Mode::Analytic => Ok(AdEstimate {
            estimate: ad_targeting_analytic(e, AdFormula::Corrected)?,
            std_error: None,
            switches: (0, 0),
        }),
        Mode::MonteCarlo => ad_targeting_monte_carlo(e),
    }
}

/// A discount of size `dx` that coincides with a demand shock `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockDiscountSpec {
    pub dx: f64,
    pub eps: f64,
}

/// Bias of the naive before/after estimate, `(dx - 2 eps) / dx`.
pub fn shock_discount_alpha(s: &ShockDiscountSpec) -> Result<f64> {
    if !(s.dx > 0.0) || !(s.eps >= 0.0) {
        return Err(Error::InvalidParameter("need dx > 0 and eps >= 0".into()));
    }
    let a = (s.dx - 2.0 * s.eps) / s.dx;
    if a <= 0.0 {
        return Err(Error::NonPositiveAlpha(a));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-17);
        assert!((normal_pdf(1.0) - 0.241_970_724_519_143_37).abs() < 1e-16);
    }

    #[test]
    fn naive_and_corrected_values() {
        let e = AdTargetingExperiment::new(0.0, 1.0, 1000, 0).unwrap();
        let p = ad_targeting_analytic(&e, AdFormula::Naive).unwrap();
        let c = ad_targeting_analytic(&e, AdFormula::Corrected).unwrap();
        assert!((p - 1.2551).abs() < 1e-4, "{p}");
        assert!((c - 1.5427).abs() < 1e-4, "{c}");
    }

    #[test]
    fn shock_alpha() {
        let s = |eps| shock_discount_alpha(&ShockDiscountSpec { dx: 5.0, eps });
        assert_eq!(s(0.0).unwrap(), 1.0);
        assert!((s(1.0).unwrap() - 0.6).abs() < 1e-15);
        assert!(matches!(s(2.5), Err(Error::NonPositiveAlpha(_))));
    }
}
