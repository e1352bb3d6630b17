//! Merger counterfactual in a symmetric three-firm price market.
//!
//! Before the merger the firms play the symmetric NAE. An economist who
//! believes in unbiased Nash pricing rationalizes the observed prices with a
//! positive marginal cost and predicts post-merger prices from it. After
//! firms 2 and 3 merge, the merged firm sets one price for both goods, which
//! gives a duopoly with mean-price weights (1/3, 2/3).

use serde::{Deserialize, Serialize};

use crate::bias::BiasProfile;
use crate::equilibrium::{solve_alpha_equilibrium, SolverSettings};
use crate::error::{Error, Result};
use crate::game::{GameKind, GameModel, GameSpec, Interval};
use crate::markets::{duopoly_alpha_star, price_alpha_equilibrium, symmetric_alpha_star, LinearPriceMarket};
use crate::optim::golden_max;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergerScenario {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Prices of firm 1 and of the merged firm (per good).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostPrices {
    pub firm1: f64,
    pub merged: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    /// Observed pre-merger price (symmetric NAE).
    pub pre: f64,
    /// Pre-merger unbiased Nash price.
    pub pre_nash: f64,
    /// Economist's prediction from the estimated marginal cost.
    pub post_mc: PostPrices,
    /// Short run: biases frozen at their pre-merger level.
    pub post_alpha_pre: PostPrices,
    /// Long run: biases re-equilibrate to the post-merger NAE.
    pub post_alpha_post: PostPrices,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergerOutcome {
    pub scenario: MergerScenario,
    pub mc: f64,
    pub alpha_pre: f64,
    pub alpha_post: f64,
    pub prices: PriceTable,
    /// `x(mc) < x(alpha_pre) < x(alpha_post)` for firm 1 and the merged firm.
    pub ordering_holds: bool,
    /// Smallest gap in the ordering above.
    pub ordering_margin: f64,
    pub notes: Vec<String>,
}

impl MergerScenario {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0) || !(b > 0.0) || !(0.0..b).contains(&c) {
            return Err(Error::InvalidParameter("need a > 0 and 0 <= c < b".into()));
        }
        Ok(Self { a, b, c })
    }

    fn root(&self) -> f64 {
        let (b, c) = (self.b, self.c);
        (36.0 * b * b - 36.0 * b * c + c * c).sqrt()
    }

    pub fn pre_market(&self) -> Result<LinearPriceMarket> {
        LinearPriceMarket::symmetric(3, self.a, self.b, self.c)
    }

    /// Firm 1 and the merged firm, whose demand is per good.
    pub fn post_market(&self) -> Result<LinearPriceMarket> {
        LinearPriceMarket::new(
            vec![self.a; 2],
            vec![self.b; 2],
            vec![self.c; 2],
            vec![1.0 / 3.0, 2.0 / 3.0],
        )
    }

    /// Pre-merger NAE bias `(c + sqrt(36b^2 - 36bc + c^2)) / (6b - 2c)`.
    pub fn alpha_pre(&self) -> f64 {
        (self.c + self.root()) / (6.0 * self.b - 2.0 * self.c)
    }

    /// Post-merger NAE bias `sqrt(1 - 2c^2 / ((3b - c)(3b - 2c)))`.
    pub fn alpha_post(&self) -> f64 {
        let (b, c) = (self.b, self.c);
        (1.0 - 2.0 * c * c / ((3.0 * b - c) * (3.0 * b - 2.0 * c))).sqrt()
    }

    /// Observed pre-merger price `6a / (S + 6b - 5c)`.
    pub fn pre_price(&self) -> f64 {
        6.0 * self.a / (self.root() + 6.0 * self.b - 5.0 * self.c)
    }

    fn det(&self) -> Result<f64> {
        let (b, c) = (self.b, self.c);
        let d = 6.0 * b * b - 6.0 * b * c + c * c;
        if d.abs() <= 1e-14 * b * b {
            return Err(Error::DegenerateDenominator("6b^2 - 6bc + c^2"));
        }
        Ok(d)
    }
}

/// Marginal cost that makes the observed prices an unbiased Nash
/// equilibrium with costs.
pub fn estimate_marginal_cost(s: &MergerScenario) -> f64 {
    let (a, b, c) = (s.a, s.b, s.c);
    let r = s.root();
    3.0 * a * (6.0 * b - 3.0 * c - r) / ((3.0 * b - c) * (r + 6.0 * b - 5.0 * c))
}

/// Economist's post-merger prediction from the estimated marginal cost.
pub fn economist_prediction(s: &MergerScenario) -> Result<PostPrices> {
    let (a, b, c) = (s.a, s.b, s.c);
    let r = s.root();
    let d = s.det()?;
    let tail = r + 6.0 * b - 5.0 * c;
    let firm1 = a * (c * c * (r - 5.0 * c) - 144.0 * b * b * c + 108.0 * b.powi(3) + 54.0 * b * c * c)
        / ((3.0 * b - c) * d * tail);
    let merged = a * (c * (r + 7.0 * c) + 36.0 * b * b - 36.0 * b * c) / (d * tail);
    Ok(PostPrices { firm1, merged })
}

/// Nash prices with a common marginal cost after the merger, from the two
/// linear reply equations.
pub fn nash_with_cost(s: &MergerScenario, mc: f64) -> Result<PostPrices> {
    let (a, b, c) = (s.a, s.b, s.c);
    let (b1, b23) = (b - c / 3.0, b - 2.0 * c / 3.0);
    let (c1, c23) = (2.0 * c / 3.0, c / 3.0);
    // 2 b1 x1 - c1 x23 = a + b1 mc;  -c23 x1 + 2 b23 x23 = a + b23 mc
    let det = 4.0 * b1 * b23 - c1 * c23;
    if det.abs() <= 1e-14 {
        return Err(Error::DegenerateDenominator("post-merger Nash system"));
    }
    let (r1, r2) = (a + b1 * mc, a + b23 * mc);
    Ok(PostPrices {
        firm1: (r1 * 2.0 * b23 + c1 * r2) / det,
        merged: (2.0 * b1 * r2 + c23 * r1) / det,
    })
}

fn post_prices(m: &LinearPriceMarket, alpha: f64) -> Result<PostPrices> {
    let x = price_alpha_equilibrium(m, &BiasProfile::new(vec![alpha, alpha])?)?;
    Ok(PostPrices {
        firm1: x[0],
        merged: x[1],
    })
}

/// Full counterfactual: biases, estimated cost and the five price columns.
pub fn postmerger_outcomes(s: &MergerScenario) -> Result<MergerOutcome> {
    let pre = s.pre_market()?;
    let post = s.post_market()?;
    let mut notes = Vec::new();

    let alpha_pre = s.alpha_pre();
    let generic_pre = symmetric_alpha_star(3, s.b, s.c)?;
    if (alpha_pre - generic_pre).abs() > 1e-10 {
        notes.push(format!("pre-merger bias mismatch: {alpha_pre} vs {generic_pre}"));
    }
    let alpha_post = s.alpha_post();
    let generic_post = duopoly_alpha_star(&post)?;
    if (alpha_post - generic_post).abs() > 1e-10 {
        notes.push(format!("post-merger bias mismatch: {alpha_post} vs {generic_post}"));
    }

    let mc = estimate_marginal_cost(s);
    let post_mc = economist_prediction(s)?;
    let check = nash_with_cost(s, mc)?;
    if (check.firm1 - post_mc.firm1).abs() > 1e-9 * post_mc.firm1.abs().max(1.0)
        || (check.merged - post_mc.merged).abs() > 1e-9 * post_mc.merged.abs().max(1.0)
    {
        notes.push("closed-form cost prediction disagrees with the reply system".into());
    }
    let pre_nash = crate::markets::price_nash(&pre)?[0];
    let prices = PriceTable {
        pre: s.pre_price(),
        pre_nash,
        post_mc,
        post_alpha_pre: post_prices(&post, alpha_pre)?,
        post_alpha_post: post_prices(&post, alpha_post)?,
    };
    let p = &prices;
    let gaps = [
        p.post_alpha_pre.firm1 - p.post_mc.firm1,
        p.post_alpha_post.firm1 - p.post_alpha_pre.firm1,
        p.post_alpha_pre.merged - p.post_mc.merged,
        p.post_alpha_post.merged - p.post_alpha_pre.merged,
    ];
    let ordering_margin = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(MergerOutcome {
        scenario: *s,
        mc,
        alpha_pre,
        alpha_post,
        prices,
        ordering_holds: ordering_margin > 1e-8,
        ordering_margin,
        notes,
    })
}

/// Closed-form `x_1(alpha_pre) - x_1(mc)` after the merger.
pub fn firm1_gap(s: &MergerScenario) -> Result<f64> {
    let (a, b, c) = (s.a, s.b, s.c);
    let r = s.root();
    let num = a
        * (3.0 * b - 2.0 * c)
        * (594.0 * b * b * c * c
            + (126.0 * b * b * c - 108.0 * b.powi(3) - 48.0 * b * c * c + 7.0 * c.powi(3)) * r
            - 1080.0 * b.powi(3) * c
            + 648.0 * b.powi(4)
            - 138.0 * b * c.powi(3)
            + 13.0 * c.powi(4));
    let den = (3.0 * b - c)
        * s.det()?
        * (18.0 * b * b - 18.0 * b * c + 5.0 * c * c)
        * (r + 6.0 * b - 5.0 * c);
    Ok(num / den)
}

/// Closed-form `x_23(alpha_pre) - x_23(mc)` after the merger.
pub fn merged_gap(s: &MergerScenario) -> Result<f64> {
    let (a, b, c) = (s.a, s.b, s.c);
    let r = s.root();
    let num = 2.0
        * a
        * c
        * ((17.0 * c.powi(3) - 144.0 * b * b * c + 108.0 * b.powi(3) + 15.0 * b * c * c)
            - (18.0 * b * b - 15.0 * b * c + c * c) * r);
    let den = s.det()?
        * (r + 6.0 * b - 5.0 * c)
        * ((7.0 * c - 12.0 * b) * r - 72.0 * b * b + 90.0 * b * c - 23.0 * c * c);
    Ok(num / den)
}

/// Price game with a marginal cost: `pi_i = (x_i - mc_i) q_i`.
#[derive(Debug, Clone)]
pub struct CostPricingGame {
    pub market: LinearPriceMarket,
    pub mc: Vec<f64>,
}

impl CostPricingGame {
    pub fn new(market: LinearPriceMarket, mc: Vec<f64>) -> Result<Self> {
        if mc.len() != market.n() || mc.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter("one non-negative cost per firm".into()));
        }
        Ok(Self { market, mc })
    }

    pub fn spec(&self) -> GameSpec {
        GameSpec::new(self.clone()).expect("validated game")
    }
}

impl GameModel for CostPricingGame {
    fn players(&self) -> usize {
        self.market.n()
    }
    fn interval(&self, _i: usize) -> Interval {
        Interval::non_negative()
    }
    fn demand(&self, i: usize, x: &[f64]) -> f64 {
        self.market.demand(i, x)
    }
    fn profit(&self, i: usize, own: f64, demand: f64) -> f64 {
        (own - self.mc[i]) * demand
    }
    fn kind(&self) -> GameKind {
        GameKind::LinearPrice
    }
    fn profit_partials(&self, i: usize, own: f64, demand: f64) -> Option<(f64, f64)> {
        Some((demand, own - self.mc[i]))
    }
    fn demand_partial(&self, i: usize, j: usize, x: &[f64]) -> Option<f64> {
        self.market.demand_partial(i, j, x)
    }
}

/// Nash-with-cost prices from the generic solver on the two-player market.
pub fn nash_with_cost_numeric(s: &MergerScenario, mc: f64, settings: &SolverSettings) -> Result<PostPrices> {
    let game = CostPricingGame::new(s.post_market()?, vec![mc; 2])?.spec();
    let r = solve_alpha_equilibrium(&game, &BiasProfile::unbiased(2), settings)?;
    Ok(PostPrices {
        firm1: r.x[0],
        merged: r.x[1],
    })
}

/// Nash-with-cost prices when the merged firm may price goods 2 and 3
/// separately: firm 1 best-replies, the merged firm maximizes joint profit
/// over both prices by coordinate search. Returns `(x_1, x_2, x_3)`.
pub fn two_good_nash_with_cost(s: &MergerScenario, mc: f64) -> Result<[f64; 3]> {
    let (a, b, c) = (s.a, s.b, s.c);
    let q = |k: usize, x: &[f64; 3]| a - b * x[k] + c * (x[0] + x[1] + x[2]) / 3.0;
    let hi = 4.0 * a / (b - c) + mc;
    let mut x = [s.pre_price(); 3];
    // Golden section cannot resolve a maximizer much below sqrt(eps).
    let tol = 1e-10 * hi;
    for _ in 0..2_000 {
        let old = x;
        let y = x;
        x[0] = golden_max(
            |t| {
                let mut z = y;
                z[0] = t;
                Ok((t - mc) * q(0, &z))
            },
            0.0,
            hi,
            tol,
        )?
        .0;
        for _ in 0..200 {
            let inner = x;
            for k in 1..3 {
                let y = x;
                x[k] = golden_max(
                    |t| {
                        let mut z = y;
                        z[k] = t;
                        Ok((z[1] - mc) * q(1, &z) + (z[2] - mc) * q(2, &z))
                    },
                    0.0,
                    hi,
                    tol,
                )?
                .0;
            }
            if (1..3).all(|k| (x[k] - inner[k]).abs() <= 1e-9 * hi) {
                break;
            }
        }
        if (0..3).all(|k| (x[k] - old[k]).abs() <= 1e-9 * hi) {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        iterations: 2_000,
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> MergerScenario {
        MergerScenario::new(20.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn cost_inverts_mean_price() {
        let s = base();
        let mc = estimate_marginal_cost(&s);
        assert!((mc - 0.704).abs() < 5e-4, "{mc}");
        let (bt, ct) = (s.b - s.c / 3.0, s.c / 3.0);
        let nash_mean = (s.a + bt * mc) / (2.0 * bt - 2.0 * ct);
        assert!((nash_mean - s.pre_price()).abs() < 1e-12);
    }

    #[test]
    fn pre_price_matches_symmetric_formula() {
        let s = base();
        let x = crate::markets::symmetric_price(3, s.a, s.b, s.c, s.alpha_pre()).unwrap();
        assert!((x - s.pre_price()).abs() < 1e-12);
    }

    #[test]
    fn closed_prediction_matches_reply_system() {
        let s = base();
        let mc = estimate_marginal_cost(&s);
        let p = economist_prediction(&s).unwrap();
        let q = nash_with_cost(&s, mc).unwrap();
        assert!((p.firm1 - q.firm1).abs() < 1e-10 && (p.merged - q.merged).abs() < 1e-10);
    }

    #[test]
    fn gap_formulas_match_differences() {
        let s = base();
        let o = postmerger_outcomes(&s).unwrap();
        let p = &o.prices;
        let g1 = p.post_alpha_pre.firm1 - p.post_mc.firm1;
        let g23 = p.post_alpha_pre.merged - p.post_mc.merged;
        assert!((firm1_gap(&s).unwrap() - g1).abs() < 1e-10);
        assert!((merged_gap(&s).unwrap() - g23).abs() < 1e-10);
    }

    #[test]
    fn biases() {
        let s = base();
        assert!((s.alpha_pre() - 0.9544).abs() < 1e-4);
        assert!((s.alpha_post() - 0.9487).abs() < 1e-4);
    }

    #[test]
    fn two_good_pricing_is_symmetric() {
        let s = base();
        let mc = estimate_marginal_cost(&s);
        let x = two_good_nash_with_cost(&s, mc).unwrap();
        let p = nash_with_cost(&s, mc).unwrap();
        assert!((x[1] - x[2]).abs() < 1e-6 * p.merged);
        assert!((x[0] - p.firm1).abs() < 1e-6 * p.firm1);
        assert!((x[1] - p.merged).abs() < 1e-6 * p.merged);
    }
}
