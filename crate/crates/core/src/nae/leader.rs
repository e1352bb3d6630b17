//! Stackelberg-leader strategies: player i maximizes true payoff while the
//! opponents re-equilibrate under their biases.

use serde::{Deserialize, Serialize};

use super::constrained::solve_pinned;
use super::NaeSettings;
use crate::bias::{BiasFunction, BiasProfile};
use crate::calculus::inside;
use crate::equilibrium::{alpha_eq, default_start, SolverSettings};
use crate::error::{Error, Result};
use crate::game::{GameSpec, Interval};
use crate::optim::{brent_root, golden_max};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackelbergResult {
    pub player: usize,
    pub x_i: f64,
    pub value: f64,
    /// The (x_i, alpha_-i)-equilibrium at the optimum.
    pub profile: Vec<f64>,
    pub evaluations: usize,
}

pub(crate) struct Leader<'a> {
    pub game: &'a GameSpec,
    pub f: &'a BiasFunction,
    pub alpha: &'a [f64],
    pub i: usize,
    pub s: &'a SolverSettings,
    pub warm: Vec<f64>,
    /// Fallback start for followers, never overwritten.
    pub anchor: Vec<f64>,
    pub evals: usize,
}

const TIE: f64 = 1e-12;

impl Leader<'_> {
    fn iv(&self) -> Interval {
        self.game.interval(self.i)
    }

    pub fn profile(&mut self, t: f64) -> Result<Vec<f64>> {
        self.evals += 1;
        let warm = solve_pinned(self.game, self.f, self.alpha, self.i, t, &self.warm, self.s);
        // A follower stuck on a bound may be a degenerate corner equilibrium
        // inherited from the warm start; prefer an interior one if it exists.
        let x = match warm {
            Ok(x) if self.interior(&x) => x,
            first => {
                let retry = solve_pinned(self.game, self.f, self.alpha, self.i, t, &self.anchor, self.s);
                match (first, retry) {
                    (_, Ok(y)) if self.interior(&y) => y,
                    (Ok(x), _) => x,
                    (Err(_), Ok(y)) => y,
                    (Err(e), Err(_)) => return Err(e),
                }
            }
        };
        self.warm.clone_from(&x);
        Ok(x)
    }

    fn interior(&self, x: &[f64]) -> bool {
        (0..x.len()).filter(|&j| j != self.i).all(|j| {
            let iv = self.game.interval(j);
            x[j] > iv.lo && x[j] < iv.hi
        })
    }

    fn value(&mut self, t: f64) -> Result<f64> {
        let x = self.profile(t)?;
        Ok(self.game.payoff(self.i, &x))
    }

    fn slope(&mut self, t: f64) -> Result<f64> {
        let h = 1e-5 * t.abs().max(1e-6);
        let c = inside(self.iv(), t, h);
        let up = self.value(c + h)?;
        let dn = self.value(c - h)?;
        Ok((up - dn) / (2.0 * h))
    }

    fn grid(&self, reference: f64, points: usize) -> Vec<f64> {
        let iv = self.iv();
        let m = points.max(5);
        if iv.is_bounded() {
            return (0..m)
                .map(|k| iv.lo + (iv.hi - iv.lo) * k as f64 / (m - 1) as f64)
                .collect();
        }
        let half = (m / 2) as i32;
        let geo = |k: i32| 2f64.powf(k as f64 / 4.0);
        let mut g = Vec::new();
        match (iv.lo.is_finite(), iv.hi.is_finite()) {
            (true, false) => {
                let d = if reference > iv.lo { reference - iv.lo } else { iv.lo.abs().max(1.0) };
                g.push(iv.lo);
                g.extend((-half..=half).map(|k| iv.lo + d * geo(k)));
            }
            (false, true) => {
                let d = if reference < iv.hi { iv.hi - reference } else { iv.hi.abs().max(1.0) };
                g.extend((-half..=half).rev().map(|k| iv.hi - d * geo(k)));
                g.push(iv.hi);
            }
            _ => {
                let d = reference.abs().max(1.0);
                g.extend((-half..=half).rev().map(|k| reference - d * geo(k)));
                g.push(reference);
                g.extend((-half..=half).map(|k| reference + d * geo(k)));
            }
        }
        g
    }

    /// Coarse scan, golden-section refinement and a derivative polish.
    pub fn scan(&mut self, reference: f64, points: usize) -> Result<(f64, f64)> {
        let iv = self.iv();
        let mut ts = self.grid(reference, points);
        let mut vs = Vec::with_capacity(ts.len());
        let mut last_err = None;
        let eval = |me: &mut Self, t: f64, err: &mut Option<Error>| match me.value(t) {
            Ok(v) => v,
            Err(e) => {
                *err = Some(e);
                f64::NEG_INFINITY
            }
        };
        for &t in &ts {
            vs.push(eval(self, t, &mut last_err));
        }
        // Extend the scan while the best point sits at an open end.
        for _ in 0..160 {
            let k = argmax(&vs);
            if vs[k] == f64::NEG_INFINITY {
                return Err(last_err.unwrap_or(Error::UnboundedObjective { player: self.i }));
            }
            let t = if k + 1 == ts.len() && !iv.hi.is_finite() {
                let last = ts[k];
                let base = if iv.lo.is_finite() { iv.lo } else { reference };
                base + (last - base) * 2f64.powf(0.25) + 1e-9
            } else if k == 0 && !iv.lo.is_finite() {
                let first = ts[0];
                let base = if iv.hi.is_finite() { iv.hi } else { reference };
                base - (base - first) * 2f64.powf(0.25) - 1e-9
            } else {
                break;
            };
            if t.abs() > 1e15 * reference.abs().max(1.0) {
                return Err(Error::UnboundedObjective { player: self.i });
            }
            let v = eval(self, t, &mut last_err);
            if k == 0 {
                ts.insert(0, t);
                vs.insert(0, v);
            } else {
                ts.push(t);
                vs.push(v);
            }
        }
        let k = argmax(&vs);
        let a = ts[k.saturating_sub(1)];
        let b = ts[(k + 1).min(ts.len() - 1)];
        let (mut bt, mut bv) = (ts[k], vs[k]);
        if b > a {
            let xtol = 1e-4 * (b - a);
            self.warm_at(bt)?;
            let (gt, gv) = golden_max(|t| self.value(t), a, b, xtol)?;
            if gv > bv + TIE * bv.abs().max(1.0) || (gv >= bv - TIE * bv.abs().max(1.0) && gt < bt) {
                bt = gt;
                bv = gv;
            }
            let w = (4.0 * xtol).max(1e-6 * bt.abs().max(1.0));
            if let Some((pt, pv)) = self.polish(iv.clamp(bt - w), iv.clamp(bt + w))? {
                if pv >= bv - TIE * bv.abs().max(1.0) {
                    bt = pt;
                    bv = pv;
                }
            }
        }
        Ok((bt, bv))
    }

    fn warm_at(&mut self, t: f64) -> Result<()> {
        self.profile(t).map(|_| ())
    }

    /// Root of the payoff slope on `[a, b]`, when it changes sign there.
    fn polish(&mut self, a: f64, b: f64) -> Result<Option<(f64, f64)>> {
        if b <= a {
            return Ok(None);
        }
        let da = self.slope(a)?;
        let db = self.slope(b)?;
        if !(da > 0.0 && db < 0.0) {
            return Ok(None);
        }
        let xtol = 1e-12 * a.abs().max(b.abs()).max(1.0);
        let t = brent_root(|t| self.slope(t), a, b, da, db, xtol, 60)?;
        let v = self.value(t)?;
        Ok(Some((t, v)))
    }

    /// Follows the payoff slope from `t0`; `None` if the local model breaks
    /// down and a full scan is needed.
    pub fn local(&mut self, t0: f64) -> Result<Option<(f64, f64)>> {
        let iv = self.iv();
        let v0 = self.value(t0)?;
        let d0 = self.slope(t0)?;
        let scale = t0.abs().max(1.0);
        if d0 == 0.0 {
            return Ok(Some((t0, v0)));
        }
        let dir = d0.signum();
        let h = 1e-3 * scale;
        let t1 = iv.clamp(t0 + dir * h);
        if t1 == t0 {
            return Ok(Some((t0, v0)));
        }
        let d1 = self.slope(t1)?;
        let curv = (d1 - d0) / (t1 - t0);
        if !(curv < 0.0) {
            return Ok(None);
        }
        let mut step = (1.5 * d0 / curv).abs().max(1e-6 * scale);
        let (mut a, mut da) = (t0, d0);
        for _ in 0..60 {
            let raw = a + dir * step;
            let b = iv.clamp(raw);
            let db = self.slope(b)?;
            if db.signum() != dir {
                let (lo, hi, dlo, dhi) = if dir > 0.0 { (a, b, da, db) } else { (b, a, db, da) };
                let xtol = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
                let t = brent_root(|t| self.slope(t), lo, hi, dlo, dhi, xtol, 60)?;
                let v = self.value(t)?;
                if v + TIE * v.abs().max(1.0) < v0 {
                    return Ok(None);
                }
                return Ok(Some((t, v)));
            }
            if b != raw {
                return Ok(None);
            }
            a = b;
            da = db;
            step *= 2.0;
        }
        Ok(None)
    }
}

fn argmax(vs: &[f64]) -> usize {
    let mut k = 0;
    for (j, &v) in vs.iter().enumerate() {
        if v > vs[k] + TIE * vs[k].abs().max(1.0) {
            k = j;
        }
    }
    k
}

/// Best Stackelberg-leader strategy of player `i` against `alpha` (entry i
/// ignored).
pub fn stackelberg_best(
    game: &GameSpec,
    i: usize,
    alpha: &BiasProfile,
    settings: &NaeSettings,
) -> Result<StackelbergResult> {
    let n = game.n();
    if i >= n || alpha.len() != n {
        return Err(Error::InvalidParameter("player index or bias length mismatch".into()));
    }
    let f = alpha.function();
    let mut reference_alpha = alpha.to_vec();
    reference_alpha[i] = 1.0;
    let start = settings
        .inner
        .initial
        .clone()
        .unwrap_or_else(|| default_start(game));
    let warm = alpha_eq(game, f, &reference_alpha, &start, &settings.inner)
        .map(|s| s.x)
        .unwrap_or(start);
    let mut leader = Leader {
        game,
        f,
        alpha,
        i,
        s: &settings.inner,
        anchor: warm.clone(),
        warm,
        evals: 0,
    };
    let (t, v) = leader.scan(leader.anchor[i], settings.scan_points)?;
    let profile = leader.profile(t)?;
    Ok(StackelbergResult {
        player: i,
        x_i: t,
        value: v,
        profile,
        evaluations: leader.evals,
    })
}
