//! alpha-equilibria: profiles where every player's biased FOC holds.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bias::{BiasFunction, BiasProfile};
use crate::calculus::{marginal, marginal_slope};
use crate::error::{Error, Result};
use crate::game::{GameSpec, StrategyProfile};
use crate::reply::best_reply;

/// Settings for the damped simultaneous best-reply iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub multi_starts: usize,
    pub seed: u64,
    pub initial: Option<Vec<f64>>,
    /// Try Newton steps on the FOC system once the iterate is interior.
    pub newton_polish: bool,
    /// Iterations without a 10% residual improvement that count as a stall.
    pub stall_window: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-10,
            max_iterations: 10_000,
            multi_starts: 8,
            seed: 0,
            initial: None,
            newton_polish: true,
            stall_window: 200,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "damping {} outside (0, 1]",
                self.damping
            )));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "tolerance and max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A solved alpha-equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub alpha: Vec<f64>,
    pub x: StrategyProfile,
    pub demands: Vec<f64>,
    pub profits: Vec<f64>,
    /// Perceived second derivative per player.
    pub soc: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Number of starting points tried (1 when the first run converged).
    pub starts: usize,
}

pub(crate) struct Solved {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub starts: usize,
}

/// FOC system with an optional pinned coordinate.
pub(crate) struct System<'a> {
    pub game: &'a GameSpec,
    pub f: &'a BiasFunction,
    pub alpha: &'a [f64],
    pub pinned: Option<usize>,
}

impl System<'_> {
    fn free(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.game.n()).filter(move |&i| Some(i) != self.pinned)
    }

    /// Largest projected FOC violation over free players.
    pub fn residual(&self, x: &[f64]) -> Result<f64> {
        let mut r: f64 = 0.0;
        for i in self.free() {
            let g = marginal(self.game, self.f, self.alpha[i], x, i)?;
            let iv = self.game.interval(i);
            let v = if x[i] <= iv.lo && g < 0.0 || x[i] >= iv.hi && g > 0.0 {
                0.0
            } else {
                g.abs()
            };
            r = r.max(v);
        }
        Ok(r)
    }

    fn jacobi_step(&self, x: &[f64], damping: f64) -> Result<Vec<f64>> {
        let mut next = x.to_vec();
        for i in self.free() {
            let br = best_reply(self.game, self.f, self.alpha[i], x, i)?;
            let iv = self.game.interval(i);
            // Damping would only approach a corner reply geometrically.
            next[i] = if br == iv.lo || br == iv.hi {
                br
            } else {
                x[i] + damping * (br - x[i])
            };
        }
        Ok(next)
    }

    /// Newton iterations on the free FOCs. Returns the improved point and
    /// residual, or `None` when Newton does not apply or fails to improve.
    fn newton(&self, x: &[f64], tol: f64) -> Option<(Vec<f64>, f64)> {
        self.newton_best(x, tol).filter(|(_, r)| *r <= tol)
    }

    /// Tightens an already converged point as far as Newton gets.
    pub fn refine(&self, x: Vec<f64>, tol: f64) -> Vec<f64> {
        self.newton_best(&x, tol).map_or(x, |(y, _)| y)
    }

    fn newton_best(&self, x: &[f64], tol: f64) -> Option<(Vec<f64>, f64)> {
        let idx: Vec<usize> = self.free().collect();
        let m = idx.len();
        if m == 0 {
            return None;
        }
        let interior = |y: &[f64]| {
            idx.iter().all(|&i| {
                let iv = self.game.interval(i);
                y[i] > iv.lo && y[i] < iv.hi
            })
        };
        if !interior(x) {
            return None;
        }
        let mut x = x.to_vec();
        let mut r = self.residual(&x).ok()?;
        for _ in 0..20 {
            if r <= tol {
                return Some((x, r));
            }
            let mut g = DVector::zeros(m);
            let mut jac = DMatrix::zeros(m, m);
            for (a, &i) in idx.iter().enumerate() {
                g[a] = marginal(self.game, self.f, self.alpha[i], &x, i).ok()?;
                for (b, &j) in idx.iter().enumerate() {
                    jac[(a, b)] = marginal_slope(self.game, self.f, self.alpha[i], &x, i, j).ok()?;
                }
            }
            let delta = jac.lu().solve(&(-g))?;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let mut y = x.clone();
                for (a, &i) in idx.iter().enumerate() {
                    y[i] = self.game.interval(i).clamp(x[i] + lambda * delta[a]);
                }
                if let Ok(ry) = self.residual(&y) {
                    if ry < r {
                        x = y;
                        r = ry;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted || !interior(&x) {
                break;
            }
        }
        Some((x, r))
    }

    fn run(&self, start: &[f64], s: &SolverSettings) -> (Result<Vec<f64>>, f64, usize) {
        let mut x = start.to_vec();
        let mut best = f64::INFINITY;
        let mut mark = f64::INFINITY;
        let mut last_gain = 0usize;
        for it in 0..=s.max_iterations {
            let r = match self.residual(&x) {
                Ok(r) => r,
                Err(e) => return (Err(e), best, it),
            };
            if r <= s.tolerance {
                return (Ok(x), r, it);
            }
            best = best.min(r);
            if r < 0.9 * mark {
                mark = r;
                last_gain = it;
            } else if it - last_gain > s.stall_window {
                break;
            }
            if s.newton_polish && (it < 2 || it % 10 == 0) {
                if let Some((y, ry)) = self.newton(&x, s.tolerance) {
                    return (Ok(y), ry, it);
                }
            }
            if it == s.max_iterations {
                break;
            }
            x = match self.jacobi_step(&x, s.damping) {
                Ok(y) => y,
                Err(e) => return (Err(e), best, it),
            };
        }
        (
            Err(Error::NonConvergence {
                iterations: s.max_iterations,
                residual: best,
            }),
            best,
            s.max_iterations,
        )
    }

    fn random_start(&self, around: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut x = around.to_vec();
        for i in self.free() {
            let iv = self.game.interval(i);
            let c = iv.clamp(around[i]);
            let s = 2.0 * c.abs().max(1.0);
            let lo = if iv.lo.is_finite() { iv.lo.max(c - s) } else { c - s };
            let hi = if iv.hi.is_finite() { iv.hi.min(c + s) } else { c + s };
            x[i] = rng.random_range(lo..=hi);
        }
        x
    }

    /// Solves from `start`, falling back to seeded restarts.
    pub fn solve(&self, start: &[f64], s: &SolverSettings) -> Result<Solved> {
        let mut x0: Vec<f64> = start.to_vec();
        for i in self.free() {
            let iv = self.game.interval(i);
            x0[i] = if x0[i].is_finite() {
                iv.clamp(x0[i])
            } else {
                iv.reference_point()
            };
        }
        let (res, r, it) = self.run(&x0, s);
        let mut total = it;
        let mut best = r;
        let mut last_err = match res {
            Ok(x) => {
                return self.finish(x, r, total, 1);
            }
            Err(e) => e,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        for k in 0..s.multi_starts {
            let y = self.random_start(&x0, &mut rng);
            let (res, r, it) = self.run(&y, s);
            total += it;
            best = best.min(r);
            match res {
                Ok(x) => return self.finish(x, r, total, k + 2),
                Err(e) => last_err = e,
            }
        }
        log::debug!("alpha-equilibrium solve failed: {last_err}");
        match last_err {
            Error::NonConvergence { .. } => Err(Error::NonConvergence {
                iterations: total,
                residual: best,
            }),
            e => Err(e),
        }
    }

    fn finish(&self, x: Vec<f64>, residual: f64, iterations: usize, starts: usize) -> Result<Solved> {
        for i in self.free() {
            let iv = self.game.interval(i);
            if x[i] > iv.lo && x[i] < iv.hi {
                let d = marginal_slope(self.game, self.f, self.alpha[i], &x, i, i)?;
                if !(d < 0.0) {
                    return Err(Error::SocViolation { player: i, value: d });
                }
            }
        }
        Ok(Solved {
            x,
            residual,
            iterations,
            starts,
        })
    }
}

/// Default starting profile: the interval reference points.
pub(crate) fn default_start(game: &GameSpec) -> Vec<f64> {
    game.intervals().iter().map(|iv| iv.reference_point()).collect()
}

/// Fast path used by the NAE machinery.
pub(crate) fn alpha_eq(
    game: &GameSpec,
    f: &BiasFunction,
    alpha: &[f64],
    start: &[f64],
    s: &SolverSettings,
) -> Result<Solved> {
    System {
        game,
        f,
        alpha,
        pinned: None,
    }
    .solve(start, s)
}

/// Finds an alpha-equilibrium by damped simultaneous perceived-best-reply
/// iteration.
pub fn solve_alpha_equilibrium(
    game: &GameSpec,
    bias: &BiasProfile,
    settings: &SolverSettings,
) -> Result<SolveReport> {
    settings.validate()?;
    let n = game.n();
    if bias.len() != n {
        return Err(Error::InvalidParameter("bias profile length mismatch".into()));
    }
    let start = match &settings.initial {
        Some(x) => {
            game.check_profile(x)?;
            x.clone()
        }
        None => default_start(game),
    };
    let f = bias.function();
    let solved = alpha_eq(game, f, bias, &start, settings)?;
    let soc = (0..n)
        .map(|i| marginal_slope(game, f, bias[i], &solved.x, i, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(SolveReport {
        alpha: bias.to_vec(),
        demands: game.demands(&solved.x),
        profits: game.payoffs(&solved.x),
        x: StrategyProfile(solved.x),
        soc,
        residual: solved.residual,
        iterations: solved.iterations,
        starts: solved.starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{CustomGame, Interval};

    fn motivating() -> GameSpec {
        GameSpec::new(CustomGame::new(
            vec![Interval::non_negative(); 2],
            |i, x| 20.0 - x[i] + 0.8 * x[1 - i],
            |_, own, q| own * q,
        ))
        .unwrap()
    }

    fn loose() -> SolverSettings {
        // central differences cannot resolve 1e-10 on profits of order 300
        SolverSettings {
            tolerance: 1e-7,
            ..Default::default()
        }
    }

    #[test]
    fn table_cells_by_differences() {
        let g = motivating();
        let r = solve_alpha_equilibrium(&g, &BiasProfile::new(vec![0.6, 0.6]).unwrap(), &loose()).unwrap();
        assert!((r.x[0] - 25.0).abs() < 1e-6 && (r.x[1] - 25.0).abs() < 1e-6);
        assert!((r.profits[0] - 375.0).abs() < 1e-4);
        assert!(r.soc.iter().all(|&d| d < 0.0));
    }

    #[test]
    fn pure_jacobi_converges() {
        let g = motivating();
        let s = SolverSettings {
            newton_polish: false,
            ..loose()
        };
        let r = solve_alpha_equilibrium(&g, &BiasProfile::new(vec![1.0, 1.0]).unwrap(), &s).unwrap();
        assert!((r.x[0] - 50.0 / 3.0).abs() < 1e-6);
        assert!(r.iterations > 5);
    }

    #[test]
    fn bad_settings_rejected() {
        let g = motivating();
        let s = SolverSettings {
            damping: 0.0,
            ..Default::default()
        };
        assert!(solve_alpha_equilibrium(&g, &BiasProfile::unbiased(2), &s).is_err());
    }

    #[test]
    fn iteration_cap_reports_best_residual() {
        let g = motivating();
        let s = SolverSettings {
            newton_polish: false,
            max_iterations: 3,
            multi_starts: 0,
            ..loose()
        };
        match solve_alpha_equilibrium(&g, &BiasProfile::unbiased(2), &s) {
            Err(Error::NonConvergence { residual, .. }) => assert!(residual.is_finite()),
            other => panic!("{other:?}"),
        }
    }
}
