//! Perceived best replies: the zero of the biased FOC in one coordinate.

use crate::bias::BiasFunction;
use crate::calculus::{fd_step2, inside, marginal};
use crate::error::{Error, Result};
use crate::game::GameSpec;

const MAX_EXPANSIONS: usize = 200;
const MAX_NEWTON: usize = 100;

struct Line<'a> {
    game: &'a GameSpec,
    f: &'a BiasFunction,
    alpha: f64,
    y: Vec<f64>,
    i: usize,
}

impl Line<'_> {
    fn g(&mut self, t: f64) -> Result<f64> {
        self.y[self.i] = t;
        marginal(self.game, self.f, self.alpha, &self.y, self.i)
    }

    fn dg(&mut self, t: f64) -> Result<f64> {
        let iv = self.game.interval(self.i);
        let h = fd_step2(t);
        let c = inside(iv, t, h);
        let up = self.g(c + h)?;
        let dn = self.g(c - h)?;
        Ok((up - dn) / (2.0 * h))
    }
}

/// Perceived best reply of player `i` with the other coordinates of `x`
/// held fixed. `x[i]` is only used as the starting point.
pub(crate) fn best_reply(
    game: &GameSpec,
    f: &BiasFunction,
    alpha_i: f64,
    x: &[f64],
    i: usize,
) -> Result<f64> {
    let iv = game.interval(i);
    let mut line = Line {
        game,
        f,
        alpha: alpha_i,
        y: x.to_vec(),
        i,
    };
    let t0 = iv.clamp(if x[i].is_finite() { x[i] } else { iv.reference_point() });
    let g0 = line.g(t0)?;
    if g0 == 0.0 {
        return check_soc(&mut line, t0);
    }
    // Bracket the sign change, expanding from t0 in the uphill direction.
    let dir = g0.signum();
    let bound = if dir > 0.0 { iv.hi } else { iv.lo };
    let d0 = line.dg(t0)?;
    let scale = t0.abs().max(1.0);
    let mut step = if d0 < 0.0 {
        (1.5 * g0 / -d0).abs().max(1e-6 * scale)
    } else {
        0.25 * scale
    };
    let (mut a, mut ga) = (t0, g0);
    let (b, gb) = 'expand: {
        for _ in 0..MAX_EXPANSIONS {
            let mut b = a + dir * step;
            let at_bound = if dir > 0.0 { b >= bound } else { b <= bound };
            if at_bound {
                b = bound;
            }
            let gb = line.g(b)?;
            if gb.signum() != dir {
                break 'expand (b, gb);
            }
            if at_bound {
                // Perceived profit keeps improving up to the bound.
                return Ok(bound);
            }
            a = b;
            ga = gb;
            step *= 2.0;
        }
        return Err(Error::NoSignChange { player: i });
    };
    if gb == 0.0 {
        return check_soc(&mut line, b);
    }
    // Safeguarded Newton on the bracket: g(pos) > 0 > g(neg).
    let (mut pos, mut neg) = if ga > 0.0 { (a, b) } else { (b, a) };
    let mut t = 0.5 * (a + b);
    let mut gt = line.g(t)?;
    for _ in 0..MAX_NEWTON {
        if gt == 0.0 {
            break;
        }
        if gt > 0.0 {
            pos = t;
        } else {
            neg = t;
        }
        let (lo, hi) = if pos < neg { (pos, neg) } else { (neg, pos) };
        let d = line.dg(t)?;
        let mut next = if d < 0.0 { t - gt / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let tol = 4.0 * f64::EPSILON * next.abs().max(1.0);
        let done = (next - t).abs() <= tol || hi - lo <= tol;
        t = next;
        if done {
            break;
        }
        gt = line.g(t)?;
    }
    check_soc(&mut line, t)
}

fn check_soc(line: &mut Line<'_>, t: f64) -> Result<f64> {
    let d = line.dg(t)?;
    if d < 0.0 {
        Ok(t)
    } else {
        Err(Error::SocViolation {
            player: line.i,
            value: d,
        })
    }
}

/// Perceived best reply of player `i` to the opponents' strategies
/// `x_minus_i` (the profile with entry `i` removed).
pub fn perceived_best_reply(
    game: &GameSpec,
    alpha_i: f64,
    x_minus_i: &[f64],
    i: usize,
) -> Result<f64> {
    let n = game.n();
    if x_minus_i.len() + 1 != n || i >= n {
        return Err(Error::InvalidParameter("opponent profile length mismatch".into()));
    }
    let f = BiasFunction::default();
    if !f.in_domain(alpha_i) {
        return Err(Error::InvalidParameter(format!("alpha {alpha_i} outside the bias domain")));
    }
    let mut x = Vec::with_capacity(n);
    x.extend_from_slice(&x_minus_i[..i]);
    x.push(game.interval(i).reference_point());
    x.extend_from_slice(&x_minus_i[i..]);
    game.check_profile(&x)?;
    best_reply(game, &f, alpha_i, &x, i)
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

    #[test]
    fn motivating_replies() {
        let g = motivating();
        let r = perceived_best_reply(&g, 0.6, &[25.0], 0).unwrap();
        assert!((r - 25.0).abs() < 1e-7, "{r}");
        let r = perceived_best_reply(&g, 1.0, &[17.0], 0).unwrap();
        assert!((r - 16.8).abs() < 1e-7, "{r}");
    }

    #[test]
    fn boundary_maximizer() {
        // demand increasing in own strategy on a bounded interval
        let g = GameSpec::new(CustomGame::new(
            vec![Interval::new(0.0, 3.0).unwrap()],
            |_, x| 1.0 + x[0],
            |_, own, q| q - 0.1 * own,
        ))
        .unwrap();
        assert_eq!(perceived_best_reply(&g, 1.0, &[], 0).unwrap(), 3.0);
    }

    #[test]
    fn unbounded_improvement() {
        let g = GameSpec::new(CustomGame::new(
            vec![Interval::non_negative()],
            |_, x| 1.0 + x[0],
            |_, _, q| q,
        ))
        .unwrap();
        assert!(matches!(
            perceived_best_reply(&g, 1.0, &[], 0),
            Err(Error::NoSignChange { player: 0 })
        ));
    }

    #[test]
    fn convex_root_is_rejected() {
        // pi = x (x - 1) is convex, so the interior critical point is a minimum
        let g = GameSpec::new(CustomGame::new(
            vec![Interval::new(-5.0, 5.0).unwrap()],
            |_, x| x[0] - 1.0,
            |_, own, q| own * q,
        ))
        .unwrap();
        let r = perceived_best_reply(&g, 1.0, &[], 0);
        // perceived payoff is convex; best reply is a boundary point
        assert!(matches!(r, Ok(v) if v == 5.0 || v == -5.0), "{r:?}");
    }
}
