//! Three firms on a circle: `q_i = 120 - x_i - x_{i+1} - eps x_{i+2}`,
//! indices mod 3, `pi_i = x_i q_i`, prices in `[0, 120]`.
//!
//! Lowering one price raises the reply of the firm two steps ahead much more
//! than the reply of the next firm, so the secondary adaptation of the next
//! firm points the other way.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameKind, GameModel, GameSpec, Interval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleGame {
    pub intercept: f64,
    pub epsilon: f64,
}

impl CircleGame {
    pub fn new(intercept: f64, epsilon: f64) -> Result<Self> {
        if !(intercept > 0.0) || !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter("need intercept > 0 and 0 <= eps < 1".into()));
        }
        Ok(Self { intercept, epsilon })
    }

    pub fn standard() -> Self {
        Self::new(120.0, 0.01).expect("valid parameters")
    }

    pub fn spec(&self) -> GameSpec {
        GameSpec::new(self.clone()).expect("validated game")
    }

    fn weight(&self, i: usize, j: usize) -> f64 {
        match (j + 3 - i) % 3 {
            0 | 1 => 1.0,
            _ => self.epsilon,
        }
    }
}

impl GameModel for CircleGame {
    fn players(&self) -> usize {
        3
    }
    fn interval(&self, _i: usize) -> Interval {
        Interval::new(0.0, self.intercept).expect("positive intercept")
    }
    fn demand(&self, i: usize, x: &[f64]) -> f64 {
        self.intercept - (0..3).map(|j| self.weight(i, j) * x[j]).sum::<f64>()
    }
    fn profit(&self, _i: usize, own: f64, demand: f64) -> f64 {
        own * demand
    }
    fn kind(&self) -> GameKind {
        GameKind::CircleExample
    }
    fn profit_partials(&self, _i: usize, own: f64, demand: f64) -> Option<(f64, f64)> {
        Some((demand, own))
    }
    fn demand_partial(&self, i: usize, j: usize, _x: &[f64]) -> Option<f64> {
        Some(-self.weight(i, j))
    }
}
