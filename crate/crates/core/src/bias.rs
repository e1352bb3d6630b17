//! Analyst bias: the distortion applied to the estimated demand sensitivity.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the bias function `f(s, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasKind {
    /// `f(s, alpha) = alpha * s`
    Multiplicative,
}

/// Bias function together with its open domain `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasFunction {
    pub kind: BiasKind,
    /// Open interval `(lo, hi)`; must contain 1 and lie in `(0, inf)`.
    pub domain: (f64, f64),
}

impl Default for BiasFunction {
    fn default() -> Self {
        Self {
            kind: BiasKind::Multiplicative,
            domain: (0.0, f64::INFINITY),
        }
    }
}

impl BiasFunction {
    pub fn multiplicative(lo: f64, hi: f64) -> Result<Self> {
        if !((0.0..1.0).contains(&lo) && hi > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "bias domain ({lo}, {hi}) must contain 1 and lie in (0, inf)"
            )));
        }
        Ok(Self {
            kind: BiasKind::Multiplicative,
            domain: (lo, hi),
        })
    }

    pub fn apply(&self, s: f64, alpha: f64) -> f64 {
        match self.kind {
            BiasKind::Multiplicative => alpha * s,
        }
    }

    /// `d f / d s`, used by the perceived second derivative.
    pub fn slope(&self, _s: f64, alpha: f64) -> f64 {
        match self.kind {
            BiasKind::Multiplicative => alpha,
        }
    }

    /// The alpha solving `dpi_dx + dpi_dq * f(s, alpha) = 0`, if any.
    pub fn invert_foc(&self, dpi_dx: f64, dpi_dq: f64, s: f64) -> Option<f64> {
        match self.kind {
            BiasKind::Multiplicative => {
                let denom = dpi_dq * s;
                if denom == 0.0 || !denom.is_finite() {
                    return None;
                }
                let alpha = -dpi_dx / denom;
                alpha.is_finite().then_some(alpha)
            }
        }
    }

    pub fn in_domain(&self, alpha: f64) -> bool {
        alpha > self.domain.0 && alpha < self.domain.1
    }
}

/// One bias per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasProfile {
    alpha: Vec<f64>,
    #[serde(default)]
    function: BiasFunction,
}

impl BiasProfile {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        Self::with_function(alpha, BiasFunction::default())
    }

    pub fn with_function(alpha: Vec<f64>, function: BiasFunction) -> Result<Self> {
        for (i, &a) in alpha.iter().enumerate() {
            if !(a > 0.0) || !function.in_domain(a) {
                return Err(Error::InvalidParameter(format!(
                    "alpha[{i}] = {a} is outside the bias domain"
                )));
            }
        }
        Ok(Self { alpha, function })
    }

    pub fn unbiased(n: usize) -> Self {
        Self {
            alpha: vec![1.0; n],
            function: BiasFunction::default(),
        }
    }

    pub fn function(&self) -> &BiasFunction {
        &self.function
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.alpha
    }

    /// Copy with player `i`'s bias replaced.
    pub fn with(&self, i: usize, alpha_i: f64) -> Result<Self> {
        let mut a = self.alpha.clone();
        a[i] = alpha_i;
        Self::with_function(a, self.function)
    }
}

impl Deref for BiasProfile {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_positive() {
        assert!(BiasProfile::new(vec![0.6, 0.0]).is_err());
        assert!(BiasProfile::new(vec![0.6, -1.0]).is_err());
        assert!(BiasProfile::with_function(vec![3.0], BiasFunction::multiplicative(0.1, 2.0).unwrap()).is_err());
    }

    #[test]
    fn foc_inversion() {
        let f = BiasFunction::default();
        // q - alpha * x * b = 0 with q = 15, x = 25, b = 1
        assert_eq!(f.invert_foc(15.0, 25.0, -1.0), Some(0.6));
        assert_eq!(f.invert_foc(1.0, 0.0, -1.0), None);
    }

    proptest! {
        #[test]
        fn multiplicative_laws(s in -1e3f64..1e3, a in 0.01f64..10.0, b in 0.01f64..10.0) {
            let f = BiasFunction::default();
            prop_assert_eq!(f.apply(s, 1.0), s);
            if s != 0.0 {
                prop_assert_eq!(f.apply(s, a).signum(), s.signum());
                if a < b {
                    prop_assert!(f.apply(s, a).abs() < f.apply(s, b).abs());
                }
            }
        }
    }
}
