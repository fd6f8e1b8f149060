//! Simultaneous-perturbation gradient estimates and gain schedules.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Missing JSON fields take their default values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    /// Exponent of the gain sequence `a_n`.
    pub eps: f64,
    /// Exponent of the perturbation sequence `c_n`.
    pub lambda: f64,
    #[serde(rename = "A")]
    pub big_a: f64,
    /// Ascent steps per best response.
    #[serde(rename = "N")]
    pub iterations: usize,
    pub episodes_per_eval: usize,
    /// Independent ascents per best response. With more than one, each final
    /// iterate is scored on `10 * episodes_per_eval` common episodes and the
    /// best is kept.
    pub restarts: usize,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            c: 10.0,
            eps: 0.101,
            lambda: 0.602,
            big_a: 100.0,
            iterations: 50,
            episodes_per_eval: 100,
            restarts: 1,
        }
    }
}

impl SpsaConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.a, self.c, self.eps, self.lambda];
        if positive.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidConfig("SPSA a, c, eps and lambda must be positive".into()));
        }
        if !(self.big_a >= 0.0) {
            return Err(Error::InvalidConfig("SPSA A must be nonnegative".into()));
        }
        if self.iterations == 0 || self.episodes_per_eval == 0 || self.restarts == 0 {
            return Err(Error::InvalidConfig(
                "SPSA N, episodes_per_eval and restarts must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Gain `a_n = a / (n + A)^eps` for `n ≥ 1`.
    pub fn gain(&self, n: usize) -> f64 {
        self.a / (n as f64 + self.big_a).powf(self.eps)
    }

    /// Perturbation size `c_n = c / n^lambda` for `n ≥ 1`.
    pub fn perturbation(&self, n: usize) -> f64 {
        self.c / (n as f64).powf(self.lambda)
    }
}

/// Gradient estimate for a given Rademacher direction `delta`.
pub fn spsa_gradient_along<F>(mut evaluate: F, theta: &[f64], c_n: f64, delta: &[f64]) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let high: Vec<f64> = theta.iter().zip(delta).map(|(t, d)| t + c_n * d).collect();
    let low: Vec<f64> = theta.iter().zip(delta).map(|(t, d)| t - c_n * d).collect();
    let diff = evaluate(&high) - evaluate(&low);
    delta.iter().map(|d| diff / (2.0 * c_n * d)).collect()
}

pub fn rademacher<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Draws one Rademacher direction and returns the two-sided estimate.
pub fn spsa_gradient<F, R>(evaluate: F, theta: &[f64], c_n: f64, rng: &mut R) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let delta = rademacher(theta.len(), rng);
    spsa_gradient_along(evaluate, theta, c_n, &delta)
}
