use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::objective::Objective;
use crate::error::{Error, Result};
use crate::rng::{keyed_rng, Stream};

/// Source of (sub)gradients for the optimization algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientOracle {
    Exact,
    /// `grad f_i(z) + N`, `N` uniform on the ball of radius `c_i`, keyed by
    /// `(seed, agent, t)`.
    Stochastic {
        seed: u64,
    },
}

/// A point uniformly distributed in the `d`-ball of the given radius.
pub fn uniform_ball(radius: f64, d: usize, seed: u64, agent: usize, t: usize) -> DVector<f64> {
    if radius == 0.0 {
        return DVector::zeros(d);
    }
    let mut rng = keyed_rng(seed, Stream::Noise, agent as u64, t as u64);
    loop {
        let dir = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = dir.norm();
        if norm > 0.0 {
            let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
            return dir * (r / norm);
        }
    }
}

/// Noisy gradient sample for agent `i` at `z` and time `t`.
pub fn stochastic_gradient(
    oracle: &GradientOracle,
    obj: &Objective,
    i: usize,
    z: &DVector<f64>,
    t: usize,
) -> Result<DVector<f64>> {
    let grad = obj.gradient(i, z)?;
    match oracle {
        GradientOracle::Exact => Ok(grad),
        GradientOracle::Stochastic { seed } => {
            let bound = obj.noise()[i];
            Ok(grad + uniform_ball(bound, obj.d(), *seed, i, t))
        }
    }
}

impl GradientOracle {
    /// Rejects objectives the stochastic oracle cannot serve.
    pub fn check(&self, obj: &Objective) -> Result<()> {
        if obj.gamma_bar().is_none() {
            return Err(Error::Unsupported("stochastic gradients need every component to be smooth".into()));
        }
        Ok(())
    }
}
