//! Finite-time error bounds, evaluated from run quantities.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::consensus::{ratio, theoretical_constants, NetworkState};
use crate::error::{arg, Error, Result};
use crate::optim::{stochastic_gradient, validate_history, GradientOracle, Objective};
use crate::rng::{derive_seed, Stream};
use crate::trace::Trace;

/// Strong convexity / smoothness averages and the Monte-Carlo `K1` for the
/// stochastic gradient-push bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SgpParams {
    pub lambda_bar: f64,
    pub gamma_bar: f64,
    pub k1: f64,
    pub k1_stderr: f64,
}

/// Everything the bound formulas read.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub n: usize,
    pub window: usize,
    /// Bound on every (sub)gradient norm.
    pub g: f64,
    /// Lower bound on every `y_i(t)`.
    pub eta: f64,
    pub mu: f64,
    /// `alpha(0), alpha(1), ...`
    pub alphas: Vec<f64>,
    /// Horizon `T` of a fixed `1/sqrt(T)` run.
    pub horizon: Option<usize>,
    /// `||z_bar(0) - z*||`.
    pub z_bar_err: f64,
    /// `||z_bar(0) - z_i(0)||` per agent.
    pub spread: Vec<f64>,
    /// `||z_k(0) - z_i(0)||`, indexed `[k][i]`.
    pub pairwise: Vec<Vec<f64>>,
    pub x0: DMatrix<f64>,
    pub g0: DMatrix<f64>,
    pub sgp: Option<SgpParams>,
}

/// Realized or a-priori choice of `eta` and `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstantsSource {
    /// `eta = min y_i(t)` over the run, `G` = largest gradient used, `mu = mu_ub`.
    Realized,
    /// `eta = eta_lb`, `mu = mu_ub`, `G` as realized.
    APriori,
}

impl BoundInputs {
    /// Initial quantities from a deterministic trace plus the given constants.
    pub fn from_trace(trace: &Trace, obj: &Objective, window: usize, g: f64, eta: f64, mu: f64) -> Result<Self> {
        let opt = obj.optimum().ok_or_else(|| Error::Unsupported("bounds need a known minimizer".into()))?;
        let init = trace.initial();
        let z0 = ratio(init)?;
        let zbar = z0.mean();
        let n = trace.n();
        let g0 = match trace.gradients.first() {
            Some(g0) => g0.clone(),
            None => DMatrix::zeros(n, trace.d()),
        };
        Ok(Self {
            n,
            window,
            g,
            eta,
            mu,
            alphas: trace.alphas.clone(),
            horizon: Some(trace.steps()),
            z_bar_err: (&zbar - &opt.point).norm(),
            spread: (0..n).map(|i| (&zbar - z0.row(i)).norm()).collect(),
            pairwise: (0..n).map(|k| (0..n).map(|i| (z0.row(k) - z0.row(i)).norm()).collect()).collect(),
            x0: init.x.clone(),
            g0,
            sgp: None,
        })
    }

    pub fn for_trace(trace: &Trace, obj: &Objective, window: usize, source: ConstantsSource) -> Result<Self> {
        let tc = theoretical_constants(trace.n(), window)?;
        let eta = match source {
            ConstantsSource::Realized => trace.min_y(),
            ConstantsSource::APriori => tc.eta_lb,
        };
        Self::from_trace(trace, obj, window, trace.max_gradient_norm(), eta, tc.mu_ub)
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 || self.spread.len() != self.n || self.x0.nrows() != self.n || self.g0.shape() != self.x0.shape()
        {
            return arg("bound inputs have inconsistent agent counts");
        }
        if !(self.eta > 0.0) || self.eta > self.n as f64 * (1.0 + 1e-12) {
            return arg(format!("eta = {} not in (0, n]", self.eta));
        }
        if !(0.0..1.0).contains(&self.mu) {
            return arg(format!("mu = {} not in [0, 1)", self.mu));
        }
        if !(self.g >= 0.0) {
            return arg(format!("G = {} must be nonnegative", self.g));
        }
        Ok(())
    }

    fn sum_spread(&self) -> f64 {
        self.spread.iter().sum()
    }

    fn sum_pairwise(&self, k: usize) -> Result<f64> {
        match self.pairwise.get(k) {
            Some(row) => Ok(row.iter().sum()),
            None => arg(format!("agent {k} out of range for {} agents", self.n)),
        }
    }

    /// `sum_i ||x_i(0) - a g_i(0)||`.
    fn sum_x_minus(&self, a: f64) -> f64 {
        (&self.x0 - &self.g0 * a).row_iter().map(|r| r.norm()).sum()
    }

    fn sum_x(&self) -> f64 {
        self.x0.row_iter().map(|r| r.norm()).sum()
    }

    fn fixed_horizon(&self) -> Result<f64> {
        match self.horizon {
            Some(t) if t > 0 => Ok(t as f64),
            _ => arg("fixed-step bound needs a positive horizon T"),
        }
    }

    fn alphas_to(&self, t: usize) -> Result<&[f64]> {
        if self.alphas.len() <= t {
            return arg(format!("stepsizes recorded up to {}, bound asked at t = {t}", self.alphas.len()));
        }
        let a = &self.alphas[..=t];
        validate_history(a)?;
        Ok(a)
    }
}

/// Which stepsize regime a bound is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `alpha = 1/sqrt(T)` over `T` steps.
    Fixed,
    /// A non-increasing schedule, bound at time `t`.
    Varying { t: usize },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Family {
    SubgradientPush,
    Heterogeneous,
}

fn fixed(inp: &BoundInputs, init: f64, family: Family) -> Result<f64> {
    inp.check()?;
    let (n, g, eta, mu) = (inp.n as f64, inp.g, inp.eta, inp.mu);
    let t = inp.fixed_horizon()?;
    let st = t.sqrt();
    let head = g * init / (n * t) + (inp.z_bar_err.powi(2) + g * g) / (2.0 * st);
    if family == Family::Heterogeneous && mu == 0.0 {
        return Ok(head + 4.0 * n * g * g / (eta * st));
    }
    let (x_term, mix) = match family {
        Family::SubgradientPush => (inp.sum_x_minus(1.0 / st), 1.0),
        Family::Heterogeneous => (inp.sum_x(), mu),
    };
    Ok(head + 32.0 * g * x_term / (eta * (1.0 - mu) * t) + 32.0 * n * g * g / (eta * mix * (1.0 - mu) * st))
}

fn varying(inp: &BoundInputs, t: usize, init: f64, family: Family) -> Result<f64> {
    inp.check()?;
    let (n, g, eta, mu) = (inp.n as f64, inp.g, inp.eta, inp.mu);
    let a = inp.alphas_to(t)?;
    let sum: f64 = a.iter().sum();
    let sum_sq: f64 = a.iter().map(|v| v * v).sum();
    let head = (inp.z_bar_err.powi(2) + g * g * sum_sq) / (2.0 * sum) + g * a[0] * init / (n * sum);
    if family == Family::Heterogeneous && mu == 0.0 {
        let lag: f64 = (1..=t).map(|tau| a[tau] * a[tau - 1]).sum();
        return Ok(head + 4.0 * n * g * g / eta * lag / sum);
    }
    let geo: f64 = (0..t).map(|tau| a[tau] * mu.powi(tau as i32)).sum();
    let mixed: f64 = (0..t).map(|tau| a[tau] * (a[0] * mu.powf(tau as f64 / 2.0) + a[tau.div_ceil(2)])).sum();
    let (x_term, mix) = match family {
        Family::SubgradientPush => (inp.sum_x_minus(a[0]), 1.0),
        Family::Heterogeneous => (inp.sum_x(), mu),
    };
    Ok(head + 32.0 * g / eta * geo / sum * x_term + 32.0 * n * g * g / (eta * mix * (1.0 - mu)) * mixed / sum)
}

/// Subgradient-push, running average of `z_bar`, `alpha = 1/sqrt(T)`.
pub fn bound_subgradient_push_fixed(inp: &BoundInputs) -> Result<f64> {
    fixed(inp, 2.0 * inp.sum_spread(), Family::SubgradientPush)
}

/// Subgradient-push, running average of `z_bar` at time `t`.
pub fn bound_subgradient_push_varying(inp: &BoundInputs, t: usize) -> Result<f64> {
    varying(inp, t, 2.0 * inp.sum_spread(), Family::SubgradientPush)
}

/// Subgradient-push, running average of agent `k`'s own iterate.
pub fn bound_per_agent(inp: &BoundInputs, k: usize, variant: Variant) -> Result<f64> {
    let init = inp.sum_spread() + inp.sum_pairwise(k)?;
    match variant {
        Variant::Fixed => fixed(inp, init, Family::SubgradientPush),
        Variant::Varying { t } => varying(inp, t, init, Family::SubgradientPush),
    }
}

/// Heterogeneous subgradient (and push-subgradient, its `sigma = 0` case).
/// `mu = 0` switches to the sharper rank-one forms.
pub fn bound_heterogeneous(inp: &BoundInputs, variant: Variant, per_agent: Option<usize>) -> Result<f64> {
    let init = match per_agent {
        Some(k) => inp.sum_spread() + inp.sum_pairwise(k)?,
        None => 2.0 * inp.sum_spread(),
    };
    match variant {
        Variant::Fixed => fixed(inp, init, Family::Heterogeneous),
        Variant::Varying { t } => varying(inp, t, init, Family::Heterogeneous),
    }
}

/// `K2 = -mu^(-1/ln mu) / ln mu`, the smallest constant with `t mu^t <= K2` for all `t >= 1`.
pub fn k2(mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return arg(format!("mu = {mu} not in (0, 1)"));
    }
    let l = mu.ln();
    Ok(-mu.powf(-1.0 / l) / l)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SgpConstants {
    pub k1: f64,
    pub k1_stderr: f64,
    pub k2: f64,
    pub c: f64,
}

/// `K1` with its standard error, `K2` and `C`.
pub fn sgp_constants(inp: &BoundInputs) -> Result<SgpConstants> {
    let p = inp.sgp.ok_or_else(|| Error::Argument("stochastic gradient-push parameters missing".into()))?;
    let k2 = k2(inp.mu)?;
    if !(inp.g > 0.0) || !(inp.eta > 0.0) || !(p.lambda_bar > 0.0) {
        return arg("G, eta and lambda_bar must be positive");
    }
    let (n, mu, eta) = (inp.n as f64, inp.mu, inp.eta);
    let c = 4.0
        + 128.0 * p.k1 * k2 * p.lambda_bar / (inp.g * eta * mu * mu)
        + 512.0 * n * (k2 + 1.0) / (eta * (1.0 - mu) * mu);
    Ok(SgpConstants { k1: p.k1, k1_stderr: p.k1_stderr, k2, c })
}

/// Monte-Carlo estimate of `K1 = E[sum_k ||x_k(1) + alpha(1) g~_k(1)||]`
/// from `samples` independent oracle draws at the initial state.
pub fn estimate_k1(
    obj: &Objective,
    initial: &NetworkState,
    alpha1: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples == 0 {
        return arg("K1 estimate needs at least one sample");
    }
    let z = ratio(initial)?;
    let mut draws = Vec::with_capacity(samples);
    for s in 0..samples {
        let oracle = GradientOracle::Stochastic { seed: derive_seed(seed, Stream::MonteCarlo, s as u64, 0) };
        let mut total = 0.0;
        for k in 0..initial.n() {
            let g = stochastic_gradient(&oracle, obj, k, &z.row(k), 1)?;
            let xk: DVector<f64> = initial.x.row(k).transpose();
            total += (xk + g * alpha1).norm();
        }
        draws.push(total);
    }
    let m = samples as f64;
    let mean = draws.iter().sum::<f64>() / m;
    let var = if samples > 1 { draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    Ok((mean, (var / m).sqrt()))
}

/// Which stochastic gradient-push inequality to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SgpBound {
    /// `E ||z_i(t) - z*||^2`.
    State,
    /// `E [f(z_i(t)) - f(z*)]`.
    FAgent,
    /// `E [f(<z(t)>) - f(z*)]`.
    FAverage,
    /// `E ||<z(t)> - z*||^2`.
    Average,
}

pub fn bound_sgp(inp: &BoundInputs, t: usize, which: SgpBound) -> Result<f64> {
    let k = sgp_constants(inp)?;
    let p = inp.sgp.expect("checked by sgp_constants");
    let (n, g, eta, mu, lb) = (inp.n as f64, inp.g, inp.eta, inp.mu, p.lambda_bar);
    let tf = t as f64;
    match which {
        SgpBound::State | SgpBound::FAgent => {
            if t < 2 {
                return arg(format!("per-agent bound needs t >= 2, got {t}"));
            }
            let state = 8.0 * k.c * g * g / (lb * lb * tf)
                + 128.0 * n * g / (eta * (1.0 - mu) * lb * (tf - 1.0))
                + 32.0 * k.k1 / eta * mu.powf(tf - 2.0)
                + 64.0 * n * g / (eta * (1.0 - mu) * lb) * mu.powf((tf - 1.0) / 2.0);
            Ok(if which == SgpBound::State { state } else { p.gamma_bar / 2.0 * state })
        }
        SgpBound::FAverage => {
            if t < 1 {
                return arg("bound needs t >= 1");
            }
            Ok(2.0 * k.c * g * g * p.gamma_bar / (lb * lb * (tf + 1.0)))
        }
        SgpBound::Average => {
            if t < 1 {
                return arg("bound needs t >= 1");
            }
            Ok(4.0 * k.c * g * g / (lb * lb * tf))
        }
    }
}
