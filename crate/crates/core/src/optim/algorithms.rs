//! Push-sum based optimization steps and the run loop that drives them.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::objective::Objective;
use super::oracle::{stochastic_gradient, GradientOracle};
use super::schedule::StepSchedule;
use super::signal::SwitchingSignal;
use crate::consensus::{self, check_horizon, AbsoluteProbability, NetworkState, RatioState, RunOptions};
use crate::error::{arg, Error, Result};
use crate::graph::GraphSequence;
use crate::trace::Trace;
use crate::weights::{WeightMatrix, WeightsPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Pushsum,
    WeightedPushsum,
    SubgradientPush,
    PushSubgradient,
    Heterogeneous,
    Sgp,
}

impl Algorithm {
    pub fn is_optimizer(self) -> bool {
        !matches!(self, Self::Pushsum | Self::WeightedPushsum)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Pushsum => "pushsum",
            Self::WeightedPushsum => "weighted_pushsum",
            Self::SubgradientPush => "subgradient_push",
            Self::PushSubgradient => "push_subgradient",
            Self::Heterogeneous => "heterogeneous",
            Self::Sgp => "sgp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Self::Pushsum,
            Self::WeightedPushsum,
            Self::SubgradientPush,
            Self::PushSubgradient,
            Self::Heterogeneous,
            Self::Sgp,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| Error::Argument(format!("unknown algorithm `{s}`")))
    }
}

/// Subgradients of every agent at its own ratio, one per row.
pub fn subgradients(obj: &Objective, z: &RatioState) -> Result<DMatrix<f64>> {
    stack(obj, z, |i, zi| obj.subgradient(i, zi))
}

fn stack(
    obj: &Objective,
    z: &RatioState,
    mut f: impl FnMut(usize, &DVector<f64>) -> Result<DVector<f64>>,
) -> Result<DMatrix<f64>> {
    let n = z.z.nrows();
    if n != obj.n() {
        return arg(format!("objective has {} components for {n} agents", obj.n()));
    }
    let mut g = DMatrix::zeros(n, obj.d());
    for i in 0..n {
        let gi = f(i, &z.row(i))?;
        g.row_mut(i).copy_from(&gi.transpose());
    }
    Ok(g)
}

fn check_shapes(state: &NetworkState, w: &WeightMatrix, g: &DMatrix<f64>) -> Result<()> {
    if w.n() != state.n() || g.nrows() != state.n() || g.ncols() != state.d() {
        return arg("dimension mismatch between state, weights and gradients");
    }
    Ok(())
}

fn mixed(state: &NetworkState, w: &WeightMatrix, x: &DMatrix<f64>) -> NetworkState {
    NetworkState { t: state.t + 1, x: w.matrix() * x, y: w.matrix() * &state.y, kappa: state.kappa }
}

/// `x' = W (x - alpha g)`, `y' = W y` with given gradients.
pub fn apply_subgradient_push(
    state: &NetworkState,
    w: &WeightMatrix,
    g: &DMatrix<f64>,
    alpha: f64,
) -> Result<NetworkState> {
    check_shapes(state, w, g)?;
    let u = state.x.zip_map(g, |x, g| x - alpha * g);
    Ok(mixed(state, w, &u))
}

/// `x' = W x - alpha g`, `y' = W y` with given gradients.
pub fn apply_push_subgradient(
    state: &NetworkState,
    w: &WeightMatrix,
    g: &DMatrix<f64>,
    alpha: f64,
) -> Result<NetworkState> {
    check_shapes(state, w, g)?;
    let mut next = mixed(state, w, &state.x);
    next.x = next.x.zip_map(g, |x, g| x - alpha * g);
    Ok(next)
}

/// Agents with `sigma_j = 1` step before mixing, the rest after.
pub fn apply_heterogeneous(
    state: &NetworkState,
    w: &WeightMatrix,
    g: &DMatrix<f64>,
    alpha: f64,
    sigma: &[bool],
) -> Result<NetworkState> {
    check_shapes(state, w, g)?;
    if sigma.len() != state.n() {
        return arg(format!("{} switching values for {} agents", sigma.len(), state.n()));
    }
    let mut u = state.x.clone();
    for (j, _) in sigma.iter().enumerate().filter(|(_, s)| **s) {
        for k in 0..state.d() {
            u[(j, k)] = state.x[(j, k)] - alpha * g[(j, k)];
        }
    }
    let mut next = mixed(state, w, &u);
    for (i, _) in sigma.iter().enumerate().filter(|(_, s)| !**s) {
        for k in 0..state.d() {
            next.x[(i, k)] -= alpha * g[(i, k)];
        }
    }
    Ok(next)
}

pub fn subgradient_push_step(
    state: &NetworkState,
    w: &WeightMatrix,
    obj: &Objective,
    alpha: f64,
) -> Result<NetworkState> {
    let g = subgradients(obj, &consensus::ratio(state)?)?;
    apply_subgradient_push(state, w, &g, alpha)
}

pub fn push_subgradient_step(
    state: &NetworkState,
    w: &WeightMatrix,
    obj: &Objective,
    alpha: f64,
) -> Result<NetworkState> {
    let g = subgradients(obj, &consensus::ratio(state)?)?;
    apply_push_subgradient(state, w, &g, alpha)
}

pub fn heterogeneous_step(
    state: &NetworkState,
    w: &WeightMatrix,
    obj: &Objective,
    alpha: f64,
    sigma: &[bool],
) -> Result<NetworkState> {
    let g = subgradients(obj, &consensus::ratio(state)?)?;
    apply_heterogeneous(state, w, &g, alpha, sigma)
}

/// Stochastic gradients for every agent at `state.t`.
pub fn stochastic_gradients(oracle: &GradientOracle, obj: &Objective, state: &NetworkState) -> Result<DMatrix<f64>> {
    let z = consensus::ratio(state)?;
    stack(obj, &z, |i, zi| stochastic_gradient(oracle, obj, i, zi, state.t))
}

/// `x' = W (x - alpha g~)` with noise keyed by `(seed, agent, t)`.
pub fn sgp_step(
    state: &NetworkState,
    w: &WeightMatrix,
    obj: &Objective,
    oracle: &GradientOracle,
    alpha: f64,
) -> Result<NetworkState> {
    let g = stochastic_gradients(oracle, obj, state)?;
    apply_subgradient_push(state, w, &g, alpha)
}

/// `<z> = sum_i pi_i z_i`.
pub fn weighted_average_state(z: &RatioState, pi: &AbsoluteProbability) -> Result<DVector<f64>> {
    if pi.0.len() != z.z.nrows() {
        return arg("dimension mismatch between ratios and probabilities");
    }
    Ok(z.z.tr_mul(&pi.0))
}

/// Everything a run needs.
#[derive(Debug, Clone)]
pub struct RunSpec<'a> {
    pub algorithm: Algorithm,
    pub seq: &'a GraphSequence,
    pub weights: &'a WeightsPolicy,
    pub objective: Option<&'a Objective>,
    pub schedule: Option<&'a StepSchedule>,
    pub sigma: Option<&'a SwitchingSignal>,
    pub oracle: Option<&'a GradientOracle>,
    /// Initial `x`, `y`; its clock is moved to the schedule's start index.
    pub initial: NetworkState,
    pub horizon: usize,
    pub options: RunOptions,
}

fn need<'a, T>(v: Option<&'a T>, what: &str, alg: Algorithm) -> Result<&'a T> {
    v.ok_or_else(|| Error::Config(format!("{alg} requires {what}")))
}

/// Runs `job.horizon` steps and records states, weights, stepsizes and gradients.
pub fn run_optimizer(job: RunSpec<'_>) -> Result<Trace> {
    let alg = job.algorithm;
    if !alg.is_optimizer() {
        return consensus::run_from(job.seq, job.weights, job.initial, job.horizon, &job.options);
    }
    let obj = need(job.objective, "an objective", alg)?;
    let schedule = need(job.schedule, "a stepsize schedule", alg)?;
    schedule.validate()?;
    if obj.n() != job.initial.n() || obj.d() != job.initial.d() {
        return Err(Error::Config(format!(
            "objective is {} agents x {} dims, initial state is {} x {}",
            obj.n(),
            obj.d(),
            job.initial.n(),
            job.initial.d()
        )));
    }
    let sigma = if alg == Algorithm::Heterogeneous { Some(need(job.sigma, "a switching signal", alg)?) } else { None };
    let oracle = if alg == Algorithm::Sgp {
        let oracle = need(job.oracle, "a gradient oracle", alg)?;
        if obj.lambda_bar().is_none() {
            return Err(Error::Config("sgp requires strongly convex components (lambda_i)".into()));
        }
        oracle.check(obj).map_err(|e| Error::Config(e.to_string()))?;
        Some(oracle)
    } else {
        None
    };
    check_horizon(job.seq, job.initial.n(), job.horizon)?;

    let initial = job.initial.starting_at(schedule.start_index());
    initial.check_nondegenerate()?;
    let mut trace = Trace::new(initial);
    for k in 0..job.horizon {
        let w = job.weights.weights_for(&job.seq.graphs()[k])?;
        let state = trace.last();
        let alpha = schedule.stepsize(state.t)?;
        let (g, mut next) = match alg {
            Algorithm::SubgradientPush => {
                let g = subgradients(obj, &consensus::ratio(state)?)?;
                let next = apply_subgradient_push(state, &w, &g, alpha)?;
                (g, next)
            }
            Algorithm::PushSubgradient => {
                let g = subgradients(obj, &consensus::ratio(state)?)?;
                let next = apply_push_subgradient(state, &w, &g, alpha)?;
                (g, next)
            }
            Algorithm::Heterogeneous => {
                let g = subgradients(obj, &consensus::ratio(state)?)?;
                let s = sigma.expect("checked above").at(state.t, state.n())?;
                let next = apply_heterogeneous(state, &w, &g, alpha, &s)?;
                (g, next)
            }
            Algorithm::Sgp => {
                let g = stochastic_gradients(oracle.expect("checked above"), obj, state)?;
                let next = apply_subgradient_push(state, &w, &g, alpha)?;
                (g, next)
            }
            Algorithm::Pushsum | Algorithm::WeightedPushsum => unreachable!(),
        };
        job.options.apply(&mut next);
        next.check_nondegenerate()?;
        trace.weights.push(w);
        trace.alphas.push(alpha);
        trace.gradients.push(g);
        trace.states.push(next);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_sequence, DirectedGraph, GeneratorKind};
    use crate::optim::objective::Component;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    fn abs_obj(targets: &[f64]) -> Objective {
        Objective::new(targets.iter().map(|a| Component::AbsDeviation { target: vec![*a] }).collect()).unwrap()
    }

    fn quad_obj(targets: &[f64]) -> Objective {
        Objective::new(targets.iter().map(|a| Component::Quadratic { target: vec![*a], curvature: 1.0 }).collect())
            .unwrap()
    }

    fn skew() -> WeightMatrix {
        WeightMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 0.5]]).unwrap()
    }

    #[test]
    fn zero_step_reduces_to_pushsum() {
        let state = NetworkState::standard(col(&[3.0, -1.0]));
        let obj = abs_obj(&[0.0, 2.0]);
        let plain = consensus::pushsum_step(&state, &skew()).unwrap();
        assert_eq!(subgradient_push_step(&state, &skew(), &obj, 0.0).unwrap(), plain);
        assert_eq!(push_subgradient_step(&state, &skew(), &obj, 0.0).unwrap(), plain);
        assert_eq!(heterogeneous_step(&state, &skew(), &obj, 0.0, &[true, false]).unwrap(), plain);
    }

    #[test]
    fn single_agent_gradient_step() {
        let state = NetworkState::standard(col(&[0.0]));
        let w = WeightMatrix::from_rows(&[vec![1.0]]).unwrap();
        let obj = quad_obj(&[1.0]);
        let a = subgradient_push_step(&state, &w, &obj, 1.0).unwrap();
        assert_eq!(a.x, col(&[1.0]));
        assert_eq!(push_subgradient_step(&state, &w, &obj, 1.0).unwrap(), a);
    }

    #[test]
    fn doubly_stochastic_forms() {
        // With y = 1 the two orderings are adapt-then-combine and combine-then-adapt.
        let w = WeightMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let obj = quad_obj(&[0.0, 4.0]);
        let state = NetworkState::standard(col(&[1.0, 3.0]));
        let alpha = 0.25;
        let atc = subgradient_push_step(&state, &w, &obj, alpha).unwrap();
        let g = [1.0 - 0.0, 3.0 - 4.0];
        let expected_atc = 0.5 * (1.0 - alpha * g[0]) + 0.5 * (3.0 - alpha * g[1]);
        assert_eq!(atc.x, col(&[expected_atc, expected_atc]));
        let cta = push_subgradient_step(&state, &w, &obj, alpha).unwrap();
        assert_eq!(cta.x, col(&[2.0 - alpha * g[0], 2.0 - alpha * g[1]]));
        assert_eq!(atc.y, DVector::from_vec(vec![1.0, 1.0]));
    }

    #[test]
    fn heterogeneous_reductions_are_exact() {
        let state = NetworkState { t: 3, x: col(&[0.3, -1.7]), y: DVector::from_vec(vec![1.2, 0.8]), kappa: 2.0 };
        let obj = abs_obj(&[0.0, 2.0]);
        let alpha = 0.137;
        assert_eq!(
            heterogeneous_step(&state, &skew(), &obj, alpha, &[true, true]).unwrap(),
            subgradient_push_step(&state, &skew(), &obj, alpha).unwrap()
        );
        assert_eq!(
            heterogeneous_step(&state, &skew(), &obj, alpha, &[false, false]).unwrap(),
            push_subgradient_step(&state, &skew(), &obj, alpha).unwrap()
        );
    }

    #[test]
    fn weighted_average_examples() {
        let z = RatioState { z: col(&[1.0, 3.0]) };
        let pi = consensus::absolute_probability(&DVector::from_vec(vec![1.5, 0.5]), 2.0).unwrap();
        assert_eq!(weighted_average_state(&z, &pi).unwrap(), DVector::from_element(1, 1.5));
        let z = RatioState { z: col(&[1.0, 3.0, 5.0]) };
        let pi = consensus::absolute_probability(&DVector::from_element(3, 1.0), 3.0).unwrap();
        assert!((weighted_average_state(&z, &pi).unwrap() - z.mean()).amax() < 1e-15);
    }

    #[test]
    fn config_errors() {
        let seq = GraphSequence::constant(DirectedGraph::complete(2).unwrap(), 10).unwrap();
        let obj = abs_obj(&[0.0, 2.0]);
        let sched = StepSchedule::Harmonic { a: 1.0, p: 1.0 };
        let oracle = GradientOracle::Stochastic { seed: 1 };
        let base = RunSpec {
            algorithm: Algorithm::Sgp,
            seq: &seq,
            weights: &WeightsPolicy::Default,
            objective: Some(&obj),
            schedule: Some(&sched),
            sigma: None,
            oracle: Some(&oracle),
            initial: NetworkState::standard(col(&[0.0, 1.0])),
            horizon: 10,
            options: RunOptions::default(),
        };
        assert!(matches!(run_optimizer(base.clone()), Err(Error::Config(_))));
        let hetero = RunSpec { algorithm: Algorithm::Heterogeneous, ..base.clone() };
        assert!(matches!(run_optimizer(hetero), Err(Error::Config(_))));
        let missing = RunSpec { algorithm: Algorithm::SubgradientPush, objective: None, ..base };
        assert!(matches!(run_optimizer(missing), Err(Error::Config(_))));
    }

    #[test]
    fn stationary_at_optimum() {
        let seq = generate_sequence(&GeneratorKind::RotatingSingleEdge, 3, 50, 0).unwrap();
        let obj = quad_obj(&[1.0, 1.0, 1.0]);
        let sched = StepSchedule::Harmonic { a: 0.5, p: 0.75 };
        let trace = run_optimizer(RunSpec {
            algorithm: Algorithm::SubgradientPush,
            seq: &seq,
            weights: &WeightsPolicy::Default,
            objective: Some(&obj),
            schedule: Some(&sched),
            sigma: None,
            oracle: None,
            initial: NetworkState::standard(col(&[1.0, 1.0, 1.0])),
            horizon: 50,
            options: RunOptions::default(),
        })
        .unwrap();
        for z in trace.ratios().unwrap() {
            assert!(z.z.iter().all(|v| (*v - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn sgp_is_seeded_and_starts_at_one() {
        let seq = GraphSequence::constant(DirectedGraph::complete(2).unwrap(), 20).unwrap();
        let obj = quad_obj(&[0.0, 2.0]).with_noise(vec![0.5, 0.5]).unwrap();
        let sched = StepSchedule::SgpStrong { lambda_bar: 1.0 };
        let oracle = GradientOracle::Stochastic { seed: 3 };
        let job = RunSpec {
            algorithm: Algorithm::Sgp,
            seq: &seq,
            weights: &WeightsPolicy::Default,
            objective: Some(&obj),
            schedule: Some(&sched),
            sigma: None,
            oracle: Some(&oracle),
            initial: NetworkState::standard(col(&[0.0, 0.0])),
            horizon: 20,
            options: RunOptions::default(),
        };
        let a = run_optimizer(job.clone()).unwrap();
        let b = run_optimizer(job.clone()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.initial().t, 1);
        assert_eq!(a.alphas[0], 2.0);

        let exact_obj = quad_obj(&[0.0, 2.0]);
        let noiseless = RunSpec { objective: Some(&exact_obj), ..job.clone() };
        let sgp = run_optimizer(noiseless.clone()).unwrap();
        let sp = run_optimizer(RunSpec { algorithm: Algorithm::SubgradientPush, ..noiseless }).unwrap();
        assert_eq!(sgp.states, sp.states);
    }
}
