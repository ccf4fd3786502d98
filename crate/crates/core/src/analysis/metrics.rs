use nalgebra::DVector;
use serde::Serialize;

use crate::consensus::{ratio, RatioState};
use crate::error::{arg, Result};
use crate::optim::Objective;
use crate::trace::Trace;

/// `max_i ||z_i - z_bar||` for one ratio snapshot.
pub fn spread(z: &RatioState) -> f64 {
    z.max_deviation_from(&z.mean())
}

/// Consensus error of state `k` of the trace.
pub fn consensus_error(trace: &Trace, k: usize) -> Result<f64> {
    match trace.states.get(k) {
        Some(s) => Ok(spread(&ratio(s)?)),
        None => arg(format!("state {k} out of range for a trace of {} steps", trace.steps())),
    }
}

/// `||<z(t)> - z*||^2` for every recorded state, with `<z> = (1/kappa) sum_i x_i`.
pub fn lyapunov_sequence(trace: &Trace, z_star: &DVector<f64>) -> Result<Vec<f64>> {
    if z_star.len() != trace.d() {
        return arg(format!("optimum has dimension {}, trace has {}", z_star.len(), trace.d()));
    }
    Ok(trace.states.iter().map(|s| (s.weighted_average() - z_star).norm_squared()).collect())
}

/// Weighted running averages `sum_{tau<=t} alpha(tau) v(tau) / sum_{tau<=t} alpha(tau)`
/// of `z_bar` and of every `z_k`, one entry per stepsize.
pub fn running_average_iterates(trace: &Trace, alphas: &[f64]) -> Result<(Vec<DVector<f64>>, Vec<Vec<DVector<f64>>>)> {
    if alphas.len() > trace.states.len() {
        return arg(format!("{} stepsizes for {} states", alphas.len(), trace.states.len()));
    }
    let (n, d) = (trace.n(), trace.d());
    let mut sum_bar = DVector::zeros(d);
    let mut sum_agent = vec![DVector::zeros(d); n];
    let mut weight = 0.0;
    let mut network = Vec::with_capacity(alphas.len());
    let mut agents = vec![Vec::with_capacity(alphas.len()); n];
    for (state, a) in trace.states.iter().zip(alphas) {
        let z = ratio(state)?;
        weight += a;
        sum_bar += z.mean() * *a;
        network.push(&sum_bar / weight);
        for k in 0..n {
            sum_agent[k] += z.row(k) * *a;
            agents[k].push(&sum_agent[k] / weight);
        }
    }
    Ok((network, agents))
}

/// `max_t ||<z(t+1)> - <z(t)> + (alpha(t)/kappa) sum_i g_i(t)||`.
///
/// A trace without gradients (pure averaging) is checked against `alpha = 0`.
pub fn verify_descent_recursion(trace: &Trace) -> Result<f64> {
    let steps = trace.steps();
    let pure = trace.gradients.is_empty() && trace.alphas.is_empty();
    if !pure && (trace.gradients.len() != steps || trace.alphas.len() != steps) {
        return arg("trace does not record a gradient and stepsize for every step");
    }
    let kappa = trace.kappa();
    let mut worst: f64 = 0.0;
    for k in 0..steps {
        let mut r = trace.states[k + 1].weighted_average() - trace.states[k].weighted_average();
        if !pure {
            r += trace.gradients[k].row_sum().transpose() * (trace.alphas[k] / kappa);
        }
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// How optimality gaps are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMode {
    /// At stepsize-weighted running averages (deterministic algorithms).
    RunningAverage,
    /// At the current `<z(t)>` and `z_k(t)` (stochastic gradient-push).
    Instantaneous,
}

/// Per-step diagnostics on a subset of trace states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    /// Indices into `trace.states`.
    pub index: Vec<usize>,
    /// The algorithm clock `t` of each row.
    pub t: Vec<usize>,
    pub consensus_error: Vec<f64>,
    pub lyapunov: Option<Vec<f64>>,
    pub f_gap_avg: Option<Vec<f64>>,
    /// `f_gap_agent[k][row]`.
    pub f_gap_agent: Option<Vec<Vec<f64>>>,
    /// `max_k ||z_k(t) - z*||^2` per row.
    pub sq_error: Option<Vec<f64>>,
    pub realized_g: f64,
    pub eta_min: f64,
    /// `sup_{i,t} ||z_i(t)||`, the observed stand-in for the iterate bound.
    pub sup_z: f64,
}

impl RunMetrics {
    /// Rows at the given state indices (all of them when `rows` is `None`).
    pub fn compute(trace: &Trace, obj: Option<&Objective>, mode: GapMode, rows: Option<&[usize]>) -> Result<Self> {
        let all: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all = (0..trace.states.len()).collect();
                &all
            }
        };
        if let Some(k) = rows.iter().find(|k| **k >= trace.states.len()) {
            return arg(format!("row index {k} out of range"));
        }
        let ratios = trace.ratios()?;
        let sup_z =
            ratios.iter().flat_map(|z| z.z.row_iter().map(|r| r.norm()).collect::<Vec<_>>()).fold(0.0, f64::max);
        let optimum = obj.and_then(|o| o.optimum().map(|opt| (o, opt)));

        let lyapunov = match optimum {
            Some((_, opt)) => {
                let seq = lyapunov_sequence(trace, &opt.point)?;
                Some(rows.iter().map(|k| seq[*k]).collect())
            }
            None => None,
        };

        let (f_gap_avg, f_gap_agent, sq_error) = match optimum {
            None => (None, None, None),
            Some((o, opt)) => {
                let sq: Vec<f64> = rows.iter().map(|k| ratios[*k].max_deviation_from(&opt.point).powi(2)).collect();
                let (avg_points, agent_points): (Vec<DVector<f64>>, Vec<Vec<DVector<f64>>>) = match mode {
                    GapMode::Instantaneous => (
                        rows.iter().map(|k| trace.states[*k].weighted_average()).collect(),
                        (0..trace.n()).map(|i| rows.iter().map(|k| ratios[*k].row(i)).collect()).collect(),
                    ),
                    GapMode::RunningAverage => {
                        let (net, agents) = running_average_iterates(trace, &trace.alphas)?;
                        if let Some(k) = rows.iter().find(|k| **k >= net.len()) {
                            return arg(format!("no stepsize recorded for state {k}"));
                        }
                        (
                            rows.iter().map(|k| net[*k].clone()).collect(),
                            agents.iter().map(|a| rows.iter().map(|k| a[*k].clone()).collect()).collect(),
                        )
                    }
                };
                let gap = |p: &DVector<f64>| o.value(p) - opt.value;
                (
                    Some(avg_points.iter().map(gap).collect()),
                    Some(agent_points.iter().map(|pts| pts.iter().map(gap).collect()).collect()),
                    Some(sq),
                )
            }
        };

        Ok(Self {
            index: rows.to_vec(),
            t: rows.iter().map(|k| trace.states[*k].t).collect(),
            consensus_error: rows.iter().map(|k| spread(&ratios[*k])).collect(),
            lyapunov,
            f_gap_avg,
            f_gap_agent,
            sq_error,
            realized_g: trace.max_gradient_norm(),
            eta_min: trace.min_y(),
            sup_z,
        })
    }
}
