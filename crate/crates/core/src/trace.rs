//! Per-step records emitted by a run, and their CSV forms.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::consensus::{s_matrix_from, NetworkState, RatioState, SMatrix};
use crate::error::Result;
use crate::weights::WeightMatrix;

/// Header comment that versions every CSV this crate writes.
pub const SCHEMA_LINE: &str = "# schema=1";

/// States `0..=steps` of a run together with the inputs of each step.
///
/// `states[k]` is the state after `k` steps (its `t` field carries the
/// algorithm's own clock, which starts at 1 for stochastic gradient-push).
/// `weights[k]`, `alphas[k]` and `gradients[k]` are the quantities used by
/// step `k`, i.e. the transition `states[k] -> states[k + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub states: Vec<NetworkState>,
    pub weights: Vec<WeightMatrix>,
    /// Row `i` is the (sub)gradient agent `i` used. Empty for pure averaging.
    pub gradients: Vec<DMatrix<f64>>,
    pub alphas: Vec<f64>,
}

impl Trace {
    pub fn new(initial: NetworkState) -> Self {
        Self { states: vec![initial], weights: Vec::new(), gradients: Vec::new(), alphas: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.states[0].n()
    }

    pub fn d(&self) -> usize {
        self.states[0].d()
    }

    pub fn kappa(&self) -> f64 {
        self.states[0].kappa
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn initial(&self) -> &NetworkState {
        &self.states[0]
    }

    pub fn last(&self) -> &NetworkState {
        self.states.last().expect("trace holds at least the initial state")
    }

    pub fn ys(&self) -> Vec<DVector<f64>> {
        self.states.iter().map(|s| s.y.clone()).collect()
    }

    pub fn ratios(&self) -> Result<Vec<RatioState>> {
        self.states.iter().map(crate::consensus::ratio).collect()
    }

    /// `S(k)` for every step, each built from `W(k)` and `y(k)`.
    pub fn s_matrices(&self) -> Result<Vec<SMatrix>> {
        self.weights.iter().zip(&self.states).map(|(w, s)| s_matrix_from(w, &s.y)).collect()
    }

    pub fn min_y(&self) -> f64 {
        self.states.iter().flat_map(|s| s.y.iter().copied()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_y(&self) -> f64 {
        self.states.iter().flat_map(|s| s.y.iter().copied()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest gradient norm used by any agent at any step.
    pub fn max_gradient_norm(&self) -> f64 {
        self.gradients.iter().flat_map(|g| g.row_iter().map(|r| r.norm()).collect::<Vec<_>>()).fold(0.0, f64::max)
    }

    /// `max_i ||z_i - target||` at the final state.
    pub fn final_error(&self, target: &DVector<f64>) -> Result<f64> {
        let z = crate::consensus::ratio(self.last())?;
        Ok(z.max_deviation_from(target))
    }

    /// Rows `t, agent, y, z_0..z_{d-1}` preceded by the schema line.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "{SCHEMA_LINE}")?;
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "agent".into(), "y".into()];
        header.extend((0..self.d()).map(|k| format!("z_{k}")));
        wtr.write_record(&header)?;
        for state in &self.states {
            let z = crate::consensus::ratio(state)?;
            for i in 0..state.n() {
                let mut row = vec![state.t.to_string(), i.to_string(), state.y[i].to_string()];
                row.extend(z.z.row(i).iter().map(|v| v.to_string()));
                wtr.write_record(&row)?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Sidecar dump of every `S(t)`: rows `t, row, s_0..s_{n-1}`.
    pub fn write_s_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "{SCHEMA_LINE}")?;
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "row".into()];
        header.extend((0..self.n()).map(|k| format!("s_{k}")));
        wtr.write_record(&header)?;
        for (state, s) in self.states.iter().zip(self.s_matrices()?) {
            for i in 0..self.n() {
                let mut row = vec![state.t.to_string(), i.to_string()];
                row.extend(s.matrix().row(i).iter().map(|v| v.to_string()));
                wtr.write_record(&row)?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}
