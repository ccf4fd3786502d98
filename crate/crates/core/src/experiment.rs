//! Turning a configuration into runs, metrics, bound comparisons and files.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    bound_heterogeneous, bound_per_agent, bound_sgp, bound_subgradient_push_fixed, bound_subgradient_push_varying,
    estimate_k1, fit_consensus_rate, fit_rate, log_grid, verify_descent_recursion, BoundInputs, ConstantsSource,
    GapMode, RateFit, RunMetrics, SgpBound, SgpParams, Variant, DEFAULT_TAIL,
};
use crate::config::{ExperimentConfig, GraphKind, InitConfig, SigmaConfig, StepsizeConfig, SweepAxis, WeightsConfig};
use crate::consensus::{
    ratio, s_structure_violation, theoretical_constants, verify_absolute_probability, verify_product_limit,
    verify_ratio_identity, NetworkState, RunOptions, TheoreticalConstants,
};
use crate::error::{Error, Result};
use crate::graph::{generate_sequence, GeneratorKind, GraphSequence};
use crate::optim::{run_optimizer, Algorithm, GradientOracle, Objective, RunSpec, StepSchedule, SwitchingSignal};
use crate::rng::{derive_seed, keyed_rng, Stream};
use crate::trace::{Trace, SCHEMA_LINE};
use crate::weights::{validate, WeightMatrix, WeightsPolicy, STOCHASTIC_TOL};

/// Monte-Carlo draws used for `K1`.
pub const K1_SAMPLES: usize = 4000;

/// A configuration resolved into concrete simulation inputs.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub seq: GraphSequence,
    /// Connectivity window `L` used for the a-priori constants.
    pub window: usize,
    pub connected: bool,
    pub policy: WeightsPolicy,
    pub objective: Option<Objective>,
    pub schedule: Option<StepSchedule>,
    pub sigma: Option<SwitchingSignal>,
    pub oracle: Option<GradientOracle>,
    pub initial: NetworkState,
    pub warnings: Vec<String>,
}

fn config_err(field: &str, e: impl fmt::Display) -> Error {
    Error::Config(format!("{field}: {e}"))
}

impl Experiment {
    /// Relative file paths in the config resolve against `base`.
    pub fn build(config: &ExperimentConfig, base: &Path, strict: bool) -> Result<Self> {
        config.validate()?;
        let cfg = config.clone();
        let seed = cfg.seed;
        let n = cfg.n;
        let graph_seed = derive_seed(seed, Stream::Graph, 0, 0);
        let seq = match cfg.graph.kind {
            GraphKind::File => {
                let path = base.join(cfg.graph.path.as_deref().expect("validated"));
                let text = fs::read_to_string(&path)
                    .map_err(|e| config_err("graph.path", format!("{}: {e}", path.display())))?;
                let seq = GraphSequence::from_text(&text).map_err(|e| config_err("graph.path", e))?;
                if seq.n() != n {
                    return Err(config_err("graph.path", format!("file has {} vertices, n = {n}", seq.n())));
                }
                if seq.len() < cfg.horizon {
                    return Err(config_err(
                        "graph.path",
                        format!("file covers {} steps, horizon is {}", seq.len(), cfg.horizon),
                    ));
                }
                seq
            }
            kind => {
                let gk = match kind {
                    GraphKind::StaticComplete => GeneratorKind::StaticComplete,
                    GraphKind::StaticRing => GeneratorKind::StaticRing,
                    GraphKind::RotatingSingleEdge => GeneratorKind::RotatingSingleEdge,
                    GraphKind::DoublyStochastic => GeneratorKind::DoublyStochastic,
                    GraphKind::RandomSpanning => GeneratorKind::RandomSpanning {
                        window: cfg.graph.window.unwrap_or(3),
                        extra_arc_prob: cfg.graph.extra_arc_prob.unwrap_or(0.1),
                    },
                    GraphKind::File => unreachable!(),
                };
                generate_sequence(&gk, n, cfg.horizon, graph_seed).map_err(|e| config_err("graph", e))?
            }
        };

        let mut warnings = Vec::new();
        let window = match cfg.graph.window.or(seq.claimed_window()) {
            Some(w) => w.min(seq.len()),
            None => {
                (1..=seq.len()).find(|w| seq.is_uniformly_strongly_connected(*w).unwrap_or(false)).unwrap_or(seq.len())
            }
        };
        let connected = seq.is_uniformly_strongly_connected(window)?;
        if !connected {
            let msg = format!("graph sequence is not uniformly strongly connected with L = {window}");
            if strict {
                return Err(Error::Config(format!("graph: {msg}")));
            }
            warnings.push(msg);
        }

        let policy = match &cfg.weights {
            WeightsConfig::Default => WeightsPolicy::Default,
            WeightsConfig::Custom { matrix, path, beta } => {
                let m = match (matrix, path) {
                    (Some(rows), _) => WeightMatrix::from_rows(rows).map_err(|e| config_err("weights.matrix", e))?,
                    (None, Some(p)) => {
                        let path = base.join(p);
                        let text = fs::read_to_string(&path)
                            .map_err(|e| config_err("weights.path", format!("{}: {e}", path.display())))?;
                        WeightMatrix::from_text(&text).map_err(|e| config_err("weights.path", e))?
                    }
                    (None, None) => unreachable!("validated"),
                };
                if m.n() != n {
                    return Err(config_err("weights", format!("matrix is {0}x{0}, n = {n}", m.n())));
                }
                for (t, g) in seq.graphs().iter().take(cfg.horizon).enumerate() {
                    let report = validate(&m, g, *beta)?;
                    if !report.is_ok() {
                        return Err(config_err("weights", format!("invalid for the graph at t = {t}: {report}")));
                    }
                }
                WeightsPolicy::Custom { matrix: m, beta: *beta }
            }
        };

        let objective = match config.components() {
            None => None,
            Some(components) => {
                let mut obj = Objective::new(components).map_err(|e| config_err("objective", e))?;
                if let Some(p) = &cfg.objective.as_ref().expect("components exist").optimum {
                    obj = obj
                        .with_optimum(DVector::from_column_slice(p))
                        .map_err(|e| config_err("objective.optimum", e))?;
                }
                if let Some(o) = &cfg.oracle {
                    obj = obj.with_noise(o.noise.clone()).map_err(|e| config_err("oracle.noise", e))?;
                }
                Some(obj)
            }
        };

        let schedule = match &cfg.stepsize {
            None => None,
            Some(s) => {
                let sched = match s {
                    StepsizeConfig::InvSqrt => StepSchedule::InvSqrt { horizon: cfg.horizon },
                    StepsizeConfig::Harmonic { a, p } => StepSchedule::Harmonic { a: *a, p: *p },
                    StepsizeConfig::Constant { alpha } => StepSchedule::Constant { alpha: *alpha },
                    StepsizeConfig::SgpStrong => StepSchedule::SgpStrong {
                        lambda_bar: objective
                            .as_ref()
                            .and_then(Objective::lambda_bar)
                            .ok_or_else(|| config_err("stepsize", "sgp-strong needs strongly convex components"))?,
                    },
                };
                sched.validate().map_err(|e| config_err("stepsize", e))?;
                Some(sched)
            }
        };

        let sigma = match &cfg.sigma {
            None => None,
            Some(SigmaConfig::Ones) => Some(SwitchingSignal::Ones),
            Some(SigmaConfig::Zeros) => Some(SwitchingSignal::Zeros),
            Some(SigmaConfig::Alternating) => Some(SwitchingSignal::Alternating),
            Some(SigmaConfig::Bernoulli { p }) => {
                if !(0.0..=1.0).contains(p) {
                    return Err(config_err("sigma.p", format!("{p} not in [0, 1]")));
                }
                Some(SwitchingSignal::Bernoulli { p: *p, seed: derive_seed(seed, Stream::Switching, 0, 0) })
            }
            Some(SigmaConfig::Table { rows }) => {
                if rows.len() < cfg.horizon || rows.iter().any(|r| r.len() != n) {
                    return Err(config_err("sigma.rows", format!("need {} rows of {n} entries", cfg.horizon)));
                }
                Some(SwitchingSignal::table(rows.clone()).map_err(|e| config_err("sigma.rows", e))?)
            }
        };

        let oracle =
            cfg.oracle.as_ref().map(|_| GradientOracle::Stochastic { seed: derive_seed(seed, Stream::Noise, 0, 0) });

        let initial = initial_state(&cfg.init, n, cfg.d, seed)?;

        Ok(Self { config: cfg, seq, window, connected, policy, objective, schedule, sigma, oracle, initial, warnings })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }

    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    pub fn run(&self, options: RunOptions) -> Result<Trace> {
        run_optimizer(RunSpec {
            algorithm: self.algorithm(),
            seq: &self.seq,
            weights: &self.policy,
            objective: self.objective.as_ref(),
            schedule: self.schedule.as_ref(),
            sigma: self.sigma.as_ref(),
            oracle: self.oracle.as_ref(),
            initial: self.initial.clone(),
            horizon: self.horizon(),
            options,
        })
    }

    fn gap_mode(&self) -> GapMode {
        if self.algorithm() == Algorithm::Sgp {
            GapMode::Instantaneous
        } else {
            GapMode::RunningAverage
        }
    }

    /// State indices that get a metrics row.
    pub fn metric_rows(&self, trace: &Trace) -> Vec<usize> {
        let last = match (self.algorithm().is_optimizer(), self.gap_mode()) {
            (true, GapMode::RunningAverage) => trace.steps().saturating_sub(1),
            _ => trace.steps(),
        };
        match self.config.record.metrics_points {
            None => (0..=last).collect(),
            Some(p) => {
                let mut rows = vec![0];
                rows.extend(log_grid(1, last, p));
                rows.dedup();
                rows
            }
        }
    }

    pub fn constants(&self) -> Result<TheoreticalConstants> {
        theoretical_constants(self.config.n, self.window)
    }

    /// Metrics, bound columns and summary for one trace.
    pub fn report(&self, trace: &Trace) -> Result<Report> {
        let rows = self.metric_rows(trace);
        let metrics = RunMetrics::compute(trace, self.objective.as_ref(), self.gap_mode(), Some(&rows))?;
        let realized = self.bounds(trace, &metrics, ConstantsSource::Realized)?;
        let a_priori = self.bounds(trace, &metrics, ConstantsSource::APriori)?;
        let tc = self.constants()?;
        let summary = Summary::new(self, trace, &metrics, realized.as_ref(), a_priori.as_ref(), &tc)?;
        Ok(Report { metrics, bounds: realized, summary })
    }

    /// Realized `G` for stochastic gradient-push: the largest of the sampled
    /// gradients and the exact gradients at `z_i(t)` and `<z(t)>`.
    fn sgp_realized_g(&self, trace: &Trace, obj: &Objective) -> Result<f64> {
        let mut g = trace.max_gradient_norm();
        for state in &trace.states {
            let z = ratio(state)?;
            let avg = state.weighted_average();
            for i in 0..trace.n() {
                g = g.max(obj.gradient(i, &z.row(i))?.norm()).max(obj.gradient(i, &avg)?.norm());
            }
        }
        Ok(g)
    }

    /// Bound inputs for stochastic gradient-push with `K1` estimated at the initial state.
    pub fn sgp_inputs(&self, trace: &Trace, source: ConstantsSource) -> Result<BoundInputs> {
        let obj = self.objective.as_ref().ok_or_else(|| Error::Config("objective missing".into()))?;
        let sched = self.schedule.as_ref().ok_or_else(|| Error::Config("stepsize missing".into()))?;
        let mut inp = BoundInputs::for_trace(trace, obj, self.window, source)?;
        inp.g = self.sgp_realized_g(trace, obj)?;
        let alpha1 = sched.stepsize(1)?;
        let (k1, k1_stderr) = estimate_k1(
            obj,
            trace.initial(),
            alpha1,
            K1_SAMPLES,
            derive_seed(self.config.seed, Stream::MonteCarlo, 0, 0),
        )?;
        inp.sgp = Some(SgpParams {
            lambda_bar: obj.lambda_bar().ok_or_else(|| Error::Unsupported("lambda_bar".into()))?,
            gamma_bar: obj.gamma_bar().ok_or_else(|| Error::Unsupported("gamma_bar".into()))?,
            k1,
            k1_stderr,
        });
        Ok(inp)
    }

    fn bounds(&self, trace: &Trace, m: &RunMetrics, source: ConstantsSource) -> Result<Option<BoundColumns>> {
        let Some(obj) = self.objective.as_ref() else { return Ok(None) };
        if obj.optimum().is_none() || !self.algorithm().is_optimizer() {
            return Ok(None);
        }
        let n = trace.n();
        let rows = m.index.len();
        let mut cols = BoundColumns::empty(rows, n);
        if self.algorithm() == Algorithm::Sgp {
            let inp = match self.sgp_inputs(trace, source) {
                Ok(inp) => inp,
                Err(Error::Argument(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            for (r, t) in m.t.iter().enumerate() {
                cols.bound_varying[r] = bound_sgp(&inp, *t, SgpBound::FAverage).ok();
                cols.bound_state[r] = bound_sgp(&inp, *t, SgpBound::State).ok();
                let agent = bound_sgp(&inp, *t, SgpBound::FAgent).ok();
                for k in 0..n {
                    cols.bound_agent[k][r] = agent;
                }
            }
            return Ok(Some(cols));
        }
        let inp = match BoundInputs::for_trace(trace, obj, self.window, source) {
            Ok(inp) => inp,
            Err(Error::Argument(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let sched = self.schedule.as_ref().expect("optimizers have a schedule");
        let family_sp = self.algorithm() == Algorithm::SubgradientPush;
        let net = |v: Variant| {
            if family_sp {
                match v {
                    Variant::Fixed => bound_subgradient_push_fixed(&inp),
                    Variant::Varying { t } => bound_subgradient_push_varying(&inp, t),
                }
            } else {
                bound_heterogeneous(&inp, v, None)
            }
        };
        let agent = |k: usize, v: Variant| {
            if family_sp {
                bound_per_agent(&inp, k, v)
            } else {
                bound_heterogeneous(&inp, v, Some(k))
            }
        };
        let fixed = matches!(sched, StepSchedule::InvSqrt { .. });
        let varying = !sched.is_fixed();
        for (r, idx) in m.index.iter().enumerate() {
            if fixed && *idx + 1 == trace.steps() {
                cols.bound_fixed[r] = net(Variant::Fixed).ok();
                for k in 0..n {
                    cols.bound_agent[k][r] = agent(k, Variant::Fixed).ok();
                }
            }
            if varying {
                let v = Variant::Varying { t: *idx };
                cols.bound_varying[r] = net(v).ok();
                for k in 0..n {
                    cols.bound_agent[k][r] = agent(k, v).ok();
                }
            }
        }
        Ok(Some(cols))
    }
}

fn initial_state(init: &InitConfig, n: usize, d: usize, seed: u64) -> Result<NetworkState> {
    let x = match (&init.x0, init.uniform) {
        (Some(rows), _) => DMatrix::from_fn(n, d, |i, k| rows[i][k]),
        (None, Some([lo, hi])) => {
            let mut rng = keyed_rng(seed, Stream::Init, 0, 0);
            let vals: Vec<f64> = (0..n * d).map(|_| if lo == hi { lo } else { rng.random_range(lo..=hi) }).collect();
            DMatrix::from_row_slice(n, d, &vals)
        }
        (None, None) => return Err(Error::Config("init: give exactly one of `x0` or `uniform`".into())),
    };
    match &init.c {
        Some(c) => NetworkState::weighted(c, &x).map_err(|e| config_err("init.c", e)),
        None => Ok(NetworkState::standard(x)),
    }
}

/// Bound values aligned with metrics rows; `None` where a bound does not apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundColumns {
    pub bound_fixed: Vec<Option<f64>>,
    pub bound_varying: Vec<Option<f64>>,
    /// `[k][row]`.
    pub bound_agent: Vec<Vec<Option<f64>>>,
    pub bound_state: Vec<Option<f64>>,
}

impl BoundColumns {
    fn empty(rows: usize, n: usize) -> Self {
        Self {
            bound_fixed: vec![None; rows],
            bound_varying: vec![None; rows],
            bound_agent: vec![vec![None; rows]; n],
            bound_state: vec![None; rows],
        }
    }

    /// `(checked, violated, max value/bound)` over all comparable cells.
    pub fn compare(&self, m: &RunMetrics) -> (usize, usize, f64) {
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        if let Some(avg) = &m.f_gap_avg {
            for (r, v) in avg.iter().enumerate() {
                for b in [self.bound_fixed[r], self.bound_varying[r]].into_iter().flatten() {
                    pairs.push((*v, b));
                }
            }
        }
        if let Some(agents) = &m.f_gap_agent {
            for (k, gaps) in agents.iter().enumerate() {
                for (r, v) in gaps.iter().enumerate() {
                    if let Some(b) = self.bound_agent[k][r] {
                        pairs.push((*v, b));
                    }
                }
            }
        }
        if let Some(sq) = &m.sq_error {
            for (r, v) in sq.iter().enumerate() {
                if let Some(b) = self.bound_state[r] {
                    pairs.push((*v, b));
                }
            }
        }
        let violated = pairs.iter().filter(|(v, b)| v > b).count();
        let ratio = pairs.iter().map(|(v, b)| v / b).filter(|r| r.is_finite()).fold(0.0, f64::max);
        (pairs.len(), violated, ratio)
    }

    fn last(col: &[Option<f64>]) -> Option<f64> {
        col.iter().rev().find_map(|v| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSummary {
    pub final_realized: Option<f64>,
    pub final_a_priori: Option<f64>,
    pub cells_checked: usize,
    pub violations: usize,
    pub max_value_to_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rates {
    pub consensus_geometric: Option<RateFit>,
    pub f_gap_avg: Option<RateFit>,
    pub lyapunov: Option<RateFit>,
    pub sq_error: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub n: usize,
    pub d: usize,
    pub horizon: usize,
    pub seed: u64,
    pub window: usize,
    pub uniformly_strongly_connected: bool,
    pub final_consensus_error: f64,
    pub consensus_limit: Vec<f64>,
    pub final_lyapunov: Option<f64>,
    pub final_f_gap_avg: Option<f64>,
    pub final_f_gap_agent: Option<Vec<f64>>,
    pub bounds: Option<BoundSummary>,
    pub rates: Rates,
    pub descent_recursion_violation: f64,
    pub realized_g: f64,
    pub eta_min: f64,
    pub sup_z: f64,
    pub eta_lb: f64,
    pub log_eta_lb: f64,
    pub mu_ub: f64,
    pub warnings: Vec<String>,
}

fn fit_series(t: &[usize], v: Option<&Vec<f64>>, geometric: bool) -> Option<RateFit> {
    let v = v?;
    let (ts, vs): (Vec<f64>, Vec<f64>) = t.iter().zip(v).filter(|(t, _)| **t > 0).map(|(t, v)| (*t as f64, *v)).unzip();
    if geometric { fit_consensus_rate(&ts, &vs, DEFAULT_TAIL) } else { fit_rate(&ts, &vs, DEFAULT_TAIL) }.ok()
}

impl Summary {
    fn new(
        exp: &Experiment,
        trace: &Trace,
        m: &RunMetrics,
        realized: Option<&BoundColumns>,
        a_priori: Option<&BoundColumns>,
        tc: &TheoreticalConstants,
    ) -> Result<Self> {
        let last = |v: &Option<Vec<f64>>| v.as_ref().and_then(|v| v.last().copied());
        let bounds = realized.map(|cols| {
            let (checked, violated, ratio) = cols.compare(m);
            let pick =
                |c: &BoundColumns| BoundColumns::last(&c.bound_fixed).or_else(|| BoundColumns::last(&c.bound_varying));
            BoundSummary {
                final_realized: pick(cols),
                final_a_priori: a_priori.and_then(pick),
                cells_checked: checked,
                violations: violated,
                max_value_to_bound: ratio,
            }
        });
        Ok(Self {
            algorithm: exp.algorithm(),
            n: exp.config.n,
            d: exp.config.d,
            horizon: exp.horizon(),
            seed: exp.config.seed,
            window: exp.window,
            uniformly_strongly_connected: exp.connected,
            final_consensus_error: crate::analysis::consensus_error(trace, trace.steps())?,
            consensus_limit: trace.initial().weighted_average().iter().copied().collect(),
            final_lyapunov: last(&m.lyapunov),
            final_f_gap_avg: last(&m.f_gap_avg),
            final_f_gap_agent: m.f_gap_agent.as_ref().map(|a| a.iter().filter_map(|v| v.last().copied()).collect()),
            bounds,
            rates: Rates {
                consensus_geometric: fit_series(&m.t, Some(&m.consensus_error), true),
                f_gap_avg: fit_series(&m.t, m.f_gap_avg.as_ref(), false),
                lyapunov: fit_series(&m.t, m.lyapunov.as_ref(), false),
                sq_error: fit_series(&m.t, m.sq_error.as_ref(), false),
            },
            descent_recursion_violation: verify_descent_recursion(trace)?,
            realized_g: m.realized_g,
            eta_min: m.eta_min,
            sup_z: m.sup_z,
            eta_lb: tc.eta_lb,
            log_eta_lb: tc.log_eta_lb,
            mu_ub: tc.mu_ub,
            warnings: exp.warnings.clone(),
        })
    }
}

/// Everything `run` produces besides the trace itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub metrics: RunMetrics,
    pub bounds: Option<BoundColumns>,
    pub summary: Summary,
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl Report {
    pub fn write_metrics_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SCHEMA_LINE}")?;
        let m = &self.metrics;
        let n = self.summary.n;
        let mut wtr = csv::Writer::from_writer(out);
        let mut header: Vec<String> =
            ["t", "consensus_error", "lyapunov", "sq_error", "f_gap_avg"].iter().map(|s| s.to_string()).collect();
        header.extend((0..n).map(|k| format!("f_gap_agent_{k}")));
        header.extend(["bound_fixed".to_string(), "bound_varying".into()]);
        header.extend((0..n).map(|k| format!("bound_agent_{k}")));
        header.push("bound_state".into());
        wtr.write_record(&header)?;
        let at = |v: &Option<Vec<f64>>, r: usize| v.as_ref().map(|v| v[r]);
        for r in 0..m.t.len() {
            let mut row = vec![
                m.t[r].to_string(),
                m.consensus_error[r].to_string(),
                cell(at(&m.lyapunov, r)),
                cell(at(&m.sq_error, r)),
                cell(at(&m.f_gap_avg, r)),
            ];
            row.extend((0..n).map(|k| cell(m.f_gap_agent.as_ref().map(|a| a[k][r]))));
            let b = self.bounds.as_ref();
            row.push(cell(b.and_then(|b| b.bound_fixed[r])));
            row.push(cell(b.and_then(|b| b.bound_varying[r])));
            row.extend((0..n).map(|k| cell(b.and_then(|b| b.bound_agent[k][r]))));
            row.push(cell(b.and_then(|b| b.bound_state[r])));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into())
}

fn fit_text(f: &Option<RateFit>) -> String {
    match f {
        Some(f) => format!(
            "slope {:.4} (R^2 {:.3}, {} pts{})",
            f.slope,
            f.r_squared,
            f.points,
            if f.meaningful { "" } else { ", not meaningful" }
        ),
        None => "-".into(),
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        writeln!(
            f,
            "{} n={} d={} T={} seed={} L={}",
            self.algorithm, self.n, self.d, self.horizon, self.seed, self.window
        )?;
        writeln!(f, "final consensus error   {:.6e}", self.final_consensus_error)?;
        writeln!(f, "final f-gap (average)   {}", opt(self.final_f_gap_avg))?;
        if let Some(a) = &self.final_f_gap_agent {
            let parts: Vec<String> = a.iter().map(|v| format!("{v:.4e}")).collect();
            writeln!(f, "final f-gap (agents)    {}", parts.join(" "))?;
        }
        writeln!(f, "final lyapunov          {}", opt(self.final_lyapunov))?;
        if let Some(b) = &self.bounds {
            writeln!(
                f,
                "bound (realized)        {}  [{} of {} cells violated, max value/bound {:.3e}]",
                opt(b.final_realized),
                b.violations,
                b.cells_checked,
                b.max_value_to_bound
            )?;
            writeln!(f, "bound (a priori)        {}", opt(b.final_a_priori))?;
        }
        writeln!(
            f,
            "realized G={:.4} eta_min={:.4e} sup|z|={:.4}; eta_lb=exp({:.3}) mu_ub={}",
            self.realized_g, self.eta_min, self.sup_z, self.log_eta_lb, self.mu_ub
        )?;
        writeln!(f, "descent recursion       {:.3e}", self.descent_recursion_violation)?;
        writeln!(
            f,
            "rate consensus (geom)   {}",
            match &self.rates.consensus_geometric {
                Some(r) => format!("rate {:.6} (R^2 {:.3})", r.rate(), r.r_squared),
                None => "-".into(),
            }
        )?;
        writeln!(f, "rate f-gap             {}", fit_text(&self.rates.f_gap_avg))?;
        writeln!(f, "rate lyapunov          {}", fit_text(&self.rates.lyapunov))?;
        write!(f, "rate squared error     {}", fit_text(&self.rates.sq_error))
    }
}

/// Options shared by the commands.
#[derive(Debug, Clone, Default)]
pub struct CommandOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub record_s: bool,
    pub strict: bool,
}

fn load(config: &Path, opts: &CommandOptions) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn out_dir(cfg: &ExperimentConfig, base: &Path, opts: &CommandOptions) -> PathBuf {
    opts.out.clone().unwrap_or_else(|| base.join(&cfg.output.dir))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes `trace.csv`, `metrics.csv`, `summary.json` and optionally `s_matrices.csv`.
pub fn write_outputs(dir: &Path, trace: &Trace, report: &Report, record_s: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let p = dir.join("trace.csv");
    trace.write_csv(create(&p)?)?;
    written.push(p);
    let p = dir.join("metrics.csv");
    report.write_metrics_csv(create(&p)?)?;
    written.push(p);
    let p = dir.join("summary.json");
    let mut f = create(&p)?;
    serde_json::to_writer_pretty(&mut f, &report.summary)?;
    writeln!(f)?;
    f.flush()?;
    written.push(p);
    if record_s {
        let p = dir.join("s_matrices.csv");
        trace.write_s_csv(create(&p)?)?;
        written.push(p);
    }
    Ok(written)
}

/// `run`: simulate, evaluate and write every output file.
pub fn cmd_run(config: &Path, opts: &CommandOptions) -> Result<Report> {
    let (cfg, base) = load(config, opts)?;
    let exp = Experiment::build(&cfg, &base, opts.strict)?;
    let trace = exp.run(RunOptions::default())?;
    let report = exp.report(&trace)?;
    write_outputs(&out_dir(&cfg, &base, opts), &trace, &report, opts.record_s || cfg.record.s_matrices)?;
    Ok(report)
}

/// One invariant's worst violation against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `None` for informational entries.
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tolerance: Some(tol), pass: value <= tol }
    }

    fn info(name: &str, value: f64) -> Self {
        Self { name: name.into(), value, tolerance: None, pass: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        writeln!(f, "{:<26} {:>12} {:>10}  result", "check", "max", "tolerance")?;
        for c in &self.checks {
            let tol = c.tolerance.map(|t| format!("{t:.0e}")).unwrap_or_else(|| "info".into());
            let res = if c.tolerance.is_none() {
                "-"
            } else if c.pass {
                "pass"
            } else {
                "FAIL"
            };
            writeln!(f, "{:<26} {:>12.3e} {:>10}  {res}", c.name, c.value, tol)?;
        }
        write!(f, "{}", if self.passed() { "all checks passed" } else { "verification FAILED" })
    }
}

/// Number of `(t, tau)` pairs sampled for the ratio identity.
const RATIO_PAIRS: usize = 24;
const RATIO_SPAN: usize = 64;

/// Runs the scenario and checks every structural invariant of the trace.
pub fn verify_experiment(exp: &Experiment, options: RunOptions) -> Result<(Trace, VerifyReport)> {
    let trace = exp.run(options)?;
    let kappa = trace.kappa();
    let ys = trace.ys();
    let ss = trace.s_matrices()?;
    let mut checks = Vec::new();

    let col_dev = trace
        .weights
        .iter()
        .flat_map(|w| (0..w.n()).map(|j| (w.column_sum(j) - 1.0).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("w_column_stochastic", col_dev, STOCHASTIC_TOL));

    let y_mass = ys.iter().map(|y| (y.sum() - kappa).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("y_mass", y_mass, 1e-10 * kappa.max(1.0)));
    if !exp.algorithm().is_optimizer() {
        let x0 = trace.initial().x_sum();
        let x_mass = trace.states.iter().map(|s| (s.x_sum() - &x0).norm()).fold(0.0, f64::max);
        checks.push(Check::at_most("x_mass", x_mass, 1e-10 * x0.norm().max(1.0)));
    }
    checks.push(Check::at_most("descent_recursion", verify_descent_recursion(&trace)?, 1e-10));

    let (row_dev, sparsity) = s_structure_violation(&trace)?;
    checks.push(Check::at_most("s_row_stochastic", row_dev, STOCHASTIC_TOL));
    checks.push(Check::at_most("s_sparsity", if sparsity { 0.0 } else { 1.0 }, 0.0));
    checks.push(Check::at_most("absolute_probability", verify_absolute_probability(&ys, &ss, kappa), 1e-10));

    let steps = trace.steps();
    if steps >= 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(exp.config.seed, Stream::MonteCarlo, 1, 0));
        let mut worst: f64 = 0.0;
        for _ in 0..RATIO_PAIRS {
            let tau = rng.random_range(0..steps);
            let t = rng.random_range(tau + 1..=(tau + RATIO_SPAN).min(steps));
            worst = worst.max(verify_ratio_identity(&trace.weights, &ss, &ys, t, tau)?);
        }
        checks.push(Check::at_most("ratio_identity", worst, 1e-9));
        if !exp.algorithm().is_optimizer() || steps <= 20_000 {
            checks.push(Check::info("product_limit", verify_product_limit(&ss, &ys, 0, steps, kappa)?));
        }
    }

    if trace.weights.iter().all(|w| w.is_doubly_stochastic(STOCHASTIC_TOL))
        && trace.initial().y.iter().all(|v| *v == 1.0)
    {
        let dev = ys.iter().flat_map(|y| y.iter().map(|v| (v - 1.0).abs()).collect::<Vec<_>>()).fold(0.0, f64::max);
        checks.push(Check::at_most("y_identically_one", dev, 1e-14));
    }
    if exp.connected {
        let tc = exp.constants()?;
        let min_y = trace.min_y();
        checks.push(Check {
            name: "y_above_eta_lb".into(),
            value: min_y,
            tolerance: Some(tc.eta_lb),
            pass: min_y >= tc.eta_lb,
        });
    }
    Ok((trace, VerifyReport { checks, warnings: exp.warnings.clone() }))
}

/// `verify`: all invariants on the configured scenario, optionally with `y` perturbed.
pub fn cmd_verify(config: &Path, opts: &CommandOptions, perturb_y: Option<f64>) -> Result<VerifyReport> {
    let (cfg, base) = load(config, opts)?;
    let exp = Experiment::build(&cfg, &base, opts.strict)?;
    let (trace, report) = verify_experiment(&exp, RunOptions { perturb_y })?;
    if let Some(dir) = &opts.out {
        fs::create_dir_all(dir)?;
        let mut f = create(&dir.join("verify.json"))?;
        serde_json::to_writer_pretty(&mut f, &report)?;
        writeln!(f)?;
        f.flush()?;
        if opts.record_s || cfg.record.s_matrices {
            trace.write_s_csv(create(&dir.join("s_matrices.csv"))?)?;
        }
    }
    Ok(report)
}

/// One run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: u64,
    pub consensus_error: f64,
    pub f_gap_avg: Option<f64>,
    pub f_gap_agent_max: Option<f64>,
    pub lyapunov: Option<f64>,
    pub sq_error: Option<f64>,
    pub bound: Option<f64>,
    pub bound_agent_max: Option<f64>,
}

/// Seed-averaged trajectory at one recorded time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub t: usize,
    /// Largest over agents of the seed-mean of `||z_i(t) - z*||^2`.
    pub mean_sq_error: f64,
    pub stderr: f64,
    pub mean_lyapunov: Option<f64>,
    pub bound_state: Option<f64>,
    /// Same bound with `eta = eta_lb`.
    pub bound_state_a_priori: Option<f64>,
    pub bound_average: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    /// Horizon axis: final f-gap against `T`. Seeds axis: seed-mean squared error against `t`.
    pub slope: Option<RateFit>,
    pub agent_slope: Option<RateFit>,
    pub curve: Vec<CurveRow>,
    /// Every run (or the seed-mean curve) satisfies its bound where one applies.
    pub bounds_hold: bool,
}

impl fmt::Display for SweepTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.axis {
            SweepAxis::Horizon => "T",
            SweepAxis::Seeds => "seed",
        };
        writeln!(
            f,
            "{label:>8} {:>13} {:>13} {:>13} {:>13} {:>13} {:>13}",
            "consensus", "f_gap_avg", "f_gap_agent", "lyapunov", "sq_error", "bound"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>8} {:>13.5e} {:>13} {:>13} {:>13} {:>13} {:>13}",
                r.value,
                r.consensus_error,
                opt(r.f_gap_avg),
                opt(r.f_gap_agent_max),
                opt(r.lyapunov),
                opt(r.sq_error),
                opt(r.bound)
            )?;
        }
        if !self.curve.is_empty() {
            writeln!(f, "{:>8} {:>13} {:>13} {:>13}", "t", "mean_sq_err", "stderr", "bound_state")?;
            for c in &self.curve {
                writeln!(f, "{:>8} {:>13.5e} {:>13.3e} {:>13}", c.t, c.mean_sq_error, c.stderr, opt(c.bound_state))?;
            }
        }
        writeln!(f, "fitted slope: {}", fit_text(&self.slope))?;
        if self.agent_slope.is_some() {
            writeln!(f, "per-agent slope: {}", fit_text(&self.agent_slope))?;
        }
        write!(f, "bounds hold: {}", self.bounds_hold)
    }
}

struct SweepRun {
    value: u64,
    trace: Trace,
    exp: Experiment,
    report: Report,
}

fn run_one(cfg: ExperimentConfig, base: &Path, strict: bool, value: u64) -> Result<SweepRun> {
    let exp = Experiment::build(&cfg, base, strict)?;
    let trace = exp.run(RunOptions::default())?;
    let report = exp.report(&trace)?;
    Ok(SweepRun { value, trace, exp, report })
}

fn max_opt(v: impl Iterator<Item = f64>) -> Option<f64> {
    v.fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
}

/// Runs the configured sweep; rows are sorted by axis value.
pub fn sweep_config(cfg: &ExperimentConfig, base: &Path, axis: SweepAxis, strict: bool) -> Result<SweepTable> {
    let jobs: Vec<(u64, ExperimentConfig)> = match axis {
        SweepAxis::Horizon => {
            let horizons = cfg
                .sweep
                .as_ref()
                .map(|s| s.horizons.clone())
                .filter(|h| !h.is_empty())
                .ok_or_else(|| Error::Config("sweep.horizons: required for the horizon axis".into()))?;
            horizons
                .iter()
                .map(|t| {
                    let mut c = cfg.clone();
                    c.horizon = *t;
                    (*t as u64, c)
                })
                .collect()
        }
        SweepAxis::Seeds => {
            if cfg.seeds.is_empty() {
                return Err(Error::Config("seeds: required for a sweep over seeds".into()));
            }
            cfg.seeds
                .iter()
                .map(|s| {
                    let mut c = cfg.clone();
                    c.seed = *s;
                    (*s, c)
                })
                .collect()
        }
    };
    let mut runs: Vec<SweepRun> =
        jobs.into_par_iter().map(|(v, c)| run_one(c, base, strict, v)).collect::<Result<Vec<_>>>()?;
    runs.sort_by_key(|r| r.value);

    let mut bounds_hold = true;
    let rows: Vec<SweepRow> = runs
        .iter()
        .map(|r| {
            let m = &r.report.metrics;
            let last = |v: &Option<Vec<f64>>| v.as_ref().and_then(|v| v.last().copied());
            let b = r.report.bounds.as_ref();
            if let Some(b) = b {
                if axis == SweepAxis::Horizon && b.compare(m).1 > 0 {
                    bounds_hold = false;
                }
            }
            SweepRow {
                value: r.value,
                consensus_error: *m.consensus_error.last().expect("at least one row"),
                f_gap_avg: last(&m.f_gap_avg),
                f_gap_agent_max: m
                    .f_gap_agent
                    .as_ref()
                    .and_then(|a| max_opt(a.iter().filter_map(|v| v.last().copied()))),
                lyapunov: last(&m.lyapunov),
                sq_error: last(&m.sq_error),
                bound: b
                    .and_then(|b| BoundColumns::last(&b.bound_fixed).or_else(|| BoundColumns::last(&b.bound_varying))),
                bound_agent_max: b.and_then(|b| max_opt(b.bound_agent.iter().filter_map(|c| BoundColumns::last(c)))),
            }
        })
        .collect();

    let (slope, agent_slope, curve) = match axis {
        SweepAxis::Horizon => {
            let fit_col = |col: fn(&SweepRow) -> Option<f64>| {
                if rows.len() < 2 {
                    return None;
                }
                let (ts, vs): (Vec<f64>, Vec<f64>) =
                    rows.iter().filter_map(|r| col(r).map(|v| (r.value as f64, v))).unzip();
                fit_rate(&ts, &vs, 1.0).ok()
            };
            (fit_col(|r| r.f_gap_avg), fit_col(|r| r.f_gap_agent_max), Vec::new())
        }
        SweepAxis::Seeds => {
            let (curve, hold) = seed_curve(&runs)?;
            bounds_hold &= hold;
            let slope = if runs.len() < 2 {
                None
            } else {
                let (ts, vs): (Vec<f64>, Vec<f64>) =
                    curve.iter().filter(|c| c.t > 0).map(|c| (c.t as f64, c.mean_sq_error)).unzip();
                fit_rate(&ts, &vs, DEFAULT_TAIL).ok()
            };
            (slope, None, curve)
        }
    };
    Ok(SweepTable { axis, rows, slope, agent_slope, curve, bounds_hold })
}

/// One set of bound inputs for the seed mean: the largest `G`, the smallest `eta`
/// and the mean of the per-seed `K1` estimates.
fn pool_sgp_inputs(runs: &[SweepRun], source: ConstantsSource) -> Result<BoundInputs> {
    let inputs = runs.iter().map(|r| r.exp.sgp_inputs(&r.trace, source)).collect::<Result<Vec<_>>>()?;
    let seeds = inputs.len() as f64;
    let mut inp = inputs[0].clone();
    inp.g = inputs.iter().map(|i| i.g).fold(0.0, f64::max);
    inp.eta = inputs.iter().map(|i| i.eta).fold(f64::INFINITY, f64::min);
    let params: Vec<SgpParams> = inputs.iter().map(|i| i.sgp.expect("set by sgp_inputs")).collect();
    let mut p = params[0];
    p.k1 = params.iter().map(|q| q.k1).sum::<f64>() / seeds;
    p.k1_stderr = params.iter().map(|q| q.k1_stderr.powi(2)).sum::<f64>().sqrt() / seeds;
    inp.sgp = Some(p);
    Ok(inp)
}

/// Seed-mean squared error per recorded time, with bounds from constants pooled over seeds.
fn seed_curve(runs: &[SweepRun]) -> Result<(Vec<CurveRow>, bool)> {
    let first = &runs[0];
    let Some(_) = first.report.metrics.sq_error else { return Ok((Vec::new(), true)) };
    let m0 = &first.report.metrics;
    let n = first.trace.n();
    let seeds = runs.len() as f64;

    let (pooled, pooled_a_priori) = if first.exp.algorithm() == Algorithm::Sgp {
        (
            Some(pool_sgp_inputs(runs, ConstantsSource::Realized)?),
            Some(pool_sgp_inputs(runs, ConstantsSource::APriori)?),
        )
    } else {
        (None, None)
    };

    let mut hold = true;
    let mut curve = Vec::with_capacity(m0.index.len());
    for (r, idx) in m0.index.iter().enumerate() {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..n {
            let vals: Vec<f64> = runs
                .iter()
                .map(|run| {
                    let z = ratio(&run.trace.states[*idx]).expect("validated trace");
                    let opt = &run.exp.objective.as_ref().expect("objective").optimum().expect("optimum").point;
                    (z.row(i) - opt).norm_squared()
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / seeds;
            let var =
                if runs.len() > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (seeds - 1.0) } else { 0.0 };
            if mean > best.0 {
                best = (mean, (var / seeds).sqrt());
            }
        }
        let mean_lyapunov = runs
            .iter()
            .map(|run| run.report.metrics.lyapunov.as_ref().map(|l| l[r]))
            .sum::<Option<f64>>()
            .map(|s| s / seeds);
        let t = m0.t[r];
        let (bound_state, bound_average) = match &pooled {
            Some(inp) => (bound_sgp(inp, t, SgpBound::State).ok(), bound_sgp(inp, t, SgpBound::Average).ok()),
            None => (None, None),
        };
        let bound_state_a_priori = pooled_a_priori.as_ref().and_then(|inp| bound_sgp(inp, t, SgpBound::State).ok());
        for b in [bound_state, bound_state_a_priori].into_iter().flatten() {
            hold &= best.0 <= b;
        }
        if let (Some(b), Some(l)) = (bound_average, mean_lyapunov) {
            hold &= l <= b;
        }
        curve.push(CurveRow {
            t,
            mean_sq_error: best.0,
            stderr: best.1,
            mean_lyapunov,
            bound_state,
            bound_state_a_priori,
            bound_average,
        });
    }
    Ok((curve, hold))
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SCHEMA_LINE}")?;
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "value",
            "consensus_error",
            "f_gap_avg",
            "f_gap_agent_max",
            "lyapunov",
            "sq_error",
            "bound",
            "bound_agent_max",
        ])?;
        for r in &self.rows {
            wtr.write_record([
                r.value.to_string(),
                r.consensus_error.to_string(),
                cell(r.f_gap_avg),
                cell(r.f_gap_agent_max),
                cell(r.lyapunov),
                cell(r.sq_error),
                cell(r.bound),
                cell(r.bound_agent_max),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_curve_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SCHEMA_LINE}")?;
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "t",
            "mean_sq_error",
            "stderr",
            "mean_lyapunov",
            "bound_state",
            "bound_state_a_priori",
            "bound_average",
        ])?;
        for c in &self.curve {
            wtr.write_record([
                c.t.to_string(),
                c.mean_sq_error.to_string(),
                c.stderr.to_string(),
                cell(c.mean_lyapunov),
                cell(c.bound_state),
                cell(c.bound_state_a_priori),
                cell(c.bound_average),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `sweep`: the axis comes from the argument or the config's `[sweep]` section.
pub fn cmd_sweep(config: &Path, opts: &CommandOptions, axis: Option<SweepAxis>) -> Result<SweepTable> {
    let (cfg, base) = load(config, opts)?;
    let axis =
        axis.or(cfg.sweep.as_ref().map(|s| s.axis)).ok_or_else(|| Error::Config("sweep: no axis given".into()))?;
    let table = sweep_config(&cfg, &base, axis, opts.strict)?;
    let dir = out_dir(&cfg, &base, opts);
    fs::create_dir_all(&dir)?;
    table.write_csv(create(&dir.join("sweep.csv"))?)?;
    if !table.curve.is_empty() {
        table.write_curve_csv(create(&dir.join("sweep_curve.csv"))?)?;
    }
    Ok(table)
}

/// Fits for one metrics column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnFit {
    pub column: String,
    pub geometric: bool,
    pub fit: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatesReport {
    pub fits: Vec<ColumnFit>,
}

impl fmt::Display for RatesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.fits.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            let text = match (&c.fit, c.geometric) {
                (Some(fit), true) => {
                    format!("rate {:.6} per step (R^2 {:.3}, {} pts)", fit.rate(), fit.r_squared, fit.points)
                }
                (fit, false) => fit_text(fit),
                (None, true) => "-".into(),
            };
            write!(f, "{:<18} {text}", c.column)?;
        }
        Ok(())
    }
}

/// `rates`: slopes of an existing metrics CSV (consensus error geometric, the rest power law).
pub fn cmd_rates(metrics_csv: &Path) -> Result<RatesReport> {
    let text = fs::read_to_string(metrics_csv)?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let headers: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let t_col =
        headers.iter().position(|h| h == "t").ok_or_else(|| Error::Parse("metrics file has no `t` column".into()))?;
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); headers.len()];
    for rec in rdr.records() {
        let rec = rec?;
        for (k, v) in rec.iter().enumerate() {
            let parsed = if v.is_empty() {
                None
            } else {
                Some(v.parse::<f64>().map_err(|e| Error::Parse(format!("`{v}` in column {}: {e}", headers[k])))?)
            };
            columns[k].push(parsed);
        }
    }
    let ts = &columns[t_col];
    let fits = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| *h != "t" && !h.starts_with("bound"))
        .map(|(k, h)| {
            let (x, y): (Vec<f64>, Vec<f64>) = ts
                .iter()
                .zip(&columns[k])
                .filter_map(|(t, v)| match (t, v) {
                    (Some(t), Some(v)) if *t > 0.0 => Some((*t, *v)),
                    _ => None,
                })
                .unzip();
            let geometric = h == "consensus_error";
            let fit = if geometric { fit_consensus_rate(&x, &y, DEFAULT_TAIL) } else { fit_rate(&x, &y, DEFAULT_TAIL) };
            ColumnFit { column: h.clone(), geometric, fit: fit.ok() }
        })
        .filter(|c| !c.column.is_empty())
        .collect();
    Ok(RatesReport { fits })
}
