//! Acceptance criteria, one pass/fail line each. Runs without the libtest harness
//! so the lines come out in order and the exit status reflects every criterion.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pushsum::analysis::{
    consensus_error, fit_consensus_rate, fit_rate, k2, sgp_constants, verify_descent_recursion, BoundInputs, SgpParams,
    DEFAULT_TAIL,
};
use pushsum::config::{ExperimentConfig, SigmaConfig, SweepAxis};
use pushsum::consensus::{
    ratio, run_pushsum, run_weighted_pushsum, s_structure_violation, verify_absolute_probability, verify_product_limit,
    verify_ratio_identity, RunOptions,
};
use pushsum::experiment::{cmd_run, cmd_sweep, sweep_config, CommandOptions, Experiment};
use pushsum::graph::{generate_sequence, GeneratorKind};
use pushsum::optim::Algorithm;
use pushsum::trace::Trace;
use pushsum::weights::WeightsPolicy;

type Outcome = Result<String, String>;

fn examples_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn bundled(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(examples_dir().join(name)).expect("bundled config parses")
}

fn build(cfg: &ExperimentConfig) -> Experiment {
    Experiment::build(cfg, &examples_dir(), false).expect("bundled config builds")
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// The shared random push-sum configurations of criteria 1, 2 and 4.
fn random_traces() -> Vec<(String, Trace)> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    (0..100)
        .map(|k| {
            let n = rng.random_range(2..=12);
            let horizon = rng.random_range(20..=500);
            let kind = if rng.random_bool(0.5) {
                GeneratorKind::RotatingSingleEdge
            } else {
                GeneratorKind::RandomSpanning {
                    window: rng.random_range(1..=4),
                    extra_arc_prob: rng.random_range(0.0..0.3),
                }
            };
            let seq = generate_sequence(&kind, n, horizon, 1000 + k).expect("generator");
            let x0 = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-10.0..10.0));
            let trace = run_pushsum(&seq, &WeightsPolicy::Default, &x0, horizon).expect("push-sum run");
            (format!("{kind:?} n={n} T={horizon}"), trace)
        })
        .collect()
}

fn criterion_1(traces: &[(String, Trace)]) -> Outcome {
    let mut worst: f64 = 0.0;
    for (_, trace) in traces {
        let ss = trace.s_matrices().map_err(|e| e.to_string())?;
        worst = worst.max(verify_absolute_probability(&trace.ys(), &ss, trace.kappa()));
    }
    ensure(worst <= 1e-10, format!("max violation {worst:.2e} over {} configs (tol 1e-10)", traces.len()))
}

fn criterion_2(traces: &[(String, Trace)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for (_, trace) in traces {
        let ss = trace.s_matrices().map_err(|e| e.to_string())?;
        let ys = trace.ys();
        for _ in 0..10 {
            let tau = rng.random_range(0..trace.steps());
            let t = rng.random_range(tau + 1..=trace.steps());
            worst = worst.max(verify_ratio_identity(&trace.weights, &ss, &ys, t, tau).map_err(|e| e.to_string())?);
            pairs += 1;
        }
    }
    ensure(worst <= 1e-9, format!("max violation {worst:.2e} over {pairs} (t, tau) pairs (tol 1e-9)"))
}

fn criterion_3() -> Outcome {
    let exp = build(&bundled("pushsum_rotating.cfg"));
    if exp.config.n != 4 || exp.horizon() != 400 {
        return Err("pushsum_rotating.cfg is not the n=4, T=400 scenario".into());
    }
    let trace = exp.run(RunOptions::default()).map_err(|e| e.to_string())?;
    let errors: Vec<f64> = (0..=trace.steps()).map(|k| consensus_error(&trace, k).unwrap()).collect();
    let ts: Vec<f64> = (0..errors.len()).map(|t| t as f64).collect();
    let fit = fit_consensus_rate(&ts, &errors, DEFAULT_TAIL).map_err(|e| e.to_string())?;
    let last = *errors.last().unwrap();
    let ss = trace.s_matrices().map_err(|e| e.to_string())?;
    let limit = verify_product_limit(&ss, &trace.ys(), 0, trace.steps(), trace.kappa()).map_err(|e| e.to_string())?;
    ensure(
        fit.rate() < 1.0 && last < 1e-8 && limit < 1e-8,
        format!("geometric rate {:.4}, final error {last:.2e}, |Phi_S(T,0) - 1 y(0)'/n| = {limit:.2e}", fit.rate()),
    )
}

fn criterion_4(traces: &[(String, Trace)]) -> Outcome {
    let (mut x_dev, mut y_dev, mut s_dev): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut sparsity = true;
    for (_, trace) in traces {
        let x0 = trace.initial().x_sum();
        for s in &trace.states {
            x_dev = x_dev.max((s.x_sum() - &x0).amax());
            y_dev = y_dev.max((s.y.sum() - trace.kappa()).abs());
        }
        let (dev, same) = s_structure_violation(trace).map_err(|e| e.to_string())?;
        s_dev = s_dev.max(dev);
        sparsity &= same;
    }
    ensure(
        x_dev <= 1e-10 && y_dev <= 1e-10 && s_dev <= 1e-12 && sparsity,
        format!("sum x drift {x_dev:.1e}, sum y drift {y_dev:.1e}, S row-sum {s_dev:.1e}, sparsity equal: {sparsity}"),
    )
}

fn criterion_5() -> Outcome {
    let mut sp = bundled("subgradient_push.cfg");
    sp.graph = bundled("heterogeneous.cfg").graph;
    sp.n = 6;
    sp.init = bundled("heterogeneous.cfg").init;
    sp.objective = bundled("heterogeneous.cfg").objective;
    sp.objective.as_mut().unwrap().optimum = None;
    let mut ps = sp.clone();
    ps.algorithm = Algorithm::PushSubgradient;
    let het = bundled("heterogeneous.cfg");
    let mut sgp = bundled("sgp.cfg");
    sgp.horizon = 2000;
    let mut parts = Vec::new();
    let mut ok = true;
    for cfg in [sp, ps, het, sgp] {
        let trace = build(&cfg).run(RunOptions::default()).map_err(|e| e.to_string())?;
        let v = verify_descent_recursion(&trace).map_err(|e| e.to_string())?;
        ok &= v <= 1e-10;
        parts.push(format!("{} {v:.1e}", cfg.algorithm));
    }
    ensure(ok, format!("{} (tol 1e-10)", parts.join(", ")))
}

fn same_trace(a: &Trace, b: &Trace) -> bool {
    a.states.len() == b.states.len() && a.states.iter().zip(&b.states).all(|(s, t)| s.x == t.x && s.y == t.y)
}

fn criterion_6() -> Outcome {
    let base = bundled("heterogeneous.cfg");
    let run = |algorithm: Algorithm, sigma: Option<SigmaConfig>| {
        let mut cfg = base.clone();
        cfg.algorithm = algorithm;
        cfg.sigma = sigma;
        build(&cfg).run(RunOptions::default()).expect("run")
    };
    let ones =
        same_trace(&run(Algorithm::Heterogeneous, Some(SigmaConfig::Ones)), &run(Algorithm::SubgradientPush, None));
    let zeros =
        same_trace(&run(Algorithm::Heterogeneous, Some(SigmaConfig::Zeros)), &run(Algorithm::PushSubgradient, None));
    ensure(
        ones && zeros,
        format!("sigma=1 identical to subgradient-push: {ones}; sigma=0 identical to push-subgradient: {zeros}"),
    )
}

const SLOPE_WINDOW: (f64, f64) = (-0.65, -0.35);

fn in_window(s: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&s)
}

fn criterion_7() -> Outcome {
    let cfg = bundled("subgradient_push.cfg");
    let table = sweep_config(&cfg, &examples_dir(), SweepAxis::Horizon, false).map_err(|e| e.to_string())?;
    let horizons: Vec<u64> = table.rows.iter().map(|r| r.value).collect();
    if horizons != [400, 1600, 6400] {
        return Err(format!("unexpected horizons {horizons:?}"));
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for r in &table.rows {
        let (gap, bound) = (r.f_gap_avg.ok_or("no gap")?, r.bound.ok_or("no bound")?);
        ok &= gap <= bound;
        parts.push(format!("T={} {gap:.3e}<={bound:.2}", r.value));
    }
    let slope = table.slope.ok_or("no fit")?.slope;
    ok &= in_window(slope, SLOPE_WINDOW);
    ensure(ok, format!("slope {slope:.3}; {}", parts.join(", ")))
}

fn criterion_8() -> Outcome {
    let cfg = bundled("subgradient_push.cfg");
    let n = cfg.n;
    let mut gaps = vec![Vec::new(); n];
    let mut ts = Vec::new();
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    for horizon in [400, 1600, 6400] {
        let mut c = cfg.clone();
        c.horizon = horizon;
        let exp = build(&c);
        let trace = exp.run(RunOptions::default()).map_err(|e| e.to_string())?;
        let report = exp.report(&trace).map_err(|e| e.to_string())?;
        let agent = report.metrics.f_gap_agent.as_ref().ok_or("no per-agent gaps")?;
        let bounds = report.bounds.as_ref().ok_or("no bounds")?;
        for k in 0..n {
            let gap = *agent[k].last().unwrap();
            let bound = bounds.bound_agent[k].last().copied().flatten().ok_or("no per-agent bound at T-1")?;
            ok &= gap <= bound;
            worst_ratio = worst_ratio.max(gap / bound);
            gaps[k].push(gap);
        }
        ts.push(horizon as f64);
    }
    let mut slopes = Vec::new();
    for g in &gaps {
        let s = fit_rate(&ts, g, 1.0).map_err(|e| e.to_string())?.slope;
        ok &= in_window(s, SLOPE_WINDOW);
        slopes.push(format!("{s:.3}"));
    }
    ensure(ok, format!("agent slopes [{}], max gap/bound {worst_ratio:.3e}", slopes.join(", ")))
}

fn criterion_9() -> Outcome {
    let cfg = bundled("sgp.cfg");
    if cfg.seeds.len() != 30 || cfg.horizon != 10_000 {
        return Err("sgp.cfg is not the 30-seed, t <= 1e4 scenario".into());
    }
    let table = sweep_config(&cfg, &examples_dir(), SweepAxis::Seeds, false).map_err(|e| e.to_string())?;
    let slope = table.slope.ok_or("no fit")?.slope;
    let mut checked = 0;
    let mut ok = (-1.3..=-0.7).contains(&slope);
    let mut worst: f64 = 0.0;
    for c in &table.curve {
        for b in [c.bound_state, c.bound_state_a_priori].into_iter().flatten() {
            ok &= c.mean_sq_error <= b;
            worst = worst.max(c.mean_sq_error / b);
            checked += 1;
        }
    }
    ok &= checked > 0;
    ensure(ok, format!("tail slope {slope:.3}; {checked} (t, bound) cells hold, max mean/bound {worst:.2e}"))
}

fn criterion_10() -> Outcome {
    let exp = build(&bundled("weighted_pushsum.cfg"));
    let trace = exp.run(RunOptions::default()).map_err(|e| e.to_string())?;
    let z = ratio(trace.last()).map_err(|e| e.to_string())?;
    let dev = z.max_deviation_from(&DVector::from_element(1, 3.0));
    let mut ok = dev < 1e-8 && exp.horizon() == 200;

    let x_int = DMatrix::from_column_slice(2, 1, &[0.0, 4.0]);
    let seq = generate_sequence(&GeneratorKind::StaticComplete, 2, 200, 0).unwrap();
    let c = [0.5, 1.5];
    let t2 = run_weighted_pushsum(&seq, &WeightsPolicy::Default, &c, &x_int, 200).map_err(|e| e.to_string())?;
    let target = (c[0] * 0.0 + c[1] * 4.0) / (c[0] + c[1]);
    let dev2 = ratio(t2.last()).unwrap().max_deviation_from(&DVector::from_element(1, target));

    let n = 6;
    let seq = generate_sequence(&GeneratorKind::RandomSpanning { window: 3, extra_arc_prob: 0.1 }, n, 800, 5).unwrap();
    let c: Vec<f64> = (1..=n).map(|k| 0.3 * k as f64).collect();
    let x_int = DMatrix::from_fn(n, 1, |i, _| (i * i) as f64);
    let kappa: f64 = c.iter().sum();
    let expected = (0..n).map(|k| c[k] * x_int[(k, 0)]).sum::<f64>() / kappa;
    let t3 = run_weighted_pushsum(&seq, &WeightsPolicy::Default, &c, &x_int, 800).map_err(|e| e.to_string())?;
    let dev3 = ratio(t3.last()).unwrap().max_deviation_from(&DVector::from_element(1, expected));
    ok &= dev2 < 1e-8 && dev3 < 1e-8;
    ensure(
        ok,
        format!("c=(0.25,0.75): max |z-3| {dev:.1e}; kappa=2: {dev2:.1e}; kappa={kappa:.1} random n=6: {dev3:.1e}"),
    )
}

/// Plain-array subgradient method with the `1/outdeg` averaging weights.
fn reference_trajectory(exp: &Experiment) -> Vec<Vec<f64>> {
    let cfg = &exp.config;
    let n = cfg.n;
    let targets: Vec<f64> = cfg.objective.as_ref().unwrap().targets.iter().map(|t| t[0]).collect();
    let mut x: Vec<f64> = cfg.init.x0.as_ref().unwrap().iter().map(|r| r[0]).collect();
    let mut out = vec![x.clone()];
    for t in 0..cfg.horizon {
        let alpha = 1.0 / ((t + 1) as f64).sqrt();
        let v: Vec<f64> = (0..n)
            .map(|i| {
                let d = x[i] - targets[i];
                let g = if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                x[i] - alpha * g
            })
            .collect();
        let edges = exp.seq.graphs()[t].edges();
        let outdeg: Vec<usize> = (0..n).map(|j| edges.iter().filter(|(from, _)| *from == j).count()).collect();
        let mut next = vec![0.0; n];
        for &(j, i) in edges {
            next[i] += v[j] / outdeg[j] as f64;
        }
        x = next;
        out.push(x.clone());
    }
    out
}

fn criterion_11() -> Outcome {
    let exp = build(&bundled("doubly_stochastic.cfg"));
    let trace = exp.run(RunOptions::default()).map_err(|e| e.to_string())?;
    let y_dev = trace.states.iter().flat_map(|s| s.y.iter().map(|v| (v - 1.0).abs())).fold(0.0, f64::max);
    let reference = reference_trajectory(&exp);
    let mut z_dev: f64 = 0.0;
    for (s, r) in trace.states.iter().zip(&reference) {
        let z = ratio(s).map_err(|e| e.to_string())?;
        for i in 0..exp.config.n {
            z_dev = z_dev.max((z.z[(i, 0)] - r[i]).abs());
        }
    }
    ensure(
        y_dev <= 1e-14 && z_dev <= 1e-10 && reference.len() == trace.states.len(),
        format!("max |y-1| {y_dev:.1e}, max |z - reference| {z_dev:.1e} over {} steps", trace.steps()),
    )
}

fn criterion_12() -> Outcome {
    let mut ok = true;
    let mut slack = Vec::new();
    for mu in [0.1, 0.5, 0.9] {
        let bound = k2(mu).map_err(|e| e.to_string())?;
        let peak = (1..=1000).map(|t| t as f64 * mu.powi(t)).fold(0.0, f64::max);
        ok &= peak <= bound;
        slack.push(format!("mu={mu}: max t mu^t {peak:.4} <= K2 {bound:.4}"));
    }
    let inp = BoundInputs {
        n: 2,
        window: 1,
        g: 1.0,
        eta: 1.0,
        mu: (-1.0f64).exp(),
        alphas: vec![1.0],
        horizon: None,
        z_bar_err: 0.0,
        spread: vec![0.0; 2],
        pairwise: vec![vec![0.0; 2]; 2],
        x0: DMatrix::zeros(2, 1),
        g0: DMatrix::zeros(2, 1),
        sgp: Some(SgpParams { lambda_bar: 1.0, gamma_bar: 1.0, k1: 0.0, k1_stderr: 0.0 }),
    };
    let k = sgp_constants(&inp).map_err(|e| e.to_string())?.k2;
    ok &= (k - 0.3679).abs() <= 1e-4;
    ensure(ok, format!("{}; K2(1/e) = {k:.6}", slack.join("; ")))
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv") | Some("json")))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_13() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut configs: Vec<PathBuf> = fs::read_dir(examples_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "cfg"))
        .collect();
    configs.sort();
    let mut compared = 0;
    for cfg_path in &configs {
        let name = cfg_path.file_stem().unwrap().to_string_lossy().into_owned();
        let cfg = ExperimentConfig::load(cfg_path).map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("{name}-{rep}"));
            let opts = CommandOptions { out: Some(out.clone()), record_s: true, ..Default::default() };
            cmd_run(cfg_path, &opts).map_err(|e| format!("{name}: {e}"))?;
            if cfg.sweep.is_some() {
                cmd_sweep(cfg_path, &opts, None).map_err(|e| format!("{name}: {e}"))?;
            }
            outputs.push(csv_files(&out));
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            return Err(format!("{name}: outputs differ between reruns"));
        }
        compared += outputs[0].len();
    }
    ensure(
        configs.len() >= 6,
        format!("{} bundled scenarios, {compared} output files byte-identical across reruns", configs.len()),
    )
}

fn main() -> ExitCode {
    println!("running acceptance criteria");
    let traces = random_traces();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("absolute probability identity", Box::new(|| criterion_1(&traces))),
        ("ratio identity", Box::new(|| criterion_2(&traces))),
        ("push-sum exponential convergence", Box::new(criterion_3)),
        ("mass conservation and S structure", Box::new(|| criterion_4(&traces))),
        ("exact descent recursion", Box::new(criterion_5)),
        ("heterogeneous reductions", Box::new(criterion_6)),
        ("subgradient-push rate and bound", Box::new(criterion_7)),
        ("per-agent rate and bound", Box::new(criterion_8)),
        ("stochastic gradient-push rate and bound", Box::new(criterion_9)),
        ("weighted push-sum limit", Box::new(criterion_10)),
        ("doubly stochastic special case", Box::new(criterion_11)),
        ("K2 inequality", Box::new(criterion_12)),
        ("determinism", Box::new(criterion_13)),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome =
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
