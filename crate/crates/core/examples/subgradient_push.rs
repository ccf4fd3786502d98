//! Subgradient-push on `f(z) = |z| + |z - 2|` with `alpha = 1/sqrt(T)`, compared
//! against the fixed-stepsize bound for several horizons.

use nalgebra::{dvector, DMatrix};
use pushsum::analysis::{
    bound_per_agent, bound_subgradient_push_fixed, fit_rate, BoundInputs, ConstantsSource, GapMode, RunMetrics, Variant,
};
use pushsum::consensus::{NetworkState, RunOptions};
use pushsum::graph::{generate_sequence, GeneratorKind};
use pushsum::optim::{run_optimizer, Algorithm, Component, Objective, RunSpec, StepSchedule};
use pushsum::weights::WeightsPolicy;

fn main() -> pushsum::Result<()> {
    let obj = Objective::new(vec![
        Component::AbsDeviation { target: vec![0.0] },
        Component::AbsDeviation { target: vec![2.0] },
    ])?
    .with_optimum(dvector![1.0])?;
    let x0 = DMatrix::from_column_slice(2, 1, &[4.0, 6.0]);

    let mut ts = Vec::new();
    let mut gaps = Vec::new();
    println!("{:>6} {:>12} {:>12} {:>12}", "T", "f-gap", "bound", "agent bound");
    for horizon in [400, 1600, 6400] {
        let seq = generate_sequence(&GeneratorKind::StaticComplete, 2, horizon, 0)?;
        let schedule = StepSchedule::InvSqrt { horizon };
        let trace = run_optimizer(RunSpec {
            algorithm: Algorithm::SubgradientPush,
            seq: &seq,
            weights: &WeightsPolicy::Default,
            objective: Some(&obj),
            schedule: Some(&schedule),
            sigma: None,
            oracle: None,
            initial: NetworkState::standard(x0.clone()),
            horizon,
            options: RunOptions::default(),
        })?;
        let last = horizon - 1;
        let m = RunMetrics::compute(&trace, Some(&obj), GapMode::RunningAverage, Some(&[last]))?;
        let inp = BoundInputs::for_trace(&trace, &obj, 1, ConstantsSource::Realized)?;
        let gap = m.f_gap_avg.as_ref().expect("optimum known")[0];
        println!(
            "{horizon:>6} {gap:>12.4e} {:>12.4e} {:>12.4e}",
            bound_subgradient_push_fixed(&inp)?,
            bound_per_agent(&inp, 0, Variant::Fixed)?
        );
        ts.push(horizon as f64);
        gaps.push(gap);
    }
    println!("log-log slope {:.3}", fit_rate(&ts, &gaps, 1.0)?.slope);
    Ok(())
}
