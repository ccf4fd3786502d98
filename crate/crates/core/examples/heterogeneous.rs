//! Agents that randomly switch between stepping before and after mixing, next to
//! the two pure orderings.

use nalgebra::DMatrix;
use pushsum::analysis::{GapMode, RunMetrics};
use pushsum::consensus::{NetworkState, RunOptions};
use pushsum::graph::{generate_sequence, GeneratorKind};
use pushsum::optim::{run_optimizer, Algorithm, Component, Objective, RunSpec, StepSchedule, SwitchingSignal};
use pushsum::weights::WeightsPolicy;

fn main() -> pushsum::Result<()> {
    let targets = [-3.0, 0.0, 2.0, 4.0, 1.0, -1.0];
    let n = targets.len();
    let obj = Objective::new(targets.iter().map(|a| Component::Huber { target: vec![*a], delta: 1.0 }).collect())?;
    let opt = obj.optimum().expect("one-dimensional optimum is computed").clone();
    println!("optimum z* = {:.6}, f* = {:.6}", opt.point[0], opt.value);

    let horizon = 2000;
    let seq = generate_sequence(&GeneratorKind::RandomSpanning { window: 3, extra_arc_prob: 0.15 }, n, horizon, 11)?;
    let schedule = StepSchedule::Harmonic { a: 1.0, p: 0.5 };
    let x0 = DMatrix::from_fn(n, 1, |i, _| 5.0 - 2.0 * i as f64);
    let runs = [
        ("subgradient-push", Algorithm::SubgradientPush, None),
        ("push-subgradient", Algorithm::PushSubgradient, None),
        ("heterogeneous p=0.5", Algorithm::Heterogeneous, Some(SwitchingSignal::Bernoulli { p: 0.5, seed: 4 })),
        ("alternating", Algorithm::Heterogeneous, Some(SwitchingSignal::Alternating)),
    ];
    for (label, algorithm, sigma) in runs {
        let trace = run_optimizer(RunSpec {
            algorithm,
            seq: &seq,
            weights: &WeightsPolicy::Default,
            objective: Some(&obj),
            schedule: Some(&schedule),
            sigma: sigma.as_ref(),
            oracle: None,
            initial: NetworkState::standard(x0.clone()),
            horizon,
            options: RunOptions::default(),
        })?;
        let m = RunMetrics::compute(&trace, Some(&obj), GapMode::RunningAverage, Some(&[horizon - 1]))?;
        println!(
            "{label:<20} f-gap {:.3e}  consensus {:.3e}",
            m.f_gap_avg.as_ref().expect("optimum known")[0],
            m.consensus_error[0]
        );
    }
    Ok(())
}
