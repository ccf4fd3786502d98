//! Push-sum averaging on a sequence where only one arc is live per step.

use nalgebra::DMatrix;
use pushsum::analysis::{consensus_error, fit_consensus_rate, DEFAULT_TAIL};
use pushsum::consensus::{consensus_limit, run_pushsum};
use pushsum::graph::{generate_sequence, GeneratorKind};
use pushsum::weights::WeightsPolicy;

fn main() -> pushsum::Result<()> {
    let (n, horizon) = (4, 400);
    let seq = generate_sequence(&GeneratorKind::RotatingSingleEdge, n, horizon, 7)?;
    let x0 = DMatrix::from_column_slice(n, 1, &[1.0, -2.0, 5.0, 0.5]);
    let trace = run_pushsum(&seq, &WeightsPolicy::Default, &x0, horizon)?;

    let target = consensus_limit(trace.initial());
    let errors: Vec<f64> = (0..=horizon).map(|k| consensus_error(&trace, k)).collect::<Result<_, _>>()?;
    for k in [0, 25, 50, 100, 200, 400] {
        println!("t={k:>4}  consensus error {:.3e}", errors[k]);
    }
    let ts: Vec<f64> = (0..=horizon).map(|t| t as f64).collect();
    let fit = fit_consensus_rate(&ts, &errors, DEFAULT_TAIL)?;
    println!("average {:.4}, final distance {:.2e}", target[0], trace.final_error(&target)?);
    println!("geometric rate {:.4} per step (R^2 {:.3})", fit.rate(), fit.r_squared);
    Ok(())
}
