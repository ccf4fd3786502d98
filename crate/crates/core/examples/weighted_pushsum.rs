//! Weighted push-sum: starting from `x_i = c_i x_i^int`, `y_i = c_i`, the ratios
//! settle on `(1/kappa) sum_k c_k x_k^int`.

use nalgebra::DMatrix;
use pushsum::consensus::{consensus_limit, run_weighted_pushsum};
use pushsum::graph::{generate_sequence, GeneratorKind};
use pushsum::weights::WeightsPolicy;

fn main() -> pushsum::Result<()> {
    let x_int = DMatrix::from_column_slice(2, 1, &[0.0, 4.0]);
    let seq = generate_sequence(&GeneratorKind::StaticComplete, 2, 200, 0)?;
    for c in [[0.25, 0.75], [0.5, 1.5]] {
        let trace = run_weighted_pushsum(&seq, &WeightsPolicy::Default, &c, &x_int, 200)?;
        let limit = consensus_limit(trace.initial());
        println!(
            "c = {c:?}: kappa {:.2}, limit {:.4}, final z = {:?}",
            trace.kappa(),
            limit[0],
            trace.last().x.iter().zip(trace.last().y.iter()).map(|(x, y)| x / y).collect::<Vec<_>>()
        );
    }

    // Longer random sequences with a lopsided c.
    let n = 6;
    let seq = generate_sequence(&GeneratorKind::RandomSpanning { window: 3, extra_arc_prob: 0.1 }, n, 600, 3)?;
    let x_int = DMatrix::from_fn(n, 1, |i, _| i as f64);
    let c = [0.05, 0.1, 0.2, 0.3, 0.6, 1.0];
    let trace = run_weighted_pushsum(&seq, &WeightsPolicy::Default, &c, &x_int, 600)?;
    let limit = consensus_limit(trace.initial());
    println!("random spanning, n={n}: limit {:.6}, final error {:.2e}", limit[0], trace.final_error(&limit)?);
    Ok(())
}
