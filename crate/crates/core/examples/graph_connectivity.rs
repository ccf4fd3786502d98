//! Generating graph sequences, checking uniform strong connectivity and building
//! the default column-stochastic weights.

use pushsum::graph::{generate_sequence, union_graph, DirectedGraph, GeneratorKind, GraphSequence};
use pushsum::weights::{default_weights, validate, WeightMatrix};

fn main() -> pushsum::Result<()> {
    let n = 5;
    let kinds = [
        GeneratorKind::StaticRing,
        GeneratorKind::RotatingSingleEdge,
        GeneratorKind::RandomSpanning { window: 3, extra_arc_prob: 0.1 },
        GeneratorKind::DoublyStochastic,
    ];
    for kind in &kinds {
        let seq = generate_sequence(kind, n, 60, 9)?;
        let smallest = (1..=seq.len()).find(|w| seq.is_uniformly_strongly_connected(*w).unwrap_or(false));
        println!("{kind:?}: claimed L = {:?}, smallest working L = {smallest:?}", seq.claimed_window());
    }

    // A sequence that alternates between two halves of a ring is connected only in pairs.
    let a = DirectedGraph::new(4, [(0, 1), (2, 3)])?;
    let b = DirectedGraph::new(4, [(1, 2), (3, 0)])?;
    let seq = GraphSequence::new(vec![a.clone(), b.clone(), a.clone(), b.clone()], None)?;
    println!(
        "alternating halves: L=1 {}, L=2 {}; union strongly connected: {}",
        seq.is_uniformly_strongly_connected(1)?,
        seq.is_uniformly_strongly_connected(2)?,
        union_graph(&[a.clone(), b])?.is_strongly_connected()
    );

    let w = default_weights(&a);
    print!("default weights for the first half:\n{}", w.to_text());
    let bad = WeightMatrix::from_rows(&[
        vec![0.5, 0.0, 0.0, 0.0],
        vec![0.5, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.5, 0.0],
        vec![0.0, 0.0, 0.4, 1.0],
    ])?;
    println!("hand-written weights: {}", validate(&bad, &a, 0.1)?);
    Ok(())
}
