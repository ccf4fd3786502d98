//! Stochastic gradient-push on two quadratics, averaged over seeds, against the
//! `O(1/t)` bound evaluated with constants pooled over the seeds.

use std::path::Path;

use pushsum::config::{ExperimentConfig, SweepAxis};
use pushsum::experiment::sweep_config;

const CONFIG: &str = r#"
n = 2
horizon = 5000
seed = 1
seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20]
algorithm = "sgp"

[graph]
kind = "static-complete"

[objective]
kind = "quadratic"
targets = [[0.0], [2.0]]
curvature = [1.0]

[stepsize]
kind = "sgp-strong"

[oracle]
noise = [0.5, 0.5]

[init]
uniform = [-1.0, 1.0]

[record]
metrics_points = 16
"#;

fn main() -> pushsum::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let table = sweep_config(&cfg, Path::new("."), SweepAxis::Seeds, false)?;
    println!("{:>6} {:>12} {:>10} {:>12} {:>12}", "t", "E|z-z*|^2", "stderr", "bound", "Lyapunov");
    for c in &table.curve {
        println!(
            "{:>6} {:>12.4e} {:>10.2e} {:>12} {:>12}",
            c.t,
            c.mean_sq_error,
            c.stderr,
            c.bound_state.map(|b| format!("{b:.4e}")).unwrap_or_else(|| "-".into()),
            c.mean_lyapunov.map(|b| format!("{b:.4e}")).unwrap_or_else(|| "-".into()),
        );
    }
    if let Some(fit) = &table.slope {
        println!("tail slope {:.3} (R^2 {:.3})", fit.slope, fit.r_squared);
    }
    println!("bounds hold: {}", table.bounds_hold);
    Ok(())
}
