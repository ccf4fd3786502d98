//! Every structural identity of push-sum checked on a random sequence, then again
//! with a deliberate fault in `y`.

use pushsum::config::ExperimentConfig;
use pushsum::consensus::RunOptions;
use pushsum::experiment::{verify_experiment, Experiment};
use std::path::Path;

const CONFIG: &str = r#"
n = 7
horizon = 300
seed = 21
algorithm = "pushsum"

[graph]
kind = "random-spanning"
L = 4
extra_arc_prob = 0.2

[init]
uniform = [-10.0, 10.0]
"#;

fn main() -> pushsum::Result<()> {
    let exp = Experiment::build(&ExperimentConfig::from_toml(CONFIG)?, Path::new("."), true)?;
    let (_, clean) = verify_experiment(&exp, RunOptions::default())?;
    println!("{clean}\n");
    let (_, faulty) = verify_experiment(&exp, RunOptions { perturb_y: Some(1e-3) })?;
    println!("with y perturbed by 1e-3 per step:\n{faulty}");
    Ok(())
}
