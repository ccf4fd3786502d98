//! Objectives, stepsizes, switching signals, gradient oracles and the
//! push-sum optimization algorithms built on them.

mod algorithms;
mod objective;
mod oracle;
mod schedule;
mod signal;

pub use algorithms::{
    apply_heterogeneous, apply_push_subgradient, apply_subgradient_push, heterogeneous_step, push_subgradient_step,
    run_optimizer, sgp_step, stochastic_gradients, subgradient_push_step, subgradients, weighted_average_state,
    Algorithm, RunSpec,
};
pub use objective::{Component, Objective, Optimum};
pub use oracle::{stochastic_gradient, uniform_ball, GradientOracle};
pub use schedule::{validate_history, StepSchedule};
pub use signal::SwitchingSignal;
