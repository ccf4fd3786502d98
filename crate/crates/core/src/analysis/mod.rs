//! Run metrics, finite-time bounds and empirical rate fits.

mod bounds;
mod fit;
mod metrics;

pub use bounds::{
    bound_heterogeneous, bound_per_agent, bound_sgp, bound_subgradient_push_fixed, bound_subgradient_push_varying,
    estimate_k1, k2, sgp_constants, BoundInputs, ConstantsSource, SgpBound, SgpConstants, SgpParams, Variant,
};
pub use fit::{
    fit_consensus_rate, fit_geometric, fit_rate, log_grid, RateFit, DEFAULT_TAIL, MIN_FIT_POINTS, MIN_R_SQUARED,
    ROUNDOFF_FLOOR,
};
pub use metrics::{
    consensus_error, lyapunov_sequence, running_average_iterates, spread, verify_descent_recursion, GapMode, RunMetrics,
};
