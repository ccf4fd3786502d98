//! The finite-time bounds as plain functions of their constants.

use nalgebra::DMatrix;
use pushsum::analysis::{
    bound_heterogeneous, bound_sgp, bound_subgradient_push_fixed, bound_subgradient_push_varying, k2, sgp_constants,
    BoundInputs, SgpBound, SgpParams, Variant,
};
use pushsum::consensus::theoretical_constants;

fn main() -> pushsum::Result<()> {
    for (n, window) in [(2, 1), (4, 2), (8, 3)] {
        let tc = theoretical_constants(n, window)?;
        println!("n={n} L={window}: eta_lb = exp({:.2}), mu_ub = {:.12}", tc.log_eta_lb, tc.mu_ub);
    }

    let horizon = 400;
    let inp = BoundInputs {
        n: 2,
        window: 1,
        g: 1.0,
        eta: 1.0,
        mu: 0.75,
        alphas: vec![1.0 / (horizon as f64).sqrt(); horizon],
        horizon: Some(horizon),
        z_bar_err: 4.0,
        spread: vec![1.0, 1.0],
        pairwise: vec![vec![0.0, 2.0], vec![2.0, 0.0]],
        x0: DMatrix::from_column_slice(2, 1, &[4.0, 6.0]),
        g0: DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        sgp: None,
    };
    println!("fixed stepsize, T={horizon}: {:.4}", bound_subgradient_push_fixed(&inp)?);
    println!("heterogeneous, T={horizon}:  {:.4}", bound_heterogeneous(&inp, Variant::Fixed, None)?);

    let varying = BoundInputs {
        alphas: (0..horizon).map(|t| 1.0 / ((t + 1) as f64).sqrt()).collect(),
        horizon: None,
        ..inp.clone()
    };
    for t in [10, 100, 399] {
        println!("alpha = 1/sqrt(t+1), t={t}: {:.4}", bound_subgradient_push_varying(&varying, t)?);
    }

    for mu in [0.1, 0.5, 1.0 / std::f64::consts::E, 0.9] {
        println!("K2({mu:.4}) = {:.6}", k2(mu)?);
    }
    let sgp = BoundInputs { sgp: Some(SgpParams { lambda_bar: 1.0, gamma_bar: 1.0, k1: 2.0, k1_stderr: 0.0 }), ..inp };
    let c = sgp_constants(&sgp)?;
    println!("SGP: K2 = {:.4}, C = {:.4e}", c.k2, c.c);
    for t in [10, 100, 1000, 10000] {
        println!(
            "t={t:>5}: state {:.4e}  average {:.4e}",
            bound_sgp(&sgp, t, SgpBound::State)?,
            bound_sgp(&sgp, t, SgpBound::Average)?
        );
    }
    Ok(())
}
