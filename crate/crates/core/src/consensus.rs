//! The push-sum iteration and the objects it induces.
//!
//! Each agent holds `x_i` (a row of `x`) and a scalar weight `y_i`; one step is
//! `x <- W x`, `y <- W y` with column-stochastic `W`. The ratios
//! `z_i = x_i / y_i` then evolve under the row-stochastic matrices
//! `S(t)` with `s_ij = w_ij y_j / y_i(t+1)`, and `pi(t) = y(t) / kappa` is an
//! absolute probability sequence for `{S(t)}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{arg, Error, Result};
use crate::graph::GraphSequence;
use crate::trace::Trace;
use crate::weights::{WeightMatrix, WeightsPolicy};

/// `y_i` at or below this aborts a run.
pub const DEGENERATE_Y: f64 = 1e-300;

/// Tolerance for `y(t+1) = W y(t)` consistency checks.
pub const CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub t: usize,
    /// `n x d`; row `i` is `x_i`.
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    /// `sum_i y_i(0)`: `n` for the standard start, `sum_i c_i` for a weighted one.
    pub kappa: f64,
}

impl NetworkState {
    /// `y(0) = 1`, `kappa = n`.
    pub fn standard(x0: DMatrix<f64>) -> Self {
        let n = x0.nrows();
        Self { t: 0, x: x0, y: DVector::from_element(n, 1.0), kappa: n as f64 }
    }

    /// `x_i(0) = c_i x_i^int`, `y_i(0) = c_i`, `kappa = sum c_i`.
    pub fn weighted(c: &[f64], x_int: &DMatrix<f64>) -> Result<Self> {
        if c.len() != x_int.nrows() {
            return arg(format!("{} coefficients for {} agents", c.len(), x_int.nrows()));
        }
        if let Some(i) = c.iter().position(|ci| !(*ci > 0.0) || !ci.is_finite()) {
            return arg(format!("coefficient c[{i}] = {} must be positive", c[i]));
        }
        let mut x = x_int.clone();
        for (i, ci) in c.iter().enumerate() {
            x.row_mut(i).scale_mut(*ci);
        }
        Ok(Self { t: 0, x, y: DVector::from_column_slice(c), kappa: c.iter().sum() })
    }

    pub fn starting_at(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn check_nondegenerate(&self) -> Result<()> {
        match self.y.iter().position(|v| !(*v > DEGENERATE_Y)) {
            Some(agent) => Err(Error::Degenerate { t: self.t, agent, value: self.y[agent] }),
            None => Ok(()),
        }
    }

    /// `sum_i x_i` as a column vector of length `d`.
    pub fn x_sum(&self) -> DVector<f64> {
        self.x.row_sum().transpose()
    }

    /// `<z> = sum_i pi_i z_i = (1/kappa) sum_i x_i`.
    pub fn weighted_average(&self) -> DVector<f64> {
        self.x_sum() / self.kappa
    }

    fn check_weights(&self, w: &WeightMatrix) -> Result<()> {
        if w.n() != self.n() {
            return arg(format!("{}x{} weights for {} agents", w.n(), w.n(), self.n()));
        }
        Ok(())
    }
}

/// `z`, row `i` equal to `x_i / y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioState {
    pub z: DMatrix<f64>,
}

impl RatioState {
    /// Straight average `z_bar = (1/n) sum_i z_i`.
    pub fn mean(&self) -> DVector<f64> {
        self.z.row_mean().transpose()
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.z.row(i).transpose()
    }

    pub fn max_deviation_from(&self, target: &DVector<f64>) -> f64 {
        self.z.row_iter().map(|r| (r.transpose() - target).norm()).fold(0.0, f64::max)
    }
}

/// Row-stochastic matrix governing `z(t+1) = S(t) z(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SMatrix(DMatrix<f64>);

impl SMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `max_i |sum_j s_ij - 1|`.
    pub fn row_sum_deviation(&self) -> f64 {
        self.0.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn same_sparsity(&self, w: &WeightMatrix) -> bool {
        self.0.iter().zip(w.matrix().iter()).all(|(s, w)| (*s > 0.0) == (*w > 0.0))
    }

    pub fn min_diagonal(&self) -> f64 {
        self.0.diagonal().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Stochastic vector `pi(t) = y(t) / kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsoluteProbability(pub DVector<f64>);

/// A-priori constants for a sequence that is uniformly strongly connected
/// with window `L`: `eta >= n^(-nL)`, `mu <= (1 - n^(-nL))^(1/L)`, `c = 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalConstants {
    pub eta_lb: f64,
    /// `-nL ln n`, exact even when `eta_lb` underflows.
    pub log_eta_lb: f64,
    pub mu_ub: f64,
    pub c: f64,
    /// True when `eta_lb` underflowed to zero or `mu_ub` rounded up to 1 and was
    /// capped at the largest double below 1.
    pub saturated: bool,
}

pub fn theoretical_constants(n: usize, window: usize) -> Result<TheoreticalConstants> {
    if n == 0 || window == 0 {
        return arg("n and L must be at least 1");
    }
    let log_eta_lb = -((n * window) as f64) * (n as f64).ln();
    let eta_lb = log_eta_lb.exp();
    let mut mu_ub = if n == 1 { 0.0 } else { ((-eta_lb).ln_1p() / window as f64).exp() };
    let mut saturated = eta_lb == 0.0;
    if mu_ub >= 1.0 {
        mu_ub = f64::from_bits(1.0f64.to_bits() - 1);
        saturated = true;
    }
    Ok(TheoreticalConstants { eta_lb, log_eta_lb, mu_ub, c: 4.0, saturated })
}

/// `x' = W x`, `y' = W y`, `t' = t + 1`.
pub fn pushsum_step(state: &NetworkState, w: &WeightMatrix) -> Result<NetworkState> {
    state.check_weights(w)?;
    Ok(NetworkState { t: state.t + 1, x: w.matrix() * &state.x, y: w.matrix() * &state.y, kappa: state.kappa })
}

pub fn ratio(state: &NetworkState) -> Result<RatioState> {
    if let Some(i) = state.y.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Degenerate { t: state.t, agent: i, value: state.y[i] });
    }
    let mut z = state.x.clone();
    for (i, yi) in state.y.iter().enumerate() {
        z.row_mut(i).unscale_mut(*yi);
    }
    Ok(RatioState { z })
}

fn check_positive(y: &DVector<f64>, name: &str) -> Result<()> {
    if let Some(i) = y.iter().position(|v| !(*v > 0.0)) {
        return arg(format!("{name}[{i}] = {} is not positive", y[i]));
    }
    Ok(())
}

/// `s_ij = w_ij y_j / y_next_i`, after checking `y_next = W y`.
pub fn s_matrix(w: &WeightMatrix, y: &DVector<f64>, y_next: &DVector<f64>) -> Result<SMatrix> {
    if y.len() != w.n() || y_next.len() != w.n() {
        return arg("dimension mismatch between weights and y");
    }
    check_positive(y, "y")?;
    check_positive(y_next, "y_next")?;
    let predicted = w.matrix() * y;
    let gap = (&predicted - y_next).amax();
    if gap > CONSISTENCY_TOL {
        return arg(format!("y_next differs from W y by {gap:e}"));
    }
    Ok(build_s(w, y, y_next))
}

/// `S(t)` from `W(t)` and `y(t)` alone, using `y(t+1) = W(t) y(t)`.
pub fn s_matrix_from(w: &WeightMatrix, y: &DVector<f64>) -> Result<SMatrix> {
    if y.len() != w.n() {
        return arg("dimension mismatch between weights and y");
    }
    check_positive(y, "y")?;
    let y_next = w.matrix() * y;
    Ok(build_s(w, y, &y_next))
}

fn build_s(w: &WeightMatrix, y: &DVector<f64>, y_next: &DVector<f64>) -> SMatrix {
    let n = w.n();
    SMatrix(DMatrix::from_fn(n, n, |i, j| w.get(i, j) * y[j] / y_next[i]))
}

/// `Phi(t, tau) = M(t-1) ... M(tau)` over step-indexed matrices.
pub fn phi_product(mats: &[&DMatrix<f64>], t: usize, tau: usize) -> Result<DMatrix<f64>> {
    if tau >= t {
        return arg(format!("need tau < t, got tau = {tau}, t = {t}"));
    }
    if t > mats.len() {
        return arg(format!("t = {t} beyond available horizon {}", mats.len()));
    }
    let mut product = mats[tau].clone();
    for m in &mats[tau + 1..t] {
        product = *m * &product;
    }
    Ok(product)
}

pub fn absolute_probability(y: &DVector<f64>, kappa: f64) -> Result<AbsoluteProbability> {
    if !(kappa > 0.0) {
        return arg(format!("kappa must be positive, got {kappa}"));
    }
    Ok(AbsoluteProbability(y / kappa))
}

/// `max_{t,j} |[pi(t+1)^T S(t)]_j - pi_j(t)|` with `pi = y / kappa`.
///
/// `ys` holds `y(0..=T)` and `ss` holds `S(0..T)`.
pub fn verify_absolute_probability(ys: &[DVector<f64>], ss: &[SMatrix], kappa: f64) -> f64 {
    ss.iter()
        .enumerate()
        .filter(|(k, _)| k + 1 < ys.len())
        .map(|(k, s)| {
            let next = (s.matrix().transpose() * &ys[k + 1]) / kappa;
            let current = &ys[k] / kappa;
            (next - current).amax()
        })
        .fold(0.0, f64::max)
}

/// `max_{i,j} |[Phi_S(t,tau)]_ij y_i(t) - [Phi_W(t,tau)]_ij y_j(tau)|`.
pub fn verify_ratio_identity(
    ws: &[WeightMatrix],
    ss: &[SMatrix],
    ys: &[DVector<f64>],
    t: usize,
    tau: usize,
) -> Result<f64> {
    if t >= ys.len() {
        return arg(format!("t = {t} beyond recorded states"));
    }
    let w_refs: Vec<&DMatrix<f64>> = ws.iter().map(WeightMatrix::matrix).collect();
    let s_refs: Vec<&DMatrix<f64>> = ss.iter().map(SMatrix::matrix).collect();
    let phi_w = phi_product(&w_refs, t, tau)?;
    let phi_s = phi_product(&s_refs, t, tau)?;
    let n = phi_w.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let lhs = phi_s[(i, j)] * ys[t][i];
            let rhs = phi_w[(i, j)] * ys[tau][j];
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// `max_{i,j} |[Phi_S(t,tau)]_ij - y_j(tau) / kappa|`.
pub fn verify_product_limit(ss: &[SMatrix], ys: &[DVector<f64>], tau: usize, t: usize, kappa: f64) -> Result<f64> {
    let s_refs: Vec<&DMatrix<f64>> = ss.iter().map(SMatrix::matrix).collect();
    let phi = phi_product(&s_refs, t, tau)?;
    let y_tau = ys.get(tau).ok_or_else(|| Error::Argument(format!("no y({tau}) recorded")))?;
    let mut worst: f64 = 0.0;
    for i in 0..phi.nrows() {
        for j in 0..phi.ncols() {
            worst = worst.max((phi[(i, j)] - y_tau[j] / kappa).abs());
        }
    }
    Ok(worst)
}

/// Fault injection and other run-time knobs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// Adds this amount to `y_0` after every step, breaking the column-stochastic
    /// dynamics on purpose so that verification can demonstrate sensitivity.
    pub perturb_y: Option<f64>,
}

impl RunOptions {
    pub(crate) fn apply(&self, state: &mut NetworkState) {
        if let Some(delta) = self.perturb_y {
            state.y[0] += delta;
        }
    }
}

pub(crate) fn check_horizon(seq: &GraphSequence, n: usize, horizon: usize) -> Result<()> {
    if seq.n() != n {
        return arg(format!("graph sequence has {} vertices, initial state has {n} agents", seq.n()));
    }
    if seq.len() < horizon {
        return arg(format!("horizon {horizon} exceeds graph sequence length {}", seq.len()));
    }
    Ok(())
}

/// Runs push-sum from an arbitrary initial state.
pub fn run_from(
    seq: &GraphSequence,
    policy: &WeightsPolicy,
    initial: NetworkState,
    horizon: usize,
    options: &RunOptions,
) -> Result<Trace> {
    check_horizon(seq, initial.n(), horizon)?;
    initial.check_nondegenerate()?;
    let mut trace = Trace::new(initial);
    for k in 0..horizon {
        let w = policy.weights_for(&seq.graphs()[k])?;
        let mut next = pushsum_step(trace.last(), &w)?;
        options.apply(&mut next);
        next.check_nondegenerate()?;
        trace.weights.push(w);
        trace.states.push(next);
    }
    Ok(trace)
}

/// Standard push-sum with `y(0) = 1`; the ratios converge to the average of `x0`.
pub fn run_pushsum(seq: &GraphSequence, policy: &WeightsPolicy, x0: &DMatrix<f64>, horizon: usize) -> Result<Trace> {
    run_from(seq, policy, NetworkState::standard(x0.clone()), horizon, &RunOptions::default())
}

/// Push-sum from `x_i(0) = c_i x_i^int`, `y_i(0) = c_i`; the ratios converge to
/// `(1/kappa) sum_k c_k x_k^int`.
pub fn run_weighted_pushsum(
    seq: &GraphSequence,
    policy: &WeightsPolicy,
    c: &[f64],
    x_int: &DMatrix<f64>,
    horizon: usize,
) -> Result<Trace> {
    run_from(seq, policy, NetworkState::weighted(c, x_int)?, horizon, &RunOptions::default())
}

/// Limit of push-sum from `initial`: `(1/kappa) sum_i x_i(0)`.
pub fn consensus_limit(initial: &NetworkState) -> DVector<f64> {
    initial.weighted_average()
}

/// Largest row-sum deviation over every `S(t)` of a trace; also confirms sparsity.
pub fn s_structure_violation(trace: &Trace) -> Result<(f64, bool)> {
    let ss = trace.s_matrices()?;
    let dev = ss.iter().map(SMatrix::row_sum_deviation).fold(0.0, f64::max);
    let sparsity = ss.iter().zip(&trace.weights).all(|(s, w)| s.same_sparsity(w));
    Ok((dev, sparsity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_sequence, DirectedGraph, GeneratorKind};

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    fn half() -> WeightMatrix {
        WeightMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
    }

    fn skew() -> WeightMatrix {
        WeightMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 0.5]]).unwrap()
    }

    #[test]
    fn step_examples() {
        let s = NetworkState::standard(col(&[0.0, 2.0]));
        let next = pushsum_step(&s, &half()).unwrap();
        assert_eq!(next.x, col(&[1.0, 1.0]));
        assert_eq!(next.y, DVector::from_vec(vec![1.0, 1.0]));
        assert_eq!(next.t, 1);

        let id = WeightMatrix::from_matrix(DMatrix::identity(2, 2)).unwrap();
        let same = pushsum_step(&s, &id).unwrap();
        assert_eq!((same.x, same.y), (s.x.clone(), s.y.clone()));

        let next = pushsum_step(&s, &skew()).unwrap();
        assert_eq!(next.y, DVector::from_vec(vec![1.5, 0.5]));

        let three = WeightMatrix::from_matrix(DMatrix::identity(3, 3)).unwrap();
        assert!(pushsum_step(&s, &three).is_err());
    }

    #[test]
    fn ratio_examples() {
        let s = NetworkState { t: 0, x: col(&[1.0, 1.0]), y: DVector::from_vec(vec![1.0, 1.0]), kappa: 2.0 };
        assert_eq!(ratio(&s).unwrap().z, col(&[1.0, 1.0]));
        let s = NetworkState { t: 0, x: col(&[3.0, 1.0]), y: DVector::from_vec(vec![1.5, 0.5]), kappa: 2.0 };
        assert_eq!(ratio(&s).unwrap().z, col(&[2.0, 2.0]));
        let s = NetworkState { t: 4, x: col(&[3.0, 1.0]), y: DVector::from_vec(vec![1.5, 0.0]), kappa: 2.0 };
        assert!(matches!(ratio(&s), Err(Error::Degenerate { t: 4, agent: 1, .. })));
    }

    #[test]
    fn s_matrix_examples() {
        let y = DVector::from_vec(vec![1.0, 1.0]);
        let y_next = DVector::from_vec(vec![1.5, 0.5]);
        let s = s_matrix(&skew(), &y, &y_next).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 0.0, 1.0]);
        assert!((s.matrix() - expected).amax() < 1e-15);
        assert!(s.row_sum_deviation() <= 1e-12);
        assert!(s.same_sparsity(&skew()));

        let s = s_matrix(&half(), &y, &y).unwrap();
        assert_eq!(s.matrix(), half().matrix());

        assert!(s_matrix(&skew(), &y, &y).is_err());
    }

    #[test]
    fn phi_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 0.5]);
        let b = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.5, 1.0]);
        let mats = [&a, &b, &a];
        assert_eq!(phi_product(&mats, 2, 1).unwrap(), b);
        let p = phi_product(&mats, 3, 0).unwrap();
        assert_eq!(p, &a * &b * &a);
        for j in 0..2 {
            assert!((p.column(j).sum() - 1.0).abs() < 1e-10);
        }
        assert!(phi_product(&mats, 1, 1).is_err());
        assert!(phi_product(&mats, 4, 0).is_err());

        let h = half().matrix().clone();
        let hs = vec![&h; 6];
        assert!(phi_product(&hs, 6, 1).unwrap().iter().all(|v| *v == 0.5));
    }

    #[test]
    fn absolute_probability_examples() {
        let pi = absolute_probability(&DVector::from_vec(vec![1.0, 1.0]), 2.0).unwrap();
        assert_eq!(pi.0, DVector::from_vec(vec![0.5, 0.5]));
        let pi = absolute_probability(&DVector::from_vec(vec![1.5, 0.5]), 2.0).unwrap();
        assert_eq!(pi.0, DVector::from_vec(vec![0.75, 0.25]));
        let w = NetworkState::weighted(&[0.25, 0.75], &col(&[1.0, 1.0])).unwrap();
        assert_eq!(absolute_probability(&w.y, w.kappa).unwrap().0, DVector::from_vec(vec![0.25, 0.75]));
        assert!(absolute_probability(&w.y, 0.0).is_err());
    }

    #[test]
    fn absolute_probability_recursion_by_hand() {
        let y0 = DVector::from_vec(vec![1.0, 1.0]);
        let y1 = DVector::from_vec(vec![1.5, 0.5]);
        let s0 = s_matrix(&skew(), &y0, &y1).unwrap();
        assert!(verify_absolute_probability(&[y0, y1], &[s0], 2.0) < 1e-15);
    }

    #[test]
    fn theoretical_constant_examples() {
        let c = theoretical_constants(2, 1).unwrap();
        assert_eq!((c.eta_lb, c.mu_ub, c.c), (0.25, 0.75, 4.0));
        let c = theoretical_constants(1, 5).unwrap();
        assert_eq!((c.eta_lb, c.mu_ub), (1.0, 0.0));
        let c = theoretical_constants(3, 2).unwrap();
        assert!((c.eta_lb - 1.0 / 729.0).abs() < 1e-18);
        assert!((c.eta_lb - 1.3717e-3).abs() < 1e-7);
        assert!((c.mu_ub - (1.0f64 - 1.0 / 729.0).sqrt()).abs() < 1e-15);
        assert!((c.mu_ub - 0.99931).abs() < 1e-5);
        assert!(!c.saturated);

        let big = theoretical_constants(50, 20).unwrap();
        assert!(big.saturated);
        assert_eq!(big.eta_lb, 0.0);
        assert!(big.mu_ub < 1.0);
        assert!((big.log_eta_lb + 1000.0 * 50f64.ln()).abs() < 1e-9);
        assert!(theoretical_constants(0, 1).is_err());
    }

    #[test]
    fn run_examples() {
        let seq = GraphSequence::constant(DirectedGraph::complete(2).unwrap(), 5).unwrap();
        let trace = run_pushsum(&seq, &WeightsPolicy::Default, &col(&[0.0, 2.0]), 5).unwrap();
        for z in &trace.ratios().unwrap()[1..] {
            assert_eq!(z.z, col(&[1.0, 1.0]));
        }

        let seq =
            generate_sequence(&GeneratorKind::RandomSpanning { window: 3, extra_arc_prob: 0.2 }, 4, 30, 2).unwrap();
        let trace = run_pushsum(&seq, &WeightsPolicy::Default, &col(&[3.5; 4]), 30).unwrap();
        for z in trace.ratios().unwrap() {
            assert!(z.z.iter().all(|v| (*v - 3.5).abs() < 1e-14));
        }

        let seq = generate_sequence(&GeneratorKind::RotatingSingleEdge, 4, 400, 0).unwrap();
        let x0 = col(&[1.0, -2.0, 5.0, 0.5]);
        let trace = run_pushsum(&seq, &WeightsPolicy::Default, &x0, 400).unwrap();
        let target = DVector::from_element(1, 1.125);
        assert!(trace.final_error(&target).unwrap() < 1e-8);
        assert!(run_pushsum(&seq, &WeightsPolicy::Default, &x0, 401).is_err());
    }

    #[test]
    fn weighted_run_examples() {
        let seq = GraphSequence::constant(DirectedGraph::complete(2).unwrap(), 50).unwrap();
        let trace = run_weighted_pushsum(&seq, &WeightsPolicy::Default, &[0.25, 0.75], &col(&[0.0, 4.0]), 50).unwrap();
        assert!(trace.final_error(&DVector::from_element(1, 3.0)).unwrap() < 1e-12);

        let trace = run_weighted_pushsum(&seq, &WeightsPolicy::Default, &[0.5, 1.5], &col(&[0.0, 2.0]), 50).unwrap();
        assert!(trace.final_error(&DVector::from_element(1, 1.5)).unwrap() < 1e-12);

        let seq = generate_sequence(&GeneratorKind::RotatingSingleEdge, 3, 200, 0).unwrap();
        let x_int = col(&[3.0, 6.0, -3.0]);
        let third = [1.0 / 3.0; 3];
        let trace = run_weighted_pushsum(&seq, &WeightsPolicy::Default, &third, &x_int, 200).unwrap();
        assert!(trace.final_error(&DVector::from_element(1, 2.0)).unwrap() < 1e-8);

        assert!(run_weighted_pushsum(&seq, &WeightsPolicy::Default, &[1.0, 0.0, 1.0], &x_int, 10).is_err());
    }

    #[test]
    fn degenerate_run_aborts() {
        let seq = GraphSequence::constant(DirectedGraph::complete(2).unwrap(), 3).unwrap();
        let opts = RunOptions { perturb_y: Some(-5.0) };
        let err = run_from(&seq, &WeightsPolicy::Default, NetworkState::standard(col(&[0.0, 1.0])), 3, &opts);
        assert!(matches!(err, Err(Error::Degenerate { t: 1, agent: 0, .. })));
    }

    #[test]
    fn ratio_identity_basis_step() {
        let seq = generate_sequence(&GeneratorKind::RotatingSingleEdge, 3, 10, 0).unwrap();
        let trace = run_pushsum(&seq, &WeightsPolicy::Default, &col(&[1.0, 2.0, 3.0]), 10).unwrap();
        let ss = trace.s_matrices().unwrap();
        let ys = trace.ys();
        for tau in 0..9 {
            assert!(verify_ratio_identity(&trace.weights, &ss, &ys, tau + 1, tau).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn product_limit_rank_one_case() {
        let seq = GraphSequence::constant(DirectedGraph::complete(2).unwrap(), 8).unwrap();
        let trace = run_pushsum(&seq, &WeightsPolicy::Default, &col(&[0.0, 2.0]), 8).unwrap();
        let ss = trace.s_matrices().unwrap();
        for t in 1..=8 {
            assert_eq!(verify_product_limit(&ss, &trace.ys(), 0, t, 2.0).unwrap(), 0.0);
        }
    }
}
