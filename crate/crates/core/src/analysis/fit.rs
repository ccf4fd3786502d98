use serde::Serialize;

use crate::error::{arg, Result};

/// Fits with fewer points than this are reported but not trusted.
pub const MIN_FIT_POINTS: usize = 20;
pub const MIN_R_SQUARED: f64 = 0.9;
pub const DEFAULT_TAIL: f64 = 0.5;
/// Consensus errors at or below this multiple of the initial error are round-off.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

/// Least-squares line through transformed samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    /// Tail samples dropped for being nonpositive or non-finite.
    pub filtered: usize,
    pub meaningful: bool,
}

impl RateFit {
    /// Per-step contraction factor of a geometric fit.
    pub fn rate(&self) -> f64 {
        self.slope.exp()
    }
}

/// Slope of `log v` against `log t` over the tail fraction of the samples.
pub fn fit_rate(ts: &[f64], values: &[f64], tail: f64) -> Result<RateFit> {
    if ts.iter().any(|t| !(*t > 0.0)) {
        return arg("power-law fit needs positive times");
    }
    fit(ts, values, tail, f64::ln)
}

/// Slope of `log v` against `t`; `rate()` is the fitted contraction per step.
pub fn fit_geometric(ts: &[f64], values: &[f64], tail: f64) -> Result<RateFit> {
    fit(ts, values, tail, |t| t)
}

/// Geometric fit of a consensus-error series restricted to the stretch before it
/// first drops to the round-off floor (relative to the largest value).
pub fn fit_consensus_rate(ts: &[f64], values: &[f64], tail: f64) -> Result<RateFit> {
    if ts.len() != values.len() {
        return arg(format!("{} times for {} values", ts.len(), values.len()));
    }
    let scale = values.iter().copied().fold(0.0, f64::max);
    let end = values.iter().position(|v| *v <= ROUNDOFF_FLOOR * scale).unwrap_or(values.len());
    fit_geometric(&ts[..end], &values[..end], tail)
}

fn fit(ts: &[f64], values: &[f64], tail: f64, tx: impl Fn(f64) -> f64) -> Result<RateFit> {
    if ts.len() != values.len() {
        return arg(format!("{} times for {} values", ts.len(), values.len()));
    }
    if !(tail > 0.0 && tail <= 1.0) {
        return arg(format!("tail fraction {tail} not in (0, 1]"));
    }
    let keep = ((ts.len() as f64 * tail).ceil() as usize).min(ts.len());
    let start = ts.len() - keep;
    let pts: Vec<(f64, f64)> = ts[start..]
        .iter()
        .zip(&values[start..])
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(t, v)| (tx(*t), v.ln()))
        .collect();
    let filtered = keep - pts.len();
    if pts.len() < 2 {
        return arg(format!("only {} usable points in the fit window ({filtered} filtered)", pts.len()));
    }
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let (sxx, sxy, syy) = pts.iter().fold((0.0, 0.0, 0.0), |(a, b, c), (x, y)| {
        let (dx, dy) = (x - mx, y - my);
        (a + dx * dx, b + dx * dy, c + dy * dy)
    });
    if sxx == 0.0 {
        return arg("fit window has a single distinct time");
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points: pts.len(),
        filtered,
        meaningful: pts.len() >= MIN_FIT_POINTS && r_squared >= MIN_R_SQUARED,
    })
}

/// About `points` distinct integers in `[lo, hi]`, evenly spaced in `log t`.
pub fn log_grid(lo: usize, hi: usize, points: usize) -> Vec<usize> {
    let lo = lo.max(1);
    if hi < lo || points == 0 {
        return Vec::new();
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..points)
        .map(|k| {
            let s = if points == 1 { 1.0 } else { k as f64 / (points - 1) as f64 };
            ((a + s * (b - a)).exp().round() as usize).clamp(lo, hi)
        })
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let ts: Vec<f64> = (1..=200).map(f64::from).collect();
        let vs = ts.iter().map(|t| f(*t)).collect();
        (ts, vs)
    }

    #[test]
    fn exact_power_laws() {
        let (ts, vs) = series(|t| 1.0 / t);
        let fit = fit_rate(&ts, &vs, 0.5).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-6);
        assert!(fit.meaningful);
        let (ts, vs) = series(|t| 1.0 / t.sqrt());
        assert!((fit_rate(&ts, &vs, 0.5).unwrap().slope + 0.5).abs() < 1e-6);
    }

    #[test]
    fn consensus_fit_stops_at_roundoff() {
        let ts: Vec<f64> = (0..200).map(|t| t as f64).collect();
        let vs: Vec<f64> = ts.iter().map(|t| if *t < 60.0 { 0.7f64.powf(*t) } else { 0.0 }).collect();
        let f = fit_consensus_rate(&ts, &vs, 0.5).unwrap();
        assert!((f.rate() - 0.7).abs() < 1e-9 && f.meaningful, "{f:?}");
        assert!(fit_geometric(&ts, &vs, 0.5).is_err());
    }

    #[test]
    fn geometric_rate() {
        let (ts, vs) = series(|t| 3.0 * 0.8f64.powf(t));
        let fit = fit_geometric(&ts, &vs, 0.5).unwrap();
        assert!((fit.rate() - 0.8).abs() < 1e-9);
    }

    #[test]
    fn nonpositive_values_are_filtered() {
        let ts = [1.0, 2.0, 3.0, 4.0];
        let vs = [1.0, 0.5, 0.0, 0.25];
        let fit = fit_rate(&ts, &vs, 1.0).unwrap();
        assert_eq!((fit.points, fit.filtered), (3, 1));
        assert!(!fit.meaningful);
        assert!(fit_rate(&ts, &[0.0; 4], 1.0).is_err());
    }

    #[test]
    fn grid_is_increasing() {
        let g = log_grid(1, 10_000, 60);
        assert_eq!((g[0], *g.last().unwrap()), (1, 10_000));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
