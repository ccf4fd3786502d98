use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};

/// One agent's private cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Component {
    /// `||z - target||`: convex, nonsmooth at the target, subgradients bounded by 1.
    AbsDeviation { target: Vec<f64> },
    /// `(curvature / 2) ||z - target||^2`: strongly convex and smooth.
    Quadratic { target: Vec<f64>, curvature: f64 },
    /// Quadratic within `delta` of the target, linear beyond it.
    Huber { target: Vec<f64>, delta: f64 },
}

impl Component {
    pub fn target(&self) -> &[f64] {
        match self {
            Self::AbsDeviation { target } | Self::Quadratic { target, .. } | Self::Huber { target, .. } => target,
        }
    }

    pub fn dim(&self) -> usize {
        self.target().len()
    }

    fn offset(&self, z: &DVector<f64>) -> DVector<f64> {
        z - DVector::from_column_slice(self.target())
    }

    pub fn value(&self, z: &DVector<f64>) -> f64 {
        let diff = self.offset(z);
        let r = diff.norm();
        match self {
            Self::AbsDeviation { .. } => r,
            Self::Quadratic { curvature, .. } => 0.5 * curvature * diff.norm_squared(),
            Self::Huber { delta, .. } => {
                if r <= *delta {
                    0.5 * r * r
                } else {
                    delta * (r - 0.5 * delta)
                }
            }
        }
    }

    /// Minimum-norm subgradient (zero at the kink of the absolute deviation).
    pub fn subgradient(&self, z: &DVector<f64>) -> DVector<f64> {
        let diff = self.offset(z);
        let r = diff.norm();
        match self {
            Self::AbsDeviation { .. } => {
                if r == 0.0 {
                    DVector::zeros(diff.len())
                } else {
                    diff / r
                }
            }
            Self::Quadratic { curvature, .. } => diff * *curvature,
            Self::Huber { delta, .. } => {
                if r <= *delta {
                    diff
                } else {
                    diff * (*delta / r)
                }
            }
        }
    }

    /// Gradient where the component is differentiable everywhere.
    pub fn gradient(&self, z: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Self::AbsDeviation { .. } => None,
            _ => Some(self.subgradient(z)),
        }
    }

    pub fn strong_convexity(&self) -> Option<f64> {
        match self {
            Self::Quadratic { curvature, .. } => Some(*curvature),
            _ => None,
        }
    }

    pub fn smoothness(&self) -> Option<f64> {
        match self {
            Self::AbsDeviation { .. } => None,
            Self::Quadratic { curvature, .. } => Some(*curvature),
            Self::Huber { .. } => Some(1.0),
        }
    }

    /// Global bound on subgradient norms, if one exists.
    pub fn subgradient_bound(&self) -> Option<f64> {
        match self {
            Self::AbsDeviation { .. } => Some(1.0),
            Self::Quadratic { .. } => None,
            Self::Huber { delta, .. } => Some(*delta),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub point: DVector<f64>,
    pub value: f64,
}

/// `f(z) = (1/n) sum_i f_i(z)` with per-agent noise bounds for stochastic oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    d: usize,
    components: Vec<Component>,
    noise: Vec<f64>,
    optimum: Option<Optimum>,
}

impl Objective {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let d = match components.first() {
            Some(c) => c.dim(),
            None => return arg("objective needs at least one component"),
        };
        if d == 0 {
            return arg("objective dimension must be positive");
        }
        for (i, c) in components.iter().enumerate() {
            if c.dim() != d {
                return arg(format!("component {i} has dimension {}, expected {d}", c.dim()));
            }
            if c.target().iter().any(|v| !v.is_finite()) {
                return arg(format!("component {i} has a non-finite target"));
            }
            match c {
                Component::Quadratic { curvature, .. } if !(*curvature > 0.0) => {
                    return arg(format!("component {i}: curvature must be positive"))
                }
                Component::Huber { delta, .. } if !(*delta > 0.0) => {
                    return arg(format!("component {i}: delta must be positive"))
                }
                _ => {}
            }
        }
        let n = components.len();
        let mut obj = Self { d, components, noise: vec![0.0; n], optimum: None };
        obj.optimum = obj.solve();
        Ok(obj)
    }

    pub fn with_noise(mut self, noise: Vec<f64>) -> Result<Self> {
        if noise.len() != self.n() {
            return arg(format!("{} noise bounds for {} agents", noise.len(), self.n()));
        }
        if noise.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return arg("noise bounds must be finite and nonnegative");
        }
        self.noise = noise;
        Ok(self)
    }

    /// Overrides (or supplies) the minimizer; the optimal value is recomputed.
    pub fn with_optimum(mut self, point: DVector<f64>) -> Result<Self> {
        if point.len() != self.d {
            return arg(format!("optimum has dimension {}, expected {}", point.len(), self.d));
        }
        let value = self.value(&point);
        self.optimum = Some(Optimum { point, value });
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn optimum(&self) -> Option<&Optimum> {
        self.optimum.as_ref()
    }

    pub fn value(&self, z: &DVector<f64>) -> f64 {
        self.components.iter().map(|c| c.value(z)).sum::<f64>() / self.n() as f64
    }

    pub fn component_value(&self, i: usize, z: &DVector<f64>) -> f64 {
        self.components[i].value(z)
    }

    /// `f(z) - f(z*)`, when the optimum is known.
    pub fn gap(&self, z: &DVector<f64>) -> Option<f64> {
        self.optimum.as_ref().map(|o| self.value(z) - o.value)
    }

    /// `(1/n) sum_i lambda_i` if every component is strongly convex.
    pub fn lambda_bar(&self) -> Option<f64> {
        self.mean_of(Component::strong_convexity)
    }

    /// `(1/n) sum_i gamma_i` if every component is smooth.
    pub fn gamma_bar(&self) -> Option<f64> {
        self.mean_of(Component::smoothness)
    }

    /// Largest global subgradient bound over components, if all are bounded.
    pub fn subgradient_bound(&self) -> Option<f64> {
        self.components.iter().map(Component::subgradient_bound).try_fold(0.0f64, |acc, b| b.map(|b| acc.max(b)))
    }

    fn mean_of(&self, f: fn(&Component) -> Option<f64>) -> Option<f64> {
        let sum = self.components.iter().map(f).try_fold(0.0, |acc, v| v.map(|v| acc + v))?;
        Some(sum / self.n() as f64)
    }

    fn solve(&self) -> Option<Optimum> {
        let point = if self.components.iter().all(|c| matches!(c, Component::Quadratic { .. })) {
            let mut num = DVector::zeros(self.d);
            let mut den = 0.0;
            for c in &self.components {
                if let Component::Quadratic { target, curvature } = c {
                    num += DVector::from_column_slice(target) * *curvature;
                    den += curvature;
                }
            }
            num / den
        } else if self.d == 1 && self.components.iter().all(|c| matches!(c, Component::AbsDeviation { .. })) {
            let mut t: Vec<f64> = self.components.iter().map(|c| c.target()[0]).collect();
            t.sort_by(f64::total_cmp);
            let m = t.len();
            let median = if m % 2 == 1 { t[m / 2] } else { 0.5 * (t[m / 2 - 1] + t[m / 2]) };
            DVector::from_element(1, median)
        } else if self.d == 1 {
            DVector::from_element(1, self.bisect())
        } else {
            return None;
        };
        let value = self.value(&point);
        Some(Optimum { point, value })
    }

    /// One-dimensional convex minimization over the hull of the targets, by
    /// bisection on the (nondecreasing) sum of minimum-norm subgradients.
    fn bisect(&self) -> f64 {
        let targets = self.components.iter().map(|c| c.target()[0]);
        let (mut lo, mut hi) = targets.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let slope = |x: f64| {
            let z = DVector::from_element(1, x);
            self.components.iter().map(|c| c.subgradient(&z)[0]).sum::<f64>()
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match slope(mid) {
                g if g > 0.0 => hi = mid,
                g if g < 0.0 => lo = mid,
                _ => return mid,
            }
        }
        0.5 * (lo + hi)
    }

    /// Subgradient of `f_i` at `z`.
    pub fn subgradient(&self, i: usize, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(i, z)?;
        Ok(self.components[i].subgradient(z))
    }

    /// Exact gradient of `f_i`; unsupported for nonsmooth components.
    pub fn gradient(&self, i: usize, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(i, z)?;
        self.components[i].gradient(z).ok_or_else(|| Error::Unsupported(format!("component {i} is not differentiable")))
    }

    fn check_point(&self, i: usize, z: &DVector<f64>) -> Result<()> {
        if i >= self.n() {
            return arg(format!("agent {i} out of range for {} components", self.n()));
        }
        if z.len() != self.d {
            return arg(format!("point has dimension {}, expected {}", z.len(), self.d));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return arg("subgradient requested at a non-finite point");
        }
        Ok(())
    }
}
