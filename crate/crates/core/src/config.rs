//! Experiment configuration files (TOML).
//!
//! ```toml
//! n = 4
//! horizon = 400
//! seed = 7
//! algorithm = "pushsum"
//!
//! [graph]
//! kind = "rotating-single-edge"
//!
//! [init]
//! x0 = [[1.0], [-2.0], [5.0], [0.5]]
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{Algorithm, Component};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub d: usize,
    pub horizon: usize,
    /// Root seed; every random stream (graphs, noise, switching, init) is derived from it.
    pub seed: u64,
    /// Replication seeds for `sweep` over seeds.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    pub algorithm: Algorithm,
    pub graph: GraphConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepsize: Option<StepsizeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    pub init: InitConfig,
    #[serde(default)]
    pub record: RecordConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    StaticComplete,
    StaticRing,
    RotatingSingleEdge,
    RandomSpanning,
    DoublyStochastic,
    /// A graph sequence text file (`path`).
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub kind: GraphKind,
    /// Connectivity window `L`; for `random-spanning` also the generator period.
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra_arc_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightsConfig {
    /// `w_ij = 1 / out-degree(j)`.
    #[default]
    Default,
    /// One fixed matrix, inline (`matrix`) or from a weights file (`path`).
    Custom {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
        beta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    AbsDeviation,
    Quadratic,
    Huber,
}

/// One objective family, one target per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveKind,
    pub targets: Vec<Vec<f64>>,
    /// Quadratic curvature `lambda_i` (one value, or one per agent).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curvature: Vec<f64>,
    /// Huber threshold (one value, or one per agent).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta: Vec<f64>,
    /// Minimizer, when it cannot be computed automatically.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimum: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepsizeConfig {
    /// `1 / sqrt(horizon)`.
    InvSqrt,
    /// `a / (t + 1)^p`.
    Harmonic {
        a: f64,
        p: f64,
    },
    /// `2 / (lambda_bar t)` with `lambda_bar` taken from the objective.
    SgpStrong,
    Constant {
        alpha: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SigmaConfig {
    Ones,
    Zeros,
    Alternating,
    Bernoulli { p: f64 },
    Table { rows: Vec<Vec<u8>> },
}

/// Stochastic gradients: exact gradient plus noise uniform on a ball of radius `noise[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub noise: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    /// Explicit initial values, one row per agent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<Vec<f64>>>,
    /// Draw every coordinate uniformly from `[low, high]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<[f64; 2]>,
    /// Weighted push-sum coefficients; `x0` then holds the intrinsic values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordConfig {
    /// Also write every `S(t)` to a sidecar CSV.
    #[serde(default)]
    pub s_matrices: bool,
    /// Metrics rows on a log-spaced grid of about this many points; every step when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

fn default_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Horizon,
    Seeds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    /// Horizons for the `horizon` axis.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub horizons: Vec<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Cross-field checks that the file format alone cannot express.
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if self.n == 0 {
            return fail("n", "must be at least 1".into());
        }
        if self.d == 0 {
            return fail("d", "must be at least 1".into());
        }
        if self.horizon == 0 {
            return fail("horizon", "must be at least 1".into());
        }
        match (&self.graph.kind, &self.graph.path) {
            (GraphKind::File, None) => return fail("graph.path", "required for kind = \"file\"".into()),
            (GraphKind::File, Some(_)) => {}
            (_, Some(_)) => return fail("graph.path", "only valid for kind = \"file\"".into()),
            _ => {}
        }
        if self.graph.extra_arc_prob.is_some() && self.graph.kind != GraphKind::RandomSpanning {
            return fail("graph.extra_arc_prob", "only valid for kind = \"random-spanning\"".into());
        }
        if let Some(p) = self.graph.extra_arc_prob {
            if !(0.0..=1.0).contains(&p) {
                return fail("graph.extra_arc_prob", format!("{p} not in [0, 1]"));
            }
        }
        if self.graph.window == Some(0) {
            return fail("graph.L", "must be at least 1".into());
        }
        if let WeightsConfig::Custom { matrix, path, beta } = &self.weights {
            match (matrix, path) {
                (Some(_), Some(_)) | (None, None) => {
                    return fail("weights", "custom weights need exactly one of `matrix` or `path`".into())
                }
                (Some(m), None) => {
                    if m.len() != self.n || m.iter().any(|r| r.len() != self.n) {
                        return fail("weights.matrix", format!("must be {0} x {0}", self.n));
                    }
                }
                _ => {}
            }
            if !(*beta > 0.0) {
                return fail("weights.beta", format!("{beta} must be positive"));
            }
        }

        match (&self.init.x0, &self.init.uniform) {
            (Some(_), Some(_)) | (None, None) => {
                return fail("init", "give exactly one of `x0` or `uniform`".into());
            }
            (Some(x0), None) => {
                if x0.len() != self.n || x0.iter().any(|r| r.len() != self.d) {
                    return fail("init.x0", format!("must be {} rows of length {}", self.n, self.d));
                }
            }
            (None, Some([lo, hi])) => {
                if !(lo <= hi) {
                    return fail("init.uniform", format!("low {lo} exceeds high {hi}"));
                }
            }
        }
        if let Some(c) = &self.init.c {
            if c.len() != self.n {
                return fail("init.c", format!("{} coefficients for {} agents", c.len(), self.n));
            }
            if let Some(i) = c.iter().position(|v| !(*v > 0.0)) {
                return fail("init.c", format!("c[{i}] = {} must be positive", c[i]));
            }
        }

        if let Some(obj) = &self.objective {
            if obj.targets.len() != self.n {
                return fail("objective.targets", format!("{} targets for {} agents", obj.targets.len(), self.n));
            }
            if obj.targets.iter().any(|t| t.len() != self.d) {
                return fail("objective.targets", format!("every target must have length {}", self.d));
            }
            for (name, v) in [("curvature", &obj.curvature), ("delta", &obj.delta)] {
                if !(v.is_empty() || v.len() == 1 || v.len() == self.n) {
                    return fail(&format!("objective.{name}"), format!("give 1 or {} values", self.n));
                }
            }
            if !obj.curvature.is_empty() && obj.kind != ObjectiveKind::Quadratic {
                return fail("objective.curvature", "only valid for quadratic objectives".into());
            }
            if obj.kind == ObjectiveKind::Huber && obj.delta.is_empty() {
                return fail("objective.delta", "required for huber objectives".into());
            }
            if !obj.delta.is_empty() && obj.kind != ObjectiveKind::Huber {
                return fail("objective.delta", "only valid for huber objectives".into());
            }
        }
        if let Some(o) = &self.oracle {
            if o.noise.len() != self.n {
                return fail("oracle.noise", format!("{} bounds for {} agents", o.noise.len(), self.n));
            }
        }

        let alg = self.algorithm;
        let needs = |present: bool, field: &str| -> Result<()> {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("{field}: required by algorithm {alg}")))
            }
        };
        let forbids = |present: bool, field: &str| -> Result<()> {
            if present {
                Err(Error::Config(format!("{field}: not used by algorithm {alg}")))
            } else {
                Ok(())
            }
        };
        if alg.is_optimizer() {
            needs(self.objective.is_some(), "objective")?;
            needs(self.stepsize.is_some(), "stepsize")?;
            forbids(self.init.c.is_some(), "init.c")?;
        } else {
            forbids(self.objective.is_some(), "objective")?;
            forbids(self.stepsize.is_some(), "stepsize")?;
        }
        match alg {
            Algorithm::WeightedPushsum => needs(self.init.c.is_some(), "init.c")?,
            Algorithm::Pushsum => forbids(self.init.c.is_some(), "init.c")?,
            _ => {}
        }
        needs(self.sigma.is_some() || alg != Algorithm::Heterogeneous, "sigma")?;
        forbids(self.sigma.is_some() && alg != Algorithm::Heterogeneous, "sigma")?;
        if alg == Algorithm::Sgp {
            needs(self.oracle.is_some(), "oracle")?;
            if self.objective.as_ref().map(|o| o.kind) != Some(ObjectiveKind::Quadratic) {
                return fail("objective.kind", "sgp requires strongly convex, smooth (quadratic) components".into());
            }
        } else {
            forbids(self.oracle.is_some(), "oracle")?;
        }
        if matches!(self.stepsize, Some(StepsizeConfig::SgpStrong))
            && self.objective.as_ref().map(|o| o.kind) != Some(ObjectiveKind::Quadratic)
        {
            return fail("stepsize", "sgp-strong needs strongly convex components".into());
        }

        if let Some(s) = &self.sweep {
            match s.axis {
                SweepAxis::Horizon if s.horizons.is_empty() || s.horizons.contains(&0) => {
                    return fail("sweep.horizons", "list one or more positive horizons".into())
                }
                SweepAxis::Seeds if self.seeds.is_empty() => {
                    return fail("seeds", "required for a sweep over seeds".into())
                }
                SweepAxis::Seeds if !s.horizons.is_empty() => {
                    return fail("sweep.horizons", "only valid for the horizon axis".into())
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Components built from the objective section.
    pub fn components(&self) -> Option<Vec<Component>> {
        let obj = self.objective.as_ref()?;
        let pick = |v: &[f64], i: usize, default: f64| match v.len() {
            0 => default,
            1 => v[0],
            _ => v[i],
        };
        Some(
            obj.targets
                .iter()
                .enumerate()
                .map(|(i, target)| {
                    let target = target.clone();
                    match obj.kind {
                        ObjectiveKind::AbsDeviation => Component::AbsDeviation { target },
                        ObjectiveKind::Quadratic => {
                            Component::Quadratic { target, curvature: pick(&obj.curvature, i, 1.0) }
                        }
                        ObjectiveKind::Huber => Component::Huber { target, delta: pick(&obj.delta, i, 1.0) },
                    }
                })
                .collect(),
        )
    }
}
