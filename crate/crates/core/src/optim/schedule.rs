use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};

/// Stepsize sequences `alpha(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepSchedule {
    /// `1 / sqrt(horizon)` at every step.
    InvSqrt {
        horizon: usize,
    },
    /// `a / (t + 1)^p`.
    Harmonic {
        a: f64,
        p: f64,
    },
    /// `2 / (lambda_bar t)`, defined from `t = 1`.
    SgpStrong {
        lambda_bar: f64,
    },
    Constant {
        alpha: f64,
    },
}

impl StepSchedule {
    /// First time index at which the schedule is defined.
    pub fn start_index(&self) -> usize {
        match self {
            Self::SgpStrong { .. } => 1,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::InvSqrt { horizon } if *horizon == 0 => arg("inv-sqrt schedule needs horizon > 0"),
            Self::Harmonic { a, p } if !(*a > 0.0) || !(*p >= 0.0) => {
                arg(format!("harmonic schedule needs a > 0 and p >= 0, got a = {a}, p = {p}"))
            }
            Self::SgpStrong { lambda_bar } if !(*lambda_bar > 0.0) => {
                arg(format!("lambda_bar must be positive, got {lambda_bar}"))
            }
            Self::Constant { alpha } if !(*alpha > 0.0) => {
                arg(format!("constant stepsize must be positive, got {alpha}"))
            }
            _ => Ok(()),
        }
    }

    pub fn stepsize(&self, t: usize) -> Result<f64> {
        self.validate()?;
        if t < self.start_index() {
            return arg(format!("schedule starts at t = {}, asked for t = {t}", self.start_index()));
        }
        Ok(match self {
            Self::InvSqrt { horizon } => 1.0 / (*horizon as f64).sqrt(),
            Self::Harmonic { a, p } => a / ((t + 1) as f64).powf(*p),
            Self::SgpStrong { lambda_bar } => 2.0 / (lambda_bar * t as f64),
            Self::Constant { alpha } => *alpha,
        })
    }

    /// Whether the infinite sequence is summable in squares but not in itself.
    pub fn diminishing(&self) -> bool {
        match self {
            Self::Harmonic { p, .. } => *p > 0.5 && *p <= 1.0,
            Self::SgpStrong { .. } => true,
            Self::InvSqrt { .. } | Self::Constant { .. } => false,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, Self::InvSqrt { .. } | Self::Constant { .. })
    }
}

/// A recorded stepsize history must be positive and non-increasing.
pub fn validate_history(alphas: &[f64]) -> Result<()> {
    if let Some(k) = alphas.iter().position(|a| !(*a > 0.0) || !a.is_finite()) {
        return arg(format!("stepsize alpha({k}) = {} is not positive", alphas[k]));
    }
    if let Some(k) = alphas.windows(2).position(|w| w[1] > w[0]) {
        return arg(format!("stepsize increases at t = {}", k + 1));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stepsize_examples() {
        assert_eq!(StepSchedule::InvSqrt { horizon: 100 }.stepsize(37).unwrap(), 0.1);
        assert_eq!(StepSchedule::SgpStrong { lambda_bar: 1.0 }.stepsize(4).unwrap(), 0.5);
        assert_eq!(StepSchedule::Harmonic { a: 1.0, p: 1.0 }.stepsize(0).unwrap(), 1.0);
        assert!(StepSchedule::SgpStrong { lambda_bar: 1.0 }.stepsize(0).is_err());
        assert!(StepSchedule::Constant { alpha: 0.0 }.stepsize(0).is_err());
    }

    #[test]
    fn schedules_are_non_increasing() {
        let schedules = [
            StepSchedule::InvSqrt { horizon: 64 },
            StepSchedule::Harmonic { a: 0.7, p: 0.6 },
            StepSchedule::SgpStrong { lambda_bar: 2.5 },
            StepSchedule::Constant { alpha: 0.01 },
        ];
        for s in &schedules {
            let alphas: Vec<f64> = (s.start_index()..500).map(|t| s.stepsize(t).unwrap()).collect();
            validate_history(&alphas).unwrap();
        }
        assert!(StepSchedule::Harmonic { a: 1.0, p: 0.75 }.diminishing());
        assert!(!StepSchedule::Harmonic { a: 1.0, p: 0.5 }.diminishing());
    }

    #[test]
    fn history_validation_rejects_zero_tail() {
        assert!(validate_history(&[1.0, 0.0, 0.0]).is_err());
        assert!(validate_history(&[0.5, 0.6]).is_err());
    }
}
