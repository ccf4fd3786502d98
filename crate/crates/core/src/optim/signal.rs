use rand::Rng;

use crate::error::{arg, Result};
use crate::rng::{keyed_rng, Stream};

/// Per-agent, per-step choice between subgradient-then-mix (`true`) and
/// mix-then-subgradient (`false`).
#[derive(Debug, Clone, PartialEq)]
pub enum SwitchingSignal {
    Ones,
    Zeros,
    /// Independent Bernoulli(`p`) per `(agent, t)`, keyed by `seed`.
    Bernoulli {
        p: f64,
        seed: u64,
    },
    /// `sigma_i(t) = (i + t) mod 2`: neighbors always disagree and every agent flips each step.
    Alternating,
    /// `table[t][i]`, entries 0 or 1.
    Table(Vec<Vec<u8>>),
}

impl SwitchingSignal {
    pub fn table(rows: Vec<Vec<u8>>) -> Result<Self> {
        if rows.iter().flatten().any(|v| *v > 1) {
            return arg("switching table entries must be 0 or 1");
        }
        Ok(Self::Table(rows))
    }

    pub fn value(&self, agent: usize, t: usize) -> Result<bool> {
        Ok(match self {
            Self::Ones => true,
            Self::Zeros => false,
            Self::Bernoulli { p, seed } => {
                if !(0.0..=1.0).contains(p) {
                    return arg(format!("Bernoulli parameter {p} not in [0, 1]"));
                }
                keyed_rng(*seed, Stream::Switching, agent as u64, t as u64).random::<f64>() < *p
            }
            Self::Alternating => (agent + t) % 2 == 1,
            Self::Table(rows) => match rows.get(t).and_then(|r| r.get(agent)) {
                Some(v) => *v == 1,
                None => return arg(format!("switching table has no entry for agent {agent} at t = {t}")),
            },
        })
    }

    pub fn at(&self, t: usize, n: usize) -> Result<Vec<bool>> {
        (0..n).map(|i| self.value(i, t)).collect()
    }
}
