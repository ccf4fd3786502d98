//! Column-stochastic mixing matrices compliant with a communication graph.

use std::fmt;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{arg, Error, Result};
use crate::graph::DirectedGraph;

/// Tolerance for column (and row) sums.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Dense `n x n` matrix; entry `(i, j)` is the weight agent `i` applies to the
/// message from agent `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(DMatrix<f64>);

impl WeightMatrix {
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return arg(format!("weight matrix must be square and nonempty, got {}x{}", m.nrows(), m.ncols()));
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return arg("weight matrix rows must all have length n");
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        self.0.column(j).iter().sum()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.0.row(i).iter().sum()
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        (0..self.n()).all(|k| (self.column_sum(k) - 1.0).abs() <= tol && (self.row_sum(k) - 1.0).abs() <= tol)
    }

    /// Smallest positive entry.
    pub fn min_positive(&self) -> f64 {
        self.0.iter().copied().filter(|w| *w > 0.0).fold(f64::INFINITY, f64::min)
    }

    /// Text form: `n`, then `n` rows of `n` entries.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n());
        for i in 0..self.n() {
            let row: Vec<String> = self.0.row(i).iter().map(|w| w.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("missing `n` header".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("matrix header: {e}")))?;
        let rows = lines
            .map(|l| {
                l.split_whitespace()
                    .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("`{v}`: {e}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.len() != n {
            return Err(Error::Parse(format!("expected {n} rows, found {}", rows.len())));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Parse(format!("every row must have {n} entries")));
        }
        Self::from_rows(&rows)
    }
}

/// `w_ij = 1 / |out-neighbors of j|` for every arc `(j, i)`.
pub fn default_weights(g: &DirectedGraph) -> WeightMatrix {
    let n = g.n();
    let mut m = DMatrix::zeros(n, n);
    for &(j, i) in g.edges() {
        m[(i, j)] = 1.0 / g.out_degree(j) as f64;
    }
    WeightMatrix(m)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    ColumnSum {
        column: usize,
        sum: f64,
    },
    Negative {
        row: usize,
        column: usize,
        value: f64,
    },
    /// Positive weight on a pair that is not an arc `(column, row)` of the graph.
    Sparsity {
        row: usize,
        column: usize,
        value: f64,
    },
    Diagonal {
        index: usize,
        value: f64,
    },
    BelowBeta {
        row: usize,
        column: usize,
        value: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ColumnSum { column, sum } => write!(f, "column {column} sums to {sum}, not 1"),
            Self::Negative { row, column, value } => write!(f, "entry ({row}, {column}) = {value} is negative"),
            Self::Sparsity { row, column, value } => {
                write!(f, "entry ({row}, {column}) = {value} but ({column}, {row}) is not an arc")
            }
            Self::Diagonal { index, value } => write!(f, "diagonal entry {index} = {value} is not positive"),
            Self::BelowBeta { row, column, value } => {
                write!(f, "entry ({row}, {column}) = {value} is below beta")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Checks the mixing-matrix assumption against graph `g` with lower bound `beta`.
pub fn validate(w: &WeightMatrix, g: &DirectedGraph, beta: f64) -> Result<ValidationReport> {
    let n = w.n();
    if g.n() != n {
        return arg(format!("matrix is {n}x{n} but graph has {} vertices", g.n()));
    }
    if !(beta > 0.0) {
        return arg(format!("beta must be positive, got {beta}"));
    }
    let mut violations = Vec::new();
    for j in 0..n {
        let sum = w.column_sum(j);
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            violations.push(Violation::ColumnSum { column: j, sum });
        }
    }
    for i in 0..n {
        for j in 0..n {
            let value = w.get(i, j);
            if value < 0.0 {
                violations.push(Violation::Negative { row: i, column: j, value });
            } else if value > 0.0 {
                if !g.has_edge(j, i) {
                    violations.push(Violation::Sparsity { row: i, column: j, value });
                } else if value < beta {
                    violations.push(Violation::BelowBeta { row: i, column: j, value });
                }
            }
        }
        let d = w.get(i, i);
        if !(d > 0.0) {
            violations.push(Violation::Diagonal { index: i, value: d });
        }
    }
    Ok(ValidationReport { violations })
}

/// How `W(t)` is obtained from `G(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightsPolicy {
    Default,
    /// A fixed user-supplied matrix, validated against every graph before use.
    Custom {
        matrix: WeightMatrix,
        beta: f64,
    },
}

impl WeightsPolicy {
    pub fn weights_for(&self, g: &DirectedGraph) -> Result<WeightMatrix> {
        match self {
            Self::Default => Ok(default_weights(g)),
            Self::Custom { matrix, beta } => {
                let report = validate(matrix, g, *beta)?;
                if !report.is_ok() {
                    return Err(Error::Config(format!("custom weights rejected: {report}")));
                }
                Ok(matrix.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_weight_examples() {
        let w = default_weights(&DirectedGraph::complete(2).unwrap());
        assert!(w.matrix().iter().all(|v| *v == 0.5));

        let w = default_weights(&DirectedGraph::self_loops(3).unwrap());
        assert_eq!(w.matrix(), &DMatrix::identity(3, 3));

        let w = default_weights(&DirectedGraph::new(2, [(1, 0)]).unwrap());
        assert_eq!(w, WeightMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 0.5]]).unwrap());
    }

    #[test]
    fn validation_examples() {
        let g = DirectedGraph::complete(3).unwrap();
        let report = validate(&default_weights(&g), &g, 1.0 / 3.0).unwrap();
        assert!(report.is_ok(), "{report}");

        let g2 = DirectedGraph::complete(2).unwrap();
        let short = WeightMatrix::from_rows(&[vec![0.5, 0.5], vec![0.4, 0.5]]).unwrap();
        let report = validate(&short, &g2, 0.1).unwrap();
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::ColumnSum { column: 0, .. }));
        assert!(report.to_string().contains("column 0"));

        let loops = DirectedGraph::self_loops(2).unwrap();
        let off = WeightMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 0.5]]).unwrap();
        let report = validate(&off, &loops, 0.1).unwrap();
        assert!(report.violations.iter().any(|v| matches!(v, Violation::Sparsity { row: 0, column: 1, .. })));

        assert!(validate(&off, &DirectedGraph::self_loops(3).unwrap(), 0.1).is_err());
    }

    #[test]
    fn beta_and_diagonal_violations() {
        let g = DirectedGraph::complete(2).unwrap();
        let w = WeightMatrix::from_rows(&[vec![0.95, 1.0], vec![0.05, 0.0]]).unwrap();
        let report = validate(&w, &g, 0.1).unwrap();
        assert!(report.violations.iter().any(|v| matches!(v, Violation::BelowBeta { row: 1, column: 0, .. })));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::Diagonal { index: 1, .. })));
    }

    #[test]
    fn custom_policy_refuses_invalid_matrix() {
        let g = DirectedGraph::self_loops(2).unwrap();
        let bad = WeightMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 0.5]]).unwrap();
        let policy = WeightsPolicy::Custom { matrix: bad, beta: 0.1 };
        assert!(matches!(policy.weights_for(&g), Err(Error::Config(_))));
    }

    #[test]
    fn text_round_trip() {
        let w = default_weights(&DirectedGraph::new(3, [(1, 0), (2, 1), (0, 2)]).unwrap());
        assert_eq!(WeightMatrix::from_text(&w.to_text()).unwrap(), w);
        assert!(WeightMatrix::from_text("2\n1 0\n").is_err());
    }
}
