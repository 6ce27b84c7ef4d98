//! Dense linear programming and binary branch-and-bound.
//!
//! Problems have the form `min c.x  s.t.  A x <= b,  lower <= x <= upper`.
//! Lower bounds must be finite; upper bounds may be `+inf`.

mod branch;
mod simplex;

use std::fmt::Write as _;

use thiserror::Error;

pub use branch::solve_ilp;
pub use simplex::solve_lp;

/// Primal feasibility tolerance, relative to `1 + |b_i|`.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Distance from the nearest integer at which a value counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Objective values closer than this are treated as equal.
pub const OBJECTIVE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("simplex iteration limit ({limit}) reached in phase {phase}; objective {objective}, {rows} rows x {cols} columns")]
    IterationLimit {
        limit: usize,
        phase: u8,
        objective: f64,
        rows: usize,
        cols: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    /// Row-major `m x n` constraint matrix.
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// An unconstrained program over `n` variables with the given bounds.
    pub fn new(objective: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            objective,
            matrix: Vec::new(),
            rhs: Vec::new(),
            lower,
            upper,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    /// Appends `row . x <= rhs`.
    pub fn add_row(&mut self, row: &[f64], rhs: f64) {
        assert_eq!(row.len(), self.n_vars(), "row width");
        self.matrix.extend_from_slice(row);
        self.rhs.push(rhs);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_vars();
        &self.matrix[i * n..(i + 1) * n]
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        let m = self.n_rows();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed(format!(
                "{n} variables but {} lower / {} upper bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.matrix.len() != n * m {
            return Err(LpError::Malformed(format!(
                "matrix has {} entries, expected {m} x {n}",
                self.matrix.len()
            )));
        }
        if let Some(j) = (0..n).find(|&j| {
            !self.lower[j].is_finite() || self.upper[j].is_nan() || self.lower[j] > self.upper[j]
        }) {
            return Err(LpError::Malformed(format!(
                "variable {j}: bounds [{}, {}]",
                self.lower[j], self.upper[j]
            )));
        }
        if self
            .objective
            .iter()
            .chain(&self.matrix)
            .chain(&self.rhs)
            .any(|v| !v.is_finite())
        {
            return Err(LpError::Malformed("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of rows and bounds at `x`, each scaled by `1 + |b|`
    /// (or `1 + |bound|`).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n_rows() {
            let ax: f64 = self.row(i).iter().zip(x).map(|(a, v)| a * v).sum();
            worst = worst.max((ax - self.rhs[i]) / (1.0 + self.rhs[i].abs()));
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max((self.lower[j] - v) / (1.0 + self.lower[j].abs()));
            if self.upper[j].is_finite() {
                worst = worst.max((v - self.upper[j]) / (1.0 + self.upper[j].abs()));
            }
        }
        worst
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        self.max_violation(x) <= FEASIBILITY_TOL
    }

    /// Plain-text dump for debugging: objective, one line per row, bounds.
    pub fn to_tableau_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} rows x {} columns", self.n_rows(), self.n_vars());
        let _ = write!(s, "min:");
        for c in &self.objective {
            let _ = write!(s, " {c}");
        }
        s.push('\n');
        for i in 0..self.n_rows() {
            let _ = write!(s, "r{i}:");
            for a in self.row(i) {
                let _ = write!(s, " {a}");
            }
            let _ = writeln!(s, " <= {}", self.rhs[i]);
        }
        for j in 0..self.n_vars() {
            let _ = writeln!(s, "x{j} in [{}, {}]", self.lower[j], self.upper[j]);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegerProgram {
    pub base: LinearProgram,
    pub integral: Vec<bool>,
}

impl IntegerProgram {
    pub fn binary(base: LinearProgram) -> Self {
        let n = base.n_vars();
        Self {
            base,
            integral: vec![true; n],
        }
    }

    pub fn validate(&self) -> Result<(), LpError> {
        self.base.validate()?;
        if self.integral.len() != self.base.n_vars() {
            return Err(LpError::Malformed("integrality mask width".into()));
        }
        for (j, _) in self.integral.iter().enumerate().filter(|(_, b)| **b) {
            if self.base.lower[j] < 0.0 || self.base.upper[j] > 1.0 {
                return Err(LpError::Malformed(format!(
                    "integral variable {j} must be bounded within [0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn to_tableau_text(&self) -> String {
        let mut s = self.base.to_tableau_text();
        let ints: Vec<String> = (0..self.integral.len())
            .filter(|&j| self.integral[j])
            .map(|j| format!("x{j}"))
            .collect();
        let _ = writeln!(s, "integral: {}", ints.join(" "));
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Branch-and-bound stopped at its node budget. `x` holds the best
    /// integer-feasible point found, if any.
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub nodes: usize,
}

impl SolveResult {
    pub(crate) fn without_solution(status: SolveStatus, iterations: usize) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            iterations,
            nodes: 0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
