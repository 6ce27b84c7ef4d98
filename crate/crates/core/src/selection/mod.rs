//! Sparse selection of influential reactions over time horizons.
//!
//! Every step `k` (the transition from sample `k` to sample `k + 1`) gets a
//! weight per reaction. Dropping or damping a reaction introduces an error in
//! the predicted concentration change of each species; the selection problem
//! keeps that error within `epsilon` times the step's total absolute activity
//! for the species, and keeps the error accumulated over a chunk of steps
//! within `beta * epsilon` times the summed activity, while minimizing the
//! total weight.
//!
//! Chunks of `horizon` consecutive steps are solved independently by a
//! [`ChunkSolver`] looked up by name in a [`SolverRegistry`].

mod feasibility;
mod io;
mod problem;
mod solver;

use std::ops::Range;

use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

use crate::kinetics::{Condition, Trajectory};
use crate::lp::LpError;
use crate::mechanism::{Mechanism, StoichMatrix};

pub use feasibility::{degenerate_steps, minimal_feasible_epsilon, DegenerateStep};
pub use io::{read_mask_csv, write_mask_csv, write_relevance_csv, write_weights_csv};
pub use problem::{build_chunk_problem, ChunkProblem, RowLayout};
pub use solver::{ChunkSolution, ChunkSolver, ExactSolver, RelaxedSolver, SolverRegistry};

pub const EXACT: &str = "exact";
pub const RELAXED: &str = "relaxed";

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("invalid selection config: {0}")]
    InvalidConfig(String),
    #[error("{what} index {index} out of range (< {len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("empty step range")]
    EmptyChunk,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("selection problem infeasible on steps {}..{}", steps.start, steps.end)]
    Infeasible { steps: Range<usize> },
    #[error("chunk {chunk} (steps {}..{}) is infeasible; tolerance too tight for the data", steps.start, steps.end)]
    ChunkInfeasible { chunk: usize, steps: Range<usize> },
    #[error("branch-and-bound node limit reached on steps {}..{}", steps.start, steps.end)]
    NodeLimit { steps: Range<usize> },
    #[error("no chunk solver named {0:?}")]
    UnknownSolver(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("mask file: {0}")]
    MaskFormat(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// How the accumulated-drift bound is imposed within a chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftMode {
    /// Once, on the chunk's first-to-last-sample change.
    #[default]
    Endpoint,
    /// On every prefix of the chunk.
    Prefix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    /// Per-step error tolerance as a fraction of the step's activity.
    pub epsilon: f64,
    /// Multiplier on `epsilon` for the accumulated drift over a chunk.
    pub beta: f64,
    /// Steps per chunk.
    pub horizon: usize,
    /// Threshold applied to weights: selected iff `w > alpha`.
    pub alpha: f64,
    /// Name of the chunk solver.
    pub mode: String,
    /// Activities below this are treated as zero; the tolerance becomes this value.
    pub zero_norm_floor: f64,
    pub drift: DriftMode,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self::small_network()
    }
}

impl SelectionConfig {
    /// epsilon = 0.21, beta = 3, alpha = 0.
    pub fn small_network() -> Self {
        Self {
            epsilon: 0.21,
            beta: 3.0,
            horizon: 5,
            alpha: 0.0,
            mode: RELAXED.to_string(),
            zero_norm_floor: 1e-12,
            drift: DriftMode::Endpoint,
        }
    }

    /// epsilon = 0.5, beta = 3, alpha = 0.
    pub fn large_network() -> Self {
        Self {
            epsilon: 0.5,
            ..Self::small_network()
        }
    }

    pub fn validate(&self) -> Result<(), SelectionError> {
        let bad = |m: String| Err(SelectionError::InvalidConfig(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        if !(self.beta >= 1.0 && self.beta.is_finite()) {
            return bad(format!("beta must be >= 1, got {}", self.beta));
        }
        if self.horizon < 1 {
            return bad("horizon must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return bad(format!("alpha must be in [0, 1), got {}", self.alpha));
        }
        if !(self.zero_norm_floor > 0.0 && self.zero_norm_floor.is_finite()) {
            return bad(format!(
                "zero_norm_floor must be > 0, got {}",
                self.zero_norm_floor
            ));
        }
        Ok(())
    }
}

/// Weights per reaction (rows) and step (columns), each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub values: Array2<f64>,
    /// Start time of each step.
    pub step_starts: Vec<f64>,
    pub condition: Condition,
    pub config: SelectionConfig,
}

impl WeightMatrix {
    pub fn n_reactions(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_steps(&self) -> usize {
        self.values.ncols()
    }
}

/// Binary selection per reaction (rows) and step (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMask {
    pub selected: Array2<bool>,
    pub step_starts: Vec<f64>,
}

impl SelectionMask {
    pub fn n_reactions(&self) -> usize {
        self.selected.nrows()
    }

    pub fn n_steps(&self) -> usize {
        self.selected.ncols()
    }

    /// Reactions selected at any step.
    pub fn ever_selected(&self) -> Vec<usize> {
        (0..self.n_reactions())
            .filter(|&i| self.selected.row(i).iter().any(|&b| b))
            .collect()
    }
}

fn check_step(trajectory: &Trajectory, k: usize) -> Result<(), SelectionError> {
    if k >= trajectory.n_steps() {
        return Err(SelectionError::OutOfRange {
            what: "step",
            index: k,
            len: trajectory.n_steps(),
        });
    }
    Ok(())
}

fn check_species(stoich: &StoichMatrix, j: usize) -> Result<(), SelectionError> {
    if j >= stoich.n_species() {
        return Err(SelectionError::OutOfRange {
            what: "species",
            index: j,
            len: stoich.n_species(),
        });
    }
    Ok(())
}

/// `|X[k+1](j) - X[k](j) - M_j (w * r[k]) dt[k]|`.
pub fn concentration_error(
    trajectory: &Trajectory,
    stoich: &StoichMatrix,
    j: usize,
    k: usize,
    w: &[f64],
) -> Result<f64, SelectionError> {
    check_step(trajectory, k)?;
    check_species(stoich, j)?;
    if w.len() != stoich.n_reactions() {
        return Err(SelectionError::ShapeMismatch(format!(
            "weight vector has {} entries, mechanism has {} reactions",
            w.len(),
            stoich.n_reactions()
        )));
    }
    let dt = trajectory.delta(k);
    let r = trajectory.r(k);
    let predicted: f64 = (0..w.len())
        .map(|i| stoich.get(j, i) as f64 * w[i] * r[i] * dt)
        .sum();
    Ok((trajectory.x(k + 1)[j] - trajectory.x(k)[j] - predicted).abs())
}

/// `|M_j| r[k] dt[k]`: total absolute activity on species `j` during step `k`.
pub fn normalization(
    trajectory: &Trajectory,
    stoich: &StoichMatrix,
    j: usize,
    k: usize,
) -> Result<f64, SelectionError> {
    check_step(trajectory, k)?;
    check_species(stoich, j)?;
    let dt = trajectory.delta(k);
    let r = trajectory.r(k);
    Ok((0..stoich.n_reactions())
        .map(|i| stoich.get(j, i).unsigned_abs() as f64 * r[i] * dt)
        .sum())
}

/// Consecutive chunks of at most `horizon` steps covering `0..n_steps`.
pub fn chunk_ranges(n_steps: usize, horizon: usize) -> Vec<Range<usize>> {
    let horizon = horizon.max(1);
    (0..n_steps)
        .step_by(horizon)
        .map(|s| s..(s + horizon).min(n_steps))
        .collect()
}

/// Selected iff `weight > alpha`.
pub fn threshold(weights: &WeightMatrix, alpha: f64) -> SelectionMask {
    SelectionMask {
        selected: weights.values.mapv(|w| w > alpha),
        step_starts: weights.step_starts.clone(),
    }
}

/// Largest weight each reaction receives over all steps.
pub fn aggregate_relevance(weights: &WeightMatrix) -> Vec<f64> {
    weights
        .values
        .rows()
        .into_iter()
        .map(|row| row.iter().fold(0.0f64, |a, &b| a.max(b)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkReport {
    pub index: usize,
    pub steps: Range<usize>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRun {
    pub weights: WeightMatrix,
    pub chunks: Vec<ChunkReport>,
}

impl SelectionRun {
    pub fn total_objective(&self) -> f64 {
        self.chunks.iter().map(|c| c.objective).sum()
    }
}

/// Runs the chunked selection over a whole trajectory.
pub struct SelectionEngine {
    registry: SolverRegistry,
    jobs: usize,
}

impl Default for SelectionEngine {
    fn default() -> Self {
        Self::new(SolverRegistry::builtin())
    }
}

impl SelectionEngine {
    pub fn new(registry: SolverRegistry) -> Self {
        Self { registry, jobs: 1 }
    }

    /// Solve up to `jobs` chunks concurrently. Results do not depend on it.
    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    pub fn registry(&self) -> &SolverRegistry {
        &self.registry
    }

    pub fn run(
        &self,
        trajectory: &Trajectory,
        mechanism: &Mechanism,
        config: &SelectionConfig,
    ) -> Result<SelectionRun, SelectionError> {
        config.validate()?;
        if trajectory.n_species() != mechanism.n_species()
            || trajectory.n_reactions() != mechanism.n_reactions()
        {
            return Err(SelectionError::ShapeMismatch(format!(
                "trajectory has {} species / {} reactions, mechanism {} / {}",
                trajectory.n_species(),
                trajectory.n_reactions(),
                mechanism.n_species(),
                mechanism.n_reactions()
            )));
        }
        let solver = self.registry.get(&config.mode)?;
        let stoich = mechanism.stoich_matrix();
        let ranges = chunk_ranges(trajectory.n_steps(), config.horizon);

        let solve = |(index, steps): (usize, &Range<usize>)| {
            let problem = build_chunk_problem(trajectory, &stoich, config, steps.clone())?;
            solver.solve(&problem).map_err(|e| match e {
                SelectionError::Infeasible { steps } => SelectionError::ChunkInfeasible {
                    chunk: index,
                    steps,
                },
                other => other,
            })
        };
        let results: Vec<Result<ChunkSolution, SelectionError>> = if self.jobs > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.jobs)
                .build()
                .expect("thread pool");
            pool.install(|| ranges.par_iter().enumerate().map(solve).collect())
        } else {
            ranges.iter().enumerate().map(solve).collect()
        };

        let nr = mechanism.n_reactions();
        let mut values = Array2::zeros((nr, trajectory.n_steps()));
        let mut chunks = Vec::with_capacity(ranges.len());
        for (index, (steps, result)) in ranges.iter().zip(results).enumerate() {
            let solution = result?;
            for (offset, w) in solution.weights.iter().enumerate() {
                for (i, &v) in w.iter().enumerate() {
                    values[[i, steps.start + offset]] = v;
                }
            }
            chunks.push(ChunkReport {
                index,
                steps: steps.clone(),
                objective: solution.objective,
            });
        }
        Ok(SelectionRun {
            weights: WeightMatrix {
                values,
                step_starts: trajectory.times()[..trajectory.n_steps()].to_vec(),
                condition: trajectory.condition().clone(),
                config: config.clone(),
            },
            chunks,
        })
    }
}

/// Runs the selection with the built-in solvers on one thread.
pub fn run_selection(
    trajectory: &Trajectory,
    mechanism: &Mechanism,
    config: &SelectionConfig,
) -> Result<WeightMatrix, SelectionError> {
    Ok(SelectionEngine::default()
        .run(trajectory, mechanism, config)?
        .weights)
}
