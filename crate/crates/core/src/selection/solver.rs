use std::collections::BTreeMap;
use std::sync::Arc;

use crate::lp::{solve_ilp, solve_lp, SolveStatus};

use super::{ChunkProblem, SelectionError, EXACT, RELAXED};

/// Per-step weight vectors for one chunk and the objective value reached.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkSolution {
    pub weights: Vec<Vec<f64>>,
    pub objective: f64,
}

/// A strategy for solving one chunk problem.
pub trait ChunkSolver: Send + Sync {
    fn name(&self) -> &str;
    fn description(&self) -> &str;
    fn solve(&self, problem: &ChunkProblem) -> Result<ChunkSolution, SelectionError>;
}

fn split_weights(problem: &ChunkProblem, x: &[f64]) -> Vec<Vec<f64>> {
    x.chunks(problem.n_reactions).map(<[f64]>::to_vec).collect()
}

/// Binary weights minimizing the number of active reactions, by
/// branch-and-bound.
#[derive(Debug, Clone)]
pub struct ExactSolver {
    pub node_limit: usize,
}

impl Default for ExactSolver {
    fn default() -> Self {
        Self {
            node_limit: 1_000_000,
        }
    }
}

impl ChunkSolver for ExactSolver {
    fn name(&self) -> &str {
        EXACT
    }

    fn description(&self) -> &str {
        "binary selection (integer program, branch-and-bound)"
    }

    fn solve(&self, problem: &ChunkProblem) -> Result<ChunkSolution, SelectionError> {
        let res = solve_ilp(&problem.program, self.node_limit)?;
        match res.status {
            SolveStatus::Optimal => {
                let x: Vec<f64> = res.x.iter().map(|v| v.round()).collect();
                Ok(ChunkSolution {
                    objective: x.iter().sum(),
                    weights: split_weights(problem, &x),
                })
            }
            SolveStatus::Infeasible => Err(SelectionError::Infeasible {
                steps: problem.steps.clone(),
            }),
            SolveStatus::NodeLimit => Err(SelectionError::NodeLimit {
                steps: problem.steps.clone(),
            }),
            SolveStatus::Unbounded => unreachable!("weights are bounded"),
        }
    }
}

/// Real weights in `[0, 1]` from the linear relaxation.
#[derive(Debug, Clone, Default)]
pub struct RelaxedSolver;

impl ChunkSolver for RelaxedSolver {
    fn name(&self) -> &str {
        RELAXED
    }

    fn description(&self) -> &str {
        "real-valued weights (linear relaxation, simplex)"
    }

    fn solve(&self, problem: &ChunkProblem) -> Result<ChunkSolution, SelectionError> {
        let res = solve_lp(&problem.program.base)?;
        match res.status {
            SolveStatus::Optimal => Ok(ChunkSolution {
                objective: res.objective,
                weights: split_weights(problem, &res.x),
            }),
            SolveStatus::Infeasible => Err(SelectionError::Infeasible {
                steps: problem.steps.clone(),
            }),
            SolveStatus::Unbounded | SolveStatus::NodeLimit => {
                unreachable!("weights are bounded")
            }
        }
    }
}

/// Chunk solvers by name.
#[derive(Clone, Default)]
pub struct SolverRegistry {
    solvers: BTreeMap<String, Arc<dyn ChunkSolver>>,
}

impl SolverRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `exact` and `relaxed`.
    pub fn builtin() -> Self {
        let mut r = Self::new();
        r.register(Arc::new(ExactSolver::default()));
        r.register(Arc::new(RelaxedSolver));
        r
    }

    /// Adds a solver, replacing any registered under the same name.
    pub fn register(&mut self, solver: Arc<dyn ChunkSolver>) {
        self.solvers.insert(solver.name().to_string(), solver);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ChunkSolver>, SelectionError> {
        self.solvers
            .get(name)
            .cloned()
            .ok_or_else(|| SelectionError::UnknownSolver(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.solvers.keys().map(String::as_str).collect()
    }

    pub fn describe(&self) -> Vec<(&str, &str)> {
        self.solvers
            .values()
            .map(|s| (s.name(), s.description()))
            .collect()
    }
}

impl std::fmt::Debug for SolverRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.solvers.keys()).finish()
    }
}
