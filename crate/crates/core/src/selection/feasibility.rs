use std::ops::Range;

use crate::kinetics::Trajectory;
use crate::mechanism::StoichMatrix;

use super::{build_chunk_problem, normalization, ChunkSolver, SelectionConfig, SelectionError};

/// A step on which a species changes by more than `zero_norm_floor` although
/// no reaction with a nonzero rate touches it. No `epsilon` covers such a
/// step; finer sampling does.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegenerateStep {
    pub step: usize,
    pub species: usize,
    pub change: f64,
}

pub fn degenerate_steps(
    trajectory: &Trajectory,
    stoich: &StoichMatrix,
    config: &SelectionConfig,
    steps: Range<usize>,
) -> Result<Vec<DegenerateStep>, SelectionError> {
    let mut out = Vec::new();
    for k in steps {
        for j in 0..stoich.n_species() {
            let change = trajectory.x(k + 1)[j] - trajectory.x(k)[j];
            if normalization(trajectory, stoich, j, k)? < config.zero_norm_floor
                && change.abs() > config.zero_norm_floor
            {
                out.push(DegenerateStep {
                    step: k,
                    species: j,
                    change,
                });
            }
        }
    }
    Ok(out)
}

/// Smallest `epsilon` (to about 1e-6 relative) at which the chunk over
/// `steps` becomes solvable, keeping the other settings of `config`.
///
/// Feasible sets grow with `epsilon`, so the search doubles until a feasible
/// value is found and then bisects. Returns `None` if nothing up to `1e6`
/// works.
pub fn minimal_feasible_epsilon(
    trajectory: &Trajectory,
    stoich: &StoichMatrix,
    config: &SelectionConfig,
    solver: &dyn ChunkSolver,
    steps: Range<usize>,
) -> Result<Option<f64>, SelectionError> {
    let feasible = |eps: f64| -> Result<bool, SelectionError> {
        let cfg = SelectionConfig {
            epsilon: eps,
            ..config.clone()
        };
        let problem = build_chunk_problem(trajectory, stoich, &cfg, steps.clone())?;
        match solver.solve(&problem) {
            Ok(_) => Ok(true),
            Err(SelectionError::Infeasible { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };

    if feasible(config.epsilon)? {
        return Ok(Some(config.epsilon));
    }
    let mut lo = config.epsilon;
    let mut hi = lo * 2.0;
    while !feasible(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(None);
        }
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}
