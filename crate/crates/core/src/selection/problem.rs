use std::ops::Range;

use crate::kinetics::Trajectory;
use crate::lp::{IntegerProgram, LinearProgram};
use crate::mechanism::StoichMatrix;

use super::{DriftMode, SelectionConfig, SelectionError};

/// Row counts of a built chunk problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowLayout {
    /// Two rows per (species, step).
    pub per_step: usize,
    /// Two rows per species (endpoint drift), or per (species, prefix).
    pub drift: usize,
}

impl RowLayout {
    pub fn total(&self) -> usize {
        self.per_step + self.drift
    }
}

/// The selection problem for one chunk of steps.
///
/// Variable `k_local * n_reactions + i` is the weight of reaction `i` on step
/// `steps.start + k_local`. All variables are binary in the program; the
/// relaxed strategy solves its LP relaxation.
#[derive(Debug, Clone)]
pub struct ChunkProblem {
    pub steps: Range<usize>,
    pub n_reactions: usize,
    pub n_species: usize,
    pub program: IntegerProgram,
    pub layout: RowLayout,
}

impl ChunkProblem {
    pub fn var(&self, step_offset: usize, reaction: usize) -> usize {
        step_offset * self.n_reactions + reaction
    }

    pub fn n_vars(&self) -> usize {
        self.program.base.n_vars()
    }
}

/// Builds the chunk problem over `steps`.
///
/// Per step `k` and species `j`, with `a_i = M_ji r_k(i) dt_k`,
/// `N = sum_i |a_i|` and `dX = X[k+1](j) - X[k](j)`:
///
/// ```text
///   |dX - sum_i a_i w_ik| <= eps * N
/// ```
///
/// and over the chunk, with the sums running over its steps:
///
/// ```text
///   |X[end](j) - X[start](j) - sum_k sum_i a_ik w_ik| <= beta * eps * sum_k N_k
/// ```
///
/// Where the activity is below `zero_norm_floor` the tolerance is the floor
/// itself. Every row is divided by `max(activity, floor)` so coefficients are
/// of order one.
pub fn build_chunk_problem(
    trajectory: &Trajectory,
    stoich: &StoichMatrix,
    config: &SelectionConfig,
    steps: Range<usize>,
) -> Result<ChunkProblem, SelectionError> {
    if steps.is_empty() {
        return Err(SelectionError::EmptyChunk);
    }
    if steps.end > trajectory.n_steps() {
        return Err(SelectionError::OutOfRange {
            what: "step",
            index: steps.end - 1,
            len: trajectory.n_steps(),
        });
    }
    if stoich.n_species() != trajectory.n_species()
        || stoich.n_reactions() != trajectory.n_reactions()
    {
        return Err(SelectionError::ShapeMismatch(
            "stoichiometric matrix does not match the trajectory".into(),
        ));
    }
    let nr = stoich.n_reactions();
    let ns = stoich.n_species();
    let width = steps.len();
    let n = nr * width;
    let floor = config.zero_norm_floor;
    let eps = config.epsilon;

    // contribution coefficients a[k_local][j][i] and activities
    let mut coeff = vec![0.0; width * ns * nr];
    let mut activity = vec![0.0; width * ns];
    for (kl, k) in steps.clone().enumerate() {
        let dt = trajectory.delta(k);
        let r = trajectory.r(k);
        for j in 0..ns {
            let mut total = 0.0;
            for i in 0..nr {
                let m = stoich.get(j, i);
                if m != 0 {
                    let a = m as f64 * r[i] * dt;
                    coeff[(kl * ns + j) * nr + i] = a;
                    total += m.unsigned_abs() as f64 * r[i] * dt;
                }
            }
            activity[kl * ns + j] = total;
        }
    }

    let mut lp = LinearProgram::new(vec![1.0; n], vec![0.0; n], vec![1.0; n]);
    let mut row = vec![0.0; n];
    let push_pair = |lp: &mut LinearProgram, row: &mut [f64], dx: f64, tol: f64, scale: f64| {
        // dx - a.w <= tol  and  a.w - dx <= tol
        let neg: Vec<f64> = row.iter().map(|a| -a / scale).collect();
        lp.add_row(&neg, (tol - dx) / scale);
        let pos: Vec<f64> = row.iter().map(|a| a / scale).collect();
        lp.add_row(&pos, (tol + dx) / scale);
        row.iter_mut().for_each(|v| *v = 0.0);
    };
    let tolerance = |act: f64, factor: f64| if act < floor { floor } else { factor * act };

    for (kl, k) in steps.clone().enumerate() {
        for j in 0..ns {
            let act = activity[kl * ns + j];
            row[kl * nr..(kl + 1) * nr]
                .copy_from_slice(&coeff[(kl * ns + j) * nr..(kl * ns + j + 1) * nr]);
            let dx = trajectory.x(k + 1)[j] - trajectory.x(k)[j];
            push_pair(&mut lp, &mut row, dx, tolerance(act, eps), act.max(floor));
        }
    }
    let per_step = lp.n_rows();

    let prefix_ends: Vec<usize> = match config.drift {
        DriftMode::Endpoint => vec![width],
        DriftMode::Prefix => (1..=width).collect(),
    };
    for &end in &prefix_ends {
        for j in 0..ns {
            let mut act = 0.0;
            for kl in 0..end {
                row[kl * nr..(kl + 1) * nr]
                    .copy_from_slice(&coeff[(kl * ns + j) * nr..(kl * ns + j + 1) * nr]);
                act += activity[kl * ns + j];
            }
            let dx = trajectory.x(steps.start + end)[j] - trajectory.x(steps.start)[j];
            push_pair(
                &mut lp,
                &mut row,
                dx,
                tolerance(act, config.beta * eps),
                act.max(floor),
            );
        }
    }
    let drift = lp.n_rows() - per_step;

    Ok(ChunkProblem {
        steps,
        n_reactions: nr,
        n_species: ns,
        program: IntegerProgram::binary(lp),
        layout: RowLayout { per_step, drift },
    })
}
