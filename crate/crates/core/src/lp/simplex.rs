//! Bounded-variable revised simplex with an explicit dense basis inverse.
//!
//! Structural variables are shifted to `0 <= y <= upper - lower`. Each row
//! gets a slack; rows whose shifted right-hand side is negative are negated
//! and get an artificial variable, which phase one drives to zero. Pricing is
//! Dantzig's rule; after a run of degenerate pivots it falls back to Bland's
//! rule until the objective moves again.

use super::{LinearProgram, LpError, SolveResult, SolveStatus, FEASIBILITY_TOL};

const PIVOT_TOL: f64 = 1e-9;
const OPTIMALITY_TOL: f64 = 1e-9;
const RATIO_TIE_TOL: f64 = 1e-12;
const SNAP_TOL: f64 = 1e-11;
const STALL_THRESHOLD: usize = 50;

/// Solves `lp` to optimality. Infeasible and unbounded programs are reported
/// through the status; only an exhausted iteration budget is an error.
pub fn solve_lp(lp: &LinearProgram) -> Result<SolveResult, LpError> {
    lp.validate()?;
    solve_with_bounds(lp, &lp.lower, &lp.upper)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    /// Sparse structural columns, already multiplied by the row signs.
    columns: Vec<Vec<(usize, f64)>>,
    sign: Vec<f64>,
    artificial_row: Vec<usize>,
    ub: Vec<f64>,
    rhs: Vec<f64>,
    objective: &'a [f64],
    state: Vec<VarState>,
    basis: Vec<usize>,
    x_basic: Vec<f64>,
    binv: Vec<f64>,
    pivots_since_refactor: usize,
    iterations: usize,
    limit: usize,
}

pub(crate) fn solve_with_bounds(
    lp: &LinearProgram,
    lower: &[f64],
    upper: &[f64],
) -> Result<SolveResult, LpError> {
    let n = lp.n_vars();
    let m = lp.n_rows();
    if (0..n).any(|j| lower[j] > upper[j]) {
        return Ok(SolveResult::without_solution(SolveStatus::Infeasible, 0));
    }

    let mut shifted = lp.rhs.clone();
    for (i, b) in shifted.iter_mut().enumerate() {
        let row = lp.row(i);
        *b -= row.iter().zip(lower).map(|(a, l)| a * l).sum::<f64>();
    }
    let sign: Vec<f64> = shifted
        .iter()
        .map(|&b| if b >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    let mut columns = vec![Vec::new(); n];
    for (i, &s) in sign.iter().enumerate() {
        for (j, &a) in lp.row(i).iter().enumerate() {
            if a != 0.0 {
                columns[j].push((i, s * a));
            }
        }
    }
    let artificial_row: Vec<usize> = (0..m).filter(|&i| sign[i] < 0.0).collect();
    let total = n + m + artificial_row.len();

    let mut ub = Vec::with_capacity(total);
    ub.extend((0..n).map(|j| upper[j] - lower[j]));
    ub.extend(std::iter::repeat_n(f64::INFINITY, m + artificial_row.len()));

    let mut state = vec![VarState::AtLower; total];
    let mut basis = vec![0; m];
    let mut art = 0;
    for (i, b) in basis.iter_mut().enumerate() {
        *b = if sign[i] > 0.0 {
            n + i
        } else {
            art += 1;
            n + m + art - 1
        };
        state[*b] = VarState::Basic;
    }
    let rhs: Vec<f64> = shifted.iter().zip(&sign).map(|(b, s)| b * s).collect();
    let mut binv = vec![0.0; m * m];
    for i in 0..m {
        binv[i * m + i] = 1.0;
    }

    let mut sx = Simplex {
        m,
        n,
        columns,
        sign,
        artificial_row,
        ub,
        x_basic: rhs.clone(),
        rhs,
        objective: &lp.objective,
        state,
        basis,
        binv,
        pivots_since_refactor: 0,
        iterations: 0,
        limit: 10_000 + 50 * (m + total),
    };

    if !sx.artificial_row.is_empty() {
        match sx.run(1)? {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded => unreachable!("phase one is bounded below"),
        }
        let infeasibility: f64 = (0..m)
            .filter(|&i| sx.basis[i] >= n + m)
            .map(|i| sx.x_basic[i])
            .sum();
        let scale = 1.0 + sx.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(SolveResult::without_solution(
                SolveStatus::Infeasible,
                sx.iterations,
            ));
        }
        for a in n + m..total {
            sx.ub[a] = 0.0;
        }
    }

    match sx.run(2)? {
        PhaseOutcome::Unbounded => Ok(SolveResult::without_solution(
            SolveStatus::Unbounded,
            sx.iterations,
        )),
        PhaseOutcome::Optimal => {
            let x = sx.primal(lower, upper);
            Ok(SolveResult {
                status: SolveStatus::Optimal,
                objective: lp.evaluate(&x),
                x,
                iterations: sx.iterations,
                nodes: 0,
            })
        }
    }
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

enum Step {
    Flip,
    Pivot { row: usize, to_upper: bool },
}

impl Simplex<'_> {
    fn cost(&self, phase: u8, var: usize) -> f64 {
        match phase {
            1 => {
                if var >= self.n + self.m {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                if var < self.n {
                    self.objective[var]
                } else {
                    0.0
                }
            }
        }
    }

    fn for_column(&self, var: usize, mut f: impl FnMut(usize, f64)) {
        if var < self.n {
            for &(i, a) in &self.columns[var] {
                f(i, a);
            }
        } else if var < self.n + self.m {
            let i = var - self.n;
            f(i, self.sign[i]);
        } else {
            f(self.artificial_row[var - self.n - self.m], 1.0);
        }
    }

    fn phase_objective(&self, phase: u8) -> f64 {
        let mut z = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            z += self.cost(phase, b) * self.x_basic[i];
        }
        for (v, s) in self.state.iter().enumerate() {
            if *s == VarState::AtUpper {
                z += self.cost(phase, v) * self.ub[v];
            }
        }
        z
    }

    fn run(&mut self, phase: u8) -> Result<PhaseOutcome, LpError> {
        let m = self.m;
        let total = self.state.len();
        let mut bland = false;
        let mut stalled = 0;
        let mut pi = vec![0.0; m];
        let mut alpha = vec![0.0; m];

        loop {
            if self.iterations >= self.limit {
                return Err(LpError::IterationLimit {
                    limit: self.limit,
                    phase,
                    objective: self.phase_objective(phase),
                    rows: m,
                    cols: self.n,
                });
            }

            // duals
            pi.iter_mut().for_each(|p| *p = 0.0);
            for (i, &b) in self.basis.iter().enumerate() {
                let c = self.cost(phase, b);
                if c != 0.0 {
                    let row = &self.binv[i * m..(i + 1) * m];
                    for (p, &v) in pi.iter_mut().zip(row) {
                        *p += c * v;
                    }
                }
            }

            // pricing
            let mut entering = None;
            let mut best = 0.0;
            for var in 0..total {
                let st = self.state[var];
                if st == VarState::Basic || self.ub[var] <= 0.0 {
                    continue;
                }
                let mut d = self.cost(phase, var);
                self.for_column(var, |i, a| d -= pi[i] * a);
                let gain = match st {
                    VarState::AtLower if d < -OPTIMALITY_TOL => -d,
                    VarState::AtUpper if d > OPTIMALITY_TOL => d,
                    _ => continue,
                };
                if bland {
                    entering = Some(var);
                    break;
                }
                if gain > best {
                    best = gain;
                    entering = Some(var);
                }
            }
            let Some(q) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };

            // column of q in the current basis
            alpha.iter_mut().for_each(|a| *a = 0.0);
            self.for_column(q, |k, a| {
                for (i, ai) in alpha.iter_mut().enumerate() {
                    *ai += self.binv[i * m + k] * a;
                }
            });

            let dir = if self.state[q] == VarState::AtLower {
                1.0
            } else {
                -1.0
            };
            let mut t_best = f64::INFINITY;
            let mut step = None;
            if self.ub[q].is_finite() {
                t_best = self.ub[q];
                step = Some(Step::Flip);
            }
            let mut best_pivot = 0.0;
            for (i, &ai) in alpha.iter().enumerate() {
                let rate = dir * ai;
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let (t, to_upper) = if rate > 0.0 {
                    ((self.x_basic[i] / rate).max(0.0), false)
                } else if self.ub[b].is_finite() {
                    (((self.ub[b] - self.x_basic[i]) / -rate).max(0.0), true)
                } else {
                    continue;
                };
                let better = match step {
                    None => true,
                    Some(_) if t < t_best - RATIO_TIE_TOL => true,
                    // on ties keep a bound flip: no basis change
                    Some(Step::Flip) => false,
                    Some(Step::Pivot { row, .. }) => {
                        t <= t_best + RATIO_TIE_TOL
                            && if bland {
                                b < self.basis[row]
                            } else {
                                rate.abs() > best_pivot
                            }
                    }
                };
                if better {
                    t_best = t_best.min(t);
                    best_pivot = rate.abs();
                    step = Some(Step::Pivot { row: i, to_upper });
                }
            }

            let Some(step) = step else {
                return Ok(PhaseOutcome::Unbounded);
            };
            self.iterations += 1;

            if t_best > RATIO_TIE_TOL {
                stalled = 0;
                bland = false;
            } else {
                stalled += 1;
                if stalled > STALL_THRESHOLD {
                    bland = true;
                }
            }

            match step {
                Step::Flip => {
                    let t = self.ub[q];
                    for (xb, &ai) in self.x_basic.iter_mut().zip(&alpha) {
                        *xb -= dir * t * ai;
                    }
                    self.state[q] = if self.state[q] == VarState::AtLower {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                }
                Step::Pivot { row, to_upper } => {
                    let t = t_best;
                    for (xb, &ai) in self.x_basic.iter_mut().zip(&alpha) {
                        *xb -= dir * t * ai;
                    }
                    let entering_value = if dir > 0.0 { t } else { self.ub[q] - t };
                    let leaving = self.basis[row];
                    self.state[leaving] = if to_upper {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.state[q] = VarState::Basic;
                    self.basis[row] = q;
                    self.x_basic[row] = entering_value;
                    self.pivot(row, &alpha);
                    self.pivots_since_refactor += 1;
                    if self.pivots_since_refactor >= 100.max(m) {
                        self.refactor()?;
                    }
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let inv = 1.0 / alpha[r];
        for v in &mut self.binv[r * m..(r + 1) * m] {
            *v *= inv;
        }
        let (head, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, tail) = rest.split_at_mut(m);
        for (i, row) in head.chunks_exact_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
            }
        }
        for (off, row) in tail.chunks_exact_mut(m).enumerate() {
            let f = alpha[r + 1 + off];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
            }
        }
    }

    /// Recomputes the basis inverse from scratch and the basic values from it.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (r, &var) in self.basis.iter().enumerate() {
            self.for_column(var, |i, a| b[i * m + r] = a);
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&a, &c| b[a * m + col].abs().total_cmp(&b[c * m + col].abs()))
                .expect("nonempty");
            if b[piv * m + col].abs() < 1e-14 {
                return Err(LpError::Numerical(
                    "singular basis during refactorization".into(),
                ));
            }
            if piv != col {
                for k in 0..m {
                    b.swap(piv * m + k, col * m + k);
                    inv.swap(piv * m + k, col * m + k);
                }
            }
            let d = 1.0 / b[col * m + col];
            for k in 0..m {
                b[col * m + k] *= d;
                inv[col * m + k] *= d;
            }
            for i in 0..m {
                if i != col {
                    let f = b[i * m + col];
                    if f != 0.0 {
                        for k in 0..m {
                            b[i * m + k] -= f * b[col * m + k];
                            inv[i * m + k] -= f * inv[col * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.pivots_since_refactor = 0;

        let mut residual = self.rhs.clone();
        for (v, s) in self.state.iter().enumerate() {
            if *s == VarState::AtUpper {
                let u = self.ub[v];
                self.for_column(v, |i, a| residual[i] -= a * u);
            }
        }
        for i in 0..m {
            self.x_basic[i] = (0..m).map(|k| self.binv[i * m + k] * residual[k]).sum();
        }
        Ok(())
    }

    fn primal(&self, lower: &[f64], upper: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for j in 0..self.n {
            x[j] = match self.state[j] {
                VarState::AtLower => lower[j],
                VarState::AtUpper => upper[j],
                VarState::Basic => lower[j],
            };
        }
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                let mut y = self.x_basic[i].max(0.0);
                if y <= SNAP_TOL {
                    y = 0.0;
                }
                x[b] = if self.ub[b].is_finite() && y >= self.ub[b] - SNAP_TOL {
                    upper[b]
                } else {
                    lower[b] + y
                };
            }
        }
        x
    }
}
