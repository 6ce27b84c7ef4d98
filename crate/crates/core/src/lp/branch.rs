//! Depth-first branch-and-bound over the simplex relaxation.

use super::simplex::solve_with_bounds;
use super::{IntegerProgram, LpError, SolveResult, SolveStatus, INTEGRALITY_TOL, OBJECTIVE_TOL};

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Relaxation bound inherited from the parent.
    bound: f64,
    depth: usize,
    id: usize,
}

/// Solves `ip` exactly, exploring at most `node_limit` nodes.
///
/// Branches on the most fractional variable. The open node with the largest
/// depth is expanded next, ties going to the smaller inherited bound. At
/// every node the rounded relaxation is tried as an incumbent.
pub fn solve_ilp(ip: &IntegerProgram, node_limit: usize) -> Result<SolveResult, LpError> {
    ip.validate()?;
    let lp = &ip.base;
    let n = lp.n_vars();

    // With integer costs on integral variables and free continuous ones, any
    // feasible objective is an integer and bounds can be rounded up.
    let integral_objective = (0..n).all(|j| {
        if ip.integral[j] {
            lp.objective[j].fract() == 0.0
        } else {
            lp.objective[j] == 0.0
        }
    });
    let all_integral = ip.integral.iter().all(|&b| b);
    let tighten = |z: f64| {
        if integral_objective {
            (z - OBJECTIVE_TOL).ceil()
        } else {
            z
        }
    };

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    let mut nodes = 0;
    let mut next_id = 1;
    let mut open = vec![Node {
        lower: lp.lower.clone(),
        upper: lp.upper.clone(),
        bound: f64::NEG_INFINITY,
        depth: 0,
        id: 0,
    }];

    while !open.is_empty() {
        if nodes >= node_limit {
            let (x, objective) = incumbent.unwrap_or((Vec::new(), f64::NAN));
            return Ok(SolveResult {
                status: SolveStatus::NodeLimit,
                x,
                objective,
                iterations,
                nodes,
            });
        }
        let pick = (0..open.len())
            .min_by(|&a, &b| {
                let (na, nb) = (&open[a], &open[b]);
                nb.depth
                    .cmp(&na.depth)
                    .then(na.bound.total_cmp(&nb.bound))
                    .then(na.id.cmp(&nb.id))
            })
            .expect("nonempty");
        let node = open.swap_remove(pick);
        if let Some((_, best)) = &incumbent {
            if node.bound >= best - OBJECTIVE_TOL {
                continue;
            }
        }
        nodes += 1;

        let relax = solve_with_bounds(lp, &node.lower, &node.upper)?;
        iterations += relax.iterations;
        match relax.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                if nodes == 1 {
                    return Ok(SolveResult {
                        status: SolveStatus::Unbounded,
                        x: Vec::new(),
                        objective: f64::NAN,
                        iterations,
                        nodes,
                    });
                }
                continue;
            }
            SolveStatus::NodeLimit => unreachable!(),
        }
        let bound = tighten(relax.objective);
        if let Some((_, best)) = &incumbent {
            if bound >= best - OBJECTIVE_TOL {
                continue;
            }
        }

        let branch_var = (0..n)
            .filter(|&j| ip.integral[j])
            .map(|j| (j, (relax.x[j] - relax.x[j].round()).abs()))
            .filter(|&(_, f)| f > INTEGRALITY_TOL)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(j, _)| j);

        let Some(j) = branch_var else {
            let mut x = relax.x.clone();
            for k in (0..n).filter(|&k| ip.integral[k]) {
                x[k] = x[k].round();
            }
            let z = lp.evaluate(&x);
            if incumbent
                .as_ref()
                .is_none_or(|(_, best)| z < best - OBJECTIVE_TOL)
            {
                incumbent = Some((x, z));
            }
            continue;
        };

        if all_integral {
            for candidate in [
                relax.x.iter().map(|v| v.round()).collect::<Vec<f64>>(),
                relax
                    .x
                    .iter()
                    .map(|v| (v - INTEGRALITY_TOL).ceil())
                    .collect(),
            ] {
                let within =
                    (0..n).all(|k| candidate[k] >= node.lower[k] && candidate[k] <= node.upper[k]);
                if within && lp.is_feasible(&candidate) {
                    let z = lp.evaluate(&candidate);
                    if incumbent
                        .as_ref()
                        .is_none_or(|(_, best)| z < best - OBJECTIVE_TOL)
                    {
                        incumbent = Some((candidate, z));
                    }
                }
            }
            if let Some((_, best)) = &incumbent {
                if bound >= best - OBJECTIVE_TOL {
                    continue;
                }
            }
        }

        let v = relax.x[j];
        let mut down = Node {
            lower: node.lower.clone(),
            upper: node.upper.clone(),
            bound,
            depth: node.depth + 1,
            id: next_id,
        };
        down.upper[j] = v.floor();
        let mut up = Node {
            lower: node.lower,
            upper: node.upper,
            bound,
            depth: node.depth + 1,
            id: next_id + 1,
        };
        up.lower[j] = v.ceil();
        next_id += 2;
        open.push(down);
        open.push(up);
    }

    Ok(match incumbent {
        Some((x, objective)) => SolveResult {
            status: SolveStatus::Optimal,
            x,
            objective,
            iterations,
            nodes,
        },
        None => SolveResult {
            status: SolveStatus::Infeasible,
            x: Vec::new(),
            objective: f64::NAN,
            iterations,
            nodes,
        },
    })
}
