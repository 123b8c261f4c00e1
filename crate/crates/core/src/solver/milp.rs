//! Best-bound branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{solve_lp, LinearProgram, LpStatus, Sense, SolverConfig, SolverError};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixedIntegerProgram {
    pub base: LinearProgram,
    /// Indices of variables restricted to {0, 1}.
    pub integers: Vec<usize>,
}

impl MixedIntegerProgram {
    pub fn validate(&self) -> Result<(), SolverError> {
        self.base.validate()?;
        let n = self.base.num_vars();
        for &j in &self.integers {
            if j >= n {
                return Err(SolverError::Malformed(format!(
                    "integer index {j} out of range for {n} variables"
                )));
            }
            let (lo, hi) = (self.base.lower[j], self.base.upper[j]);
            if lo < 0.0 || hi > 1.0 {
                return Err(SolverError::Malformed(format!(
                    "binary variable {j} has bounds [{lo}, {hi}] outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// True when every feasible integer point has an integral objective:
    /// integral coefficients on the binaries and zero elsewhere.
    fn objective_is_integral(&self) -> bool {
        let mut is_int = vec![false; self.base.num_vars()];
        for &j in &self.integers {
            is_int[j] = true;
        }
        self.base.objective.iter().enumerate().all(|(j, &c)| {
            if is_int[j] {
                (c - c.round()).abs() < 1e-12
            } else {
                c == 0.0
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    BudgetExhausted,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub incumbent: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Valid bound on the optimum in the problem's sense.
    pub best_bound: f64,
    pub nodes: usize,
}

struct Node {
    id: usize,
    depth: usize,
    /// Relaxation bound on the score (larger is better).
    bound: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    deterministic: bool,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| {
                if self.deterministic {
                    other.id.cmp(&self.id)
                } else {
                    self.depth.cmp(&other.depth)
                }
            })
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Incumbent {
    x: Vec<f64>,
    score: f64,
}

/// Solves a binary MILP with plain best-bound branch-and-bound.
pub fn solve_milp(mip: &MixedIntegerProgram, cfg: &SolverConfig) -> Result<MilpSolution, SolverError> {
    solve_milp_with(mip, cfg, None)
}

/// Like [`solve_milp`], with a primal heuristic that maps each node's LP
/// relaxation solution to a candidate point. Candidates are checked for
/// feasibility and integrality before they can become the incumbent.
pub fn solve_milp_with(
    mip: &MixedIntegerProgram,
    cfg: &SolverConfig,
    heuristic: Option<&dyn Fn(&[f64]) -> Option<Vec<f64>>>,
) -> Result<MilpSolution, SolverError> {
    mip.validate()?;
    cfg.validate()?;
    let start = Instant::now();
    let lp = &mip.base;
    let sign = if lp.sense == Sense::Maximize { 1.0 } else { -1.0 };
    let integral_objective = mip.objective_is_integral();

    let mut incumbent: Option<Incumbent> = None;
    let prunable = |bound: f64, inc: &Option<Incumbent>| -> bool {
        let Some(inc) = inc else { return false };
        if integral_objective {
            (bound + 1e-6).floor() < inc.score + 0.5
        } else {
            bound <= inc.score + cfg.gap_tol * inc.score.abs().max(1.0)
        }
    };
    let try_candidate = |x: Vec<f64>, inc: &mut Option<Incumbent>| {
        if !is_feasible_point(mip, &x, cfg) {
            return;
        }
        let score = sign * lp.objective_value(&x);
        if inc.as_ref().is_none_or(|i| score > i.score + 1e-12) {
            *inc = Some(Incumbent { x, score });
        }
    };

    let mut heap = BinaryHeap::new();
    let mut next_id = 0usize;
    heap.push(Node {
        id: next_id,
        depth: 0,
        bound: f64::INFINITY,
        lower: lp.lower.clone(),
        upper: lp.upper.clone(),
        deterministic: cfg.deterministic,
    });
    next_id += 1;
    let mut nodes = 0usize;
    let mut node_lp = lp.clone();

    while let Some(node) = heap.pop() {
        if prunable(node.bound, &incumbent) {
            continue;
        }
        let out_of_time = cfg
            .time_budget
            .is_some_and(|t| start.elapsed().as_secs_f64() >= t);
        if nodes >= cfg.node_budget || out_of_time {
            let open = heap.iter().map(|n| n.bound).fold(node.bound, f64::max);
            let best = incumbent.as_ref().map_or(open, |i| open.max(i.score));
            return Ok(finish(MilpStatus::BudgetExhausted, incumbent, sign, best, nodes));
        }
        nodes += 1;

        node_lp.lower.clone_from(&node.lower);
        node_lp.upper.clone_from(&node.upper);
        let sol = solve_lp(&node_lp, cfg)?;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(SolverError::UnboundedRelaxation),
            LpStatus::Optimal => {}
        }
        let bound = sign * sol.objective;
        if let Some(h) = heuristic {
            if let Some(cand) = h(&sol.x) {
                try_candidate(cand, &mut incumbent);
            }
        }
        if prunable(bound, &incumbent) {
            continue;
        }

        let frac = |j: usize| {
            let v = sol.x[j];
            (v - v.floor()).min(v.ceil() - v)
        };
        let mut branch_var: Option<(usize, f64)> = None;
        for &j in &mip.integers {
            let f = frac(j);
            if f > cfg.int_tol && branch_var.is_none_or(|(_, bf)| f > bf) {
                branch_var = Some((j, f));
            }
        }

        if branch_var.is_none() {
            // Integral within tolerance: confirm by fixing the rounded binaries,
            // since the relaxation may only be feasible thanks to the slack.
            let mut fixed = node_lp.clone();
            for &j in &mip.integers {
                let r = sol.x[j].round();
                fixed.lower[j] = r;
                fixed.upper[j] = r;
            }
            let fsol = solve_lp(&fixed, cfg)?;
            let mut fathomed = false;
            if fsol.status == LpStatus::Optimal {
                let mut x = fsol.x;
                for &j in &mip.integers {
                    x[j] = x[j].round();
                }
                let score = sign * fsol.objective;
                try_candidate(x, &mut incumbent);
                fathomed = score >= bound - cfg.gap_tol * bound.abs().max(1.0);
            }
            if fathomed {
                continue;
            }
            for &j in &mip.integers {
                let f = frac(j);
                if f > 0.0 && branch_var.is_none_or(|(_, bf)| f > bf) {
                    branch_var = Some((j, f));
                }
            }
        }

        let Some((j, _)) = branch_var else { continue };
        let v = sol.x[j];
        for (lo, hi) in [(node.lower[j], v.floor()), (v.ceil(), node.upper[j])] {
            if lo > hi {
                continue;
            }
            let mut lower = node.lower.clone();
            let mut upper = node.upper.clone();
            lower[j] = lo;
            upper[j] = hi;
            heap.push(Node {
                id: next_id,
                depth: node.depth + 1,
                bound,
                lower,
                upper,
                deterministic: cfg.deterministic,
            });
            next_id += 1;
        }
    }

    let status = if incumbent.is_some() {
        MilpStatus::Optimal
    } else {
        MilpStatus::Infeasible
    };
    let best = incumbent.as_ref().map_or(f64::NEG_INFINITY, |i| i.score);
    Ok(finish(status, incumbent, sign, best, nodes))
}

fn finish(
    status: MilpStatus,
    incumbent: Option<Incumbent>,
    sign: f64,
    best_score: f64,
    nodes: usize,
) -> MilpSolution {
    let (x, obj) = match incumbent {
        Some(i) => (Some(i.x), Some(sign * i.score)),
        None => (None, None),
    };
    MilpSolution {
        status,
        incumbent: x,
        objective: obj,
        best_bound: sign * best_score,
        nodes,
    }
}

fn is_feasible_point(mip: &MixedIntegerProgram, x: &[f64], cfg: &SolverConfig) -> bool {
    let lp = &mip.base;
    if x.len() != lp.num_vars() || x.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let tol = |b: f64| cfg.feas_tol + 1e-12 * b.abs();
    for (j, &v) in x.iter().enumerate() {
        if v < lp.lower[j] - tol(lp.lower[j]) || v > lp.upper[j] + tol(lp.upper[j]) {
            return false;
        }
    }
    if mip.integers.iter().any(|&j| (x[j] - x[j].round()).abs() > cfg.int_tol) {
        return false;
    }
    let le_ok = lp
        .a_ub
        .iter()
        .zip(&lp.b_ub)
        .all(|(r, &b)| crate::linalg::dot(r, x) <= b + tol(b));
    let eq_ok = lp
        .a_eq
        .iter()
        .zip(&lp.b_eq)
        .all(|(r, &b)| (crate::linalg::dot(r, x) - b).abs() <= tol(b));
    le_ok && eq_ok
}
