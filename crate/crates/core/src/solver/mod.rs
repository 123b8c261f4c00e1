//! Self-contained LP and binary-MILP solving.
//!
//! [`solve_lp`] is a dense bounded-variable revised simplex (two phases,
//! Dantzig pricing with a sticky switch to Bland's rule after a run of
//! degenerate pivots). [`solve_milp`] is best-bound branch-and-bound over
//! binary variables with most-fractional branching.
//!
//! Duals follow the sensitivity convention: `duals[i]` is the rate of change
//! of the optimal objective with respect to the right-hand side of row `i`
//! (inequality rows first, then equality rows). For a maximization every `≤`
//! row has a nonnegative dual, for a minimization a nonpositive one.

mod milp;
mod simplex;

pub use milp::{solve_milp, solve_milp_with, MilpSolution, MilpStatus, MixedIntegerProgram};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("iteration limit of {0} simplex pivots reached")]
    IterationLimit(usize),
    #[error("LP relaxation is unbounded")]
    UnboundedRelaxation,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub int_tol: f64,
    /// Smallest admissible simplex pivot magnitude.
    pub pivot_floor: f64,
    pub node_budget: usize,
    /// Wall-clock budget for a single MILP solve, in seconds.
    pub time_budget: Option<f64>,
    pub deterministic: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            int_tol: 1e-6,
            pivot_floor: 1e-11,
            node_budget: 200_000,
            time_budget: None,
            deterministic: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let tols = [
            ("feas_tol", self.feas_tol),
            ("gap_tol", self.gap_tol),
            ("int_tol", self.int_tol),
            ("pivot_floor", self.pivot_floor),
        ];
        for (name, v) in tols {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::InvalidConfig(format!("{name} must be > 0")));
            }
        }
        if let Some(t) = self.time_budget {
            if !(t > 0.0) {
                return Err(SolverError::InvalidConfig("time budget must be > 0".into()));
            }
        }
        if self.node_budget == 0 {
            return Err(SolverError::InvalidConfig("node budget must be > 0".into()));
        }
        Ok(())
    }
}

/// `sense cᵀx  s.t.  A_ub x ≤ b_ub,  A_eq x = b_eq,  lower ≤ x ≤ upper`.
///
/// Bounds may be infinite. New variables default to `[0, +∞)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            a_ub: Vec::new(),
            b_ub: Vec::new(),
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.a_ub.len() + self.a_eq.len()
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
        self
    }

    /// Stored as the negated `≤` row.
    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.a_ub.push(row.into_iter().map(|a| -a).collect());
        self.b_ub.push(-rhs);
        self
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(SolverError::Malformed(format!(
                "bound vectors have lengths {}/{} for {n} variables",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.a_ub.len() != self.b_ub.len() || self.a_eq.len() != self.b_eq.len() {
            return Err(SolverError::Malformed("row count differs from rhs length".into()));
        }
        for (i, row) in self.a_ub.iter().chain(&self.a_eq).enumerate() {
            if row.len() != n {
                return Err(SolverError::Malformed(format!(
                    "row {i} has width {} but there are {n} variables",
                    row.len()
                )));
            }
            if row.iter().any(|a| !a.is_finite()) {
                return Err(SolverError::Malformed(format!("row {i} has a non-finite coefficient")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(SolverError::Malformed("non-finite objective coefficient".into()));
        }
        if self.b_ub.iter().chain(&self.b_eq).any(|b| !b.is_finite()) {
            return Err(SolverError::Malformed("non-finite right-hand side".into()));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(SolverError::Malformed(format!(
                    "variable {j} has bounds [{}, {}]",
                    self.lower[j], self.upper[j]
                )));
            }
        }
        Ok(())
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (row, &b) in self.a_ub.iter().zip(&self.b_ub) {
            worst = worst.max(crate::linalg::dot(row, x) - b);
        }
        for (row, &b) in self.a_eq.iter().zip(&self.b_eq) {
            worst = worst.max((crate::linalg::dot(row, x) - b).abs());
        }
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        crate::linalg::dot(&self.objective, x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Row duals, inequality rows first, then equality rows.
    pub duals: Vec<f64>,
    /// `c − Aᵀ·duals`, in the problem's own sense.
    pub reduced_costs: Vec<f64>,
    /// Farkas multipliers (inequality rows nonnegative) when infeasible.
    pub farkas: Option<Vec<f64>>,
    /// Improving direction of the feasible set when unbounded.
    pub ray: Option<Vec<f64>>,
}

/// Solves an LP to optimality, or classifies it as infeasible/unbounded.
pub fn solve_lp(lp: &LinearProgram, cfg: &SolverConfig) -> Result<LpSolution, SolverError> {
    lp.validate()?;
    cfg.validate()?;
    simplex::solve(lp, cfg)
}

/// Checks that `y` proves `lp` infeasible: the combined row `yᵀA` has a
/// minimum over the variable box strictly above `yᵀb`, i.e. `0 ≤ negative`.
pub fn verify_farkas(lp: &LinearProgram, y: &[f64], tol: f64) -> bool {
    let m_ub = lp.a_ub.len();
    if y.len() != lp.num_rows() || y[..m_ub].iter().any(|&v| v < -tol) {
        return false;
    }
    let n = lp.num_vars();
    let mut g = vec![0.0; n];
    let mut rhs = 0.0;
    for (i, (row, b)) in lp
        .a_ub
        .iter()
        .zip(&lp.b_ub)
        .chain(lp.a_eq.iter().zip(&lp.b_eq))
        .enumerate()
    {
        let yi = if i < m_ub { y[i].max(0.0) } else { y[i] };
        rhs += yi * b;
        for (gj, a) in g.iter_mut().zip(row) {
            *gj += yi * a;
        }
    }
    let scale = 1.0 + crate::linalg::norm_inf(y);
    let mut min_lhs = 0.0;
    for j in 0..n {
        let gj = g[j];
        if gj.abs() <= tol * scale {
            continue;
        }
        let bound = if gj > 0.0 { lp.lower[j] } else { lp.upper[j] };
        if !bound.is_finite() {
            return false;
        }
        min_lhs += gj * bound;
    }
    min_lhs > rhs + tol * scale
}

/// Dual objective `yᵀb + Σ_j (bound term of the reduced cost)`, or `None` when
/// the reduced costs are not sign-feasible for the variable bounds.
pub fn dual_objective(lp: &LinearProgram, sol: &LpSolution, tol: f64) -> Option<f64> {
    let maximize = lp.sense == Sense::Maximize;
    let mut val: f64 = sol
        .duals
        .iter()
        .zip(lp.b_ub.iter().chain(&lp.b_eq))
        .map(|(y, b)| y * b)
        .sum();
    for (j, &d) in sol.reduced_costs.iter().enumerate() {
        // In a minimization a positive reduced cost pairs with the lower bound.
        let d_min = if maximize { -d } else { d };
        if d_min.abs() <= tol {
            continue;
        }
        let bound = if d_min > 0.0 { lp.lower[j] } else { lp.upper[j] };
        if !bound.is_finite() {
            return None;
        }
        val += d * bound;
    }
    Some(val)
}
