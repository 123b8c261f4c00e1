use serde::{Deserialize, Serialize};

use super::{Hyperplane, Origin, DEGENERATE_NORMAL, FEAS_TOL};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::grid::OperationalPolytope;
use crate::linalg::{dot, norm_inf};
use crate::solver::{solve_lp, LinearProgram, LpStatus, Sense, SolverConfig};

/// Which dual cone a boundary's `u` must lie in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeMode {
    /// `Bᵀu ≤ 0`: what LP duality of the feasibility check produces.
    #[default]
    Relaxed,
    /// `Bᵀu = 0`.
    Equality,
}

/// Outcome of the minimum-violation LP at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityResult {
    pub dw: Vec<f64>,
    /// Total constraint violation (MW).
    pub s: f64,
    pub lambda: Vec<f64>,
    pub y: Vec<f64>,
    /// Row duals, in `[−1, 0]`.
    pub u: Vec<f64>,
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        self.s <= FEAS_TOL
    }
}

/// `min Σλ  s.t.  B·y − λ ≤ b − A·x − C·Δw,  y, λ ≥ 0`.
pub fn feasibility_check(poly: &OperationalPolytope, dw: &[f64]) -> Result<FeasibilityResult> {
    feasibility_check_with(poly, dw, &SolverConfig::default())
}

pub fn feasibility_check_with(
    poly: &OperationalPolytope,
    dw: &[f64],
    cfg: &SolverConfig,
) -> Result<FeasibilityResult> {
    if dw.len() != poly.dim() {
        return Err(Error::DimensionMismatch(format!(
            "point of dimension {} for {} renewable units",
            dw.len(),
            poly.dim()
        )));
    }
    let (rows, ny) = (poly.num_rows(), poly.num_recourse());
    let mut objective = vec![0.0; ny];
    objective.extend(std::iter::repeat_n(1.0, rows));
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    let rhs: Vec<f64> = poly.point_term(dw).iter().map(|g| -g).collect();
    for (i, row) in poly.recourse.rows().enumerate() {
        let mut r = row.to_vec();
        r.extend((0..rows).map(|k| if k == i { -1.0 } else { 0.0 }));
        lp.add_le(r, rhs[i]);
    }
    let sol = solve_lp(&lp, cfg)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!("feasibility LP reported {:?}", sol.status)));
    }
    let y = sol.x[..ny].to_vec();
    let lambda = sol.x[ny..].to_vec();
    let u: Vec<f64> = sol.duals[..rows].iter().map(|v| v.clamp(-1.0, 0.0)).collect();
    let s = lambda.iter().sum::<f64>().max(0.0);
    Ok(FeasibilityResult { dw: dw.to_vec(), s, lambda, y, u })
}

/// Runs the oracle over many points, concurrently when `mode` allows.
pub fn check_points(
    poly: &OperationalPolytope,
    points: &[Vec<f64>],
    mode: ExecMode,
    cfg: &SolverConfig,
) -> Result<Vec<FeasibilityResult>> {
    exec::try_map(mode, points, |p| feasibility_check_with(poly, p, cfg))
}

/// Checks `−1 ≤ u ≤ 0` and the cone condition on `Bᵀu`.
pub fn check_dual_cone(u: &[f64], poly: &OperationalPolytope, mode: ConeMode, tol: f64) -> Result<()> {
    if u.len() != poly.num_rows() {
        return Err(Error::DimensionMismatch(format!(
            "dual of length {} for {} rows",
            u.len(),
            poly.num_rows()
        )));
    }
    if let Some((i, v)) = u.iter().enumerate().find(|(_, v)| **v > tol || **v < -1.0 - tol) {
        return Err(Error::InvalidDual(format!("u[{i}] = {v} outside [-1, 0]")));
    }
    for (j, v) in poly.recourse.tr_mul_vec(u).iter().enumerate() {
        let bad = match mode {
            ConeMode::Relaxed => *v > tol,
            ConeMode::Equality => v.abs() > tol,
        };
        if bad {
            return Err(Error::InvalidDual(format!("(Bᵀu)[{j}] = {v}")));
        }
    }
    Ok(())
}

/// `(Cᵀu)·Δw ≥ uᵀ(b − A·x)`.
pub fn boundary_from_dual(u: &[f64], poly: &OperationalPolytope, origin: Origin) -> Result<Hyperplane> {
    if u.len() != poly.num_rows() {
        return Err(Error::DimensionMismatch(format!(
            "dual of length {} for {} rows",
            u.len(),
            poly.num_rows()
        )));
    }
    let a = poly.uncertainty.tr_mul_vec(u);
    let scale = norm_inf(&a);
    if scale <= DEGENERATE_NORMAL {
        return Err(Error::DegenerateNormal(scale));
    }
    let c = dot(u, &poly.offset);
    Ok(Hyperplane { a, c, u: u.to_vec(), excluded_count: 0, origin })
}

/// The cut certified by an infeasible check; `None` for feasible points.
pub fn separating_dual(fr: &FeasibilityResult, poly: &OperationalPolytope) -> Result<Option<Hyperplane>> {
    if fr.is_feasible() {
        return Ok(None);
    }
    check_dual_cone(&fr.u, poly, ConeMode::Relaxed, 1e-8)?;
    let h = boundary_from_dual(&fr.u, poly, Origin::Traditional)?;
    if h.value(&fr.dw) >= 0.0 {
        return Err(Error::Internal(format!(
            "dual of an infeasible point (s = {}) does not separate it",
            fr.s
        )));
    }
    Ok(Some(h))
}
