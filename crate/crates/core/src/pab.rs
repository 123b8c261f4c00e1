//! Progressive construction of potentially active boundaries.
//!
//! Each iteration solves a MILP for the dual vector `u` whose halfspace
//! strictly separates the largest number of still-active observed points,
//! adds that halfspace to the region, and deactivates the points it cuts.
//! Construction stops once no active point can be separated.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::grid::OperationalPolytope;
use crate::linalg::{dot, norm_1, norm_inf};
use crate::odp::OdpSet;
use crate::region::{
    boundary_from_dual, check_dual_cone, check_points, ConeMode, Hyperplane, InitBox, Origin, Region,
    STRICT_TOL,
};
use crate::solver::{
    solve_lp, solve_milp_with, LinearProgram, LpStatus, MilpStatus, MixedIntegerProgram, Sense, SolverConfig,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BigM {
    /// `1.05 · max_k ‖CΔw_k − b + A·x‖₁` over the points in the MILP.
    #[default]
    Auto,
    Value(f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PabConfig {
    pub big_m: BigM,
    /// Required margin `v_k ≤ −ε_sep` for a point to count as separated.
    pub eps_sep: f64,
    pub max_iter: Option<usize>,
    /// Wall-clock budget in seconds for the whole construction.
    pub time_limit: Option<f64>,
    pub cone: ConeMode,
    pub solver: SolverConfig,
    /// Leave oracle-feasible points out of the MILP. No valid cut can
    /// separate them, so this only shrinks the problem.
    pub screen_feasible: bool,
    /// Re-optimize the chosen cut to be as deep as possible over the points
    /// it separates, keeping the MILP's selection.
    pub polish: bool,
    /// Execution mode for the up-front oracle screening.
    pub exec: ExecMode,
}

impl Default for PabConfig {
    fn default() -> Self {
        Self {
            big_m: BigM::Auto,
            eps_sep: 1e-4,
            max_iter: None,
            time_limit: None,
            cone: ConeMode::Relaxed,
            solver: SolverConfig::default(),
            screen_feasible: true,
            polish: true,
            exec: ExecMode::default(),
        }
    }
}

impl PabConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_sep > 0.0 && self.eps_sep.is_finite()) {
            return Err(Error::InvalidConfig("eps-sep must be > 0".into()));
        }
        if let BigM::Value(m) = self.big_m {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidConfig("big-M must be > 0".into()));
            }
        }
        if self.max_iter == Some(0) {
            return Err(Error::InvalidConfig("max-iter must be at least 1".into()));
        }
        if self.time_limit.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::InvalidConfig("time limit must be > 0".into()));
        }
        self.solver.validate()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    Budget,
    IterationCap,
    /// A new cut repeated an existing boundary.
    DuplicateBoundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Points newly excluded by this iteration's cut.
    pub nu: usize,
    pub wall_time_s: f64,
    pub active_before: usize,
    pub active_after: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionTrace {
    pub iterations: Vec<IterationRecord>,
    pub termination: Termination,
}

impl ConstructionTrace {
    pub fn nu_sequence(&self) -> Vec<usize> {
        self.iterations.iter().map(|r| r.nu).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialization cannot fail")
    }
}

/// `g_k = C·Δw_k − b + A·x`, so that `v_k = g_kᵀu`.
fn point_terms(poly: &OperationalPolytope, points: &[&[f64]]) -> Vec<Vec<f64>> {
    points.iter().map(|p| poly.point_term(p)).collect()
}

fn resolve_big_m(cfg: &PabConfig, g: &[Vec<f64>]) -> Result<f64> {
    let required = g.iter().map(|gk| norm_1(gk)).fold(0.0, f64::max);
    match cfg.big_m {
        BigM::Auto => Ok((1.05 * required).max(2.0 * cfg.eps_sep).max(1e-9)),
        BigM::Value(m) if m < required => Err(Error::BigMTooSmall { m, required }),
        BigM::Value(m) => Ok(m),
    }
}

/// Variables `u` (one per polytope row, in `[−1, 0]`) followed by one binary
/// per entry of `g`; `free[k] = false` fixes `z_k = 0` and omits its rows.
fn assemble_milp(
    poly: &OperationalPolytope,
    g: &[Vec<f64>],
    free: &[bool],
    m: f64,
    eps: f64,
    cone: ConeMode,
) -> MixedIntegerProgram {
    let r = poly.num_rows();
    let k_total = g.len();
    let mut objective = vec![0.0; r];
    objective.extend(std::iter::repeat_n(1.0, k_total));
    let mut lp = LinearProgram::new(Sense::Maximize, objective);
    let n = r + k_total;
    for i in 0..r {
        lp.set_bounds(i, -1.0, 0.0);
    }
    for (k, gk) in g.iter().enumerate() {
        lp.set_bounds(r + k, 0.0, if free[k] { 1.0 } else { 0.0 });
        if !free[k] {
            continue;
        }
        let mut row = vec![0.0; n];
        row[..r].copy_from_slice(gk);
        row[r + k] = m;
        lp.add_le(row.clone(), m - eps);
        lp.add_ge(row, 0.0);
    }
    for j in 0..poly.num_recourse() {
        let mut row = vec![0.0; n];
        for i in 0..r {
            row[i] = poly.recourse.get(i, j);
        }
        match cone {
            ConeMode::Relaxed => lp.add_le(row, 0.0),
            ConeMode::Equality => lp.add_eq(row, 0.0),
        };
    }
    MixedIntegerProgram { base: lp, integers: (r..n).collect() }
}

/// The boundary-search MILP over all of `odps`, with `z_k` fixed to zero
/// for inactive points.
///
/// `eps_sep = 0` is accepted here (the construction rejects it) so the
/// degenerate `u = 0` optimum of the unguarded model can be inspected.
pub fn build_boundary_search_milp(
    poly: &OperationalPolytope,
    odps: &OdpSet,
    active: &[bool],
    cfg: &PabConfig,
) -> Result<MixedIntegerProgram> {
    if odps.dimension() != poly.dim() {
        return Err(Error::DimensionMismatch(format!(
            "ODPs of dimension {} for {} renewable units",
            odps.dimension(),
            poly.dim()
        )));
    }
    if active.len() != odps.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} activity flags for {} ODPs",
            active.len(),
            odps.len()
        )));
    }
    if !(cfg.eps_sep >= 0.0) {
        return Err(Error::InvalidConfig("eps-sep must be ≥ 0".into()));
    }
    let pts: Vec<&[f64]> = odps.points().iter().map(|p| p.as_slice()).collect();
    let g = point_terms(poly, &pts);
    let active_g: Vec<Vec<f64>> = g.iter().zip(active).filter(|(_, a)| **a).map(|(x, _)| x.clone()).collect();
    let m = resolve_big_m(cfg, &active_g)?;
    Ok(assemble_milp(poly, &g, active, m, cfg.eps_sep, cfg.cone))
}

/// Rounding heuristic: scale the relaxation's `u` to `‖u‖∞ = 1` and select
/// exactly the points it then separates by at least `eps`.
fn round_candidate(x: &[f64], g: &[Vec<f64>], free: &[bool], r: usize, eps: f64) -> Option<Vec<f64>> {
    let u = &x[..r];
    let scale = norm_inf(u);
    if scale <= 1e-12 {
        return None;
    }
    let u: Vec<f64> = u.iter().map(|v| v / scale).collect();
    let mut cand = u.clone();
    let mut any = false;
    for (k, gk) in g.iter().enumerate() {
        let v = dot(gk, &u);
        let z = if free[k] && v < 0.0 {
            if v > -eps {
                return None;
            }
            any = true;
            1.0
        } else {
            0.0
        };
        cand.push(z);
    }
    any.then_some(cand)
}

/// Deepest cut over the selected points, keeping the others unseparated.
fn polish_cut(
    poly: &OperationalPolytope,
    g: &[Vec<f64>],
    selected: &[bool],
    free: &[bool],
    eps: f64,
    cone: ConeMode,
    solver: &SolverConfig,
) -> Result<Option<Vec<f64>>> {
    let r = poly.num_rows();
    let mut objective = vec![0.0; r];
    for (gk, _) in g.iter().zip(selected).filter(|(_, s)| **s) {
        for i in 0..r {
            objective[i] -= gk[i];
        }
    }
    let mut lp = LinearProgram::new(Sense::Maximize, objective);
    for i in 0..r {
        lp.set_bounds(i, -1.0, 0.0);
    }
    for (k, gk) in g.iter().enumerate() {
        if selected[k] {
            lp.add_le(gk.clone(), -eps);
        } else if free[k] {
            lp.add_ge(gk.clone(), 0.0);
        }
    }
    for j in 0..poly.num_recourse() {
        let row: Vec<f64> = (0..r).map(|i| poly.recourse.get(i, j)).collect();
        match cone {
            ConeMode::Relaxed => lp.add_le(row, 0.0),
            ConeMode::Equality => lp.add_eq(row, 0.0),
        };
    }
    let sol = solve_lp(&lp, solver)?;
    Ok((sol.status == LpStatus::Optimal).then_some(sol.x))
}

/// One construction run over a fixed set of points. Also drives each
/// partition worker in the parallel mode.
pub struct PabWorker<'a> {
    poly: &'a OperationalPolytope,
    points: Vec<Vec<f64>>,
    /// `g_k` per point.
    g: Vec<Vec<f64>>,
    /// Whether the point may carry a binary (not screened out as feasible).
    candidate: Vec<bool>,
    active: Vec<bool>,
    cfg: PabConfig,
    /// Partition number for shared-pool tagging; `None` outside parallel runs.
    partition: Option<usize>,
    known: Vec<Hyperplane>,
    cuts: Vec<Hyperplane>,
    iterations: Vec<IterationRecord>,
    termination: Option<Termination>,
    start: Instant,
    largest_milp: usize,
}

impl<'a> PabWorker<'a> {
    /// `feasible` is the oracle verdict per point when already known;
    /// otherwise it is computed here if screening is enabled.
    pub fn new(
        poly: &'a OperationalPolytope,
        odps: &OdpSet,
        init: &InitBox,
        cfg: &PabConfig,
        feasible: Option<Vec<bool>>,
    ) -> Result<Self> {
        cfg.validate()?;
        init.validate()?;
        if odps.dimension() != poly.dim() || init.dimension() != poly.dim() {
            return Err(Error::DimensionMismatch(format!(
                "ODPs of dimension {} and box of dimension {} for {} renewable units",
                odps.dimension(),
                init.dimension(),
                poly.dim()
            )));
        }
        let points = odps.points().to_vec();
        let candidate = match (cfg.screen_feasible, feasible) {
            (false, _) => vec![true; points.len()],
            (true, Some(f)) if f.len() == points.len() => f.iter().map(|x| !x).collect(),
            (true, Some(_)) => {
                return Err(Error::DimensionMismatch("feasibility flags do not match the ODPs".into()))
            }
            (true, None) => check_points(poly, &points, cfg.exec, &cfg.solver)?
                .iter()
                .map(|r| !r.is_feasible())
                .collect(),
        };
        let refs: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
        let g = point_terms(poly, &refs);
        let active = points.iter().map(|p| init.contains(p)).collect();
        Ok(Self {
            poly,
            points,
            g,
            candidate,
            active,
            cfg: cfg.clone(),
            partition: None,
            known: init.hyperplanes(),
            cuts: Vec::new(),
            iterations: Vec::new(),
            termination: None,
            start: Instant::now(),
            largest_milp: 0,
        })
    }

    /// Tags this worker's cuts as coming from partition `m`.
    pub fn in_partition(mut self, m: usize) -> Self {
        self.partition = Some(m);
        self
    }

    fn origin(&self, iteration: usize) -> Origin {
        match self.partition {
            Some(m) => Origin::SharedFromPartition(m),
            None => Origin::PabIteration(iteration),
        }
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn is_finished(&self) -> bool {
        self.termination.is_some()
    }

    pub fn cuts(&self) -> &[Hyperplane] {
        &self.cuts
    }

    /// Most binaries any single MILP of this run carried.
    pub fn largest_milp(&self) -> usize {
        self.largest_milp
    }

    /// Deactivates points strictly outside `h`; returns how many.
    pub fn apply_cut(&mut self, h: &Hyperplane) -> usize {
        let mut n = 0;
        for (p, a) in self.points.iter().zip(self.active.iter_mut()) {
            if *a && h.value(p) < -STRICT_TOL {
                *a = false;
                n += 1;
            }
        }
        n
    }

    /// Makes an outside boundary known (for deactivation and duplicate checks).
    pub fn absorb(&mut self, h: &Hyperplane) {
        self.apply_cut(h);
        if !self.known.iter().any(|k| k.same_halfspace(h)) {
            self.known.push(h.clone());
        }
    }

    fn finish(&mut self, t: Termination) {
        self.termination = Some(t);
    }

    /// Runs one iteration. Returns the new cut, or `None` once finished.
    pub fn step(&mut self) -> Result<Option<Hyperplane>> {
        if self.termination.is_some() {
            return Ok(None);
        }
        let iteration = self.iterations.len() + 1;
        if self.cfg.max_iter.is_some_and(|m| iteration > m) {
            self.finish(Termination::IterationCap);
            return Ok(None);
        }
        let elapsed = self.start.elapsed().as_secs_f64();
        let remaining = self.cfg.time_limit.map(|t| t - elapsed);
        if remaining.is_some_and(|t| t <= 0.0) {
            self.finish(Termination::Budget);
            return Ok(None);
        }
        let t0 = Instant::now();
        let active_before = self.active_count();
        let idx: Vec<usize> = (0..self.points.len()).filter(|&k| self.active[k] && self.candidate[k]).collect();
        self.largest_milp = self.largest_milp.max(idx.len());

        let record = |this: &mut Self, nu: usize| {
            this.iterations.push(IterationRecord {
                iteration,
                nu,
                wall_time_s: t0.elapsed().as_secs_f64(),
                active_before,
                active_after: this.active_count(),
            });
        };
        if idx.is_empty() {
            record(self, 0);
            self.finish(Termination::Converged);
            return Ok(None);
        }

        let g: Vec<Vec<f64>> = idx.iter().map(|&k| self.g[k].clone()).collect();
        let free = vec![true; g.len()];
        let m = resolve_big_m(&self.cfg, &g)?;
        let eps = self.cfg.eps_sep;
        let mip = assemble_milp(self.poly, &g, &free, m, eps, self.cfg.cone);
        let r = self.poly.num_rows();
        let mut solver = self.cfg.solver.clone();
        if let Some(t) = remaining {
            solver.time_budget = Some(solver.time_budget.map_or(t, |b| b.min(t)));
        }
        let heuristic = |x: &[f64]| round_candidate(x, &g, &free, r, eps);
        let sol = solve_milp_with(&mip, &solver, Some(&heuristic))?;
        match sol.status {
            MilpStatus::Optimal => {}
            MilpStatus::BudgetExhausted => {
                self.finish(Termination::Budget);
                return Ok(None);
            }
            MilpStatus::Infeasible => {
                return Err(Error::Internal("boundary-search MILP reported infeasible".into()))
            }
        }
        let x = sol.incumbent.expect("optimal MILP has an incumbent");
        let nu = sol.objective.unwrap_or(0.0).round() as usize;
        if nu == 0 {
            record(self, 0);
            self.finish(Termination::Converged);
            return Ok(None);
        }

        let selected: Vec<bool> = (0..g.len()).map(|k| x[r + k] > 0.5).collect();
        let mut u = x[..r].to_vec();
        if self.cfg.polish {
            if let Some(p) = polish_cut(self.poly, &g, &selected, &free, eps, self.cfg.cone, &self.cfg.solver)? {
                u = p;
            }
        }
        for v in u.iter_mut() {
            *v = v.clamp(-1.0, 0.0);
        }
        check_dual_cone(&u, self.poly, self.cfg.cone, 1e-8)?;
        let mut cut = boundary_from_dual(&u, self.poly, self.origin(iteration))?;
        if self.known.iter().any(|k| k.same_halfspace(&cut)) {
            record(self, 0);
            self.finish(Termination::DuplicateBoundary);
            return Ok(None);
        }
        let excluded = self.apply_cut(&cut);
        cut.excluded_count = excluded;
        record(self, excluded);
        self.known.push(cut.clone());
        self.cuts.push(cut.clone());
        Ok(Some(cut))
    }

    pub fn trace(&self) -> ConstructionTrace {
        ConstructionTrace {
            iterations: self.iterations.clone(),
            termination: self.termination.unwrap_or(Termination::Budget),
        }
    }
}

/// Runs the progressive construction to convergence or budget exhaustion.
pub fn construct_pab_dr(
    poly: &OperationalPolytope,
    odps: &OdpSet,
    init: &InitBox,
    cfg: &PabConfig,
) -> Result<(Region, ConstructionTrace)> {
    let mut worker = PabWorker::new(poly, odps, init, cfg, None)?;
    while worker.step()?.is_some() {}
    let trace = worker.trace();
    let mut region = Region::from_box(init);
    for c in worker.cuts() {
        region.push(c.clone())?;
    }
    region.converged = trace.termination == Termination::Converged;
    Ok((region, trace))
}
