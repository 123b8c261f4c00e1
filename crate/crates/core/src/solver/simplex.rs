//! Dense bounded-variable revised simplex.
//!
//! Internal form: `min cᵀx  s.t.  [A_ub; A_eq] x + [I; 0] s + D a = b`,
//! with slacks `s ≥ 0` on inequality rows and artificials `a` only on rows
//! whose starting residual cannot be absorbed by a slack.

use super::{LinearProgram, LpSolution, LpStatus, Sense, SolverConfig, SolverError};

const DUAL_TOL: f64 = 1e-9;
const RATIO_PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_STREAK_FOR_BLAND: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
    FreeZero,
}

enum PhaseOutcome {
    Optimal,
    Unbounded { entering: usize, dir: f64, alpha: Vec<f64> },
}

enum Step {
    Flip(f64),
    Pivot { row: usize, t: f64, to_upper: bool },
    Unbounded,
}

struct Simplex<'a> {
    m: usize,
    n_struct: usize,
    art_start: usize,
    cols: Vec<Vec<f64>>,
    b: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    binv: Vec<f64>,
    cfg: &'a SolverConfig,
    since_refactor: usize,
    iterations: usize,
    max_iterations: usize,
    bland: bool,
    degenerate_streak: usize,
}

impl<'a> Simplex<'a> {
    fn new(lp: &LinearProgram, cfg: &'a SolverConfig) -> Self {
        let n = lp.num_vars();
        let m_ub = lp.a_ub.len();
        let m = lp.num_rows();
        let rows: Vec<&Vec<f64>> = lp.a_ub.iter().chain(&lp.a_eq).collect();
        let b: Vec<f64> = lp.b_ub.iter().chain(&lp.b_eq).copied().collect();

        let mut cols: Vec<Vec<f64>> = (0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        let mut lo = lp.lower.clone();
        let mut hi = lp.upper.clone();
        let mut state = Vec::with_capacity(n + 2 * m);
        let mut x = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            let (st, v) = if lo[j].is_finite() {
                (VarState::Lower, lo[j])
            } else if hi[j].is_finite() {
                (VarState::Upper, hi[j])
            } else {
                (VarState::FreeZero, 0.0)
            };
            state.push(st);
            x.push(v);
        }
        for i in 0..m_ub {
            let mut c = vec![0.0; m];
            c[i] = 1.0;
            cols.push(c);
            lo.push(0.0);
            hi.push(f64::INFINITY);
            state.push(VarState::Lower);
            x.push(0.0);
        }
        let art_start = cols.len();

        let mut residual = b.clone();
        for j in 0..n {
            if x[j] != 0.0 {
                for (r, a) in residual.iter_mut().zip(&cols[j]) {
                    *r -= a * x[j];
                }
            }
        }

        let mut basis = vec![0; m];
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            if i < m_ub && residual[i] >= 0.0 {
                let s = n + i;
                basis[i] = s;
                state[s] = VarState::Basic;
                x[s] = residual[i];
                binv[i * m + i] = 1.0;
            } else {
                let sign = if residual[i] >= 0.0 { 1.0 } else { -1.0 };
                let mut c = vec![0.0; m];
                c[i] = sign;
                cols.push(c);
                lo.push(0.0);
                hi.push(f64::INFINITY);
                state.push(VarState::Basic);
                x.push(residual[i].abs());
                basis[i] = cols.len() - 1;
                binv[i * m + i] = sign;
            }
        }
        let total = cols.len();
        Self {
            m,
            n_struct: n,
            art_start,
            cols,
            b,
            lo,
            hi,
            basis,
            state,
            x,
            binv,
            cfg,
            since_refactor: 0,
            iterations: 0,
            max_iterations: 50 * (m + total) + 1000,
            bland: false,
            degenerate_streak: 0,
        }
    }

    fn num_cols(&self) -> usize {
        self.cols.len()
    }

    fn has_artificials(&self) -> bool {
        self.art_start < self.num_cols()
    }

    fn prices(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = cost[bv];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (p, v) in pi.iter_mut().zip(row) {
                    *p += cb * v;
                }
            }
        }
        pi
    }

    fn reduced_cost(&self, cost: &[f64], pi: &[f64], j: usize) -> f64 {
        cost[j] - crate::linalg::dot(pi, &self.cols[j])
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let col = &self.cols[j];
        (0..m)
            .map(|i| crate::linalg::dot(&self.binv[i * m..(i + 1) * m], col))
            .collect()
    }

    fn refactor(&mut self) -> Result<(), SolverError> {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        // Gauss-Jordan on [B | I] with partial pivoting.
        let mut a = vec![0.0; m * m];
        for (k, &bv) in self.basis.iter().enumerate() {
            for i in 0..m {
                a[i * m + k] = self.cols[bv][i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let mut p = c;
            let mut best = a[c * m + c].abs();
            for r in c + 1..m {
                let v = a[r * m + c].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best < self.cfg.pivot_floor {
                return Err(SolverError::NumericalBreakdown(format!(
                    "basis matrix is singular (pivot {best:.3e} in column {c})"
                )));
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        a[r * m + k] -= f * a[c * m + k];
                        inv[r * m + k] -= f * inv[c * m + k];
                    }
                }
            }
        }
        self.binv = inv;

        let mut rhs = self.b.clone();
        for j in 0..self.num_cols() {
            if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                for (r, a) in rhs.iter_mut().zip(&self.cols[j]) {
                    *r -= a * self.x[j];
                }
            }
        }
        for i in 0..m {
            let v = crate::linalg::dot(&self.binv[i * m..(i + 1) * m], &rhs);
            self.x[self.basis[i]] = v;
        }
        Ok(())
    }

    fn choose_entering(&self, cost: &[f64], pi: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.num_cols() {
            let st = self.state[j];
            if st == VarState::Basic || self.lo[j] == self.hi[j] {
                continue;
            }
            let d = self.reduced_cost(cost, pi, j);
            let dir = match st {
                VarState::Lower if d < -DUAL_TOL => 1.0,
                VarState::Upper if d > DUAL_TOL => -1.0,
                VarState::FreeZero if d.abs() > DUAL_TOL => -d.signum(),
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, bd)| d.abs() > bd) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ratio_test(&self, j: usize, dir: f64, alpha: &[f64]) -> Step {
        let ftol = self.cfg.feas_tol;
        // Basic i moves at rate delta_i = -dir * alpha_i per unit step.
        let limit = |i: usize, relax: f64| -> Option<(f64, bool)> {
            let delta = -dir * alpha[i];
            let bv = self.basis[i];
            if delta < -RATIO_PIVOT_TOL && self.lo[bv].is_finite() {
                Some(((self.x[bv] - self.lo[bv] + relax) / -delta, false))
            } else if delta > RATIO_PIVOT_TOL && self.hi[bv].is_finite() {
                Some(((self.hi[bv] - self.x[bv] + relax) / delta, true))
            } else {
                None
            }
        };

        let mut leave: Option<(usize, f64, bool)> = None;
        if self.bland {
            for i in 0..self.m {
                if let Some((t, up)) = limit(i, 0.0) {
                    let t = t.max(0.0);
                    let better = match leave {
                        None => true,
                        Some((r, tr, _)) => {
                            t < tr - 1e-12 || (t <= tr + 1e-12 && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, t, up));
                    }
                }
            }
        } else {
            // Harris two-pass: bound the step with relaxed bounds, then pick the
            // largest pivot among rows that block within that bound.
            let mut t_max = f64::INFINITY;
            for i in 0..self.m {
                if let Some((t, _)) = limit(i, ftol) {
                    t_max = t_max.min(t);
                }
            }
            if t_max.is_finite() {
                let mut best_piv = 0.0;
                for i in 0..self.m {
                    if let Some((t, up)) = limit(i, 0.0) {
                        if t <= t_max {
                            let piv = alpha[i].abs();
                            if piv > best_piv {
                                best_piv = piv;
                                leave = Some((i, t.max(0.0), up));
                            }
                        }
                    }
                }
            }
        }

        let range = self.hi[j] - self.lo[j];
        match leave {
            Some((_, t, _)) if range.is_finite() && range <= t => Step::Flip(range),
            Some((row, t, to_upper)) => Step::Pivot { row, t, to_upper },
            None if range.is_finite() => Step::Flip(range),
            None => Step::Unbounded,
        }
    }

    fn pivot(&mut self, row: usize, alpha: &[f64]) {
        let m = self.m;
        let p = alpha[row];
        for k in 0..m {
            self.binv[row * m + k] /= p;
        }
        for i in 0..m {
            if i != row && alpha[i] != 0.0 {
                let f = alpha[i];
                for k in 0..m {
                    self.binv[i * m + k] -= f * self.binv[row * m + k];
                }
            }
        }
        self.since_refactor += 1;
    }

    fn run(&mut self, cost: &[f64]) -> Result<PhaseOutcome, SolverError> {
        self.bland = false;
        self.degenerate_streak = 0;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(SolverError::IterationLimit(self.max_iterations));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let pi = self.prices(cost);
            let Some((j, dir)) = self.choose_entering(cost, &pi) else {
                return Ok(PhaseOutcome::Optimal);
            };
            let alpha = self.ftran(j);
            self.iterations += 1;
            let step = self.ratio_test(j, dir, &alpha);
            let t = match step {
                Step::Unbounded => {
                    return Ok(PhaseOutcome::Unbounded { entering: j, dir, alpha });
                }
                Step::Flip(t) | Step::Pivot { t, .. } => t,
            };
            if t > 0.0 {
                self.x[j] += dir * t;
                for i in 0..self.m {
                    self.x[self.basis[i]] -= dir * alpha[i] * t;
                }
            }
            match step {
                Step::Flip(_) => {
                    let (st, v) = if dir > 0.0 {
                        (VarState::Upper, self.hi[j])
                    } else {
                        (VarState::Lower, self.lo[j])
                    };
                    self.state[j] = st;
                    self.x[j] = v;
                }
                Step::Pivot { row, to_upper, .. } => {
                    if alpha[row].abs() < self.cfg.pivot_floor {
                        return Err(SolverError::NumericalBreakdown(format!(
                            "pivot magnitude {:.3e} below floor",
                            alpha[row].abs()
                        )));
                    }
                    let leaving = self.basis[row];
                    if to_upper {
                        self.state[leaving] = VarState::Upper;
                        self.x[leaving] = self.hi[leaving];
                    } else {
                        self.state[leaving] = VarState::Lower;
                        self.x[leaving] = self.lo[leaving];
                    }
                    self.basis[row] = j;
                    self.state[j] = VarState::Basic;
                    self.pivot(row, &alpha);
                }
                Step::Unbounded => unreachable!(),
            }
            if t <= 1e-12 {
                self.degenerate_streak += 1;
                if self.degenerate_streak > DEGENERATE_STREAK_FOR_BLAND {
                    self.bland = true;
                }
            } else {
                self.degenerate_streak = 0;
            }
        }
    }

    fn structural_x(&self) -> Vec<f64> {
        (0..self.n_struct)
            .map(|j| {
                let v = self.x[j];
                if v < self.lo[j] {
                    self.lo[j]
                } else if v > self.hi[j] {
                    self.hi[j]
                } else {
                    v
                }
            })
            .collect()
    }
}

pub(super) fn solve(lp: &LinearProgram, cfg: &SolverConfig) -> Result<LpSolution, SolverError> {
    let n = lp.num_vars();
    let m = lp.num_rows();
    let mut sx = Simplex::new(lp, cfg);

    if sx.has_artificials() {
        let mut cost1 = vec![0.0; sx.num_cols()];
        for c in cost1.iter_mut().skip(sx.art_start) {
            *c = 1.0;
        }
        match sx.run(&cost1)? {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded { .. } => {
                return Err(SolverError::NumericalBreakdown("phase one reported unbounded".into()));
            }
        }
        sx.refactor()?;
        let infeasibility: f64 = (sx.art_start..sx.num_cols()).map(|j| sx.x[j].max(0.0)).sum();
        if infeasibility > cfg.feas_tol {
            let pi = sx.prices(&cost1);
            let m_ub = lp.a_ub.len();
            let farkas: Vec<f64> = pi
                .iter()
                .enumerate()
                .map(|(i, p)| if i < m_ub { (-p).max(0.0) } else { -p })
                .collect();
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                x: sx.structural_x(),
                duals: vec![0.0; m],
                reduced_costs: vec![0.0; n],
                farkas: Some(farkas),
                ray: None,
            });
        }
        for j in sx.art_start..sx.num_cols() {
            sx.hi[j] = 0.0;
            if sx.state[j] != VarState::Basic {
                sx.state[j] = VarState::Lower;
                sx.x[j] = 0.0;
            }
        }
    }

    let flip = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut cost2 = vec![0.0; sx.num_cols()];
    for (c, o) in cost2.iter_mut().zip(&lp.objective) {
        *c = flip * o;
    }
    match sx.run(&cost2)? {
        PhaseOutcome::Unbounded { entering, dir, alpha } => {
            let mut ray = vec![0.0; n];
            if entering < n {
                ray[entering] = dir;
            }
            for (i, &bv) in sx.basis.iter().enumerate() {
                if bv < n {
                    ray[bv] = -dir * alpha[i];
                }
            }
            Ok(LpSolution {
                status: LpStatus::Unbounded,
                objective: flip * f64::NEG_INFINITY,
                x: sx.structural_x(),
                duals: vec![0.0; m],
                reduced_costs: vec![0.0; n],
                farkas: None,
                ray: Some(ray),
            })
        }
        PhaseOutcome::Optimal => {
            sx.refactor()?;
            let x = sx.structural_x();
            let scale = 1.0 + crate::linalg::norm_inf(&sx.b);
            let viol = lp.max_violation(&x);
            if viol > 1e-6 * scale {
                return Err(SolverError::NumericalBreakdown(format!(
                    "final primal violation {viol:.3e}"
                )));
            }
            let pi = sx.prices(&cost2);
            let reduced_costs = (0..n).map(|j| flip * sx.reduced_cost(&cost2, &pi, j)).collect();
            Ok(LpSolution {
                status: LpStatus::Optimal,
                objective: lp.objective_value(&x),
                x,
                duals: pi.iter().map(|p| flip * p).collect(),
                reduced_costs,
                farkas: None,
                ray: None,
            })
        }
    }
}
