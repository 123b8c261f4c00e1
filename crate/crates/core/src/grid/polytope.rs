use serde::{Deserialize, Serialize};

use super::{compute_shift_factors, BasePoint, GridError, PowerSystem};
use crate::linalg::{dot, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecourseColumn {
    pub unit: u32,
    pub direction: Direction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "kebab-case")]
pub enum RowKind {
    BalanceLe,
    BalanceGe,
    LineForward(u32),
    LineReverse(u32),
    ReserveUp(u32),
    ReserveDown(u32),
}

/// `B·y + C·Δw ≤ b − A·x` with recourse `y = (p⁺, p⁻) ≥ 0`.
///
/// The corrective output `p + p⁺ − p⁻` is substituted out, so every row is
/// expressed in the regulation variables alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperationalPolytope {
    /// `B`, rows × 2·units; all `p⁺` columns, then all `p⁻` columns.
    pub recourse: Matrix,
    /// `C`, rows × renewable units.
    pub uncertainty: Matrix,
    /// Constant part of the right-hand side before the forecast is applied.
    pub b0: Vec<f64>,
    /// `b = b⁰ − C·wᵉ`.
    pub b: Vec<f64>,
    /// `A·x` for the base point.
    pub base_term: Vec<f64>,
    /// `b − A·x`.
    pub offset: Vec<f64>,
    pub forecast: Vec<f64>,
    pub columns: Vec<RecourseColumn>,
    pub rows: Vec<RowKind>,
}

impl OperationalPolytope {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_recourse(&self) -> usize {
        self.columns.len()
    }

    /// Renewable (uncertainty) dimension.
    pub fn dim(&self) -> usize {
        self.uncertainty.ncols()
    }

    /// `C·Δw − b + A·x`; a dual `u` separates `Δw` when `uᵀ·(this) < 0`.
    pub fn point_term(&self, dw: &[f64]) -> Vec<f64> {
        let cdw = self.uncertainty.mul_vec(dw);
        cdw.iter().zip(&self.offset).map(|(c, o)| c - o).collect()
    }

    /// Row residuals `b − A·x − B·y − C·Δw` (nonnegative when feasible).
    pub fn slack(&self, y: &[f64], dw: &[f64]) -> Vec<f64> {
        let by = self.recourse.mul_vec(y);
        let cdw = self.uncertainty.mul_vec(dw);
        (0..self.num_rows())
            .map(|i| self.offset[i] - by[i] - cdw[i])
            .collect()
    }
}

/// Builds the operational polytope for `sys` at base point `x`.
pub fn assemble_polytope(sys: &PowerSystem, x: &BasePoint) -> Result<OperationalPolytope, GridError> {
    let g = sys.units.len();
    if x.p.len() != g || x.r_up.len() != g || x.r_dn.len() != g {
        return Err(GridError::DimensionMismatch(format!(
            "base point sized {}/{}/{} for {g} units",
            x.p.len(),
            x.r_up.len(),
            x.r_dn.len()
        )));
    }
    if x.p.iter().chain(&x.r_up).chain(&x.r_dn).any(|v| !v.is_finite()) {
        return Err(GridError::DimensionMismatch("base point has non-finite entries".into()));
    }
    let sf = compute_shift_factors(sys)?;
    let j = sys.rpg.len();
    let forecast: Vec<f64> = sys.rpg.iter().map(|r| r.w_e).collect();
    let total_load: f64 = sys.loads.iter().map(|l| l.p).sum();
    let total_p: f64 = x.p.iter().sum();

    let columns: Vec<RecourseColumn> = [Direction::Up, Direction::Down]
        .into_iter()
        .flat_map(|d| sys.units.iter().map(move |u| RecourseColumn { unit: u.id, direction: d }))
        .collect();

    let mut recourse = Matrix::with_cols(2 * g);
    let mut uncertainty = Matrix::with_cols(j);
    let mut rows = Vec::new();
    let mut b0 = Vec::new();
    let mut base_term = Vec::new();
    let mut push = |kind: RowKind, brow: Vec<f64>, crow: Vec<f64>, b0v: f64, ax: f64| {
        recourse.push_row(&brow);
        uncertainty.push_row(&crow);
        rows.push(kind);
        b0.push(b0v);
        base_term.push(ax);
    };

    // Σ(p + p⁺ − p⁻) + Σ(wᵉ + Δw) = Σ load, as a ≤/≥ pair.
    let bal_b: Vec<f64> = (0..2 * g).map(|c| if c < g { 1.0 } else { -1.0 }).collect();
    let neg = |v: &[f64]| v.iter().map(|a| -a).collect::<Vec<_>>();
    push(RowKind::BalanceLe, bal_b.clone(), vec![1.0; j], total_load, total_p);
    push(RowKind::BalanceGe, neg(&bal_b), vec![-1.0; j], -total_load, -total_p);

    for (li, line) in sys.lines.iter().enumerate() {
        let unit_f: Vec<f64> = sys.units.iter().map(|u| sf.factor(li, u.bus)).collect();
        let brow: Vec<f64> = (0..2 * g)
            .map(|c| if c < g { unit_f[c] } else { -unit_f[c - g] })
            .collect();
        let crow: Vec<f64> = sys.rpg.iter().map(|r| sf.factor(li, r.bus)).collect();
        let load_flow: f64 = sys.loads.iter().map(|l| sf.factor(li, l.bus) * l.p).sum();
        let base_flow = dot(&unit_f, &x.p);
        push(
            RowKind::LineForward(line.id),
            brow.clone(),
            crow.clone(),
            line.capacity + load_flow,
            base_flow,
        );
        push(
            RowKind::LineReverse(line.id),
            neg(&brow),
            neg(&crow),
            line.capacity - load_flow,
            -base_flow,
        );
    }

    for (i, u) in sys.units.iter().enumerate() {
        let mut brow = vec![0.0; 2 * g];
        brow[i] = 1.0;
        push(RowKind::ReserveUp(u.id), brow, vec![0.0; j], 0.0, -x.r_up[i]);
    }
    for (i, u) in sys.units.iter().enumerate() {
        let mut brow = vec![0.0; 2 * g];
        brow[g + i] = 1.0;
        push(RowKind::ReserveDown(u.id), brow, vec![0.0; j], 0.0, -x.r_dn[i]);
    }

    let cw = uncertainty.mul_vec(&forecast);
    let b: Vec<f64> = b0.iter().zip(&cw).map(|(a, c)| a - c).collect();
    let offset: Vec<f64> = b.iter().zip(&base_term).map(|(a, ax)| a - ax).collect();
    Ok(OperationalPolytope {
        recourse,
        uncertainty,
        b0,
        b,
        base_term,
        offset,
        forecast,
        columns,
        rows,
    })
}
