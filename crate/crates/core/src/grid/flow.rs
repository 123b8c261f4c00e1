use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{GridError, PowerSystem};
use crate::linalg::Matrix;

/// Per-line sensitivity of DC flow to a unit injection at each bus,
/// withdrawn at the slack bus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftFactorMatrix {
    /// `lines × buses`, columns in case bus order.
    pub factors: Matrix,
    pub bus_ids: Vec<u32>,
    pub slack: u32,
}

impl ShiftFactorMatrix {
    /// Shift factor of bus `bus_id` on line position `line`.
    pub fn factor(&self, line: usize, bus_id: u32) -> f64 {
        let col = self
            .bus_ids
            .iter()
            .position(|&b| b == bus_id)
            .expect("bus id belongs to the system");
        self.factors.get(line, col)
    }

    /// Flows caused by a per-bus injection vector.
    pub fn flows(&self, injections: &[f64]) -> Vec<f64> {
        self.factors.mul_vec(injections)
    }
}

/// Reduced nodal susceptance matrix (slack row/column removed) and the
/// mapping from reduced index to bus position.
fn reduced_susceptance(sys: &PowerSystem) -> (DMatrix<f64>, Vec<usize>, usize) {
    let index = sys.bus_index();
    let n = sys.buses.len();
    let slack = index[&sys.slack_bus().expect("validated system has a slack")];
    let mut full = DMatrix::<f64>::zeros(n, n);
    for l in &sys.lines {
        let (f, t) = (index[&l.from], index[&l.to]);
        let b = 1.0 / l.reactance;
        full[(f, f)] += b;
        full[(t, t)] += b;
        full[(f, t)] -= b;
        full[(t, f)] -= b;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let reduced = DMatrix::from_fn(keep.len(), keep.len(), |r, c| full[(keep[r], keep[c])]);
    (reduced, keep, slack)
}

/// Shift factors `Bf · Bred⁻¹`, zero-filled in the slack column.
pub fn compute_shift_factors(sys: &PowerSystem) -> Result<ShiftFactorMatrix, GridError> {
    let index = sys.bus_index();
    let n = sys.buses.len();
    let (reduced, keep, _) = reduced_susceptance(sys);
    let x_red = reduced
        .try_inverse()
        .ok_or(GridError::SingularSusceptance)?;

    // Angle sensitivity matrix in full bus coordinates; slack row/col stay zero.
    let mut x_full = DMatrix::<f64>::zeros(n, n);
    for (r, &br) in keep.iter().enumerate() {
        for (c, &bc) in keep.iter().enumerate() {
            x_full[(br, bc)] = x_red[(r, c)];
        }
    }
    let mut factors = Matrix::zeros(sys.lines.len(), n);
    for (li, l) in sys.lines.iter().enumerate() {
        let (f, t) = (index[&l.from], index[&l.to]);
        let b = 1.0 / l.reactance;
        for k in 0..n {
            factors.set(li, k, b * (x_full[(f, k)] - x_full[(t, k)]));
        }
    }
    Ok(ShiftFactorMatrix {
        factors,
        bus_ids: sys.buses.iter().map(|b| b.id).collect(),
        slack: sys.slack_bus().expect("validated system has a slack"),
    })
}

/// Direct DC power flow: solve `Bred·θ = P` and take `(θ_from − θ_to)/x` per line.
pub fn dc_power_flow(sys: &PowerSystem, injections: &[f64]) -> Result<Vec<f64>, GridError> {
    let n = sys.buses.len();
    if injections.len() != n {
        return Err(GridError::DimensionMismatch(format!(
            "{} injections for {n} buses",
            injections.len()
        )));
    }
    let net: f64 = injections.iter().sum();
    if net.abs() > 1e-6 {
        return Err(GridError::Unbalanced(net));
    }
    let index = sys.bus_index();
    let (reduced, keep, _) = reduced_susceptance(sys);
    let rhs = DVector::from_iterator(keep.len(), keep.iter().map(|&i| injections[i]));
    let theta_red = reduced.lu().solve(&rhs).ok_or(GridError::SingularSusceptance)?;
    let mut theta = vec![0.0; n];
    for (r, &i) in keep.iter().enumerate() {
        theta[i] = theta_red[r];
    }
    Ok(sys
        .lines
        .iter()
        .map(|l| (theta[index[&l.from]] - theta[index[&l.to]]) / l.reactance)
        .collect())
}
