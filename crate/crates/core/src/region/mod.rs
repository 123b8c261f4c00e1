//! Halfspace regions in forecast-error space, the feasibility oracle,
//! boundary classification, and the vertex-driven traditional baseline.

mod oracle;
mod traditional;
mod vertices;

pub use oracle::{
    boundary_from_dual, check_dual_cone, check_points, feasibility_check, feasibility_check_with,
    separating_dual, ConeMode, FeasibilityResult,
};
pub use traditional::{traditional_dr, TraditionalConfig, TraditionalStats};
pub use vertices::enumerate_vertices;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Matrix};
use crate::odp::OdpSet;

/// Oracle violation (MW) above which a point counts as infeasible.
pub const FEAS_TOL: f64 = 1e-6;
/// Margin for "strictly outside" a halfspace.
pub const STRICT_TOL: f64 = 1e-6;
/// Normals with `‖a‖∞` at or below this are degenerate.
pub const DEGENERATE_NORMAL: f64 = 1e-10;
/// Tolerance for treating two normalized halfspaces as the same.
pub const DUPLICATE_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Origin {
    InitBox,
    PabIteration(usize),
    Traditional,
    SharedFromPartition(usize),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::InitBox => write!(f, "init-box"),
            Origin::PabIteration(k) => write!(f, "pab-iteration-{k}"),
            Origin::Traditional => write!(f, "traditional"),
            Origin::SharedFromPartition(m) => write!(f, "shared-from-partition-{m}"),
        }
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |rest: &str| rest.parse::<usize>().map_err(|_| format!("bad origin tag {s:?}"));
        match s {
            "init-box" => Ok(Origin::InitBox),
            "traditional" => Ok(Origin::Traditional),
            _ => {
                if let Some(rest) = s.strip_prefix("pab-iteration-") {
                    num(rest).map(Origin::PabIteration)
                } else if let Some(rest) = s.strip_prefix("shared-from-partition-") {
                    num(rest).map(Origin::SharedFromPartition)
                } else {
                    Err(format!("bad origin tag {s:?}"))
                }
            }
        }
    }
}

impl From<Origin> for String {
    fn from(o: Origin) -> String {
        o.to_string()
    }
}

impl TryFrom<String> for Origin {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

/// The halfspace `a·Δw ≥ c`, with the dual vector `u` it came from
/// (empty for box rows).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub a: Vec<f64>,
    pub c: f64,
    pub u: Vec<f64>,
    pub excluded_count: usize,
    pub origin: Origin,
}

impl Hyperplane {
    /// `a·dw − c`; negative means outside.
    pub fn value(&self, dw: &[f64]) -> f64 {
        dot(&self.a, dw) - self.c
    }

    pub fn contains(&self, dw: &[f64], tol: f64) -> bool {
        self.value(dw) >= -tol
    }

    /// `(a, c)` scaled so that `‖a‖∞ = 1`.
    pub fn normalized(&self) -> (Vec<f64>, f64) {
        let s = norm_inf(&self.a);
        (self.a.iter().map(|v| v / s).collect(), self.c / s)
    }

    /// Same halfspace after normalization, within [`DUPLICATE_TOL`].
    pub fn same_halfspace(&self, other: &Hyperplane) -> bool {
        if self.a.len() != other.a.len() {
            return false;
        }
        let (a1, c1) = self.normalized();
        let (a2, c2) = other.normalized();
        (c1 - c2).abs() <= DUPLICATE_TOL
            && a1.iter().zip(&a2).all(|(x, y)| (x - y).abs() <= DUPLICATE_TOL)
    }
}

/// Axis-aligned initialization box `lower ≤ Δw ≤ upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl InitBox {
    pub fn symmetric(dimension: usize, half_width: f64) -> Self {
        Self { lower: vec![-half_width; dimension], upper: vec![half_width; dimension] }
    }

    /// Smallest symmetric box of half-width at least `min_half` that holds
    /// every point with room to spare.
    pub fn covering(odps: &OdpSet, min_half: f64) -> Self {
        let reach = odps.points().iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        Self::symmetric(odps.dimension(), min_half.max(2.0 * reach))
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() || self.lower.is_empty() {
            return Err(Error::InvalidConfig("box bounds must be nonempty and equally sized".into()));
        }
        for (l, u) in self.lower.iter().zip(&self.upper) {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidConfig(format!("box interval [{l}, {u}] is invalid")));
            }
        }
        Ok(())
    }

    /// `+e_j ≥ lower_j` for every `j`, then `−e_j ≥ −upper_j`.
    pub fn hyperplanes(&self) -> Vec<Hyperplane> {
        let d = self.dimension();
        let unit = |j: usize, s: f64| {
            let mut a = vec![0.0; d];
            a[j] = s;
            a
        };
        let lower = (0..d).map(|j| (unit(j, 1.0), self.lower[j]));
        let upper = (0..d).map(|j| (unit(j, -1.0), -self.upper[j]));
        lower
            .chain(upper)
            .map(|(a, c)| Hyperplane { a, c, u: vec![], excluded_count: 0, origin: Origin::InitBox })
            .collect()
    }

    pub fn contains(&self, dw: &[f64]) -> bool {
        dw.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| v >= l && v <= u)
    }
}

/// Ordered halfspace intersection `H·Δw ≥ h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub dimension: usize,
    /// False for a partial region left by an exhausted budget.
    pub converged: bool,
    pub boundaries: Vec<Hyperplane>,
}

impl Region {
    pub fn from_box(init: &InitBox) -> Self {
        Self { dimension: init.dimension(), converged: true, boundaries: init.hyperplanes() }
    }

    pub fn len(&self) -> usize {
        self.boundaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }

    pub fn push(&mut self, h: Hyperplane) -> Result<()> {
        if h.a.len() != self.dimension {
            return Err(Error::DimensionMismatch(format!(
                "hyperplane of dimension {} for a {}-dimensional region",
                h.a.len(),
                self.dimension
            )));
        }
        self.boundaries.push(h);
        Ok(())
    }

    /// Boundaries other than the initialization box.
    pub fn cuts(&self) -> impl Iterator<Item = &Hyperplane> {
        self.boundaries.iter().filter(|h| h.origin != Origin::InitBox)
    }

    pub fn num_cuts(&self) -> usize {
        self.cuts().count()
    }

    pub fn h_matrix(&self) -> Matrix {
        let mut m = Matrix::with_cols(self.dimension);
        for b in &self.boundaries {
            m.push_row(&b.a);
        }
        m
    }

    pub fn h_vector(&self) -> Vec<f64> {
        self.boundaries.iter().map(|b| b.c).collect()
    }

    /// Closed membership: every row holds within `tol`.
    pub fn contains(&self, dw: &[f64], tol: f64) -> bool {
        self.boundaries.iter().all(|b| b.contains(dw, tol))
    }

    /// Whether an identical (normalized) halfspace is already present.
    pub fn has_duplicate(&self, h: &Hyperplane) -> bool {
        self.boundaries.iter().any(|b| b.same_halfspace(h))
    }

    pub fn validate(&self) -> Result<()> {
        if self.boundaries.is_empty() {
            return Err(Error::Data("region has no boundaries".into()));
        }
        for (i, b) in self.boundaries.iter().enumerate() {
            if b.a.len() != self.dimension {
                return Err(Error::DimensionMismatch(format!(
                    "boundary {i} has {} coefficients, expected {}",
                    b.a.len(),
                    self.dimension
                )));
            }
            if b.a.iter().chain(&b.u).any(|v| !v.is_finite()) || !b.c.is_finite() {
                return Err(Error::Data(format!("boundary {i} has non-finite values")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("region serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Region = serde_json::from_str(text).map_err(|e| Error::Data(e.to_string()))?;
        r.validate()?;
        Ok(r)
    }
}

/// Membership with a dimension check.
pub fn region_contains(reg: &Region, dw: &[f64], tol: f64) -> Result<bool> {
    if dw.len() != reg.dimension {
        return Err(Error::DimensionMismatch(format!(
            "point of dimension {} for a {}-dimensional region",
            dw.len(),
            reg.dimension
        )));
    }
    Ok(reg.contains(dw, tol))
}

/// Indices of boundaries strictly violated by at least one ODP.
pub fn classify_boundaries(reg: &Region, odps: &OdpSet) -> Result<Vec<usize>> {
    if odps.dimension() != reg.dimension && !odps.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "ODPs of dimension {} for a {}-dimensional region",
            odps.dimension(),
            reg.dimension
        )));
    }
    Ok(reg
        .boundaries
        .iter()
        .enumerate()
        .filter(|(_, b)| odps.points().iter().any(|p| b.value(p) < -STRICT_TOL))
        .map(|(i, _)| i)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odp::OdpSource;

    #[test]
    fn origin_tags_round_trip() {
        for o in [
            Origin::InitBox,
            Origin::PabIteration(3),
            Origin::Traditional,
            Origin::SharedFromPartition(2),
        ] {
            assert_eq!(o.to_string().parse::<Origin>().unwrap(), o);
        }
        assert_eq!(Origin::PabIteration(1).to_string(), "pab-iteration-1");
        assert!("pab-iteration-x".parse::<Origin>().is_err());
    }

    #[test]
    fn unit_box_membership() {
        let r = Region::from_box(&InitBox::symmetric(2, 1.0));
        assert!(r.contains(&[0.0, 0.0], 0.0));
        assert!(r.contains(&[1.0, 1.0], 0.0));
        assert!(!r.contains(&[1.0 + 1e-9, 0.0], 0.0));
        assert!(region_contains(&r, &[0.0], 0.0).is_err());
    }

    #[test]
    fn h_view_stacks_boundaries() {
        let r = Region::from_box(&InitBox { lower: vec![-1.0, -2.0], upper: vec![3.0, 4.0] });
        assert_eq!(r.h_vector(), vec![-1.0, -2.0, -3.0, -4.0]);
        assert_eq!(r.h_matrix().row(3), &[0.0, -1.0]);
    }

    #[test]
    fn classify_box_example() {
        let r = Region::from_box(&InitBox::symmetric(2, 1.0));
        let odps = OdpSet::new(
            2,
            vec![vec![2.0, 0.0], vec![0.0, -3.0], vec![0.5, 0.5]],
            OdpSource::Derived,
        )
        .unwrap();
        // rows: Δw₁ ≥ −1, Δw₂ ≥ −1, −Δw₁ ≥ −1, −Δw₂ ≥ −1
        assert_eq!(classify_boundaries(&r, &odps).unwrap(), vec![1, 2]);
        let empty = OdpSet::new(2, vec![], OdpSource::Derived).unwrap();
        assert!(classify_boundaries(&r, &empty).unwrap().is_empty());
    }

    #[test]
    fn duplicates_detected_after_scaling() {
        let h = Hyperplane { a: vec![2.0, -4.0], c: 6.0, u: vec![], excluded_count: 1, origin: Origin::Traditional };
        let mut g = h.clone();
        g.a = vec![0.5, -1.0];
        g.c = 1.5;
        assert!(h.same_halfspace(&g));
        g.c = 1.6;
        assert!(!h.same_halfspace(&g));
    }

    #[test]
    fn json_round_trip() {
        let mut r = Region::from_box(&InitBox::symmetric(1, 5.0));
        r.push(Hyperplane { a: vec![-1.0], c: -2.0, u: vec![0.0, -1.0], excluded_count: 2, origin: Origin::PabIteration(1) })
            .unwrap();
        let text = r.to_json();
        assert!(text.contains("\"pab-iteration-1\""));
        assert_eq!(Region::from_json(&text).unwrap(), r);
        assert!(Region::from_json(r#"{"dimension":2,"converged":true,"boundaries":[{"a":[1],"c":0,"u":[],"excluded_count":0,"origin":"init-box"}]}"#).is_err());
    }
}
