use nalgebra::{DMatrix, DVector};

use super::Region;
use crate::error::{Error, Result};
use crate::linalg::norm_inf;

const MAX_DIM: usize = 4;
const DEDUP_TOL: f64 = 1e-7;

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let d = idx.len();
    for i in (0..d).rev() {
        if idx[i] < n - d + i {
            idx[i] += 1;
            for j in i + 1..d {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// All vertices of a bounded region of dimension at most 4, sorted
/// lexicographically.
///
/// Every `d`-subset of rows is solved with equality; solutions that satisfy
/// all rows are kept and deduplicated.
pub fn enumerate_vertices(reg: &Region) -> Result<Vec<Vec<f64>>> {
    let d = reg.dimension;
    if d > MAX_DIM {
        return Err(Error::DimensionTooLarge(d));
    }
    let n = reg.boundaries.len();
    if d == 0 || n < d {
        return Ok(vec![]);
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let m = DMatrix::from_fn(d, d, |r, c| reg.boundaries[idx[r]].a[c]);
        let rhs = DVector::from_iterator(d, idx.iter().map(|&i| reg.boundaries[i].c));
        let lu = m.lu();
        let det = lu.determinant();
        let scale = idx.iter().map(|&i| norm_inf(&reg.boundaries[i].a)).product::<f64>();
        if det.abs() > 1e-12 * scale {
            if let Some(x) = lu.solve(&rhs) {
                let v: Vec<f64> = x.iter().copied().collect();
                let inside = reg.boundaries.iter().all(|b| {
                    b.value(&v) >= -DEDUP_TOL * (1.0 + b.c.abs()).max(norm_inf(&b.a) * norm_inf(&v))
                });
                if inside && !out.iter().any(|w| w.iter().zip(&v).all(|(p, q)| (p - q).abs() <= DEDUP_TOL * (1.0 + q.abs()))) {
                    out.push(v);
                }
            }
        }
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    out.sort_by(|p, q| p.iter().zip(q).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{Hyperplane, InitBox, Origin};

    #[test]
    fn square_has_four_corners() {
        let r = Region::from_box(&InitBox::symmetric(2, 1.0));
        let v = enumerate_vertices(&r).unwrap();
        assert_eq!(v, vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn clipped_square_has_five() {
        let mut r = Region::from_box(&InitBox::symmetric(2, 1.0));
        r.push(Hyperplane { a: vec![-1.0, -1.0], c: -1.0, u: vec![], excluded_count: 0, origin: Origin::Traditional })
            .unwrap();
        assert_eq!(enumerate_vertices(&r).unwrap().len(), 5);
    }

    #[test]
    fn cube_and_interval() {
        assert_eq!(enumerate_vertices(&Region::from_box(&InitBox::symmetric(3, 2.0))).unwrap().len(), 8);
        assert_eq!(enumerate_vertices(&Region::from_box(&InitBox::symmetric(1, 2.0))).unwrap(), vec![vec![-2.0], vec![2.0]]);
    }

    #[test]
    fn five_dimensions_rejected() {
        let r = Region::from_box(&InitBox::symmetric(5, 1.0));
        assert!(matches!(enumerate_vertices(&r), Err(Error::DimensionTooLarge(5))));
    }
}
