//! CSV bundles for plotting 2-D regions and tagged ODPs.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::grid::OperationalPolytope;
use crate::odp::OdpSet;
use crate::region::{check_points, enumerate_vertices, Region, STRICT_TOL};
use crate::solver::SolverConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct PlotData {
    pub boundaries_csv: String,
    /// Present only for 2-D regions.
    pub vertices_csv: Option<String>,
    pub points_csv: String,
    pub note: Option<String>,
}

impl PlotData {
    /// Writes `boundaries.csv`, `points.csv` and, when present,
    /// `vertices.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let io = |p: &Path, e: std::io::Error| Error::Io { path: p.display().to_string(), message: e.to_string() };
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut files = vec![("boundaries.csv", &self.boundaries_csv), ("points.csv", &self.points_csv)];
        if let Some(v) = &self.vertices_csv {
            files.push(("vertices.csv", v));
        }
        for (name, body) in files {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| io(&p, e))?;
        }
        Ok(())
    }
}

/// 2-D vertices in counterclockwise order around their centroid, starting
/// from the smallest polar angle in `(−π, π]`.
pub fn ccw_vertices(reg: &Region) -> Result<Vec<[f64; 2]>> {
    if reg.dimension != 2 {
        return Err(Error::DimensionMismatch(format!("ccw ordering needs 2-D, got {}", reg.dimension)));
    }
    let v: Vec<[f64; 2]> = enumerate_vertices(reg)?.into_iter().map(|p| [p[0], p[1]]).collect();
    if v.is_empty() {
        return Ok(v);
    }
    let n = v.len() as f64;
    let cx = v.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = v.iter().map(|p| p[1]).sum::<f64>() / n;
    let mut keyed: Vec<(f64, [f64; 2])> = v.into_iter().map(|p| ((p[1] - cy).atan2(p[0] - cx), p)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, p)| p).collect())
}

pub fn emit_plot_data(
    reg: &Region,
    odps: &OdpSet,
    poly: &OperationalPolytope,
    exec: ExecMode,
) -> Result<PlotData> {
    if odps.dimension() != reg.dimension || poly.dim() != reg.dimension {
        return Err(Error::DimensionMismatch(format!(
            "region of dimension {}, ODPs of dimension {}, {} renewable units",
            reg.dimension,
            odps.dimension(),
            poly.dim()
        )));
    }
    let d = reg.dimension;
    let mut boundaries_csv = String::new();
    let coef_header: Vec<String> = (1..=d).map(|j| format!("a{j}")).collect();
    boundaries_csv.push_str(&format!("{},c,origin,excluded_count\n", coef_header.join(",")));
    for b in &reg.boundaries {
        let a: Vec<String> = b.a.iter().map(|v| format!("{v:?}")).collect();
        boundaries_csv.push_str(&format!("{},{:?},{},{}\n", a.join(","), b.c, b.origin, b.excluded_count));
    }

    let (vertices_csv, note) = if d == 2 {
        let mut s = String::from("vertex,dw_1,dw_2\n");
        for (i, p) in ccw_vertices(reg)?.iter().enumerate() {
            s.push_str(&format!("{},{:?},{:?}\n", i + 1, p[0], p[1]));
        }
        (Some(s), None)
    } else {
        (None, Some(format!("vertices omitted: region is {d}-dimensional, plotting needs 2")))
    };

    let checks = check_points(poly, odps.points(), exec, &SolverConfig::default())?;
    let dw_header: Vec<String> = (1..=d).map(|j| format!("dw_{j}")).collect();
    let mut points_csv = format!("odp_id,{},inside,s\n", dw_header.join(","));
    for (k, (p, fr)) in odps.points().iter().zip(&checks).enumerate() {
        let coords: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
        let inside = reg.contains(p, STRICT_TOL);
        points_csv.push_str(&format!("{},{},{},{:?}\n", k + 1, coords.join(","), inside, fr.s));
    }
    Ok(PlotData { boundaries_csv, vertices_csv, points_csv, note })
}
