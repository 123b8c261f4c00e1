use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{check_points, enumerate_vertices, separating_dual, InitBox, Region};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::grid::OperationalPolytope;
use crate::solver::SolverConfig;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[derive(Default)]
pub struct TraditionalConfig {
    /// Stop (unconverged) after this many cuts.
    pub max_cuts: Option<usize>,
    /// Wall-clock budget in seconds.
    pub time_limit: Option<f64>,
    pub exec: ExecMode,
    pub solver: SolverConfig,
}


#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraditionalStats {
    pub rounds: usize,
    pub vertices_checked: usize,
    pub elapsed_s: f64,
}

/// Vertex-driven constraint generation.
///
/// Each round enumerates the current region's vertices, checks them all, and
/// cuts off the most violated one (first in lexicographic order on ties).
/// Converged when every vertex is feasible.
pub fn traditional_dr(
    poly: &OperationalPolytope,
    init: &InitBox,
    cfg: &TraditionalConfig,
) -> Result<(Region, TraditionalStats)> {
    init.validate()?;
    if init.dimension() != poly.dim() {
        return Err(Error::DimensionMismatch(format!(
            "box of dimension {} for {} renewable units",
            init.dimension(),
            poly.dim()
        )));
    }
    if cfg.time_limit.is_some_and(|t| !(t > 0.0)) {
        return Err(Error::InvalidConfig("time limit must be > 0".into()));
    }
    let start = Instant::now();
    let mut region = Region::from_box(init);
    let mut stats = TraditionalStats::default();
    loop {
        stats.rounds += 1;
        let verts = enumerate_vertices(&region)?;
        let checks = check_points(poly, &verts, cfg.exec, &cfg.solver)?;
        stats.vertices_checked += checks.len();
        let worst = checks
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, r)| match best {
                Some((_, s)) if r.s <= s => best,
                _ => Some((i, r.s)),
            });
        let Some((wi, _)) = worst.filter(|(i, _)| !checks[*i].is_feasible()) else {
            region.converged = true;
            break;
        };
        let out_of_cuts = cfg.max_cuts.is_some_and(|k| region.num_cuts() >= k);
        let out_of_time = cfg.time_limit.is_some_and(|t| start.elapsed().as_secs_f64() >= t);
        if out_of_cuts || out_of_time {
            region.converged = false;
            break;
        }
        let cut = separating_dual(&checks[wi], poly)?
            .ok_or_else(|| Error::Internal("infeasible vertex without a separator".into()))?;
        if region.has_duplicate(&cut) {
            // the vertex sits on an existing boundary that should already exclude it
            region.converged = false;
            break;
        }
        region.push(cut)?;
    }
    stats.elapsed_s = start.elapsed().as_secs_f64();
    Ok((region, stats))
}
