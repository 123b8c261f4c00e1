//! Side-by-side evaluation of PAB and traditional regions on held-out ODPs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::OperationalPolytope;
use crate::odp::OdpSet;
use crate::pab::{construct_pab_dr, ConstructionTrace, PabConfig};
use crate::region::{
    check_points, traditional_dr, FeasibilityResult, InitBox, Region, TraditionalConfig, TraditionalStats,
    STRICT_TOL,
};

/// Seeded split into (training, holdout). A zero fraction evaluates on the
/// full set and trains on it too.
pub fn split_holdout(odps: &OdpSet, fraction: f64, seed: u64) -> Result<(OdpSet, OdpSet)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!("holdout fraction {fraction} must be in [0, 1)")));
    }
    if fraction == 0.0 {
        return Ok((odps.clone(), odps.clone()));
    }
    let n = odps.len();
    let h = ((fraction * n as f64).ceil() as usize).min(n.saturating_sub(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (hold, train) = order.split_at(h);
    let (mut hold, mut train) = (hold.to_vec(), train.to_vec());
    hold.sort_unstable();
    train.sort_unstable();
    Ok((odps.select(&train), odps.select(&hold)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: String,
    /// Boundaries excluding the initialization box.
    pub boundaries: usize,
    pub time_s: f64,
    pub converged: bool,
    pub enclosed: usize,
    pub infeasible_enclosed: usize,
    /// `infeasible_enclosed / enclosed`, 0 when nothing is enclosed.
    pub infeasibility_rate: f64,
    /// Mean oracle violation over enclosed points (MW).
    pub average_violation: f64,
}

/// Holdout metrics of one region, given the oracle results for the holdout.
pub fn region_metrics(
    method: &str,
    reg: &Region,
    holdout: &OdpSet,
    checks: &[FeasibilityResult],
    time_s: f64,
) -> MethodMetrics {
    let enclosed: Vec<&FeasibilityResult> = holdout
        .points()
        .iter()
        .zip(checks)
        .filter(|(p, _)| reg.contains(p, STRICT_TOL))
        .map(|(_, r)| r)
        .collect();
    let infeasible = enclosed.iter().filter(|r| !r.is_feasible()).count();
    let n = enclosed.len();
    MethodMetrics {
        method: method.to_string(),
        boundaries: reg.num_cuts(),
        time_s,
        converged: reg.converged,
        enclosed: n,
        infeasible_enclosed: infeasible,
        infeasibility_rate: if n == 0 { 0.0 } else { infeasible as f64 / n as f64 },
        average_violation: if n == 0 { 0.0 } else { enclosed.iter().map(|r| r.s).sum::<f64>() / n as f64 },
    }
}

#[derive(Clone, Debug)]
pub struct CompareConfig {
    pub holdout: f64,
    pub seed: u64,
    pub pab: PabConfig,
    pub traditional: TraditionalConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub training: usize,
    pub holdout: usize,
    pub holdout_infeasible: usize,
    pub pab: MethodMetrics,
    pub traditional: MethodMetrics,
}

pub struct CompareOutcome {
    pub report: CompareReport,
    pub pab_region: Region,
    pub pab_trace: ConstructionTrace,
    pub traditional_region: Region,
    pub traditional_stats: TraditionalStats,
}

/// PAB on the training split, the traditional baseline under its own
/// budget, both scored on the holdout split.
pub fn compare(poly: &OperationalPolytope, odps: &OdpSet, init: &InitBox, cfg: &CompareConfig) -> Result<CompareOutcome> {
    let (train, hold) = split_holdout(odps, cfg.holdout, cfg.seed)?;
    let (pab_region, pab_trace) = construct_pab_dr(poly, &train, init, &cfg.pab)?;
    let pab_time: f64 = pab_trace.iterations.iter().map(|r| r.wall_time_s).sum();
    let (trad_region, trad_stats) = traditional_dr(poly, init, &cfg.traditional)?;
    let checks = check_points(poly, hold.points(), cfg.pab.exec, &cfg.pab.solver)?;
    let report = CompareReport {
        training: train.len(),
        holdout: hold.len(),
        holdout_infeasible: checks.iter().filter(|r| !r.is_feasible()).count(),
        pab: region_metrics("pab", &pab_region, &hold, &checks, pab_time),
        traditional: region_metrics("traditional", &trad_region, &hold, &checks, trad_stats.elapsed_s),
    };
    Ok(CompareOutcome {
        report,
        pab_region,
        pab_trace,
        traditional_region: trad_region,
        traditional_stats: trad_stats,
    })
}
