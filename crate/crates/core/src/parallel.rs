//! Dataset decomposition: per-partition construction with a shared
//! boundary pool, followed by an intersection merge.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::grid::OperationalPolytope;
use crate::odp::OdpSet;
use crate::pab::{ConstructionTrace, PabConfig, PabWorker, Termination};
use crate::region::{check_points, Hyperplane, InitBox, Origin, Region};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionStrategy {
    #[default]
    RoundRobin,
    Contiguous,
    SeededShuffle,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParallelConfig {
    pub partitions: usize,
    pub strategy: PartitionStrategy,
    /// Used by [`PartitionStrategy::SeededShuffle`].
    pub seed: u64,
    pub sharing: bool,
    /// `Parallel` runs workers on the rayon pool; `Sequential` steps them
    /// round-robin on the calling thread.
    pub exec: ExecMode,
    pub pab: PabConfig,
}

impl Default for ParallelConfig {
    fn default() -> Self {
        Self {
            partitions: 2,
            strategy: PartitionStrategy::RoundRobin,
            seed: 0,
            sharing: true,
            exec: ExecMode::default(),
            pab: PabConfig::default(),
        }
    }
}

/// Per-worker outcome of a parallel run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkerTrace {
    /// 1-based partition number.
    pub worker: usize,
    pub odp_count: usize,
    /// Most binaries carried by any of this worker's MILPs.
    pub largest_milp: usize,
    pub cuts: usize,
    pub trace: ConstructionTrace,
}

/// Index sets of each partition, in partition order.
pub fn partition_indices(n: usize, cfg: &ParallelConfig) -> Result<Vec<Vec<usize>>> {
    let m = cfg.partitions;
    if m == 0 || m > n {
        return Err(Error::InvalidConfig(format!("partition count {m} must be in 1..={n}")));
    }
    let mut parts = vec![Vec::new(); m];
    match cfg.strategy {
        PartitionStrategy::RoundRobin => {
            for k in 0..n {
                parts[k % m].push(k);
            }
        }
        PartitionStrategy::Contiguous => {
            let (q, r) = (n / m, n % m);
            let mut k = 0;
            for (i, p) in parts.iter_mut().enumerate() {
                let len = q + usize::from(i < r);
                p.extend(k..k + len);
                k += len;
            }
        }
        PartitionStrategy::SeededShuffle => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
            for (i, k) in order.into_iter().enumerate() {
                parts[i % m].push(k);
            }
            for p in &mut parts {
                p.sort_unstable();
            }
        }
    }
    Ok(parts)
}

pub fn partition(odps: &OdpSet, cfg: &ParallelConfig) -> Result<Vec<OdpSet>> {
    Ok(partition_indices(odps.len(), cfg)?.iter().map(|idx| odps.select(idx)).collect())
}

/// Intersection of regions built over the same box: one copy of the box
/// plus every distinct non-box boundary.
pub fn merge(regions: &[Region]) -> Result<Region> {
    let first = regions.first().ok_or_else(|| Error::InvalidConfig("nothing to merge".into()))?;
    let box_rows: Vec<&Hyperplane> = first.boundaries.iter().filter(|h| h.origin == Origin::InitBox).collect();
    let mut out = Region {
        dimension: first.dimension,
        converged: true,
        boundaries: box_rows.iter().map(|h| (*h).clone()).collect(),
    };
    for r in regions {
        if r.dimension != first.dimension {
            return Err(Error::DimensionMismatch(format!(
                "cannot merge regions of dimension {} and {}",
                first.dimension, r.dimension
            )));
        }
        let other_box: Vec<&Hyperplane> = r.boundaries.iter().filter(|h| h.origin == Origin::InitBox).collect();
        if other_box.len() != box_rows.len() || other_box.iter().zip(&box_rows).any(|(a, b)| a.a != b.a || a.c != b.c) {
            return Err(Error::InvalidConfig("regions were built over different boxes".into()));
        }
        out.converged &= r.converged;
        for h in r.cuts() {
            if !out.has_duplicate(h) {
                out.boundaries.push(h.clone());
            }
        }
    }
    Ok(out)
}

type Pool = Mutex<Vec<(usize, Hyperplane)>>;

/// Pulls pooled cuts the worker has not seen yet and applies the others'.
fn sync(worker: &mut PabWorker<'_>, me: usize, pool: &Pool, seen: &mut usize) {
    let fresh: Vec<(usize, Hyperplane)> = {
        let guard = pool.lock().expect("boundary pool lock poisoned");
        guard[*seen..].to_vec()
    };
    *seen += fresh.len();
    for (w, h) in fresh {
        if w != me {
            worker.absorb(&h);
        }
    }
}

fn step_shared(
    worker: &mut PabWorker<'_>,
    me: usize,
    pool: &Pool,
    seen: &mut usize,
    sharing: bool,
) -> Result<bool> {
    if sharing {
        sync(worker, me, pool, seen);
    }
    match worker.step() {
        Ok(Some(cut)) => {
            if sharing {
                pool.lock().expect("boundary pool lock poisoned").push((me, cut));
            }
            Ok(true)
        }
        Ok(None) => Ok(false),
        Err(e) => Err(Error::Worker { worker: me, source: Box::new(e) }),
    }
}

/// Builds one region per partition, concurrently when `cfg.exec` allows,
/// and merges them.
pub fn construct_parallel(
    poly: &OperationalPolytope,
    odps: &OdpSet,
    init: &InitBox,
    cfg: &ParallelConfig,
) -> Result<(Region, Vec<WorkerTrace>)> {
    cfg.pab.validate()?;
    let parts = partition_indices(odps.len(), cfg)?;
    let feasible: Option<Vec<bool>> = if cfg.pab.screen_feasible {
        Some(
            check_points(poly, odps.points(), cfg.pab.exec, &cfg.pab.solver)?
                .iter()
                .map(|r| r.is_feasible())
                .collect(),
        )
    } else {
        None
    };
    let mut workers = Vec::with_capacity(parts.len());
    for (i, idx) in parts.iter().enumerate() {
        let flags = feasible.as_ref().map(|f| idx.iter().map(|&k| f[k]).collect());
        let w = PabWorker::new(poly, &odps.select(idx), init, &cfg.pab, flags)
            .map_err(|e| Error::Worker { worker: i + 1, source: Box::new(e) })?
            .in_partition(i + 1);
        workers.push((i + 1, w));
    }

    let pool: Pool = Mutex::new(Vec::new());
    let abort = AtomicBool::new(false);
    let run = |(me, worker): &mut (usize, PabWorker<'_>)| -> Result<()> {
        let mut seen = 0;
        while !abort.load(Ordering::Relaxed) {
            match step_shared(worker, *me, &pool, &mut seen, cfg.sharing) {
                Ok(true) => {}
                Ok(false) => break,
                Err(e) => {
                    abort.store(true, Ordering::Relaxed);
                    return Err(e);
                }
            }
        }
        Ok(())
    };

    if cfg.exec.is_concurrent() {
        run_concurrent(&mut workers, &run)?;
    } else {
        let mut seen = vec![0; workers.len()];
        loop {
            let mut progressed = false;
            for (slot, (me, w)) in workers.iter_mut().enumerate() {
                if !w.is_finished() {
                    step_shared(w, *me, &pool, &mut seen[slot], cfg.sharing)?;
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
    }

    let mut regions = Vec::with_capacity(workers.len());
    let mut traces = Vec::with_capacity(workers.len());
    for (i, (me, w)) in workers.iter().enumerate() {
        let trace = w.trace();
        let mut r = Region::from_box(init);
        for c in w.cuts() {
            r.push(c.clone())?;
        }
        r.converged = trace.termination == Termination::Converged;
        regions.push(r);
        traces.push(WorkerTrace {
            worker: *me,
            odp_count: parts[i].len(),
            largest_milp: w.largest_milp(),
            cuts: w.cuts().len(),
            trace,
        });
    }
    Ok((merge(&regions)?, traces))
}

#[cfg(feature = "parallel")]
fn run_concurrent<F>(workers: &mut [(usize, PabWorker<'_>)], run: &F) -> Result<()>
where
    F: Fn(&mut (usize, PabWorker<'_>)) -> Result<()> + Sync,
{
    use rayon::prelude::*;
    let results: Vec<Result<()>> = workers.par_iter_mut().map(run).collect();
    results.into_iter().collect()
}

#[cfg(not(feature = "parallel"))]
fn run_concurrent<F>(workers: &mut [(usize, PabWorker<'_>)], run: &F) -> Result<()>
where
    F: Fn(&mut (usize, PabWorker<'_>)) -> Result<()>,
{
    workers.iter_mut().try_for_each(run)
}
