mod common;

use common::*;
use dispatch_region::error::Error;
use dispatch_region::exec::ExecMode;
use dispatch_region::odp::OdpSet;
use dispatch_region::pab::{construct_pab_dr, BigM, PabConfig};
use dispatch_region::parallel::{construct_parallel, merge, partition_indices, ParallelConfig, PartitionStrategy};
use dispatch_region::region::{InitBox, Origin, Region};
use proptest::prelude::*;
use rand::Rng;

fn wide(d: usize) -> InitBox {
    InitBox::symmetric(d, 1000.0)
}

fn verdicts(reg: &Region, odps: &OdpSet) -> Vec<bool> {
    odps.points().iter().map(|p| reg.contains(p, 1e-6)).collect()
}

#[test]
fn toy1_two_partitions_agree_with_single_run() {
    let poly = toy1();
    let odps = toy1_odps();
    let (single, _) = construct_pab_dr(&poly, &odps, &wide(1), &PabConfig::default()).unwrap();
    for exec in [ExecMode::Sequential, ExecMode::Parallel] {
        let cfg = ParallelConfig { partitions: 2, exec, ..Default::default() };
        let (merged, traces) = construct_parallel(&poly, &odps, &wide(1), &cfg).unwrap();
        assert_eq!(verdicts(&merged, &odps), verdicts(&single, &odps));
        assert!(merged.converged);
        assert_eq!(traces.iter().map(|t| t.worker).collect::<Vec<_>>(), vec![1, 2]);
        assert!(merged.cuts().all(|h| matches!(h.origin, Origin::SharedFromPartition(1 | 2))));
    }
}

#[test]
fn one_partition_reproduces_single_run() {
    let poly = six_bus();
    let odps = synthetic_odps(100, 1);
    let (single, _) = construct_pab_dr(&poly, &odps, &wide(2), &PabConfig::default()).unwrap();
    let cfg = ParallelConfig { partitions: 1, ..Default::default() };
    let (merged, _) = construct_parallel(&poly, &odps, &wide(2), &cfg).unwrap();
    assert_eq!(merged.len(), single.len());
    for (a, b) in merged.boundaries.iter().zip(&single.boundaries) {
        assert_eq!((&a.a, a.c), (&b.a, b.c));
    }
}

#[test]
fn verdicts_independent_of_schedule_and_strategy() {
    let poly = six_bus();
    for seed in [3, 4] {
        let odps = synthetic_odps(100, seed);
        let (single, _) = construct_pab_dr(&poly, &odps, &wide(2), &PabConfig::default()).unwrap();
        let want = verdicts(&single, &odps);
        for strategy in [PartitionStrategy::RoundRobin, PartitionStrategy::Contiguous, PartitionStrategy::SeededShuffle] {
            for exec in [ExecMode::Sequential, ExecMode::Parallel] {
                for sharing in [true, false] {
                    let cfg = ParallelConfig { partitions: 3, strategy, seed, exec, sharing, ..Default::default() };
                    let (merged, _) = construct_parallel(&poly, &odps, &wide(2), &cfg).unwrap();
                    assert_eq!(verdicts(&merged, &odps), want, "{strategy:?} {exec:?} sharing={sharing}");
                }
            }
        }
    }
}

#[test]
fn worker_milps_stay_within_partition_size() {
    let poly = six_bus();
    let odps = synthetic_odps(101, 6);
    for m in [2, 3, 4] {
        let cfg = ParallelConfig { partitions: m, ..Default::default() };
        let (_, traces) = construct_parallel(&poly, &odps, &wide(2), &cfg).unwrap();
        let bound = odps.len().div_ceil(m);
        for t in &traces {
            assert!(t.odp_count <= bound);
            assert!(t.largest_milp <= bound);
        }
        assert_eq!(traces.iter().map(|t| t.odp_count).sum::<usize>(), odps.len());
    }
}

#[test]
fn failing_worker_aborts_the_run() {
    let poly = six_bus();
    let odps = synthetic_odps(100, 1);
    for exec in [ExecMode::Sequential, ExecMode::Parallel] {
        let pab = PabConfig { big_m: BigM::Value(1.0), ..Default::default() };
        let cfg = ParallelConfig { partitions: 2, exec, pab, ..Default::default() };
        match construct_parallel(&poly, &odps, &wide(2), &cfg) {
            Err(Error::Worker { worker, source }) => {
                assert!((1..=2).contains(&worker));
                assert!(matches!(*source, Error::BigMTooSmall { .. }));
            }
            other => panic!("expected a worker failure, got {other:?}"),
        }
    }
}

#[test]
fn merge_rejects_different_boxes() {
    let a = Region::from_box(&InitBox::symmetric(2, 10.0));
    let b = Region::from_box(&InitBox::symmetric(2, 20.0));
    assert!(matches!(merge(&[a, b]), Err(Error::InvalidConfig(_))));
}

#[test]
fn merged_membership_is_conjunction() {
    let poly = six_bus();
    let init = wide(2);
    let parts: Vec<Region> = [1, 2, 3]
        .iter()
        .map(|&s| construct_pab_dr(&poly, &synthetic_odps(60, s), &init, &PabConfig::default()).unwrap().0)
        .collect();
    let merged = merge(&parts).unwrap();
    let mut r = rng(8);
    for _ in 0..1000 {
        let p: Vec<f64> = (0..2).map(|_| r.random_range(-120.0..120.0)).collect();
        let all = parts.iter().all(|reg| reg.contains(&p, 1e-9));
        assert_eq!(merged.contains(&p, 1e-9), all, "{p:?}");
    }
}

proptest! {
    #[test]
    fn partitions_cover_exactly_once(n in 1usize..200, m in 1usize..8, seed in any::<u64>(), which in 0usize..3) {
        prop_assume!(m <= n);
        let strategy = [PartitionStrategy::RoundRobin, PartitionStrategy::Contiguous, PartitionStrategy::SeededShuffle][which];
        let cfg = ParallelConfig { partitions: m, strategy, seed, ..Default::default() };
        let parts = partition_indices(n, &cfg).unwrap();
        prop_assert_eq!(parts.len(), m);
        let mut all = parts.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(parts.iter().all(|p| p.len() <= n.div_ceil(m) && !p.is_empty()));
        prop_assert_eq!(parts, partition_indices(n, &cfg).unwrap());
    }

    #[test]
    fn merge_of_interval_regions_is_intersection(cuts in proptest::collection::vec((-50.0f64..50.0, any::<bool>()), 1..6), x in -60.0f64..60.0) {
        let init = InitBox::symmetric(1, 100.0);
        let regions: Vec<Region> = cuts.iter().map(|&(c, upper)| {
            let mut r = Region::from_box(&init);
            let (a, c) = if upper { (-1.0, -c) } else { (1.0, c) };
            r.push(dispatch_region::region::Hyperplane { a: vec![a], c, u: vec![], excluded_count: 0, origin: Origin::Traditional }).unwrap();
            r
        }).collect();
        let merged = merge(&regions).unwrap();
        prop_assert_eq!(merged.contains(&[x], 0.0), regions.iter().all(|r| r.contains(&[x], 0.0)));
    }
}
