mod common;

use common::*;
use dispatch_region::solver::{
    dual_objective, solve_lp, solve_milp, verify_farkas, LpStatus, MilpStatus, SolverConfig,
};
use proptest::prelude::*;

#[test]
fn random_lps_match_vertex_enumeration() {
    let cfg = SolverConfig::default();
    let mut r = rng(7);
    let (mut optimal, mut infeasible) = (0, 0);
    for case in 0..50 {
        let lp = random_lp(&mut r);
        let sol = solve_lp(&lp, &cfg).unwrap();
        match vertex_oracle(&lp) {
            Some(best) => {
                optimal += 1;
                assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
                assert!((sol.objective - best).abs() <= 1e-7, "case {case}: {} vs {best}", sol.objective);
                assert!(lp.max_violation(&sol.x) <= cfg.feas_tol);
                let dual = dual_objective(&lp, &sol, 1e-9).expect("dual feasible");
                assert!((dual - sol.objective).abs() <= cfg.gap_tol.max(1e-8 * sol.objective.abs()));
            }
            None => {
                infeasible += 1;
                assert_eq!(sol.status, LpStatus::Infeasible, "case {case}");
                assert!(verify_farkas(&lp, sol.farkas.as_ref().unwrap(), 1e-9), "case {case}");
            }
        }
    }
    // the generator should exercise both outcomes
    assert!(optimal > 10 && infeasible > 0, "{optimal} optimal / {infeasible} infeasible");
}

#[test]
fn random_binary_programs_match_enumeration() {
    let cfg = SolverConfig::default();
    let mut r = rng(11);
    for case in 0..50 {
        let mip = random_binary_program(&mut r);
        let sol = solve_milp(&mip, &cfg).unwrap();
        match enumeration_oracle(&mip) {
            Some(best) => {
                assert_eq!(sol.status, MilpStatus::Optimal, "case {case}");
                let obj = sol.objective.unwrap();
                assert!((obj - best).abs() <= 1e-7, "case {case}: {obj} vs {best}");
                let x = sol.incumbent.as_ref().unwrap();
                for &j in &mip.integers {
                    assert!((x[j] - x[j].round()).abs() <= cfg.int_tol);
                }
            }
            None => assert_eq!(sol.status, MilpStatus::Infeasible, "case {case}"),
        }
    }
}

#[test]
fn milp_is_bit_deterministic() {
    let cfg = SolverConfig::default();
    let mut r = rng(99);
    for _ in 0..10 {
        let mip = random_binary_program(&mut r);
        let a = solve_milp(&mip, &cfg).unwrap();
        let b = solve_milp(&mip, &cfg).unwrap();
        assert_eq!(a.nodes, b.nodes);
        let bits = |v: &Option<Vec<f64>>| v.as_ref().map(|x| x.iter().map(|f| f.to_bits()).collect::<Vec<_>>());
        assert_eq!(bits(&a.incumbent), bits(&b.incumbent));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_lp_outcome_carries_a_valid_proof(seed in any::<u64>()) {
        let lp = random_lp(&mut rng(seed));
        let cfg = SolverConfig::default();
        let sol = solve_lp(&lp, &cfg).unwrap();
        match sol.status {
            LpStatus::Optimal => {
                prop_assert!(lp.max_violation(&sol.x) <= cfg.feas_tol);
                let dual = dual_objective(&lp, &sol, 1e-9).unwrap();
                prop_assert!((dual - sol.objective).abs() <= 1e-7);
            }
            LpStatus::Infeasible => prop_assert!(verify_farkas(&lp, sol.farkas.as_ref().unwrap(), 1e-9)),
            LpStatus::Unbounded => prop_assert!(false, "bounded generator produced unbounded LP"),
        }
    }
}
