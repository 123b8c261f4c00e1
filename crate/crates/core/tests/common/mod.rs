//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use dispatch_region::solver::{
    solve_lp, LinearProgram, LpStatus, MixedIntegerProgram, Sense, SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian elimination with partial pivoting; `None` if (near) singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(p, c);
        b.swap(p, c);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Brute-force optimum of a bounded LP with only `≤` rows and finite bounds:
/// enumerate every point where `n` constraints (rows or bounds) are active,
/// keep the feasible ones, and take the best objective. `None` = infeasible.
pub fn vertex_oracle(lp: &LinearProgram) -> Option<f64> {
    assert!(lp.a_eq.is_empty());
    let n = lp.num_vars();
    let mut cons: Vec<(Vec<f64>, f64)> = lp.a_ub.iter().cloned().zip(lp.b_ub.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cons.push((e.clone(), lp.upper[j]));
        e[j] = -1.0;
        cons.push((e, -lp.lower[j]));
    }
    let mut best: Option<f64> = None;
    for idx in combinations(cons.len(), n) {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| cons[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| cons[i].1).collect();
        let Some(x) = gauss_solve(a, b) else { continue };
        let ok = cons
            .iter()
            .all(|(r, rhs)| r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= rhs + 1e-9);
        if ok {
            let v: f64 = lp.objective.iter().zip(&x).map(|(c, q)| c * q).sum();
            best = Some(match (best, lp.sense) {
                (None, _) => v,
                (Some(b), Sense::Maximize) => b.max(v),
                (Some(b), Sense::Minimize) => b.min(v),
            });
        }
    }
    best
}

pub fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.random_range(3..=6);
    let m = rng.random_range(4..=10);
    let sense = if rng.random_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let obj = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut lp = LinearProgram::new(sense, obj);
    for j in 0..n {
        let lo = rng.random_range(-3.0..0.0);
        let hi = rng.random_range(1.0..8.0);
        lp.set_bounds(j, lo, hi);
    }
    for _ in 0..m {
        let row = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
        lp.add_le(row, rng.random_range(-6.0..12.0));
    }
    lp
}

pub fn random_binary_program(rng: &mut ChaCha8Rng) -> MixedIntegerProgram {
    let nb = rng.random_range(2..=12);
    let nc = rng.random_range(0..=3);
    let n = nb + nc;
    let sense = if rng.random_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let obj = (0..n).map(|_| rng.random_range(-6.0..6.0)).collect();
    let mut lp = LinearProgram::new(sense, obj);
    for j in 0..nb {
        lp.set_bounds(j, 0.0, 1.0);
    }
    for j in nb..n {
        lp.set_bounds(j, 0.0, rng.random_range(1.0..5.0));
    }
    let m = rng.random_range(2..=6);
    for _ in 0..m {
        let row: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..5.0)).collect();
        let rhs = rng.random_range(0.0..(n as f64) * 1.5);
        lp.add_le(row, rhs);
    }
    MixedIntegerProgram { base: lp, integers: (0..nb).collect() }
}

/// Exhaustive optimum: every binary assignment, continuous part by LP.
pub fn enumeration_oracle(mip: &MixedIntegerProgram) -> Option<f64> {
    let nb = mip.integers.len();
    let cfg = SolverConfig::default();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << nb) {
        let mut lp = mip.base.clone();
        for (bit, &j) in mip.integers.iter().enumerate() {
            let v = ((mask >> bit) & 1) as f64;
            lp.lower[j] = v;
            lp.upper[j] = v;
        }
        let s = solve_lp(&lp, &cfg).unwrap();
        if s.status == LpStatus::Optimal {
            best = Some(match (best, lp.sense) {
                (None, _) => s.objective,
                (Some(b), Sense::Maximize) => b.max(s.objective),
                (Some(b), Sense::Minimize) => b.min(s.objective),
            });
        }
    }
    best
}

use dispatch_region::grid::{
    assemble_polytope, compute_shift_factors, parse_case, BasePoint, Bus, Line, Load, OperationalPolytope,
    PowerSystem, Rpg, Unit,
};
use dispatch_region::odp::{gen_odps, OdpGeneratorConfig, OdpSet, OdpSource};
use dispatch_region::region::feasibility_check;

pub fn load_case(name: &str) -> PowerSystem {
    parse_case(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

pub fn polytope_of(sys: &PowerSystem) -> OperationalPolytope {
    assemble_polytope(sys, &BasePoint::from_system(sys)).unwrap()
}

pub fn toy1() -> OperationalPolytope {
    polytope_of(&load_case("toy1.json"))
}

pub fn six_bus() -> OperationalPolytope {
    polytope_of(&load_case("six_bus.json"))
}

pub fn odps_1d(values: &[f64]) -> OdpSet {
    OdpSet::new(1, values.iter().map(|v| vec![*v]).collect(), OdpSource::Derived).unwrap()
}

pub fn toy1_odps() -> OdpSet {
    let f = std::fs::File::open(fixture("toy1.csv")).unwrap();
    OdpSet::read_csv(f, OdpSource::Derived).unwrap()
}

/// Forecast errors for the six-bus case: std 16 MW, correlation 0.3.
pub fn synthetic_odps(count: usize, seed: u64) -> OdpSet {
    gen_odps(&OdpGeneratorConfig {
        dimension: 2,
        std: vec![16.0, 16.0],
        correlation: vec![1.0, 0.3, 0.3, 1.0],
        truncation: None,
        count,
        seed,
    })
    .unwrap()
}

/// Feasibility of the network equations written out bus by bus with voltage
/// angles, independent of shift factors and of the polytope assembly.
pub fn direct_feasible(sys: &PowerSystem, dw: &[f64]) -> bool {
    let nb = sys.buses.len();
    let ng = sys.units.len();
    let index = sys.bus_index();
    let slack = index[&sys.slack_bus().unwrap()];
    // variables: corrective output per unit, then angle per bus
    let n = ng + nb;
    let mut lp = LinearProgram::new(Sense::Minimize, vec![0.0; n]);
    for (i, u) in sys.units.iter().enumerate() {
        lp.set_bounds(i, u.p - u.r_dn, u.p + u.r_up);
    }
    for b in 0..nb {
        if b == slack {
            lp.set_bounds(ng + b, 0.0, 0.0);
        } else {
            lp.set_bounds(ng + b, f64::NEG_INFINITY, f64::INFINITY);
        }
    }
    for b in 0..nb {
        // generation − outgoing flow = load − renewable output
        let mut row = vec![0.0; n];
        let mut rhs = 0.0;
        for (i, u) in sys.units.iter().enumerate() {
            if index[&u.bus] == b {
                row[i] += 1.0;
            }
        }
        for (j, r) in sys.rpg.iter().enumerate() {
            if index[&r.bus] == b {
                rhs -= r.w_e + dw[j];
            }
        }
        for l in &sys.loads {
            if index[&l.bus] == b {
                rhs += l.p;
            }
        }
        for l in &sys.lines {
            let (f, t) = (index[&l.from], index[&l.to]);
            let y = 1.0 / l.reactance;
            if f == b {
                row[ng + f] -= y;
                row[ng + t] += y;
            } else if t == b {
                row[ng + t] -= y;
                row[ng + f] += y;
            }
        }
        lp.add_eq(row, rhs);
    }
    for l in &sys.lines {
        let (f, t) = (index[&l.from], index[&l.to]);
        let y = 1.0 / l.reactance;
        let mut row = vec![0.0; n];
        row[ng + f] = y;
        row[ng + t] = -y;
        lp.add_le(row.clone(), l.capacity);
        lp.add_ge(row, -l.capacity);
    }
    solve_lp(&lp, &SolverConfig::default()).unwrap().status == LpStatus::Optimal
}

/// Uniform samples from a box, kept when the oracle reports zero violation.
pub fn sample_feasible(poly: &OperationalPolytope, count: usize, half: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        assert!(tries < 200 * count, "feasible region too small to sample");
        let p: Vec<f64> = (0..poly.dim()).map(|_| r.random_range(-half..half)).collect();
        if feasibility_check(poly, &p).unwrap().s <= 1e-9 {
            out.push(p);
        }
    }
    out
}

/// Random connected network with a balanced base point: a random spanning
/// tree plus extra chords, line capacities a margin above the base flows.
pub fn random_mesh(buses: usize, units: usize, rpgs: usize, seed: u64) -> PowerSystem {
    let mut r = rng(seed);
    let bus_list: Vec<Bus> = (1..=buses as u32).map(|id| Bus { id, slack: id == 1 }).collect();
    let mut edges: Vec<(u32, u32)> = (2..=buses as u32).map(|b| (r.random_range(1..b), b)).collect();
    let mut tries = 0;
    while edges.len() < buses - 1 + buses / 2 && tries < 1000 {
        tries += 1;
        let a = r.random_range(1..=buses as u32);
        let b = r.random_range(1..=buses as u32);
        if a != b && !edges.iter().any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)) {
            edges.push((a.min(b), a.max(b)));
        }
    }
    let mut lines: Vec<Line> = edges
        .iter()
        .enumerate()
        .map(|(i, &(from, to))| Line {
            id: i as u32 + 1,
            from,
            to,
            reactance: r.random_range(0.05..0.5),
            capacity: 1.0,
        })
        .collect();
    let unit_list: Vec<Unit> = (0..units)
        .map(|i| Unit {
            id: i as u32 + 1,
            bus: r.random_range(1..=buses as u32),
            p: r.random_range(30.0..80.0),
            r_up: r.random_range(8.0..20.0),
            r_dn: r.random_range(8.0..20.0),
        })
        .collect();
    let rpg: Vec<Rpg> = (0..rpgs)
        .map(|j| Rpg { id: j as u32 + 1, bus: r.random_range(1..=buses as u32), w_e: r.random_range(20.0..50.0) })
        .collect();
    let supply: f64 = unit_list.iter().map(|u| u.p).sum::<f64>() + rpg.iter().map(|w| w.w_e).sum::<f64>();
    let weights: Vec<f64> = (0..buses).map(|_| r.random_range(0.5..1.5)).collect();
    let wsum: f64 = weights.iter().sum();
    let loads: Vec<Load> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| Load { id: i as u32 + 1, bus: i as u32 + 1, p: supply * w / wsum })
        .collect();
    let mut sys = PowerSystem { buses: bus_list, lines: lines.clone(), units: unit_list, rpg, loads };
    let sf = compute_shift_factors(&sys).unwrap();
    let index = sys.bus_index();
    let mut inj = vec![0.0; buses];
    for u in &sys.units {
        inj[index[&u.bus]] += u.p;
    }
    for w in &sys.rpg {
        inj[index[&w.bus]] += w.w_e;
    }
    for l in &sys.loads {
        inj[index[&l.bus]] -= l.p;
    }
    let flows = sf.flows(&inj);
    for (l, f) in lines.iter_mut().zip(flows) {
        l.capacity = f.abs() + r.random_range(10.0..40.0);
    }
    sys.lines = lines;
    sys.validate().unwrap();
    sys
}
