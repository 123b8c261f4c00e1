//! DC network model, shift factors, and the operational polytope.

mod flow;
mod polytope;

pub use flow::{compute_shift_factors, dc_power_flow, ShiftFactorMatrix};
pub use polytope::{assemble_polytope, Direction, OperationalPolytope, RecourseColumn, RowKind};

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("case syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("no slack bus designated")]
    MissingSlack,
    #[error("more than one slack bus: {0:?}")]
    MultipleSlack(Vec<u32>),
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u32 },
    #[error("{kind} {id} references unknown bus {bus}")]
    UnknownBus { kind: &'static str, id: u32, bus: u32 },
    #[error("line {0} has nonpositive reactance")]
    NonPositiveReactance(u32),
    #[error("line {0} has nonpositive capacity")]
    NonPositiveCapacity(u32),
    #[error("line {0} connects a bus to itself")]
    SelfLoop(u32),
    #[error("unit {0} has a negative or non-finite reserve")]
    InvalidReserve(u32),
    #[error("{kind} {id} has a non-finite power value")]
    NonFinite { kind: &'static str, id: u32 },
    #[error("network is disconnected: bus {0} is unreachable from the slack")]
    Disconnected(u32),
    #[error("reduced susceptance matrix is singular")]
    SingularSusceptance,
    #[error("injections are unbalanced (net {0} MW)")]
    Unbalanced(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: u32,
    #[serde(default)]
    pub slack: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    /// Per-unit series reactance.
    pub reactance: f64,
    /// Flow limit in MW, both directions.
    pub capacity: f64,
}

/// Conventional unit with its base-point output and reserves (MW).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Unit {
    pub id: u32,
    pub bus: u32,
    pub p: f64,
    pub r_up: f64,
    pub r_dn: f64,
}

/// Renewable unit with its forecast output (MW).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rpg {
    pub id: u32,
    pub bus: u32,
    pub w_e: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub id: u32,
    pub bus: u32,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSystem {
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub lines: Vec<Line>,
    #[serde(default)]
    pub units: Vec<Unit>,
    #[serde(default)]
    pub rpg: Vec<Rpg>,
    #[serde(default)]
    pub loads: Vec<Load>,
}

/// Predispatch decision `x = {p, r}` taken from the case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasePoint {
    pub p: Vec<f64>,
    pub r_up: Vec<f64>,
    pub r_dn: Vec<f64>,
}

impl BasePoint {
    pub fn from_system(sys: &PowerSystem) -> Self {
        Self {
            p: sys.units.iter().map(|u| u.p).collect(),
            r_up: sys.units.iter().map(|u| u.r_up).collect(),
            r_dn: sys.units.iter().map(|u| u.r_dn).collect(),
        }
    }
}

/// Parses and validates a case document.
pub fn parse_case(text: &str) -> Result<PowerSystem, GridError> {
    let sys: PowerSystem = serde_json::from_str(text).map_err(|e| GridError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    sys.validate()?;
    Ok(sys)
}

pub fn serialize_case(sys: &PowerSystem) -> String {
    serde_json::to_string_pretty(sys).expect("case serialization cannot fail")
}

impl PowerSystem {
    pub fn slack_bus(&self) -> Option<u32> {
        self.buses.iter().find(|b| b.slack).map(|b| b.id)
    }

    /// Bus id → position in `buses`.
    pub fn bus_index(&self) -> HashMap<u32, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }

    pub fn validate(&self) -> Result<(), GridError> {
        fn unique<I: Iterator<Item = u32>>(kind: &'static str, ids: I) -> Result<(), GridError> {
            let mut seen = HashSet::new();
            for id in ids {
                if !seen.insert(id) {
                    return Err(GridError::DuplicateId { kind, id });
                }
            }
            Ok(())
        }
        unique("bus", self.buses.iter().map(|b| b.id))?;
        unique("line", self.lines.iter().map(|l| l.id))?;
        unique("unit", self.units.iter().map(|u| u.id))?;
        unique("rpg", self.rpg.iter().map(|r| r.id))?;
        unique("load", self.loads.iter().map(|l| l.id))?;

        let slacks: Vec<u32> = self.buses.iter().filter(|b| b.slack).map(|b| b.id).collect();
        match slacks.len() {
            0 => return Err(GridError::MissingSlack),
            1 => {}
            _ => return Err(GridError::MultipleSlack(slacks)),
        }

        let index = self.bus_index();
        let check_bus = |kind: &'static str, id: u32, bus: u32| {
            if index.contains_key(&bus) {
                Ok(())
            } else {
                Err(GridError::UnknownBus { kind, id, bus })
            }
        };
        for l in &self.lines {
            check_bus("line", l.id, l.from)?;
            check_bus("line", l.id, l.to)?;
            if l.from == l.to {
                return Err(GridError::SelfLoop(l.id));
            }
            if !(l.reactance > 0.0 && l.reactance.is_finite()) {
                return Err(GridError::NonPositiveReactance(l.id));
            }
            if !(l.capacity > 0.0 && l.capacity.is_finite()) {
                return Err(GridError::NonPositiveCapacity(l.id));
            }
        }
        for u in &self.units {
            check_bus("unit", u.id, u.bus)?;
            if !u.p.is_finite() {
                return Err(GridError::NonFinite { kind: "unit", id: u.id });
            }
            if !(u.r_up >= 0.0 && u.r_dn >= 0.0 && u.r_up.is_finite() && u.r_dn.is_finite()) {
                return Err(GridError::InvalidReserve(u.id));
            }
        }
        for r in &self.rpg {
            check_bus("rpg", r.id, r.bus)?;
            if !r.w_e.is_finite() {
                return Err(GridError::NonFinite { kind: "rpg", id: r.id });
            }
        }
        for l in &self.loads {
            check_bus("load", l.id, l.bus)?;
            if !l.p.is_finite() {
                return Err(GridError::NonFinite { kind: "load", id: l.id });
            }
        }

        // Connectivity from the slack.
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for l in &self.lines {
            let (f, t) = (index[&l.from], index[&l.to]);
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; n];
        let start = index[&slacks[0]];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(b) = queue.pop_front() {
            for &nb in &adj[b] {
                if !seen[nb] {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(GridError::Disconnected(self.buses[i].id));
        }
        Ok(())
    }
}
