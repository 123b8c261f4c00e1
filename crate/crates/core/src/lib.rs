//! Data-driven dispatchable regions for renewable generation.
//!
//! A DC network case and its dispatch base point define an operational
//! polytope ([`grid`]). Its projection onto forecast-error space is the
//! dispatchable region. [`pab`] builds an outer approximation from observed
//! forecast errors by repeatedly solving a separating-hyperplane MILP,
//! [`parallel`] splits that work across dataset partitions, and
//! [`region`] holds the feasibility oracle and the vertex-driven baseline.

pub mod compare;
pub mod error;
pub mod exec;
pub mod grid;
pub mod linalg;
pub mod odp;
pub mod pab;
pub mod parallel;
pub mod plot;
pub mod region;
pub mod solver;

pub use error::{Error, Result};
