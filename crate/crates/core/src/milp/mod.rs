//! Language-neutral MILP layer: model building, a branch-and-bound solver
//! over a bounded dual simplex, an enumeration oracle for tests, an
//! independent feasibility audit and an LP-format dump.

mod audit;
mod bnb;
mod lpfile;
mod model;
mod reference;
mod simplex;
mod sos;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use audit::{audit, AuditIssue};
pub use bnb::BranchAndBound;
pub use lpfile::{to_lp_string, write_lp};
pub use model::{Constraint, ConstraintId, MilpModel, Relation, Sos2Group, VarId, VarKind, Variable};
pub use reference::{solve_reference, ReferenceEnumeration};
pub use sos::encode_sos2_as_binaries;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MilpError {
    #[error("unknown variable index {0}")]
    UnknownVariable(usize),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid bounds for {name}: [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("SOS-2 group {0} needs at least two members")]
    Sos2TooShort(String),
    #[error("SOS-2 group {0} lists a variable twice")]
    Sos2Duplicate(String),
    #[error("model has no variables")]
    EmptyModel,
    #[error("reference solver ceiling exceeded: {count} discrete variables > {ceiling}")]
    CeilingExceeded { count: usize, ceiling: usize },
    #[error("unknown solver backend {0:?}")]
    UnknownBackend(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node, time or iteration budget exhausted; `values` hold the best
    /// incumbent when one exists.
    Limit,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_iterations: u64,
    /// LP subproblems solved (enumeration leaves for the reference solver).
    pub subproblems: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub stats: SolveStats,
    pub diagnostics: Option<String>,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn has_values(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.index()]
    }

    pub(crate) fn without_point(status: SolveStatus, stats: SolveStats, diagnostics: Option<String>) -> Self {
        let objective = match status {
            SolveStatus::Infeasible => f64::INFINITY,
            SolveStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
        Solution { status, objective, values: Vec::new(), stats, diagnostics }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub feas_tol: f64,
    pub int_tol: f64,
    /// Relative optimality gap at which branch-and-bound stops.
    pub rel_gap: f64,
    pub abs_gap: f64,
    pub node_limit: u64,
    pub time_limit: Option<Duration>,
    pub lp_iteration_limit: u64,
    /// Kept for interface stability; both bundled backends are deterministic.
    pub seed: u64,
    /// Largest discrete-variable count the reference solver accepts.
    pub reference_ceiling: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feas_tol: 1e-6,
            int_tol: 1e-5,
            rel_gap: 1e-6,
            abs_gap: 1e-9,
            node_limit: 200_000,
            time_limit: None,
            lp_iteration_limit: 5_000_000,
            seed: 0,
            reference_ceiling: 25,
        }
    }
}

/// A MILP engine: model in, solution out, deterministic for a fixed config.
pub trait MilpBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, model: &MilpModel, cfg: &SolverConfig) -> Result<Solution, MilpError>;
}

/// Env var naming the backend used by [`backend_from_env`].
pub const BACKEND_ENV: &str = "EMS_SOLVER_BACKEND";

pub fn backend_by_name(name: &str) -> Result<Box<dyn MilpBackend>, MilpError> {
    match name.trim().to_ascii_lowercase().as_str() {
        "" | "bnb" | "branch-and-bound" | "default" => Ok(Box::new(BranchAndBound)),
        "reference" | "enumeration" => Ok(Box::new(ReferenceEnumeration)),
        other => Err(MilpError::UnknownBackend(other.to_string())),
    }
}

/// Backend named by `EMS_SOLVER_BACKEND`, defaulting to branch-and-bound.
pub fn backend_from_env() -> Result<Box<dyn MilpBackend>, MilpError> {
    backend_by_name(&std::env::var(BACKEND_ENV).unwrap_or_default())
}

/// Solves with the bundled branch-and-bound backend.
pub fn solve(model: &MilpModel, cfg: &SolverConfig) -> Result<Solution, MilpError> {
    BranchAndBound.solve(model, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_lower_bound() {
        let mut m = MilpModel::new("t");
        let x = m.continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        m.add_constraint("lo", &[(x, 1.0)], Relation::Ge, 3.0).unwrap();
        m.set_objective(&[(x, 1.0)]).unwrap();
        let s = solve(&m, &SolverConfig::default()).unwrap();
        assert!(s.is_optimal());
        assert!((s.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn pick_one_binary() {
        let mut m = MilpModel::new("t");
        let x = m.binary("x").unwrap();
        let y = m.binary("y").unwrap();
        m.add_constraint("cap", &[(x, 1.0), (y, 1.0)], Relation::Le, 1.0).unwrap();
        m.set_objective(&[(x, -1.0), (y, -1.0)]).unwrap();
        let s = solve(&m, &SolverConfig::default()).unwrap();
        assert!(s.is_optimal());
        assert!((s.objective + 1.0).abs() < 1e-9);
        assert!(((s.value(x) + s.value(y)) - 1.0).abs() < 1e-9);
        assert!(s.value(x) == 0.0 || s.value(x) == 1.0);
    }

    #[test]
    fn infeasible_pair() {
        let mut m = MilpModel::new("t");
        let x = m.continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        m.add_constraint("a", &[(x, 1.0)], Relation::Ge, 2.0).unwrap();
        m.add_constraint("b", &[(x, 1.0)], Relation::Le, 1.0).unwrap();
        let s = solve(&m, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn empty_model_is_an_error() {
        let m = MilpModel::new("empty");
        assert_eq!(solve(&m, &SolverConfig::default()).unwrap_err(), MilpError::EmptyModel);
    }

    #[test]
    fn backend_names() {
        assert_eq!(backend_by_name("bnb").unwrap().name(), "branch-and-bound");
        assert_eq!(backend_by_name("reference").unwrap().name(), "reference-enumeration");
        assert!(backend_by_name("gurobi").is_err());
    }
}
