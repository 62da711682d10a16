//! Per-microgrid day-ahead MILP: grid and peer exchange, storage with
//! piecewise-linear degradation, parked EVs and shiftable appliances.

mod audit;
mod build;
mod schedule;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{MilpBackend, MilpError, SolveStatus, SolverConfig};
use crate::scenario::{Horizon, MicrogridSpec, PriceSchedule, Scenario, ScenarioError};

pub use audit::audit_schedule;
pub use build::{
    build_local_model, degradation_terms, structural_check, EvVars, LoadVars, LocalVars, PeerVars, StorageVars,
};
pub(crate) use build::add_microgrid;
pub use schedule::{
    extract_schedule, read_schedule_csv, schedule_csv_string, write_schedule_csv, LoadTrace, LocalSchedule, PeerTrace,
    StorageTrace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalMode {
    /// Peer exchange fixed at zero; the community layer settles afterwards.
    #[default]
    Standalone,
    /// Peer exchange free within its limits and priced at the community price.
    CommunityAware,
}

/// Where the storage efficiency enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EfficiencyModel {
    /// Efficiency scales discharge in the power balance and charge in the
    /// energy recurrence.
    #[default]
    Paper,
    /// Discharge draws `p / zeta` from storage and delivers `p`; charge
    /// stores `zeta |p|`.
    Symmetric,
}

impl std::str::FromStr for EfficiencyModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(EfficiencyModel::Paper),
            "symmetric" => Ok(EfficiencyModel::Symmetric),
            other => Err(format!("unknown efficiency model {other:?} (expected paper or symmetric)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LocalOptions {
    pub mode: LocalMode,
    pub efficiency: EfficiencyModel,
}

/// A counterparty reachable by peer exchange, with this side's limits.
#[derive(Debug, Clone, PartialEq)]
pub struct PeerLink {
    pub peer: usize,
    pub import_max: f64,
    pub export_min: f64,
}

/// Every connected counterparty of microgrid `i`.
pub fn peer_links(scenario: &Scenario, i: usize) -> Vec<PeerLink> {
    let mg = &scenario.microgrids[i];
    (0..scenario.len())
        .filter(|&j| scenario.topology.connected(i, j))
        .map(|j| {
            let (import_max, export_min) = mg.peer_limit(&scenario.microgrids[j].id);
            PeerLink { peer: j, import_max, export_min }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalError {
    #[error(transparent)]
    Spec(#[from] ScenarioError),
    #[error("{mg}/{device}: {reason}")]
    Structural { mg: String, device: String, reason: String },
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error("{mg}: local problem infeasible (culprit: {hint})")]
    Infeasible { mg: String, hint: String },
    #[error("{mg}: solver stopped without a usable schedule: {detail}")]
    Limit { mg: String, detail: String },
    #[error("{mg}: schedule failed the feasibility audit: {issues}")]
    Audit { mg: String, issues: String },
}

/// Row-name fragments of each constraint family, in diagnosis order.
const FAMILIES: [(&str, &[&str]); 5] = [
    ("EV departure energy", &["_depart_"]),
    ("dispatchable load requirement", &["_load_"]),
    ("type-2 contiguity", &["_diff_"]),
    ("storage/EV energy recurrence", &["_energy_", "_hold_"]),
    ("power balance", &["_balance_"]),
];

pub(crate) fn infeasibility_hint(
    model: &crate::milp::MilpModel,
    backend: &dyn MilpBackend,
    cfg: &SolverConfig,
) -> String {
    for (family, tags) in FAMILIES {
        let relaxed = model.filter_constraints(|c| !tags.iter().any(|t| c.name.contains(t)));
        if let Ok(sol) = backend.solve(&relaxed, cfg) {
            if sol.status != SolveStatus::Infeasible {
                return family.to_string();
            }
        }
    }
    "bounds".to_string()
}

/// Builds, solves, extracts and audits one microgrid's schedule.
pub fn solve_local(
    mg: &MicrogridSpec,
    prices: &PriceSchedule,
    h: &Horizon,
    opts: &LocalOptions,
    peers: &[PeerLink],
    backend: &dyn MilpBackend,
    cfg: &SolverConfig,
) -> Result<LocalSchedule, LocalError> {
    let (model, vars) = build_local_model(mg, prices, h, opts, peers)?;
    let sol = backend.solve(&model, cfg)?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Limit if sol.has_values() => {
            log::warn!("{}: solver limit reached, using incumbent ({:?})", mg.id, sol.diagnostics);
        }
        SolveStatus::Infeasible => {
            return Err(LocalError::Infeasible { mg: mg.id.clone(), hint: infeasibility_hint(&model, backend, cfg) })
        }
        SolveStatus::Unbounded | SolveStatus::Limit => {
            return Err(LocalError::Limit {
                mg: mg.id.clone(),
                detail: sol.diagnostics.clone().unwrap_or_else(|| format!("{:?}", sol.status)),
            })
        }
    }
    let schedule = extract_schedule(mg, prices, h, &vars, &sol);
    let issues = audit_schedule(mg, prices, h, opts.efficiency, &schedule, cfg.feas_tol.max(1e-6));
    if !issues.is_empty() {
        return Err(LocalError::Audit { mg: mg.id.clone(), issues: issues.join("; ") });
    }
    Ok(schedule)
}
