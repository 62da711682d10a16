//! End-to-end runs: local solves, community coordination and accounting,
//! plus the direct-transaction and centralized baselines.

mod accounting;
mod centralized;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::community::{build_weight_matrix, coordinate, coordinate_traced, CommunityError, PairingEvent, TransactionLedger};
use crate::local::{
    audit_schedule, infeasibility_hint, peer_links, solve_local, EfficiencyModel, LocalError, LocalMode, LocalOptions,
    LocalSchedule,
};
use crate::milp::{MilpBackend, MilpError, SolveStatus, SolverConfig};
use crate::scenario::Scenario;

pub use accounting::{account, grid_price, Accounts, MgCost};
pub use centralized::{build_centralized_model, split_centralized};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Hierarchical,
    Direct,
    Centralized,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Hierarchical => "hierarchical",
            RunMode::Direct => "direct",
            RunMode::Centralized => "centralized",
        }
    }
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hierarchical" => Ok(RunMode::Hierarchical),
            "direct" => Ok(RunMode::Direct),
            "centralized" => Ok(RunMode::Centralized),
            other => Err(format!("unknown mode {other:?} (expected hierarchical, direct or centralized)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: RunMode,
    pub solver: SolverConfig,
    pub efficiency: EfficiencyModel,
    /// Local problems see peer variables only in community-aware mode.
    pub local_mode: LocalMode,
    pub seed: u64,
    /// Solve local problems on the rayon pool.
    pub parallel: bool,
    /// Record every iteration of the coordination loop.
    pub trace_pairing: bool,
}

impl RunConfig {
    pub fn new(mode: RunMode) -> Self {
        RunConfig {
            mode,
            solver: SolverConfig::default(),
            efficiency: EfficiencyModel::default(),
            local_mode: LocalMode::default(),
            seed: 0,
            parallel: true,
            trace_pairing: false,
        }
    }

    fn local_options(&self) -> LocalOptions {
        LocalOptions { mode: self.local_mode, efficiency: self.efficiency }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{mg}: {source}")]
    Local { mg: String, source: LocalError },
    #[error(transparent)]
    Community(#[from] CommunityError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error("centralized problem infeasible (culprit: {hint})")]
    CentralizedInfeasible { hint: String },
    #[error("centralized solve failed: {0}")]
    CentralizedLimit(String),
    #[error("centralized schedule for {mg} failed the audit: {issues}")]
    CentralizedAudit { mg: String, issues: String },
    #[error("ledger does not match the schedules: {0}")]
    Mismatch(String),
    #[error("reports come from different scenarios ({a} vs {b})")]
    HashMismatch { a: String, b: String },
}

impl RunError {
    /// Validation problems (bad input) as opposed to solver failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            RunError::Local { source: LocalError::Spec(_) | LocalError::Structural { .. }, .. }
                | RunError::Community(CommunityError::InvalidWeight { .. })
                | RunError::HashMismatch { .. }
        )
    }
}

/// Wall-clock seconds per phase; excluded from determinism checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub local_solve_s: f64,
    pub coordination_s: f64,
    pub centralized_solve_s: f64,
    pub accounting_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub scenario: String,
    pub scenario_hash: String,
    pub mode: RunMode,
    pub backend: String,
    pub per_mg: Vec<MgCost>,
    pub totals: MgCost,
    pub loss_kwh: f64,
    pub loss_cost: f64,
    pub settlements: usize,
    /// Branch-and-bound nodes summed over all solves.
    pub solver_nodes: u64,
    pub timings: Timings,
}

impl CostReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// The report with timings zeroed, for byte comparisons across runs.
    pub fn without_timings(&self) -> CostReport {
        CostReport { timings: Timings::default(), ..self.clone() }
    }
}

/// SHA-256 of the scenario's canonical JSON.
pub fn scenario_hash(scenario: &Scenario) -> String {
    hex::encode(Sha256::digest(serde_json::to_vec(scenario).expect("scenario serializes")))
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub schedules: Vec<LocalSchedule>,
    pub ledger: TransactionLedger,
    pub report: CostReport,
    pub trace: Option<Vec<PairingEvent>>,
}

/// Solves every MG's local problem, in scenario order.
pub fn solve_locals(
    scenario: &Scenario,
    cfg: &RunConfig,
    backend: &dyn MilpBackend,
) -> Result<Vec<LocalSchedule>, RunError> {
    let opts = cfg.local_options();
    let one = |i: usize| {
        let mg = &scenario.microgrids[i];
        let links = peer_links(scenario, i);
        solve_local(mg, &scenario.prices, &scenario.horizon, &opts, &links, backend, &cfg.solver)
            .map_err(|e| RunError::Local { mg: mg.id.clone(), source: e })
    };
    #[cfg(feature = "parallel")]
    if cfg.parallel {
        use rayon::prelude::*;
        return (0..scenario.len()).into_par_iter().map(one).collect();
    }
    (0..scenario.len()).map(one).collect()
}

pub fn run(scenario: &Scenario, cfg: &RunConfig, backend: &dyn MilpBackend) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let mut timings = Timings::default();
    let weights = build_weight_matrix(&scenario.topology, &scenario.microgrids)?;
    let mut trace = None;
    let solver_nodes: u64;
    let (schedules, ledger) = match cfg.mode {
        RunMode::Direct | RunMode::Hierarchical => {
            let t0 = Instant::now();
            let schedules = solve_locals(scenario, cfg, backend)?;
            timings.local_solve_s = t0.elapsed().as_secs_f64();
            solver_nodes = schedules.iter().map(|s| s.stats.nodes).sum();
            let t1 = Instant::now();
            let ledger = if cfg.mode == RunMode::Direct {
                let p_c: Vec<Vec<f64>> = schedules.iter().map(|s| s.net_exchange.clone()).collect();
                let ids = schedules.iter().map(|s| s.mg_id.clone()).collect();
                TransactionLedger::direct(ids, scenario.horizon.dt_hours, &p_c, &scenario.prices)
            } else if cfg.trace_pairing {
                let (ledger, events) = coordinate_traced(&schedules, &weights, &scenario.prices)?;
                trace = Some(events);
                ledger
            } else {
                coordinate(&schedules, &weights, &scenario.prices)?
            };
            timings.coordination_s = t1.elapsed().as_secs_f64();
            (schedules, ledger)
        }
        RunMode::Centralized => {
            let t0 = Instant::now();
            let opts = LocalOptions { mode: LocalMode::CommunityAware, efficiency: cfg.efficiency };
            let (model, vars) = build_centralized_model(scenario, &weights, &opts)?;
            let sol = backend.solve(&model, &cfg.solver)?;
            solver_nodes = sol.stats.nodes;
            match sol.status {
                SolveStatus::Optimal => {}
                SolveStatus::Limit if sol.has_values() => {
                    log::warn!("centralized: solver limit reached, using incumbent ({:?})", sol.diagnostics);
                }
                SolveStatus::Infeasible => {
                    return Err(RunError::CentralizedInfeasible { hint: infeasibility_hint(&model, backend, &cfg.solver) })
                }
                _ => return Err(RunError::CentralizedLimit(sol.diagnostics.clone().unwrap_or_else(|| format!("{:?}", sol.status)))),
            }
            let (schedules, ledger) = split_centralized(scenario, &weights, &vars, &sol);
            for (mg, s) in scenario.microgrids.iter().zip(&schedules) {
                let issues = audit_schedule(mg, &scenario.prices, &scenario.horizon, cfg.efficiency, s, cfg.solver.feas_tol.max(1e-6));
                if !issues.is_empty() {
                    return Err(RunError::CentralizedAudit { mg: mg.id.clone(), issues: issues.join("; ") });
                }
            }
            timings.centralized_solve_s = t0.elapsed().as_secs_f64();
            (schedules, ledger)
        }
    };
    let t2 = Instant::now();
    let accounts = account(&schedules, &ledger, &scenario.prices)?;
    timings.accounting_s = t2.elapsed().as_secs_f64();
    timings.total_s = start.elapsed().as_secs_f64();
    let report = CostReport {
        scenario: scenario.name.clone(),
        scenario_hash: scenario_hash(scenario),
        mode: cfg.mode,
        backend: backend.name().to_string(),
        per_mg: accounts.per_mg,
        totals: accounts.totals,
        loss_kwh: accounts.loss_kwh,
        loss_cost: accounts.loss_cost,
        settlements: ledger.settlement_count(),
        solver_nodes,
        timings,
    };
    Ok(RunOutput { schedules, ledger, report, trace })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub mode: RunMode,
    pub total_cost: f64,
    pub improvement_pct: f64,
    pub loss_cost: f64,
    pub wall_time_s: f64,
}

/// Mode-by-mode summary; every report must come from the same scenario.
pub fn compare(reports: &[CostReport]) -> Result<Vec<ComparisonRow>, RunError> {
    if let Some(first) = reports.first() {
        if let Some(other) = reports.iter().find(|r| r.scenario_hash != first.scenario_hash) {
            return Err(RunError::HashMismatch { a: first.scenario_hash.clone(), b: other.scenario_hash.clone() });
        }
    }
    Ok(reports
        .iter()
        .map(|r| ComparisonRow {
            mode: r.mode,
            total_cost: r.totals.total,
            improvement_pct: r.totals.improvement_pct,
            loss_cost: r.loss_cost,
            wall_time_s: r.timings.total_s,
        })
        .collect())
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["mode", "total_cost", "improvement_pct", "loss_cost", "wall_time_s"]).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.mode.to_string(),
            r.total_cost.to_string(),
            r.improvement_pct.to_string(),
            r.loss_cost.to_string(),
            r.wall_time_s.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let mut out = format!("{:<14} {:>14} {:>10} {:>10} {:>12}\n", "mode", "total cost", "improv %", "loss", "wall time s");
    for r in rows {
        out += &format!(
            "{:<14} {:>14.4} {:>10.3} {:>10.4} {:>12.3}\n",
            r.mode.as_str(),
            r.total_cost,
            r.improvement_pct,
            r.loss_cost,
            r.wall_time_s
        );
    }
    out
}

#[cfg(test)]
mod tests;
