use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::milp::{Solution, SolveStats, SolveStatus, VarId};
use crate::scenario::{Horizon, LoadKind, MicrogridSpec, PriceSchedule};

use super::LocalVars;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageTrace {
    pub name: String,
    pub discharge: Vec<f64>,
    pub charge: Vec<f64>,
    pub mode: Vec<f64>,
    /// `T + 1` points, start of each step then the end of the horizon.
    pub energy: Vec<f64>,
    /// Per-step SOS-2 weights; empty for vehicles.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degradation_cost: Vec<f64>,
}

impl StorageTrace {
    pub fn net_power(&self, t: usize) -> f64 {
        self.discharge[t] + self.charge[t]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadTrace {
    pub name: String,
    pub kind: LoadKind,
    pub power_kw: f64,
    pub on: Vec<f64>,
    /// Transition markers `0..=T` for type-2 loads.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub start: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub end: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerTrace {
    /// Index of the counterpart in the scenario.
    pub peer: usize,
    pub import: Vec<f64>,
    pub export: Vec<f64>,
    pub mode: Vec<f64>,
}

/// One microgrid's optimized dispatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSchedule {
    pub mg_id: String,
    pub steps: usize,
    pub dt_hours: f64,
    pub grid_import: Vec<f64>,
    pub grid_export: Vec<f64>,
    pub grid_mode: Vec<f64>,
    pub storages: Vec<StorageTrace>,
    pub evs: Vec<StorageTrace>,
    pub loads: Vec<LoadTrace>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub peers: Vec<PeerTrace>,
    /// Positive when the microgrid needs power from outside.
    pub net_exchange: Vec<f64>,
    pub objective: f64,
    pub grid_cost: f64,
    pub degradation_cost: f64,
    pub peer_cost: f64,
    pub status: SolveStatus,
    pub stats: SolveStats,
}

fn clean(x: f64) -> f64 {
    if x.abs() < 1e-10 {
        0.0
    } else {
        x
    }
}

pub fn extract_schedule(
    mg: &MicrogridSpec,
    prices: &PriceSchedule,
    h: &Horizon,
    vars: &LocalVars,
    sol: &Solution,
) -> LocalSchedule {
    let steps = h.steps;
    let dt = h.dt_hours;
    let get = |v: VarId| clean(sol.value(v));
    let opt = |v: Option<VarId>| v.map_or(0.0, get);
    let all = |vs: &[VarId]| vs.iter().map(|&v| get(v)).collect::<Vec<f64>>();

    let storages: Vec<StorageTrace> = mg
        .storages
        .iter()
        .zip(&vars.storages)
        .map(|(es, v)| {
            let f = v.curve.cumulative_costs();
            let alpha: Vec<Vec<f64>> = v.alpha.iter().map(|a| all(a)).collect();
            let degradation_cost = alpha.iter().map(|a| a.iter().zip(&f).map(|(x, y)| x * y).sum()).collect();
            StorageTrace {
                name: es.name.clone(),
                discharge: all(&v.discharge),
                charge: all(&v.charge),
                mode: all(&v.mode),
                energy: all(&v.energy),
                alpha,
                degradation_cost,
            }
        })
        .collect();
    let evs = mg
        .evs
        .iter()
        .zip(&vars.evs)
        .map(|(ev, v)| StorageTrace {
            name: ev.name.clone(),
            discharge: v.discharge.iter().map(|&x| opt(x)).collect(),
            charge: v.charge.iter().map(|&x| opt(x)).collect(),
            mode: v.mode.iter().map(|&x| opt(x)).collect(),
            energy: all(&v.energy),
            alpha: vec![],
            degradation_cost: vec![],
        })
        .collect();
    let loads = mg
        .dispatchable_loads
        .iter()
        .zip(&vars.loads)
        .map(|(l, v)| {
            let markers = |m: &[Option<VarId>]| match l.kind {
                LoadKind::Type1 => vec![],
                LoadKind::Type2 => m.iter().map(|&x| opt(x)).collect(),
            };
            LoadTrace {
                name: l.name.clone(),
                kind: l.kind,
                power_kw: l.power_kw,
                on: v.on.iter().map(|&x| opt(x)).collect(),
                start: markers(&v.start),
                end: markers(&v.end),
            }
        })
        .collect();
    let peers: Vec<PeerTrace> = vars
        .peers
        .iter()
        .map(|p| PeerTrace {
            peer: p.peer,
            import: all(&p.import),
            export: all(&p.export),
            mode: all(&p.mode),
        })
        .collect();

    let grid_import = all(&vars.grid_import);
    let grid_export = all(&vars.grid_export);
    let net_exchange: Vec<f64> = (0..steps)
        .map(|t| grid_import[t] + grid_export[t] + peers.iter().map(|p| p.import[t] + p.export[t]).sum::<f64>())
        .collect();
    let grid_cost = (0..steps).map(|t| (grid_import[t] * prices.buy[t] + grid_export[t] * prices.sell[t]) * dt).sum();
    let peer_cost = (0..steps)
        .map(|t| peers.iter().map(|p| (p.import[t] + p.export[t]) * prices.community[t] * dt).sum::<f64>())
        .sum();
    let degradation_cost = storages.iter().map(|s| s.degradation_cost.iter().sum::<f64>()).sum();
    LocalSchedule {
        mg_id: mg.id.clone(),
        steps,
        dt_hours: dt,
        grid_mode: all(&vars.grid_mode),
        grid_import,
        grid_export,
        storages,
        evs,
        loads,
        peers,
        net_exchange,
        objective: sol.objective,
        grid_cost,
        degradation_cost,
        peer_cost,
        status: sol.status,
        stats: sol.stats.clone(),
    }
}

impl LocalSchedule {
    /// Per-step degradation cost summed over storages.
    pub fn degradation_by_step(&self) -> Vec<f64> {
        (0..self.steps).map(|t| self.storages.iter().map(|s| s.degradation_cost[t]).sum()).collect()
    }

    pub fn columns(&self) -> Vec<(String, Vec<f64>)> {
        let n = self.steps;
        let mut cols = vec![
            ("t".to_string(), (0..n).map(|t| t as f64).collect()),
            ("p_grid".to_string(), (0..n).map(|t| self.grid_import[t] + self.grid_export[t]).collect()),
        ];
        for (kind, traces) in [("es", &self.storages), ("ev", &self.evs)] {
            for s in traces {
                cols.push((format!("p_{kind}_{}", s.name), (0..n).map(|t| s.net_power(t)).collect()));
                cols.push((format!("e_{kind}_{}_kwh", s.name), s.energy[1..].to_vec()));
            }
        }
        for l in &self.loads {
            cols.push((format!("load_{}", l.name), l.on.iter().map(|x| x * l.power_kw).collect()));
        }
        if !self.peers.is_empty() {
            cols.push((
                "p_peer".to_string(),
                (0..n).map(|t| self.peers.iter().map(|p| p.import[t] + p.export[t]).sum()).collect(),
            ));
        }
        cols.push(("p_c".to_string(), self.net_exchange.clone()));
        cols
    }
}

/// Plot-ready CSV: one row per step, energies at the end of each step.
pub fn schedule_csv_string(s: &LocalSchedule) -> String {
    let cols = s.columns();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(cols.iter().map(|c| c.0.as_str())).expect("in-memory write");
    for t in 0..s.steps {
        w.write_record(cols.iter().map(|c| c.1[t].to_string())).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn write_schedule_csv(s: &LocalSchedule, path: &Path) -> io::Result<()> {
    std::fs::write(path, schedule_csv_string(s))
}

/// Reads a schedule CSV back as `(header, rows)`.
pub fn read_schedule_csv(path: &Path) -> io::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(io::Error::other)?;
    let header = r.headers().map_err(io::Error::other)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io::Error::other)?;
        let row = rec
            .iter()
            .map(|x| x.parse::<f64>().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)))
            .collect::<io::Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}
