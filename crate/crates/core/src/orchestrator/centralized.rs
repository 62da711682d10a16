use crate::community::{Settlement, StepLedger, TransactionLedger, WeightMatrix};
use crate::local::{add_microgrid, extract_schedule, LocalOptions, LocalSchedule, LocalVars, PeerLink};
use crate::milp::{MilpModel, Relation, Solution};
use crate::scenario::Scenario;

use super::RunError;

/// One MILP over every MG. Each directed peer export `s_ij <= 0` must be
/// matched by the counterpart's import `b_ji = -(1 - w_ij) s_ij`, and the
/// lost share `-w_ij s_ij` is charged at the community price.
pub fn build_centralized_model(
    scenario: &Scenario,
    weights: &WeightMatrix,
    opts: &LocalOptions,
) -> Result<(MilpModel, Vec<LocalVars>), RunError> {
    let n = scenario.len();
    let h = &scenario.horizon;
    let prices = &scenario.prices;
    let mut model = MilpModel::new(format!("centralized_{}", scenario.name));
    let mut all = Vec::with_capacity(n);
    for (i, mg) in scenario.microgrids.iter().enumerate() {
        let links: Vec<PeerLink> = (0..n)
            .filter(|&j| weights.is_valid(i, j))
            .map(|j| {
                let (import_max, export_min) = mg.peer_limit(&scenario.microgrids[j].id);
                PeerLink { peer: j, import_max, export_min }
            })
            .collect();
        let vars = add_microgrid(&mut model, mg, prices, h, opts, &links, false)
            .map_err(|e| RunError::Local { mg: mg.id.clone(), source: e })?;
        all.push(vars);
    }
    for i in 0..n {
        for (k, pv) in all[i].peers.iter().enumerate() {
            let j = pv.peer;
            let w = weights.get(i, j);
            let back = all[j].peers.iter().position(|q| q.peer == i).expect("weights are symmetric");
            for t in 0..h.steps {
                let s = all[i].peers[k].export[t];
                let b = all[j].peers[back].import[t];
                model.add_constraint(
                    format!("{}_{}_couple_{t}", scenario.microgrids[i].id, scenario.microgrids[j].id),
                    &[(b, 1.0), (s, 1.0 - w)],
                    Relation::Eq,
                    0.0,
                )?;
                if w > 0.0 {
                    model.add_objective_term(s, -w * prices.community[t] * h.dt_hours)?;
                }
            }
        }
    }
    Ok((model, all))
}

/// Splits a centralized solution into per-MG schedules and the ledger
/// implied by its peer flows.
pub fn split_centralized(
    scenario: &Scenario,
    weights: &WeightMatrix,
    vars: &[LocalVars],
    sol: &Solution,
) -> (Vec<LocalSchedule>, TransactionLedger) {
    let h = &scenario.horizon;
    let schedules: Vec<LocalSchedule> = scenario
        .microgrids
        .iter()
        .zip(vars)
        .map(|(mg, v)| {
            let mut s = extract_schedule(mg, &scenario.prices, h, v, sol);
            s.peer_cost = 0.0;
            s.objective = s.grid_cost + s.degradation_cost;
            s
        })
        .collect();
    let mut steps = Vec::with_capacity(h.steps);
    for t in 0..h.steps {
        let mut settlements = Vec::new();
        for (i, sched) in schedules.iter().enumerate() {
            for pv in &sched.peers {
                let j = pv.peer;
                if pv.export[t] < 0.0 {
                    let back = schedules[j].peers.iter().find(|q| q.peer == i).expect("symmetric links");
                    let sent = -pv.export[t];
                    let received = back.import[t];
                    settlements.push(Settlement {
                        seller: i,
                        buyer: j,
                        sent_kw: sent,
                        received_kw: received,
                        loss_kw: sent - received,
                        weight: weights.get(i, j),
                        case: 0,
                    });
                }
            }
        }
        let initial: Vec<f64> = schedules.iter().map(|s| s.net_exchange[t]).collect();
        let residual: Vec<f64> = schedules.iter().map(|s| s.grid_import[t] + s.grid_export[t]).collect();
        steps.push(StepLedger { t, price: scenario.prices.community[t], initial, residual, settlements });
    }
    let ledger = TransactionLedger {
        mg_ids: scenario.microgrids.iter().map(|m| m.id.clone()).collect(),
        dt_hours: h.dt_hours,
        steps,
    };
    (schedules, ledger)
}
