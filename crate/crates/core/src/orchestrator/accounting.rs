use serde::{Deserialize, Serialize};

use crate::community::TransactionLedger;
use crate::local::LocalSchedule;
use crate::scenario::PriceSchedule;

use super::RunError;

/// Cost rows of one MG, or of the whole community in `totals`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgCost {
    pub id: String,
    /// Net exchange of the local schedules traded directly with the grid,
    /// plus degradation.
    pub original: f64,
    /// Residual grid exchange after coordination.
    pub grid_side: f64,
    /// Peer payments at the community price plus this MG's loss share.
    pub community: f64,
    pub degradation: f64,
    pub total: f64,
    /// `(original - total) / |original|` in percent; 0 when `original` is 0.
    pub improvement_pct: f64,
}

impl MgCost {
    fn new(id: String, original: f64, grid_side: f64, community: f64, degradation: f64) -> Self {
        let total = grid_side + community + degradation;
        let improvement_pct = if original == 0.0 { 0.0 } else { 100.0 * (original - total) / original.abs() };
        MgCost { id, original, grid_side, community, degradation, total, improvement_pct }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accounts {
    pub per_mg: Vec<MgCost>,
    pub totals: MgCost,
    /// Energy lost in peer transfers over the horizon.
    pub loss_kwh: f64,
    /// Its value at the community price; equals the summed community column.
    pub loss_cost: f64,
}

/// Grid price of a signed exchange: imports at the buy price, exports at
/// the sell price (negative cost).
pub fn grid_price(x: f64, buy: f64, sell: f64) -> f64 {
    if x > 0.0 {
        x * buy
    } else {
        x * sell
    }
}

const MATCH_TOL: f64 = 1e-9;

/// Prices the schedules against the ledger. Each settled kWh is booked at
/// the community price for both sides on the received amount; the loss is
/// split evenly between buyer and seller.
pub fn account(
    schedules: &[LocalSchedule],
    ledger: &TransactionLedger,
    prices: &PriceSchedule,
) -> Result<Accounts, RunError> {
    let n = schedules.len();
    if ledger.mg_ids.len() != n || schedules.iter().zip(&ledger.mg_ids).any(|(s, id)| &s.mg_id != id) {
        return Err(RunError::Mismatch("ledger microgrids differ from the schedules".into()));
    }
    let dt = ledger.dt_hours;
    let mut original = vec![0.0; n];
    let mut grid_side = vec![0.0; n];
    let mut community = vec![0.0; n];
    let mut loss_cost = 0.0;
    for step in &ledger.steps {
        let t = step.t;
        let (buy, sell, price) = (prices.buy[t], prices.sell[t], step.price);
        for (i, s) in schedules.iter().enumerate() {
            let p = s.net_exchange[t];
            let scale = 1.0 + p.abs();
            let settled = step.initial[i] - step.peer_net(i);
            if (step.initial[i] - p).abs() > MATCH_TOL * scale || (step.residual[i] - settled).abs() > 1e-7 * scale {
                return Err(RunError::Mismatch(format!(
                    "{} at t={t}: schedule {p}, ledger initial {}, residual {} but settlements leave {settled}",
                    s.mg_id, step.initial[i], step.residual[i]
                )));
            }
            original[i] += grid_price(p, buy, sell) * dt;
            grid_side[i] += grid_price(step.residual[i], buy, sell) * dt;
        }
        for st in &step.settlements {
            let half_loss = 0.5 * st.loss_kw * price * dt;
            community[st.buyer] += st.received_kw * price * dt + half_loss;
            community[st.seller] += -st.received_kw * price * dt + half_loss;
            loss_cost += st.loss_kw * price * dt;
        }
    }
    let per_mg: Vec<MgCost> = (0..n)
        .map(|i| {
            let deg = schedules[i].degradation_cost;
            MgCost::new(schedules[i].mg_id.clone(), original[i] + deg, grid_side[i], community[i], deg)
        })
        .collect();
    let sum = |f: fn(&MgCost) -> f64| per_mg.iter().map(f).sum::<f64>();
    let totals = MgCost::new("total".into(), sum(|c| c.original), sum(|c| c.grid_side), sum(|c| c.community), sum(|c| c.degradation));
    Ok(Accounts { per_mg, totals, loss_kwh: ledger.total_loss_kwh(), loss_cost })
}
