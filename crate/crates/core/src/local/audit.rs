//! Re-checks an extracted schedule against the microgrid description,
//! without looking at the MILP rows that produced it.

use crate::scenario::{Horizon, LoadKind, MicrogridSpec, PriceSchedule};

use super::{EfficiencyModel, LocalSchedule, StorageTrace};

struct Issues {
    tol: f64,
    out: Vec<String>,
}

impl Issues {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.out.push(msg());
        }
    }

    fn close(&mut self, a: f64, b: f64, what: impl FnOnce() -> String) {
        let ok = (a - b).abs() <= self.tol * (1.0 + a.abs().max(b.abs()));
        self.check(ok, || format!("{}: {a} != {b}", what()));
    }

    fn within(&mut self, x: f64, lo: f64, hi: f64, what: impl FnOnce() -> String) {
        let ok = x >= lo - self.tol && x <= hi + self.tol;
        self.check(ok, || format!("{}: {x} outside [{lo}, {hi}]", what()));
    }

    /// `b >= 0 >= s`, at most one of them nonzero.
    fn one_way(&mut self, b: f64, s: f64, hi: f64, lo: f64, what: impl Fn() -> String) {
        self.within(b, 0.0, hi, || format!("{} import", what()));
        self.within(s, lo, 0.0, || format!("{} export", what()));
        self.check(b <= self.tol || s >= -self.tol, || format!("{}: simultaneous {b} and {s}", what()));
    }
}

fn is_binary(x: f64, tol: f64) -> bool {
    x.abs() <= tol || (x - 1.0).abs() <= tol
}

/// Returns a human-readable line per violated rule; empty when feasible.
pub fn audit_schedule(
    mg: &MicrogridSpec,
    prices: &PriceSchedule,
    h: &Horizon,
    efficiency: EfficiencyModel,
    s: &LocalSchedule,
    tol: f64,
) -> Vec<String> {
    let mut is = Issues { tol, out: vec![] };
    let steps = h.steps;
    let dt = h.dt_hours;
    if s.steps != steps
        || s.grid_import.len() != steps
        || s.storages.len() != mg.storages.len()
        || s.evs.len() != mg.evs.len()
        || s.loads.len() != mg.dispatchable_loads.len()
    {
        return vec!["schedule shape does not match the microgrid".to_string()];
    }
    // energy drawn per unit of discharge power, power delivered per unit
    let to_store = |eff: f64| match efficiency {
        EfficiencyModel::Paper => dt,
        EfficiencyModel::Symmetric => dt / eff,
    };
    let supplied = |eff: f64| match efficiency {
        EfficiencyModel::Paper => eff,
        EfficiencyModel::Symmetric => 1.0,
    };

    for t in 0..steps {
        is.one_way(s.grid_import[t], s.grid_export[t], mg.grid_import_max, mg.grid_export_min, || format!("grid t={t}"));
        let mut supply = s.grid_import[t] + s.grid_export[t];
        for p in &s.peers {
            is.one_way(p.import[t], p.export[t], f64::INFINITY, f64::NEG_INFINITY, || format!("peer {} t={t}", p.peer));
            supply += p.import[t] + p.export[t];
        }
        for (es, tr) in mg.storages.iter().zip(&s.storages) {
            supply += supplied(es.efficiency) * tr.discharge[t] + tr.charge[t];
        }
        for (ev, tr) in mg.evs.iter().zip(&s.evs) {
            supply += supplied(ev.efficiency) * tr.discharge[t] + tr.charge[t];
        }
        let demand = mg.fixed_load[t] - mg.pv[t]
            + mg.dispatchable_loads.iter().zip(&s.loads).map(|(l, tr)| l.power_kw * tr.on[t]).sum::<f64>();
        is.close(supply, demand, || format!("power balance t={t}"));
        let net = s.grid_import[t] + s.grid_export[t] + s.peers.iter().map(|p| p.import[t] + p.export[t]).sum::<f64>();
        is.close(s.net_exchange[t], net, || format!("net exchange t={t}"));
    }

    let check_battery = |is: &mut Issues, tr: &StorageTrace, lo: f64, hi: f64, what: &str| {
        is.check(tr.energy.len() == steps + 1, || format!("{what}: energy trace length"));
        for (t, &e) in tr.energy.iter().enumerate() {
            is.within(e, lo, hi, || format!("{what} energy t={t}"));
        }
    };

    let mut degradation = 0.0;
    for (es, tr) in mg.storages.iter().zip(&s.storages) {
        let what = format!("storage {}", es.name);
        check_battery(&mut is, tr, es.capacity_min, es.capacity_max, &what);
        is.close(tr.energy[0], es.initial_energy, || format!("{what} initial energy"));
        let curve = es.curve(dt);
        let f = curve.cumulative_costs();
        for t in 0..steps {
            is.one_way(tr.discharge[t], tr.charge[t], es.discharge_power_max, es.charge_power_min, || {
                format!("{what} t={t}")
            });
            let next = tr.energy[t] - to_store(es.efficiency) * tr.discharge[t] - es.efficiency * dt * tr.charge[t];
            is.close(tr.energy[t + 1], next, || format!("{what} energy recurrence t={t}"));

            let alpha = &tr.alpha[t];
            is.check(alpha.len() == curve.breakpoints.len(), || format!("{what} t={t}: weight count"));
            is.check(alpha.iter().all(|&a| a >= -tol), || format!("{what} t={t}: negative weight"));
            is.close(alpha.iter().sum(), 1.0, || format!("{what} t={t}: weights sum"));
            let nz: Vec<usize> = (0..alpha.len()).filter(|&n| alpha[n] > tol).collect();
            is.check(nz.len() <= 2 && nz.windows(2).all(|w| w[1] == w[0] + 1), || {
                format!("{what} t={t}: non-adjacent weights {nz:?}")
            });
            let g = (tr.discharge[t] - es.efficiency * tr.charge[t]) * dt;
            let g_hat: f64 = alpha.iter().zip(&curve.breakpoints).map(|(a, b)| a * b).sum();
            is.close(g, g_hat, || format!("{what} t={t}: throughput"));
            let cost: f64 = alpha.iter().zip(&f).map(|(a, b)| a * b).sum();
            is.close(tr.degradation_cost[t], cost, || format!("{what} t={t}: degradation cost"));
            degradation += cost;
        }
    }

    for (ev, tr) in mg.evs.iter().zip(&s.evs) {
        let what = format!("ev {}", ev.name);
        check_battery(&mut is, tr, ev.capacity_min, ev.capacity_max, &what);
        is.close(tr.energy[0], ev.initial_energy, || format!("{what} initial energy"));
        for t in 0..steps {
            if ev.is_parked(t) {
                is.one_way(tr.discharge[t], tr.charge[t], ev.discharge_power_max, ev.charge_power_min, || {
                    format!("{what} t={t}")
                });
                let next = tr.energy[t] - to_store(ev.efficiency) * tr.discharge[t] - ev.efficiency * dt * tr.charge[t];
                is.close(tr.energy[t + 1], next, || format!("{what} energy recurrence t={t}"));
            } else {
                is.check(tr.discharge[t] == 0.0 && tr.charge[t] == 0.0, || format!("{what} t={t}: power while away"));
                if !ev.parking_windows.iter().any(|w| w.start == t + 1) {
                    is.close(tr.energy[t + 1], tr.energy[t], || format!("{what} t={t}: energy changed while away"));
                }
            }
        }
        for w in &ev.parking_windows {
            if w.start > 0 {
                is.close(tr.energy[w.start], ev.arrival_energy(w), || format!("{what} arrival at {}", w.start));
            }
            if let Some(need) = w.departure_energy_min {
                is.check(tr.energy[w.end] >= need - tol, || {
                    format!("{what} departs at {} with {} < {need}", w.end, tr.energy[w.end])
                });
            }
        }
    }

    for (l, tr) in mg.dispatchable_loads.iter().zip(&s.loads) {
        let what = format!("load {}", l.name);
        for t in 0..steps {
            is.check(is_binary(tr.on[t], tol), || format!("{what} t={t}: fractional state {}", tr.on[t]));
            is.check(l.allowed(t) || tr.on[t] <= tol, || format!("{what} t={t}: on outside its windows"));
        }
        let on: Vec<usize> = (0..steps).filter(|&t| tr.on[t] > 0.5).collect();
        is.check(on.len() == l.duration_steps, || format!("{what}: on for {} steps, needs {}", on.len(), l.duration_steps));
        let energy: f64 = tr.on.iter().map(|x| x * l.power_kw * dt).sum();
        is.close(energy, l.total_energy(dt), || format!("{what}: energy"));
        if l.kind == LoadKind::Type2 && !on.is_empty() {
            is.check(on[on.len() - 1] - on[0] + 1 == on.len(), || format!("{what}: not contiguous {on:?}"));
        }
    }

    let grid_cost: f64 =
        (0..steps).map(|t| (s.grid_import[t] * prices.buy[t] + s.grid_export[t] * prices.sell[t]) * dt).sum();
    is.close(s.grid_cost, grid_cost, || "grid cost".to_string());
    is.close(s.degradation_cost, degradation, || "degradation cost".to_string());
    is.out
}
