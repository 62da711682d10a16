use crate::milp::{MilpError, MilpModel, Relation, VarId};
use crate::scenario::{
    DegradationCurve, DispatchableLoadSpec, ElectricVehicleSpec, EnergyStorageSpec, Horizon, LoadKind, MicrogridSpec,
    PriceSchedule,
};

use super::{EfficiencyModel, LocalError, LocalMode, LocalOptions, PeerLink};

#[derive(Debug, Clone, PartialEq)]
pub struct StorageVars {
    pub discharge: Vec<VarId>,
    pub charge: Vec<VarId>,
    pub mode: Vec<VarId>,
    /// `T + 1` points; entry `t` is the energy at the start of step `t`.
    pub energy: Vec<VarId>,
    pub alpha: Vec<Vec<VarId>>,
    pub curve: DegradationCurve,
}

/// Power and mode variables exist only while parked.
#[derive(Debug, Clone, PartialEq)]
pub struct EvVars {
    pub discharge: Vec<Option<VarId>>,
    pub charge: Vec<Option<VarId>>,
    pub mode: Vec<Option<VarId>>,
    pub energy: Vec<VarId>,
}

/// `on` exists only in allowed steps; `start`/`end` are indexed by
/// transition `0..=T`, where transition `t` sits just before step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVars {
    pub on: Vec<Option<VarId>>,
    pub start: Vec<Option<VarId>>,
    pub end: Vec<Option<VarId>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeerVars {
    pub peer: usize,
    pub import: Vec<VarId>,
    pub export: Vec<VarId>,
    pub mode: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalVars {
    pub grid_import: Vec<VarId>,
    pub grid_export: Vec<VarId>,
    pub grid_mode: Vec<VarId>,
    pub storages: Vec<StorageVars>,
    pub evs: Vec<EvVars>,
    pub loads: Vec<LoadVars>,
    pub peers: Vec<PeerVars>,
}

/// Builds the single-microgrid MILP. In standalone mode `peers` is ignored.
pub fn build_local_model(
    mg: &MicrogridSpec,
    prices: &PriceSchedule,
    h: &Horizon,
    opts: &LocalOptions,
    peers: &[PeerLink],
) -> Result<(MilpModel, LocalVars), LocalError> {
    let mut model = MilpModel::new(format!("local_{}", mg.id));
    let peers = match opts.mode {
        LocalMode::Standalone => &[][..],
        LocalMode::CommunityAware => peers,
    };
    let vars = add_microgrid(&mut model, mg, prices, h, opts, peers, true)?;
    Ok((model, vars))
}

/// Checks that can prove infeasibility before any solve.
pub fn structural_check(mg: &MicrogridSpec, h: &Horizon) -> Result<(), LocalError> {
    mg.validate(h)?;
    for ev in &mg.evs {
        for w in &ev.parking_windows {
            let Some(need) = w.departure_energy_min else { continue };
            let gain = -ev.charge_power_min * ev.efficiency * h.dt_hours * (w.end - w.start) as f64;
            let reachable = (ev.arrival_energy(w) + gain).min(ev.capacity_max);
            if reachable + 1e-9 < need {
                return Err(LocalError::Structural {
                    mg: mg.id.clone(),
                    device: ev.name.clone(),
                    reason: format!("departure at step {} needs {need} kWh but at most {reachable:.4} kWh is reachable", w.end),
                });
            }
        }
    }
    Ok(())
}

/// Appends one microgrid block to `model`. Peer variables are priced at the
/// community price only when `price_peers` is set; the centralized model
/// prices the loss on the coupling instead.
pub(crate) fn add_microgrid(
    model: &mut MilpModel,
    mg: &MicrogridSpec,
    prices: &PriceSchedule,
    h: &Horizon,
    opts: &LocalOptions,
    peers: &[PeerLink],
    price_peers: bool,
) -> Result<LocalVars, LocalError> {
    structural_check(mg, h)?;
    let steps = h.steps;
    let dt = h.dt_hours;
    let id = &mg.id;

    let mut grid_import = Vec::with_capacity(steps);
    let mut grid_export = Vec::with_capacity(steps);
    let mut grid_mode = Vec::with_capacity(steps);
    for t in 0..steps {
        let (b, s, u) = unidirectional(model, &format!("{id}_grid_{t}"), mg.grid_import_max, mg.grid_export_min)?;
        model.add_objective_term(b, prices.buy[t] * dt)?;
        model.add_objective_term(s, prices.sell[t] * dt)?;
        grid_import.push(b);
        grid_export.push(s);
        grid_mode.push(u);
    }

    let mut peer_vars = Vec::new();
    for link in peers {
        let mut pv = PeerVars { peer: link.peer, import: vec![], export: vec![], mode: vec![] };
        for t in 0..steps {
            let (b, s, u) =
                unidirectional(model, &format!("{id}_peer{}_{t}", link.peer), link.import_max, link.export_min)?;
            if price_peers {
                model.add_objective_term(b, prices.community[t] * dt)?;
                model.add_objective_term(s, prices.community[t] * dt)?;
            }
            pv.import.push(b);
            pv.export.push(s);
            pv.mode.push(u);
        }
        peer_vars.push(pv);
    }

    let storages =
        mg.storages.iter().map(|es| add_storage(model, id, es, h, opts.efficiency)).collect::<Result<Vec<_>, _>>()?;
    let evs = mg.evs.iter().map(|ev| add_ev(model, id, ev, h, opts.efficiency)).collect::<Result<Vec<_>, _>>()?;
    let loads = mg.dispatchable_loads.iter().map(|l| add_load(model, id, l, h)).collect::<Result<Vec<_>, _>>()?;

    let supply = |eff: f64| match opts.efficiency {
        EfficiencyModel::Paper => eff,
        EfficiencyModel::Symmetric => 1.0,
    };
    for t in 0..steps {
        let mut row = vec![(grid_import[t], 1.0), (grid_export[t], 1.0)];
        for p in &peer_vars {
            row.push((p.import[t], 1.0));
            row.push((p.export[t], 1.0));
        }
        for (es, v) in mg.storages.iter().zip(&storages) {
            row.push((v.discharge[t], supply(es.efficiency)));
            row.push((v.charge[t], 1.0));
        }
        for (ev, v) in mg.evs.iter().zip(&evs) {
            if let (Some(b), Some(s)) = (v.discharge[t], v.charge[t]) {
                row.push((b, supply(ev.efficiency)));
                row.push((s, 1.0));
            }
        }
        for (l, v) in mg.dispatchable_loads.iter().zip(&loads) {
            if let Some(on) = v.on[t] {
                row.push((on, -l.power_kw));
            }
        }
        model.add_constraint(format!("{id}_balance_{t}"), &row, Relation::Eq, mg.fixed_load[t] - mg.pv[t])?;
    }

    Ok(LocalVars { grid_import, grid_export, grid_mode, storages, evs, loads, peers: peer_vars })
}

/// `0 <= b <= hi*u`, `lo*(1-u) <= s <= 0`.
fn unidirectional(model: &mut MilpModel, name: &str, hi: f64, lo: f64) -> Result<(VarId, VarId, VarId), MilpError> {
    let b = model.continuous(format!("{name}_b"), 0.0, hi)?;
    let s = model.continuous(format!("{name}_s"), lo, 0.0)?;
    let u = model.binary(format!("{name}_u"))?;
    model.add_constraint(format!("{name}_bu"), &[(b, 1.0), (u, -hi)], Relation::Le, 0.0)?;
    model.add_constraint(format!("{name}_su"), &[(s, 1.0), (u, lo)], Relation::Ge, lo)?;
    Ok((b, s, u))
}

/// Energy change coefficients `(on discharge, on charge)` per unit power.
fn energy_coefs(eff: f64, dt: f64, model: EfficiencyModel) -> (f64, f64) {
    match model {
        EfficiencyModel::Paper => (dt, eff * dt),
        EfficiencyModel::Symmetric => (dt / eff, eff * dt),
    }
}

fn add_storage(
    model: &mut MilpModel,
    id: &str,
    es: &EnergyStorageSpec,
    h: &Horizon,
    eff_model: EfficiencyModel,
) -> Result<StorageVars, MilpError> {
    let tag = format!("{id}_{}", es.name);
    let dt = h.dt_hours;
    let curve = es.curve(dt);
    let energy: Vec<VarId> = (0..=h.steps)
        .map(|t| model.continuous(format!("{tag}_E_{t}"), es.capacity_min, es.capacity_max))
        .collect::<Result<_, _>>()?;
    model.fix(energy[0], es.initial_energy)?;
    let (kb, ks) = energy_coefs(es.efficiency, dt, eff_model);
    let mut v = StorageVars { discharge: vec![], charge: vec![], mode: vec![], energy, alpha: vec![], curve };
    for t in 0..h.steps {
        let (b, s, d) = unidirectional(model, &format!("{tag}_{t}"), es.discharge_power_max, es.charge_power_min)?;
        model.add_constraint(
            format!("{tag}_energy_{t}"),
            &[(v.energy[t + 1], 1.0), (v.energy[t], -1.0), (b, kb), (s, ks)],
            Relation::Eq,
            0.0,
        )?;
        let alpha = degradation_terms(model, &format!("{tag}_deg_{t}"), es.efficiency, dt, &v.curve, b, s)?;
        v.discharge.push(b);
        v.charge.push(s);
        v.mode.push(d);
        v.alpha.push(alpha);
    }
    Ok(v)
}

/// Adds one step of piecewise-linear degradation cost: throughput
/// `g = (p_b - zeta p_s) dt` written as a convex combination of the
/// breakpoints with SOS-2 weights, each weight costing `F(G_n)`.
pub fn degradation_terms(
    model: &mut MilpModel,
    tag: &str,
    efficiency: f64,
    dt: f64,
    curve: &DegradationCurve,
    discharge: VarId,
    charge: VarId,
) -> Result<Vec<VarId>, MilpError> {
    let f = curve.cumulative_costs();
    let alpha: Vec<VarId> =
        (0..curve.breakpoints.len()).map(|n| model.continuous(format!("{tag}_a{n}"), 0.0, 1.0)).collect::<Result<_, _>>()?;
    let mut g = vec![(discharge, dt), (charge, -efficiency * dt)];
    g.extend(alpha.iter().zip(&curve.breakpoints).map(|(&a, &gn)| (a, -gn)));
    model.add_constraint(format!("{tag}_g"), &g, Relation::Eq, 0.0)?;
    let ones: Vec<(VarId, f64)> = alpha.iter().map(|&a| (a, 1.0)).collect();
    model.add_constraint(format!("{tag}_sum"), &ones, Relation::Eq, 1.0)?;
    model.add_sos2(tag, &alpha)?;
    for (&a, &fn_) in alpha.iter().zip(&f) {
        model.add_objective_term(a, fn_)?;
    }
    Ok(alpha)
}

fn add_ev(
    model: &mut MilpModel,
    id: &str,
    ev: &ElectricVehicleSpec,
    h: &Horizon,
    eff_model: EfficiencyModel,
) -> Result<EvVars, MilpError> {
    let tag = format!("{id}_{}", ev.name);
    let steps = h.steps;
    let energy: Vec<VarId> = (0..=steps)
        .map(|t| model.continuous(format!("{tag}_E_{t}"), ev.capacity_min, ev.capacity_max))
        .collect::<Result<_, _>>()?;
    model.fix(energy[0], ev.initial_energy)?;
    let (kb, ks) = energy_coefs(ev.efficiency, h.dt_hours, eff_model);
    let mut v = EvVars { discharge: vec![None; steps], charge: vec![None; steps], mode: vec![None; steps], energy };
    for w in &ev.parking_windows {
        if w.start > 0 {
            model.fix(v.energy[w.start], ev.arrival_energy(w))?;
        }
        if let Some(need) = w.departure_energy_min {
            model.add_constraint(format!("{tag}_depart_{}", w.end), &[(v.energy[w.end], 1.0)], Relation::Ge, need)?;
        }
    }
    let window_start = |t: usize| ev.parking_windows.iter().any(|w| w.start == t && t > 0);
    for t in 0..steps {
        if ev.is_parked(t) {
            let (b, s, th) = unidirectional(model, &format!("{tag}_{t}"), ev.discharge_power_max, ev.charge_power_min)?;
            model.add_constraint(
                format!("{tag}_energy_{t}"),
                &[(v.energy[t + 1], 1.0), (v.energy[t], -1.0), (b, kb), (s, ks)],
                Relation::Eq,
                0.0,
            )?;
            v.discharge[t] = Some(b);
            v.charge[t] = Some(s);
            v.mode[t] = Some(th);
        } else if !window_start(t + 1) {
            // away: hold the departure level until the next arrival
            model.add_constraint(
                format!("{tag}_hold_{t}"),
                &[(v.energy[t + 1], 1.0), (v.energy[t], -1.0)],
                Relation::Eq,
                0.0,
            )?;
        }
    }
    Ok(v)
}

fn add_load(model: &mut MilpModel, id: &str, l: &DispatchableLoadSpec, h: &Horizon) -> Result<LoadVars, MilpError> {
    let tag = format!("{id}_{}", l.name);
    let steps = h.steps;
    let on: Vec<Option<VarId>> = (0..steps)
        .map(|t| l.allowed(t).then(|| model.binary(format!("{tag}_on_{t}"))).transpose())
        .collect::<Result<_, _>>()?;
    let active: Vec<VarId> = on.iter().flatten().copied().collect();
    let energy: Vec<(VarId, f64)> = active.iter().map(|&v| (v, l.power_kw * h.dt_hours)).collect();
    model.add_constraint(format!("{tag}_load_energy"), &energy, Relation::Eq, l.total_energy(h.dt_hours))?;
    let count: Vec<(VarId, f64)> = active.iter().map(|&v| (v, 1.0)).collect();
    model.add_constraint(format!("{tag}_load_duration"), &count, Relation::Eq, l.duration_steps as f64)?;

    let mut v = LoadVars { on, start: vec![None; steps + 1], end: vec![None; steps + 1] };
    if l.kind == LoadKind::Type2 {
        // transition tau compares step tau with step tau - 1; steps outside
        // the horizon are off
        for tau in 0..=steps {
            let cur = if tau < steps { v.on[tau] } else { None };
            let prev = if tau > 0 { v.on[tau - 1] } else { None };
            if cur.is_none() && prev.is_none() {
                continue;
            }
            let s = model.binary(format!("{tag}_start_{tau}"))?;
            let e = model.integer(format!("{tag}_end_{tau}"), -1.0, 0.0)?;
            let mut row = vec![(s, -1.0), (e, -1.0)];
            if let Some(c) = cur {
                row.push((c, 1.0));
            }
            if let Some(p) = prev {
                row.push((p, -1.0));
            }
            model.add_constraint(format!("{tag}_diff_{tau}"), &row, Relation::Eq, 0.0)?;
            v.start[tau] = Some(s);
            v.end[tau] = Some(e);
        }
        let starts: Vec<(VarId, f64)> = v.start.iter().flatten().map(|&s| (s, 1.0)).collect();
        let ends: Vec<(VarId, f64)> = v.end.iter().flatten().map(|&e| (e, 1.0)).collect();
        model.add_constraint(format!("{tag}_diff_start"), &starts, Relation::Eq, 1.0)?;
        model.add_constraint(format!("{tag}_diff_end"), &ends, Relation::Eq, -1.0)?;
    }
    Ok(v)
}
