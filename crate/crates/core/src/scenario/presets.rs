//! Synthetic communities shaped like the 4-MG case study (two houses, a
//! 10-household apartment block, one PV-heavy site) and its 50-MG mix.
//! Profiles are smooth daily shapes with seeded noise.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    DispatchableLoadSpec, ElectricVehicleSpec, EnergyStorageSpec, Horizon, LoadKind, Location, MicrogridSpec,
    ParkingWindow, PriceSchedule, Scenario, Topology,
};

pub const STEPS: usize = 48;
pub const DT: f64 = 0.5;
/// Export price as a fraction of the import price.
pub const SELL_RATIO: f64 = 0.6;
const PEER_LIMIT: f64 = 60.0;

/// Hourly import price in $/kWh: cheap nights, a morning ramp from hour 7,
/// a midday plateau and an evening shoulder.
const BUY_BY_HOUR: [f64; 24] = [
    0.12, 0.11, 0.11, 0.10, 0.10, 0.11, 0.13, 0.19, 0.22, 0.24, 0.26, 0.28, 0.29, 0.29, 0.28, 0.27, 0.26, 0.25, 0.27,
    0.26, 0.22, 0.18, 0.15, 0.13,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Community4,
    Community50,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "community4" => Ok(Preset::Community4),
            "community50" => Ok(Preset::Community50),
            other => Err(format!("unknown preset {other:?} (expected community4 or community50)")),
        }
    }
}

pub fn generate(preset: Preset, seed: u64) -> Scenario {
    match preset {
        Preset::Community4 => community4(seed),
        Preset::Community50 => community50(seed),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteKind {
    HouseA,
    HouseB,
    Apartment,
    SolarSite,
}

fn hour(t: usize) -> f64 {
    (t as f64 + 0.5) * DT
}

fn bump(h: f64, from: f64, to: f64) -> f64 {
    if h <= from || h >= to {
        0.0
    } else {
        (std::f64::consts::PI * (h - from) / (to - from)).sin()
    }
}

pub fn prices() -> PriceSchedule {
    let buy: Vec<f64> = (0..STEPS).map(|t| BUY_BY_HOUR[(t as f64 * DT) as usize]).collect();
    let sell = buy.iter().map(|b| b * SELL_RATIO).collect();
    PriceSchedule::new(buy, sell, None)
}

/// PV output per kWp with seeded cloud dips.
fn pv_profile(kwp: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..STEPS)
        .map(|t| {
            let clear = 0.8 * bump(hour(t), 6.5, 19.0).powf(1.3);
            let cloud = rng.gen_range(0.85..=1.0);
            round3(kwp * clear * cloud)
        })
        .collect()
}

fn load_profile(kind: SiteKind, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..STEPS)
        .map(|t| {
            let h = hour(t);
            let house_a = 0.25 + 0.6 * bump(h, 6.0, 9.0) + 0.1 * bump(h, 11.0, 14.0) + 0.9 * bump(h, 17.5, 23.0);
            let base = match kind {
                SiteKind::HouseA => house_a,
                SiteKind::HouseB => 0.25 + 0.8 * bump(h, 8.5, 16.5) + 0.4 * bump(h, 18.5, 21.5),
                SiteKind::Apartment => 10.0 * (0.05 + house_a),
                SiteKind::SolarSite => 0.3 + 0.5 * bump(h, 17.0, 23.0),
            };
            round3(base * rng.gen_range(0.95..=1.05))
        })
        .collect()
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn steps_from(hours: &[(f64, f64)]) -> Vec<[usize; 2]> {
    hours.iter().map(|&(a, b)| [(a / DT).floor() as usize, ((b / DT).ceil() as usize).min(STEPS)]).collect()
}

/// One appliance, with duration rounded to whole steps (at least one) and
/// power rescaled so the energy requirement is unchanged.
fn appliance(name: &str, kind: LoadKind, power: f64, hours: &[(f64, f64)], duration_h: f64, scale: f64) -> DispatchableLoadSpec {
    let steps = ((duration_h / DT).round() as usize).max(1);
    let power_kw = scale * power * duration_h / (steps as f64 * DT);
    DispatchableLoadSpec {
        name: name.into(),
        kind,
        power_kw,
        duration_steps: steps,
        allowed_windows: steps_from(hours),
        total_energy_kwh: None,
    }
}

/// The household appliance list; `scale` aggregates identical households.
pub fn household_appliances(scale: f64) -> Vec<DispatchableLoadSpec> {
    use LoadKind::{Type1, Type2};
    vec![
        appliance("washing_machine", Type1, 0.7, &[(0.0, 19.0), (23.0, 24.0)], 1.0, scale),
        appliance("cleaner", Type1, 0.6, &[(0.0, 4.0), (6.0, 24.0)], 4.0, scale),
        appliance("air_conditioner", Type1, 1.2, &[(0.0, 7.0), (18.0, 24.0)], 3.0, scale),
        appliance("lighting", Type1, 0.15, &[(6.0, 7.0), (18.0, 23.5)], 5.0, scale),
        appliance("oven", Type1, 1.16, &[(11.0, 13.0)], 0.5, scale),
        appliance("toaster", Type2, 1.2, &[(7.0, 9.0)], 0.25, scale),
        appliance("dish_washer", Type2, 1.0, &[(0.0, 4.0), (9.0, 11.0), (14.0, 17.0), (20.0, 24.0)], 1.0, scale),
    ]
}

fn storage(capacity: f64, soc_init: f64, soc_lo: f64, soc_hi: f64) -> EnergyStorageSpec {
    EnergyStorageSpec {
        name: "es".into(),
        capacity_max: round3(capacity * soc_hi),
        capacity_min: round3(capacity * soc_lo),
        initial_energy: round3(capacity * soc_init),
        discharge_power_max: 4.0,
        charge_power_min: -4.0,
        efficiency: 0.95,
        degradation: None,
    }
}

struct EvParams {
    soc_init: f64,
    soc_lo: f64,
    soc_hi: f64,
    soc_depart: f64,
    soc_return: f64,
    morning_leave_h: f64,
    evening_return_h: f64,
}

fn ev(p: EvParams) -> ElectricVehicleSpec {
    let cap = 16.0;
    let depart = round3(cap * p.soc_depart);
    ElectricVehicleSpec {
        name: "ev".into(),
        capacity_max: round3(cap * p.soc_hi),
        capacity_min: round3(cap * p.soc_lo),
        initial_energy: round3(cap * p.soc_init),
        discharge_power_max: 3.6,
        charge_power_min: -1.44,
        efficiency: 0.95,
        parking_windows: vec![
            ParkingWindow {
                start: 0,
                end: (p.morning_leave_h / DT).floor() as usize,
                return_energy: None,
                departure_energy_min: Some(depart),
            },
            ParkingWindow {
                start: (p.evening_return_h / DT).ceil() as usize,
                end: STEPS,
                return_energy: Some(round3(cap * p.soc_return)),
                departure_energy_min: Some(depart),
            },
        ],
    }
}

pub fn site(kind: SiteKind, id: String, location: Location, rng: &mut ChaCha8Rng) -> MicrogridSpec {
    let (grid, kwp, storages, evs, loads) = match kind {
        SiteKind::HouseA => (
            10.0,
            2.0,
            vec![storage(8.0, 0.209, 0.170, 0.841)],
            vec![ev(EvParams {
                soc_init: 0.5263,
                soc_lo: 0.158,
                soc_hi: 0.837,
                soc_depart: 0.5145,
                soc_return: 0.35,
                morning_leave_h: 4.88,
                evening_return_h: 19.09,
            })],
            household_appliances(1.0),
        ),
        SiteKind::HouseB => (
            10.0,
            2.0,
            vec![storage(8.0, 0.331, 0.175, 0.835)],
            vec![ev(EvParams {
                soc_init: 0.331,
                soc_lo: 0.199,
                soc_hi: 0.816,
                soc_depart: 0.6158,
                soc_return: 0.30,
                morning_leave_h: 7.65,
                evening_return_h: 18.93,
            })],
            household_appliances(1.0),
        ),
        SiteKind::Apartment => (40.0, 16.0, vec![storage(12.0, 0.33, 0.169, 0.821)], vec![], household_appliances(10.0)),
        SiteKind::SolarSite => (20.0, 16.0, vec![storage(12.0, 0.31, 0.187, 0.890)], vec![], vec![]),
    };
    let fixed_load = load_profile(kind, rng);
    let pv = pv_profile(kwp, rng);
    MicrogridSpec {
        id,
        location,
        grid_import_max: grid,
        grid_export_min: -grid,
        peer_import_max: Some(PEER_LIMIT),
        peer_export_min: Some(-PEER_LIMIT),
        peer_limits: vec![],
        storages,
        evs,
        fixed_load,
        pv,
        dispatchable_loads: loads,
    }
}

fn horizon() -> Horizon {
    Horizon { steps: STEPS, dt_hours: DT }
}

pub fn community4(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites = [
        (SiteKind::HouseA, 0.12, 0.13),
        (SiteKind::HouseB, 0.16, 0.79),
        (SiteKind::Apartment, 0.83, 0.11),
        (SiteKind::SolarSite, 0.09, 0.26),
    ];
    let microgrids = sites
        .iter()
        .enumerate()
        .map(|(k, &(kind, x, y))| site(kind, format!("MG{}", k + 1), Location { x, y }, &mut rng))
        .collect();
    Scenario {
        name: "community4".into(),
        horizon: horizon(),
        prices: prices(),
        topology: Topology::default(),
        microgrids,
    }
}

/// 20 houses of each kind, 5 apartment blocks and 5 PV-heavy sites at
/// seeded random locations in the unit square.
pub fn community50(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix = [(SiteKind::HouseA, "MG1", 20), (SiteKind::HouseB, "MG2", 20), (SiteKind::Apartment, "MG3", 5), (SiteKind::SolarSite, "MG4", 5)];
    let mut microgrids = Vec::new();
    for (kind, tag, count) in mix {
        for k in 0..count {
            let location = Location { x: round3(rng.gen_range(0.0..1.0)), y: round3(rng.gen_range(0.0..1.0)) };
            microgrids.push(site(kind, format!("{tag}_{:02}", k + 1), location, &mut rng));
        }
    }
    Scenario {
        name: "community50".into(),
        horizon: horizon(),
        prices: prices(),
        topology: Topology::default(),
        microgrids,
    }
}
