//! Community description: horizon, prices, topology and per-microgrid
//! device fleets, with load-time validation of every invariant.

mod io;
pub mod presets;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{load_scenario, parse_scenario, resample, save_scenario, scenario_from_value};

pub const DEFAULT_LOSS_FACTOR: f64 = 0.05;
pub const DEFAULT_BIG_M: f64 = 1e9;
/// Marginal slope of the first segment of the default degradation curve;
/// segment `n` costs `(n + 1)^2` times this.
pub const DEFAULT_DEGRADATION_SLOPE: f64 = 0.004;
const DEFAULT_DEGRADATION_POINTS: usize = 5;
const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("schema violation at {field}: {reason}")]
    Schema { field: String, reason: String },
    #[error("{entity}: {invariant}")]
    Invariant { entity: String, invariant: String },
    #[error("{entity}: profile {field} has {got} entries, expected {expected}")]
    ProfileLength { entity: String, field: String, expected: usize, got: usize },
    #[error("price ordering violated at step {step}: {detail}")]
    PriceOrder { step: usize, detail: String },
}

fn invariant(entity: impl Into<String>, invariant: impl Into<String>) -> ScenarioError {
    ScenarioError::Invariant { entity: entity.into(), invariant: invariant.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub steps: usize,
    pub dt_hours: f64,
}

impl Horizon {
    pub fn new(steps: usize, dt_hours: f64) -> Result<Self, ScenarioError> {
        let h = Horizon { steps, dt_hours };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.steps == 0 {
            return Err(invariant("horizon", "steps must be at least 1"));
        }
        if !(self.dt_hours.is_finite() && self.dt_hours > 0.0) {
            return Err(invariant("horizon", format!("dt_hours must be positive, got {}", self.dt_hours)));
        }
        Ok(())
    }

    /// Step index containing hour `h`, rounded down.
    pub fn step_at_hour(&self, h: f64) -> usize {
        ((h / self.dt_hours) + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSchedule {
    pub buy: Vec<f64>,
    pub sell: Vec<f64>,
    /// Filled with the buy/sell midpoint when absent from the input.
    #[serde(default)]
    pub community: Vec<f64>,
}

impl PriceSchedule {
    pub fn new(buy: Vec<f64>, sell: Vec<f64>, community: Option<Vec<f64>>) -> Self {
        let mut p = PriceSchedule { buy, sell, community: community.unwrap_or_default() };
        p.fill_community();
        p
    }

    pub fn fill_community(&mut self) {
        if self.community.is_empty() {
            self.community = self.buy.iter().zip(&self.sell).map(|(b, s)| (b + s) / 2.0).collect();
        }
    }

    pub fn len(&self) -> usize {
        self.buy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buy.is_empty()
    }
}

/// Checks lengths and `0 <= sell <= community <= buy` at every step.
pub fn validate_prices(p: &PriceSchedule, h: &Horizon) -> Result<(), ScenarioError> {
    for (field, v) in [("prices.buy", &p.buy), ("prices.sell", &p.sell), ("prices.community", &p.community)] {
        if v.len() != h.steps {
            return Err(ScenarioError::ProfileLength {
                entity: "prices".into(),
                field: field.into(),
                expected: h.steps,
                got: v.len(),
            });
        }
    }
    for t in 0..h.steps {
        let (b, s, c) = (p.buy[t], p.sell[t], p.community[t]);
        if !(b.is_finite() && s.is_finite() && c.is_finite()) {
            return Err(ScenarioError::PriceOrder { step: t, detail: "non-finite price".into() });
        }
        if s < 0.0 {
            return Err(ScenarioError::PriceOrder { step: t, detail: format!("sell {s} is negative") });
        }
        if s > c {
            return Err(ScenarioError::PriceOrder { step: t, detail: format!("sell {s} exceeds community {c}") });
        }
        if c > b {
            return Err(ScenarioError::PriceOrder { step: t, detail: format!("community {c} exceeds buy {b}") });
        }
    }
    Ok(())
}

/// Piecewise-linear degradation cost over per-step throughput `g` (kWh).
/// `slopes[n]` is the marginal cost between `breakpoints[n]` and `breakpoints[n + 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationCurve {
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl DegradationCurve {
    /// Evenly spaced grid on `[0, g_max]` with slopes growing quadratically.
    pub fn default_for(g_max: f64) -> Self {
        let n = DEFAULT_DEGRADATION_POINTS;
        let breakpoints = (0..n).map(|k| g_max * k as f64 / (n - 1) as f64).collect();
        let slopes = (0..n - 1).map(|k| DEFAULT_DEGRADATION_SLOPE * ((k + 1) * (k + 1)) as f64).collect();
        DegradationCurve { breakpoints, slopes }
    }

    /// Cumulative cost at every breakpoint, starting from zero.
    pub fn cumulative_costs(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.breakpoints.len());
        f.push(0.0);
        for n in 1..self.breakpoints.len() {
            let prev = f[n - 1];
            f.push(prev + self.slopes[n - 1] * (self.breakpoints[n] - self.breakpoints[n - 1]));
        }
        f
    }

    /// Cost at `g` by interpolating the two bracketing breakpoints; None
    /// outside the grid.
    pub fn cost_at(&self, g: f64) -> Option<f64> {
        let bp = &self.breakpoints;
        let f = self.cumulative_costs();
        if g < bp[0] || g > bp[bp.len() - 1] {
            return None;
        }
        let n = bp.windows(2).position(|w| g <= w[1]).unwrap_or(bp.len() - 2);
        let a = (g - bp[n]) / (bp[n + 1] - bp[n]);
        Some((1.0 - a) * f[n] + a * f[n + 1])
    }

    fn validate(&self, entity: &str, g_hi: f64) -> Result<(), ScenarioError> {
        let bp = &self.breakpoints;
        if bp.len() < 2 {
            return Err(invariant(entity, "degradation curve needs at least two breakpoints"));
        }
        if self.slopes.len() != bp.len() - 1 {
            return Err(invariant(entity, "degradation curve needs one slope per segment"));
        }
        if bp.iter().chain(&self.slopes).any(|x| !x.is_finite()) {
            return Err(invariant(entity, "degradation curve has non-finite entries"));
        }
        if bp.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invariant(entity, "degradation breakpoints must be strictly increasing"));
        }
        let slack = REL_TOL * (1.0 + g_hi.abs());
        if bp[0] > slack || bp[bp.len() - 1] < g_hi - slack {
            return Err(invariant(
                entity,
                format!("degradation breakpoints [{}, {}] do not cover throughput range [0, {g_hi}]", bp[0], bp[bp.len() - 1]),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyStorageSpec {
    pub name: String,
    pub capacity_max: f64,
    pub capacity_min: f64,
    pub initial_energy: f64,
    pub discharge_power_max: f64,
    /// Negative: the most negative (charging) power.
    pub charge_power_min: f64,
    pub efficiency: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degradation: Option<DegradationCurve>,
}

fn validate_battery(
    entity: &str,
    cap_max: f64,
    cap_min: f64,
    initial: f64,
    p_max: f64,
    p_min: f64,
    eff: f64,
) -> Result<(), ScenarioError> {
    if [cap_max, cap_min, initial, p_max, p_min, eff].iter().any(|x| !x.is_finite()) {
        return Err(invariant(entity, "non-finite parameter"));
    }
    if !(0.0 <= cap_min && cap_min <= initial && initial <= cap_max) {
        return Err(invariant(entity, "requires 0 <= capacity_min <= initial_energy <= capacity_max"));
    }
    if !(p_min < 0.0 && 0.0 < p_max) {
        return Err(invariant(entity, "requires charge_power_min < 0 < discharge_power_max"));
    }
    if !(eff > 0.0 && eff <= 1.0) {
        return Err(invariant(entity, "efficiency must lie in (0, 1]"));
    }
    Ok(())
}

impl EnergyStorageSpec {
    /// Largest per-step throughput `(p_b - zeta p_s) dt`.
    pub fn max_throughput(&self, dt: f64) -> f64 {
        (self.discharge_power_max * dt).max(-self.efficiency * self.charge_power_min * dt)
    }

    /// The configured curve, or the default grid sized for `dt`.
    pub fn curve(&self, dt: f64) -> DegradationCurve {
        self.degradation.clone().unwrap_or_else(|| DegradationCurve::default_for(self.max_throughput(dt)))
    }

    pub fn validate(&self, entity: &str, h: &Horizon) -> Result<(), ScenarioError> {
        validate_battery(
            entity,
            self.capacity_max,
            self.capacity_min,
            self.initial_energy,
            self.discharge_power_max,
            self.charge_power_min,
            self.efficiency,
        )?;
        self.curve(h.dt_hours).validate(entity, self.max_throughput(h.dt_hours))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParkingWindow {
    pub start: usize,
    /// Exclusive; the vehicle leaves after step `end - 1`.
    pub end: usize,
    /// Energy on arrival; required unless the window opens at step 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_energy: Option<f64>,
    /// Required whenever the window closes before the horizon ends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub departure_energy_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectricVehicleSpec {
    pub name: String,
    pub capacity_max: f64,
    pub capacity_min: f64,
    pub initial_energy: f64,
    pub discharge_power_max: f64,
    pub charge_power_min: f64,
    pub efficiency: f64,
    pub parking_windows: Vec<ParkingWindow>,
}

impl ElectricVehicleSpec {
    pub fn is_parked(&self, t: usize) -> bool {
        self.parking_windows.iter().any(|w| w.start <= t && t < w.end)
    }

    /// Energy pinned at the opening of window `w`.
    pub fn arrival_energy(&self, w: &ParkingWindow) -> f64 {
        if w.start == 0 {
            self.initial_energy
        } else {
            w.return_energy.unwrap_or(self.initial_energy)
        }
    }

    pub fn validate(&self, entity: &str, h: &Horizon) -> Result<(), ScenarioError> {
        validate_battery(
            entity,
            self.capacity_max,
            self.capacity_min,
            self.initial_energy,
            self.discharge_power_max,
            self.charge_power_min,
            self.efficiency,
        )?;
        let mut prev_end = 0;
        for (k, w) in self.parking_windows.iter().enumerate() {
            let we = format!("{entity} window {k}");
            if w.start >= w.end || w.end > h.steps {
                return Err(invariant(we, format!("[{}, {}) is empty or outside the horizon", w.start, w.end)));
            }
            if k > 0 && w.start < prev_end {
                return Err(invariant(we, "windows must be sorted and disjoint"));
            }
            prev_end = w.end;
            match (w.start, w.return_energy) {
                (0, Some(_)) => return Err(invariant(we, "a window opening at step 0 starts from initial_energy")),
                (s, None) if s > 0 => return Err(invariant(we, "return_energy is required after a trip")),
                (_, Some(e)) if !(e.is_finite() && self.capacity_min <= e && e <= self.capacity_max) => {
                    return Err(invariant(we, "return_energy outside [capacity_min, capacity_max]"))
                }
                _ => {}
            }
            match w.departure_energy_min {
                None if w.end < h.steps => return Err(invariant(we, "departure_energy_min is required before a trip")),
                Some(e) if !(e.is_finite() && e <= self.capacity_max) => {
                    return Err(invariant(we, "departure_energy_min exceeds capacity_max"))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadKind {
    /// Required on-steps may be spread out.
    Type1,
    /// Required on-steps form one contiguous run.
    Type2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchableLoadSpec {
    pub name: String,
    pub kind: LoadKind,
    pub power_kw: f64,
    pub duration_steps: usize,
    /// Half-open step intervals `[start, end)`.
    pub allowed_windows: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_energy_kwh: Option<f64>,
}

impl DispatchableLoadSpec {
    pub fn total_energy(&self, dt: f64) -> f64 {
        self.total_energy_kwh.unwrap_or(self.power_kw * self.duration_steps as f64 * dt)
    }

    pub fn allowed(&self, t: usize) -> bool {
        self.allowed_windows.iter().any(|w| w[0] <= t && t < w[1])
    }

    /// Longest run of consecutive allowed steps.
    pub fn longest_run(&self, steps: usize) -> usize {
        let (mut best, mut cur) = (0, 0);
        for t in 0..steps {
            cur = if self.allowed(t) { cur + 1 } else { 0 };
            best = best.max(cur);
        }
        best
    }

    pub fn validate(&self, entity: &str, h: &Horizon) -> Result<(), ScenarioError> {
        if !(self.power_kw.is_finite() && self.power_kw > 0.0) {
            return Err(invariant(entity, "power_kw must be positive"));
        }
        if self.duration_steps == 0 {
            return Err(invariant(entity, "duration_steps must be at least 1"));
        }
        let mut prev_end = 0;
        for (k, w) in self.allowed_windows.iter().enumerate() {
            if w[0] >= w[1] || w[1] > h.steps {
                return Err(invariant(entity, format!("window [{}, {}) is empty or outside the horizon", w[0], w[1])));
            }
            if k > 0 && w[0] < prev_end {
                return Err(invariant(entity, "allowed windows must be sorted and disjoint"));
            }
            prev_end = w[1];
        }
        let total: usize = self.allowed_windows.iter().map(|w| w[1] - w[0]).sum();
        if total < self.duration_steps {
            return Err(invariant(entity, format!("allowed steps {total} < duration {}", self.duration_steps)));
        }
        if self.kind == LoadKind::Type2 && self.longest_run(h.steps) < self.duration_steps {
            return Err(invariant(entity, format!("no contiguous window of {} steps", self.duration_steps)));
        }
        if let Some(p) = self.total_energy_kwh {
            let derived = self.power_kw * self.duration_steps as f64 * h.dt_hours;
            if !p.is_finite() || (p - derived).abs() > REL_TOL * derived.abs().max(1.0) {
                return Err(invariant(entity, format!("total_energy_kwh {p} != power * duration * dt = {derived}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub fn distance(&self, other: &Location) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerLimit {
    pub peer: String,
    pub import_max: f64,
    pub export_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicrogridSpec {
    pub id: String,
    pub location: Location,
    pub grid_import_max: f64,
    /// Negative.
    pub grid_export_min: f64,
    /// Default peer limits; the grid limits apply when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peer_import_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peer_export_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub peer_limits: Vec<PeerLimit>,
    #[serde(default)]
    pub storages: Vec<EnergyStorageSpec>,
    #[serde(default)]
    pub evs: Vec<ElectricVehicleSpec>,
    pub fixed_load: Vec<f64>,
    pub pv: Vec<f64>,
    #[serde(default)]
    pub dispatchable_loads: Vec<DispatchableLoadSpec>,
}

impl MicrogridSpec {
    /// `(import_max, export_min)` towards `peer`.
    pub fn peer_limit(&self, peer: &str) -> (f64, f64) {
        match self.peer_limits.iter().find(|l| l.peer == peer) {
            Some(l) => (l.import_max, l.export_min),
            None => (
                self.peer_import_max.unwrap_or(self.grid_import_max),
                self.peer_export_min.unwrap_or(self.grid_export_min),
            ),
        }
    }

    pub fn validate(&self, h: &Horizon) -> Result<(), ScenarioError> {
        let id = &self.id;
        if id.is_empty() {
            return Err(invariant("microgrid", "id must not be empty"));
        }
        if !(self.location.x.is_finite() && self.location.y.is_finite()) {
            return Err(invariant(id.as_str(), "location must be finite"));
        }
        if !(self.grid_export_min < 0.0 && 0.0 < self.grid_import_max) || !self.grid_import_max.is_finite() || !self.grid_export_min.is_finite() {
            return Err(invariant(id.as_str(), "requires grid_export_min < 0 < grid_import_max"));
        }
        let mut limits = vec![(self.peer_import_max.unwrap_or(1.0), self.peer_export_min.unwrap_or(-1.0))];
        limits.extend(self.peer_limits.iter().map(|l| (l.import_max, l.export_min)));
        if limits.iter().any(|&(i, e)| !(i.is_finite() && e.is_finite() && e < 0.0 && 0.0 < i)) {
            return Err(invariant(id.as_str(), "peer limits require export_min < 0 < import_max"));
        }
        for (field, v) in [("fixed_load", &self.fixed_load), ("pv", &self.pv)] {
            if v.len() != h.steps {
                return Err(ScenarioError::ProfileLength {
                    entity: id.clone(),
                    field: field.into(),
                    expected: h.steps,
                    got: v.len(),
                });
            }
            if let Some(t) = v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(invariant(id.as_str(), format!("{field}[{t}] must be finite and >= 0")));
            }
        }
        let mut names = std::collections::HashSet::new();
        for s in &self.storages {
            s.validate(&format!("{id}/{}", s.name), h)?;
            if !names.insert(&s.name) {
                return Err(invariant(id.as_str(), format!("duplicate device name {}", s.name)));
            }
        }
        for e in &self.evs {
            e.validate(&format!("{id}/{}", e.name), h)?;
            if !names.insert(&e.name) {
                return Err(invariant(id.as_str(), format!("duplicate device name {}", e.name)));
            }
        }
        for l in &self.dispatchable_loads {
            l.validate(&format!("{id}/{}", l.name), h)?;
            if !names.insert(&l.name) {
                return Err(invariant(id.as_str(), format!("duplicate device name {}", l.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    #[serde(default = "default_loss_factor")]
    pub loss_factor_default: f64,
    /// Dense symmetric `n x n`; the default applies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_factors: Option<Vec<Vec<f64>>>,
    /// Dense symmetric adjacency; fully connected when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connectivity: Option<Vec<Vec<bool>>>,
    #[serde(default = "default_big_m")]
    pub big_m: f64,
}

fn default_loss_factor() -> f64 {
    DEFAULT_LOSS_FACTOR
}

fn default_big_m() -> f64 {
    DEFAULT_BIG_M
}

impl Default for Topology {
    fn default() -> Self {
        Topology { loss_factor_default: DEFAULT_LOSS_FACTOR, loss_factors: None, connectivity: None, big_m: DEFAULT_BIG_M }
    }
}

impl Topology {
    pub fn loss_factor(&self, i: usize, j: usize) -> f64 {
        self.loss_factors.as_ref().map_or(self.loss_factor_default, |m| m[i][j])
    }

    pub fn connected(&self, i: usize, j: usize) -> bool {
        i != j && self.connectivity.as_ref().is_none_or(|c| c[i][j])
    }

    fn validate(&self, mgs: &[MicrogridSpec]) -> Result<(), ScenarioError> {
        let n = mgs.len();
        if !(self.loss_factor_default.is_finite() && self.loss_factor_default >= 0.0) {
            return Err(invariant("topology", "loss_factor_default must be finite and >= 0"));
        }
        if !(self.big_m.is_finite() && self.big_m >= 1.0) {
            return Err(invariant("topology", "big_m must be finite and >= 1"));
        }
        if let Some(m) = &self.loss_factors {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(invariant("topology", format!("loss_factors must be {n} x {n}")));
            }
            for i in 0..n {
                for j in 0..n {
                    if !(m[i][j].is_finite() && m[i][j] >= 0.0) {
                        return Err(invariant("topology", format!("loss_factors[{i}][{j}] must be finite and >= 0")));
                    }
                    if m[i][j] != m[j][i] {
                        return Err(invariant("topology", format!("loss_factors not symmetric at ({i}, {j})")));
                    }
                }
            }
        }
        if let Some(c) = &self.connectivity {
            if c.len() != n || c.iter().any(|r| r.len() != n) {
                return Err(invariant("topology", format!("connectivity must be {n} x {n}")));
            }
            for i in 0..n {
                for j in 0..n {
                    if c[i][j] != c[j][i] {
                        return Err(invariant("topology", format!("connectivity not symmetric at ({i}, {j})")));
                    }
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.connected(i, j) {
                    let w = self.loss_factor(i, j) * mgs[i].location.distance(&mgs[j].location);
                    if w >= 1.0 {
                        return Err(invariant(
                            format!("{}-{}", mgs[i].id, mgs[j].id),
                            format!("loss fraction {w} must be below 1"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub horizon: Horizon,
    pub prices: PriceSchedule,
    #[serde(default)]
    pub topology: Topology,
    pub microgrids: Vec<MicrogridSpec>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.horizon.validate()?;
        validate_prices(&self.prices, &self.horizon)?;
        if self.microgrids.is_empty() {
            return Err(invariant("microgrids", "community has no microgrids"));
        }
        let mut ids = std::collections::HashSet::new();
        for mg in &self.microgrids {
            if !ids.insert(mg.id.as_str()) {
                return Err(invariant(mg.id.as_str(), "duplicate microgrid id"));
            }
        }
        for mg in &self.microgrids {
            mg.validate(&self.horizon)?;
            for l in &mg.peer_limits {
                if !ids.contains(l.peer.as_str()) || l.peer == mg.id {
                    return Err(invariant(mg.id.as_str(), format!("peer_limits names unknown peer {}", l.peer)));
                }
            }
        }
        self.topology.validate(&self.microgrids)
    }

    pub fn len(&self) -> usize {
        self.microgrids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.microgrids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.microgrids.iter().position(|m| m.id == id)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}
