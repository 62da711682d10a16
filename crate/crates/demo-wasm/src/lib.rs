//! Browser demo: pairing and settlement on a hand-drawn community, and the
//! degradation curve. Every export takes and returns JSON text so the page
//! needs no bindings beyond strings.

use hems_core::community::{coordinate_step, find_pairing, PairingEvent, Settlement, WeightMatrix};
use hems_core::scenario::{DegradationCurve, Location};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

const BIG_M: f64 = 1e9;

#[derive(Debug, Deserialize)]
pub struct Site {
    pub x: f64,
    pub y: f64,
    /// Net exchange in kW; positive is a deficit.
    #[serde(default)]
    pub p: f64,
}

#[derive(Debug, Deserialize)]
pub struct CommunityInput {
    pub sites: Vec<Site>,
    pub loss_factor: f64,
    #[serde(default = "default_price")]
    pub price: f64,
}

fn default_price() -> f64 {
    0.2
}

#[derive(Debug, Serialize)]
pub struct MatrixOutput {
    pub matrix: Vec<Vec<Option<f64>>>,
    pub first_pair: Option<(usize, usize)>,
}

#[derive(Debug, Serialize)]
pub struct SettlementOutput {
    pub settlements: Vec<Settlement>,
    pub residual: Vec<f64>,
    pub loss_kw: f64,
    pub trace: Vec<PairingEvent>,
}

#[derive(Debug, Deserialize)]
pub struct CurveInput {
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    50
}

#[derive(Debug, Serialize)]
pub struct CurveOutput {
    pub cumulative: Vec<f64>,
    pub g: Vec<f64>,
    pub cost: Vec<f64>,
}

fn weights(input: &CommunityInput) -> Result<WeightMatrix, String> {
    let n = input.sites.len();
    let loc: Vec<Location> = input.sites.iter().map(|s| Location { x: s.x, y: s.y }).collect();
    let mut w = WeightMatrix::all_m(n, BIG_M);
    for i in 0..n {
        for j in i + 1..n {
            let v = input.loss_factor * loc[i].distance(&loc[j]);
            if !(0.0..1.0).contains(&v) {
                return Err(format!("weight between sites {i} and {j} is {v}; it must lie in [0, 1)"));
            }
            w.set(i, j, v);
        }
    }
    Ok(w)
}

fn parse<'a, T: Deserialize<'a>>(json: &'a str) -> Result<T, String> {
    serde_json::from_str(json).map_err(|e| e.to_string())
}

fn emit<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Loss-weight matrix of the sites and the pair the first iteration would pick.
pub fn weight_matrix(json: &str) -> Result<String, String> {
    let input: CommunityInput = parse(json)?;
    let w = weights(&input)?;
    let first_pair = find_pairing(&w).map_err(|e| e.to_string())?;
    emit(&MatrixOutput { matrix: w.rows(), first_pair })
}

/// Settles one step among the sites, recording every iteration.
pub fn settle(json: &str) -> Result<String, String> {
    let input: CommunityInput = parse(json)?;
    if input.sites.iter().any(|s| !s.p.is_finite()) {
        return Err("net exchange must be finite".into());
    }
    let w = weights(&input)?;
    let p: Vec<f64> = input.sites.iter().map(|s| s.p).collect();
    let mut trace = Vec::new();
    let step = coordinate_step(0, &p, &w, input.price, Some(&mut trace)).map_err(|e| e.to_string())?;
    emit(&SettlementOutput { loss_kw: step.loss_kw(), settlements: step.settlements, residual: step.residual, trace })
}

/// Cumulative costs at the breakpoints and the interpolated curve for plotting.
pub fn degradation_curve(json: &str) -> Result<String, String> {
    let input: CurveInput = parse(json)?;
    let bp = &input.breakpoints;
    if bp.len() < 2 || input.slopes.len() != bp.len() - 1 || bp.windows(2).any(|w| !(w[1] > w[0])) {
        return Err("need at least two increasing breakpoints and one slope per segment".into());
    }
    let curve = DegradationCurve { breakpoints: input.breakpoints.clone(), slopes: input.slopes.clone() };
    let (lo, hi) = (bp[0], bp[bp.len() - 1]);
    let k = input.samples.max(2);
    let g: Vec<f64> = (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect();
    let cost = g.iter().map(|&x| curve.cost_at(x.min(hi)).unwrap_or(f64::NAN)).collect();
    emit(&CurveOutput { cumulative: curve.cumulative_costs(), g, cost })
}

#[wasm_bindgen(js_name = weightMatrix)]
pub fn weight_matrix_js(json: &str) -> Result<String, JsValue> {
    weight_matrix(json).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = settle)]
pub fn settle_js(json: &str) -> Result<String, JsValue> {
    settle(json).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = degradationCurve)]
pub fn degradation_curve_js(json: &str) -> Result<String, JsValue> {
    degradation_curve(json).map_err(|e| JsValue::from_str(&e))
}
