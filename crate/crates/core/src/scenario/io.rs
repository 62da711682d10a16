use std::path::{Path, PathBuf};

use serde_json::Value;

use super::{Scenario, ScenarioError};

const GRID_TOL: f64 = 1e-9;

fn schema(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema { field: field.into(), reason: reason.into() }
}

/// Reads, resolves CSV-backed profiles relative to the file, and validates.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: path.to_path_buf(), reason: e.to_string() })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scenario(&text, &base)
}

pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario, ScenarioError> {
    let value: Value = serde_json::from_str(text).map_err(|e| schema("<document>", e.to_string()))?;
    scenario_from_value(value, base_dir)
}

pub fn scenario_from_value(mut value: Value, base_dir: &Path) -> Result<Scenario, ScenarioError> {
    let dt = value
        .pointer("/horizon/dt_hours")
        .and_then(Value::as_f64)
        .ok_or_else(|| schema("horizon.dt_hours", "missing or not a number"))?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(schema("horizon.dt_hours", "must be positive"));
    }
    for key in ["buy", "sell", "community"] {
        if let Some(v) = value.pointer_mut(&format!("/prices/{key}")) {
            resolve_series(v, base_dir, dt, &format!("prices.{key}"))?;
        }
    }
    if let Some(Value::Array(mgs)) = value.get_mut("microgrids") {
        for (i, mg) in mgs.iter_mut().enumerate() {
            for key in ["fixed_load", "pv"] {
                if let Some(v) = mg.get_mut(key) {
                    resolve_series(v, base_dir, dt, &format!("microgrids[{i}].{key}"))?;
                }
            }
        }
    }
    let mut scenario: Scenario =
        serde_path_to_error::deserialize(value).map_err(|e| schema(e.path().to_string(), e.inner().to_string()))?;
    scenario.prices.fill_community();
    scenario.validate()?;
    Ok(scenario)
}

/// Writes the scenario as pretty JSON with every profile inlined.
pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    let io_err = |e: std::io::Error| ScenarioError::Io { path: path.to_path_buf(), reason: e.to_string() };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err)?;
    }
    std::fs::write(path, scenario.to_json_string() + "\n").map_err(io_err)
}

/// Replaces a `{"csv": file, "column": name}` reference by the resampled
/// inline array. Inline arrays pass through untouched.
fn resolve_series(v: &mut Value, base_dir: &Path, dt: f64, field: &str) -> Result<(), ScenarioError> {
    let Value::Object(obj) = v else { return Ok(()) };
    let file = obj.get("csv").and_then(Value::as_str).ok_or_else(|| schema(field, "expected an array or {\"csv\", \"column\"}"))?;
    let column = obj.get("column").and_then(Value::as_str).unwrap_or("kw");
    let path = base_dir.join(file);
    let (native, samples) = read_csv_series(&path, column)?;
    let values = resample(&samples, native.unwrap_or(dt), dt).map_err(|reason| schema(field, reason))?;
    *v = Value::Array(values.into_iter().map(Value::from).collect());
    Ok(())
}

/// Returns the sample spacing in hours (None for a single row) and the values.
fn read_csv_series(path: &PathBuf, column: &str) -> Result<(Option<f64>, Vec<f64>), ScenarioError> {
    let io_err = |reason: String| ScenarioError::Io { path: path.clone(), reason };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| io_err(e.to_string()))?.clone();
    let t_col = headers.iter().position(|h| h.trim() == "t").ok_or_else(|| io_err("missing column t".into()))?;
    let v_col =
        headers.iter().position(|h| h.trim() == column).ok_or_else(|| io_err(format!("missing column {column}")))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_err(e.to_string()))?;
        let parse = |c: usize| -> Result<f64, ScenarioError> {
            rec.get(c)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|x| x.is_finite())
                .ok_or_else(|| io_err(format!("row {}: bad number in column {}", row + 1, headers.get(c).unwrap_or(""))))
        };
        times.push(parse(t_col)?);
        values.push(parse(v_col)?);
    }
    if values.is_empty() {
        return Err(io_err("no data rows".into()));
    }
    if times.len() < 2 {
        return Ok((None, values));
    }
    let step = times[1] - times[0];
    if step <= 0.0 || times.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > GRID_TOL * (1.0 + step)) {
        return Err(io_err("column t must be evenly spaced and increasing".into()));
    }
    Ok((Some(step), values))
}

/// Step-wise constant resampling between integer-ratio resolutions: finer
/// input is averaged, coarser input is repeated.
pub fn resample(samples: &[f64], native_dt: f64, dt: f64) -> Result<Vec<f64>, String> {
    let ratio = dt / native_dt;
    let near = |r: f64| (r - r.round()).abs() <= GRID_TOL * r.max(1.0) && r.round() >= 1.0;
    if near(ratio) {
        let k = ratio.round() as usize;
        if !samples.len().is_multiple_of(k) {
            return Err(format!("{} samples do not fill whole {dt} h steps", samples.len()));
        }
        Ok(samples.chunks(k).map(|c| c.iter().sum::<f64>() / k as f64).collect())
    } else if near(1.0 / ratio) {
        let k = (1.0 / ratio).round() as usize;
        Ok(samples.iter().flat_map(|&x| std::iter::repeat_n(x, k)).collect())
    } else {
        Err(format!("profile resolution {native_dt} h is not an integer ratio of dt = {dt} h"))
    }
}
