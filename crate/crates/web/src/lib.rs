//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each operation has a plain Rust function returning JSON (usable and
//! testable natively) and a `#[wasm_bindgen]` wrapper that turns errors into
//! JavaScript exceptions.

use serde::Serialize;
use spectator_core::bench::run_budget;
use spectator_core::device::{DeviceTopology, GateContext, Spectator, SpectatorRole};
use spectator_core::dispersive::{
    conditional_phase_error, leakage_error, shifts_at, DEFAULT_POLE_EPS,
};
use wasm_bindgen::prelude::*;

/// Most points a single curve request may ask for.
const MAX_POINTS: usize = 20_000;

#[derive(Debug, Serialize)]
pub struct ShiftCurves {
    pub delta: Vec<f64>,
    /// `None` (JSON null) within the pole guard.
    pub zeta1: Vec<Option<f64>>,
    pub zeta2: Vec<Option<f64>>,
    pub zeta12: Vec<Option<f64>>,
    /// Pole positions with the crossing they belong to.
    pub poles: Vec<(f64, String)>,
}

#[derive(Debug, Serialize)]
pub struct ErrorCurves {
    pub delta: Vec<f64>,
    pub d_phi_c: Vec<f64>,
    /// `None` outside the perturbative range of the leakage formula.
    pub d_leak: Vec<Option<f64>>,
    pub gate_time_ns: f64,
}

#[derive(Debug, Serialize)]
pub struct BudgetEntry {
    pub config: String,
    pub zeta1_tot: f64,
    pub d_phi_c: f64,
    pub d_phi_d_g1: f64,
    pub d_phi_d_g2: f64,
    pub d_leak: Option<f64>,
    pub eps_cz: f64,
}

fn grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must be between 2 and {MAX_POINTS}"));
    }
    if !(start.is_finite() && stop.is_finite()) || start == stop {
        return Err("start and stop must be finite and distinct".into());
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|k| start + (stop - start) * k as f64 / n)
        .collect())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

/// ζ1, ζ2, ζ12 against Δ = ω_S − ω_G, MHz.
pub fn shift_curves_json(
    anh_g: f64,
    anh_s: f64,
    beta_g: f64,
    j: f64,
    start: f64,
    stop: f64,
    points: usize,
) -> Result<String, String> {
    let delta = grid(start, stop, points)?;
    let mut out = ShiftCurves {
        zeta1: Vec::with_capacity(points),
        zeta2: Vec::with_capacity(points),
        zeta12: Vec::with_capacity(points),
        poles: spectator_core::dispersive::Resonance::ALL
            .iter()
            .map(|r| (r.detuning(anh_g, beta_g, anh_s), r.to_string()))
            .collect(),
        delta,
    };
    for &d in &out.delta {
        let z = shifts_at(d, anh_g, beta_g, anh_s, j, DEFAULT_POLE_EPS).ok();
        out.zeta1.push(z.map(|z| z.zeta1));
        out.zeta2.push(z.map(|z| z.zeta2));
        out.zeta12.push(z.map(|z| z.zeta12));
    }
    Ok(to_json(&out))
}

/// δΦc (degrees) and δL against the gate detuning δ for coupling `j`.
pub fn error_curves_json(j: f64, max_delta: f64, points: usize) -> Result<String, String> {
    if !(j.is_finite() && j > 0.0) {
        return Err("coupling must be positive".into());
    }
    let delta = grid(-max_delta.abs(), max_delta.abs(), points)?;
    let out = ErrorCurves {
        d_phi_c: delta.iter().map(|&d| conditional_phase_error(d, j)).collect(),
        d_leak: delta.iter().map(|&d| leakage_error(d, j).ok()).collect(),
        gate_time_ns: spectator_core::device::gate_duration_from_j(j).map_err(|e| e.to_string())?,
        delta,
    };
    Ok(to_json(&out))
}

/// Error budget for every spectator configuration of a gate on `device_json`.
/// `s1`/`s2` are comma-separated spectator ids on G1/G2.
#[allow(clippy::too_many_arguments)]
pub fn budget_json(
    device_json: &str,
    g1: &str,
    g2: &str,
    s1: &str,
    s2: &str,
    t_g: f64,
    t_b: f64,
    t_s: f64,
) -> Result<String, String> {
    let device = DeviceTopology::from_json_str(device_json).map_err(|e| e.to_string())?;
    let ids = |list: &str, role: SpectatorRole| -> Vec<Spectator> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|label| Spectator {
                label: label.to_string(),
                role,
            })
            .collect()
    };
    let mut spectators = ids(s1, SpectatorRole::OnComputationalQubit);
    spectators.extend(ids(s2, SpectatorRole::OnLeakageQubit));
    let ctx = GateContext::new(g1, g2, spectators, t_g, t_b, t_s).map_err(|e| e.to_string())?;
    let rows = run_budget(&ctx, &device, DEFAULT_POLE_EPS).map_err(|e| e.to_string())?;
    let out: Vec<BudgetEntry> = rows
        .into_iter()
        .map(|r| BudgetEntry {
            config: r.label,
            zeta1_tot: r.report.zeta1_tot,
            d_phi_c: r.report.d_phi_c,
            d_phi_d_g1: r.report.d_phi_d[&ctx.g1],
            d_phi_d_g2: r.report.d_phi_d[&ctx.g2],
            d_leak: r.report.d_leak,
            eps_cz: r.eps_cz,
        })
        .collect();
    Ok(to_json(&out))
}

/// The bundled seven-qubit device file.
pub fn bundled_device_json() -> String {
    DeviceTopology::seven_qubit_example().to_json()
}

#[wasm_bindgen]
pub fn shift_curves(
    anh_g: f64,
    anh_s: f64,
    beta_g: f64,
    j: f64,
    start: f64,
    stop: f64,
    points: usize,
) -> Result<String, JsValue> {
    shift_curves_json(anh_g, anh_s, beta_g, j, start, stop, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn error_curves(j: f64, max_delta: f64, points: usize) -> Result<String, JsValue> {
    error_curves_json(j, max_delta, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn budget(
    device_json: &str,
    g1: &str,
    g2: &str,
    s1: &str,
    s2: &str,
    t_g: f64,
    t_b: f64,
    t_s: f64,
) -> Result<String, JsValue> {
    budget_json(device_json, g1, g2, s1, s2, t_g, t_b, t_s).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bundled_device() -> String {
    bundled_device_json()
}
