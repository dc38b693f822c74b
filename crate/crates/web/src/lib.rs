//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string so the page needs no generated
//! TypeScript types. Errors come back as `{"error": "..."}`.

use buslane_core::choice::{base_disutilities, mode_shares, ControlFares};
use buslane_core::mfd::{bus_speed, pool_speed, speed_vehicle_net};
use buslane_core::scenario::{execute, preset, PRESET_NAMES};
use buslane_core::ModelParams;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn error(message: impl std::fmt::Display) -> String {
    json!({ "error": message.to_string() }).to_string()
}

/// Names accepted by [`run_preset`].
#[wasm_bindgen]
pub fn preset_names() -> String {
    json!(PRESET_NAMES).to_string()
}

/// Speed curves of the default network: vehicle-network speed against its
/// accumulation, and pool and bus speeds against the pool vehicles in the
/// bus lanes.
#[wasm_bindgen]
pub fn mfd_curves(points: usize) -> String {
    let points = points.clamp(2, 2000);
    let p = ModelParams::default();
    let veh_max = p.mfd.alpha * p.mfd.n_max;
    let lane_max = (1.0 - p.mfd.alpha) * p.mfd.n_max;
    let grid = |max: f64| (0..points).map(move |i| max * i as f64 / (points - 1) as f64);
    let vehicle: Vec<[f64; 2]> = grid(veh_max).map(|n| [n, speed_vehicle_net(n, &p.mfd)]).collect();
    let lane: Vec<[f64; 3]> = grid(lane_max - p.n_buses)
        .map(|n| [n, pool_speed(n, p.n_buses, &p.mfd), bus_speed(n, p.n_buses, &p.mfd)])
        .collect();
    json!({ "n_buses": p.n_buses, "vehicle": vehicle, "lane": lane }).to_string()
}

/// Ride-hailing shares (solo, pool in traffic, pool on the bus lane) for
/// the given network speeds and control fares.
#[wasm_bindgen]
pub fn shares_for(v_vehicle: f64, v_pool: f64, phi_v: f64, phi_b: f64) -> String {
    let p = ModelParams::default();
    let u = base_disutilities(v_vehicle, v_pool, &p.choice);
    let mu = p.choice.scale;
    let (xi_v, xi_b) = ControlFares::new(phi_v, phi_b).to_xi(mu);
    match mode_shares(&u, xi_v, xi_b, mu) {
        Ok(s) => json!({ "solo": s.solo, "pool_v": s.pool_v, "pool_b": s.pool_b }).to_string(),
        Err(e) => error(format!("{e:?}")),
    }
}

/// Runs a named scenario on the default demand and returns its summary plus
/// every `stride`-th step of the main series.
#[wasm_bindgen]
pub fn run_preset(name: &str, horizon_hr: f64, abandonment: bool, stride: usize) -> String {
    let mut cfg = match preset(name) {
        Ok(c) => c,
        Err(e) => return error(e),
    };
    cfg.horizon_hr = horizon_hr;
    cfg.abandonment.enabled = abandonment;
    let res = match execute(&cfg) {
        Ok(r) => r,
        Err(e) => return error(e),
    };
    let tau = res.params.tau;
    let series: Vec<Value> = res
        .trajectory
        .records
        .iter()
        .enumerate()
        .step_by(stride.max(1))
        .map(|(k, r)| {
            json!({
                "t": k as f64 * tau,
                "n_pv": r.state.n_pv,
                "n_p_b": r.state.n_p_b,
                "c": r.state.c,
                "v_v": r.rates.v_vehicle,
                "v_b": r.rates.v_bus,
                "beta_v": r.rates.shares.pool_v,
                "beta_b": r.rates.shares.pool_b,
                "phi_v": r.action.fares.phi_v,
                "phi_b": r.action.fares.phi_b,
            })
        })
        .collect();
    let s = &res.summary;
    json!({
        "name": cfg.name,
        "steps": res.trajectory.len(),
        "summary": {
            "objective": s.objective(),
            "pht": s.pht_total,
            "wt": s.wt_total,
            "pht_b": s.pht_b,
            "violation": s.bus_violation,
            "abandoned": s.abandonment_total,
        },
        "series": series,
    })
    .to_string()
}
