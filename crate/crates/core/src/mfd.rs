//! Network speed and production functions.
//!
//! The full-network speed is the per-vehicle form of a cubic production
//! function, `v(n) = A n^2 + B n + C`. The vehicle network holds a fraction
//! `alpha` of the road space and the bus network the remainder, so each
//! subnetwork reuses `v` after rescaling its accumulation. Pool vehicles in
//! the bus lanes are slowed by an exponential bus-interaction factor, and
//! buses additionally lose time at stops.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, finite_pos, ParamError};

/// Calibrated macroscopic fundamental diagram and bus-lane constants.
///
/// Units: speeds in km/hr, accumulations in vehicles, `dwell_time` in hours
/// and `stop_spacing` in km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfdParams {
    pub a0_cubic: f64,
    pub b0_quad: f64,
    pub c0_lin: f64,
    pub n_max: f64,
    pub alpha: f64,
    pub bus_reduction_rate: f64,
    pub dwell_time: f64,
    pub stop_spacing: f64,
}

impl Default for MfdParams {
    fn default() -> Self {
        Self {
            a0_cubic: 5.74e-9,
            b0_quad: -1.02e-3,
            c0_lin: 36.0,
            n_max: 58536.0,
            alpha: 0.8,
            bus_reduction_rate: 6.5e-4,
            dwell_time: 30.0 / 3600.0,
            stop_spacing: 0.8,
        }
    }
}

impl MfdParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        ensure("alpha", self.alpha > 0.0 && self.alpha < 1.0, "must lie in (0, 1)")?;
        ensure("c0_lin", finite_pos(self.c0_lin), "must be positive and finite")?;
        ensure("n_max", finite_pos(self.n_max), "must be positive and finite")?;
        ensure("a0_cubic", self.a0_cubic.is_finite(), "must be finite")?;
        ensure("b0_quad", self.b0_quad.is_finite(), "must be finite")?;
        ensure(
            "bus_reduction_rate",
            self.bus_reduction_rate >= 0.0 && self.bus_reduction_rate.is_finite(),
            "must be non-negative and finite",
        )?;
        ensure("dwell_time", self.dwell_time >= 0.0 && self.dwell_time.is_finite(), "must be non-negative and finite")?;
        ensure("stop_spacing", finite_pos(self.stop_spacing), "must be positive and finite")
    }

    /// Dwell time per km of route, `t_d / s` in hr/km.
    pub fn stop_delay_per_km(&self) -> f64 {
        self.dwell_time / self.stop_spacing
    }
}

/// Full-network running speed. Negative polynomial values are clamped to zero.
pub fn speed_full(n: f64, p: &MfdParams) -> f64 {
    let v = (p.a0_cubic * n + p.b0_quad) * n + p.c0_lin;
    v.max(0.0)
}

pub fn speed_vehicle_net(n_v: f64, p: &MfdParams) -> f64 {
    speed_full(n_v / p.alpha, p)
}

pub fn speed_bus_net(n_b: f64, p: &MfdParams) -> f64 {
    speed_full(n_b / (1.0 - p.alpha), p)
}

/// Speed reduction `r(n_b) = exp(-rate * n_b)` caused by buses sharing the lane.
pub fn bus_reduction_factor(n_buses: f64, p: &MfdParams) -> f64 {
    (-p.bus_reduction_rate * n_buses).exp()
}

/// Running speed of pool vehicles in the bus lanes. The bus-network
/// accumulation is buses plus pool vehicles.
pub fn pool_speed(n_pool_bus: f64, n_buses: f64, p: &MfdParams) -> f64 {
    speed_bus_net(n_pool_bus + n_buses, p) * bus_reduction_factor(n_buses, p)
}

/// Commercial bus speed: the running speed deflated by dwell time at stops.
pub fn bus_speed_from_running(v_pool: f64, p: &MfdParams) -> f64 {
    v_pool / (1.0 + v_pool * p.stop_delay_per_km())
}

pub fn bus_speed(n_pool_bus: f64, n_buses: f64, p: &MfdParams) -> f64 {
    bus_speed_from_running(pool_speed(n_pool_bus, n_buses, p), p)
}

/// Vehicle counts that determine the three productions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulations {
    /// Everything driving in the vehicle network.
    pub vehicle_net: f64,
    /// Pool vehicles in the bus lanes.
    pub pool_bus: f64,
    pub buses: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Speeds {
    pub vehicle: f64,
    pub pool: f64,
    pub bus: f64,
}

impl Speeds {
    pub fn of(acc: &Accumulations, p: &MfdParams) -> Self {
        let pool = pool_speed(acc.pool_bus, acc.buses, p);
        Self { vehicle: speed_vehicle_net(acc.vehicle_net, p), pool, bus: bus_speed_from_running(pool, p) }
    }

    pub fn any_gridlocked(&self) -> bool {
        self.vehicle <= 0.0 || self.pool <= 0.0
    }
}

/// Productions in veh·km/hr.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Productions {
    pub vehicle: f64,
    pub pool: f64,
    pub bus: f64,
}

impl Productions {
    pub fn from_speeds(acc: &Accumulations, speeds: &Speeds) -> Self {
        Self {
            vehicle: acc.vehicle_net * speeds.vehicle,
            pool: acc.pool_bus * speeds.pool,
            bus: acc.buses * speeds.bus,
        }
    }
}

pub fn productions(acc: &Accumulations, p: &MfdParams) -> Productions {
    Productions::from_speeds(acc, &Speeds::of(acc, p))
}

/// Finds the bus fleet size whose commercial speed on an otherwise empty bus
/// network equals `target` (km/hr), by bisection on `[0, upper]`.
///
/// Returns `None` when the target is not bracketed, i.e. it exceeds the
/// empty-lane bus speed or is not reached before the speed collapses.
pub fn calibrate_bus_fleet(target: f64, p: &MfdParams, tol: f64) -> Option<f64> {
    let f = |n_b: f64| bus_speed(0.0, n_b, p) - target;
    let mut lo = 0.0;
    // Bus-lane accumulation beyond (1 - alpha) * n_max is outside the diagram.
    let mut hi = (1.0 - p.alpha) * p.n_max;
    if f(lo) < 0.0 || f(hi) > 0.0 {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
