use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::choice::{ChoiceSet, ControlFares};
use crate::controllers::{ControlAction, Controller};
use crate::error::{ensure, finite_pos, ParamError, SimError};
use crate::mfd::bus_speed;
use crate::plant::{ModelParams, SystemState};

/// Bus-speed tracking on the bus-lane pool fare.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PiConfig {
    /// CHF per km/hr of error.
    pub k_p: f64,
    pub k_i: f64,
    /// Number of past errors averaged by the integral term (N_e).
    pub window: usize,
    /// Target bus speed, km/hr.
    pub v_target: f64,
    /// Output range for `phi_b`, CHF. `None` leaves it unbounded.
    pub fare_bounds: Option<(f64, f64)>,
}

impl Default for PiConfig {
    fn default() -> Self {
        Self { k_p: 5.0, k_i: 11.0, window: 100, v_target: 17.0, fare_bounds: Some((-3.0, 3.0)) }
    }
}

impl PiConfig {
    pub fn validate(&self) -> Result<(), ParamError> {
        ensure("k_p", finite_pos(self.k_p), "must be positive and finite")?;
        ensure("k_i", self.k_i >= 0.0 && self.k_i.is_finite(), "must be non-negative and finite")?;
        ensure("window", self.window >= 1, "must be at least 1")?;
        ensure("v_target", finite_pos(self.v_target), "must be positive and finite")?;
        if let Some((lo, hi)) = self.fare_bounds {
            ensure("fare_bounds", lo <= hi && lo.is_finite() && hi.is_finite(), "need lo <= hi, finite")?;
        }
        Ok(())
    }
}

/// `phi_b = k_p * e(k) + k_i / N_e * sum(previous errors)`, where the sum runs
/// over the last `N_e + 1` entries of `previous` (oldest first). `phi_v` is 0.
pub fn pi_fare(current_error: f64, previous: &[f64], cfg: &PiConfig) -> ControlFares {
    let from = previous.len().saturating_sub(cfg.window + 1);
    let integral: f64 = previous[from..].iter().sum();
    let mut phi_b = cfg.k_p * current_error + cfg.k_i / cfg.window as f64 * integral;
    if let Some((lo, hi)) = cfg.fare_bounds {
        phi_b = phi_b.clamp(lo, hi);
    }
    ControlFares { phi_v: 0.0, phi_b }
}

#[derive(Debug, Clone)]
pub struct PiController {
    cfg: PiConfig,
    errors: VecDeque<f64>,
}

impl PiController {
    pub fn new(cfg: PiConfig) -> Result<Self, ParamError> {
        cfg.validate()?;
        Ok(Self { cfg, errors: VecDeque::with_capacity(cfg.window + 2) })
    }

    pub fn config(&self) -> &PiConfig {
        &self.cfg
    }
}

impl Controller for PiController {
    fn act(&mut self, state: &SystemState, p: &ModelParams) -> Result<ControlAction, SimError> {
        let v_b = bus_speed(state.n_p_b, p.n_buses, &p.mfd);
        let error = self.cfg.v_target - v_b;
        let fares = pi_fare(error, self.errors.make_contiguous(), &self.cfg);
        self.errors.push_back(error);
        if self.errors.len() > self.cfg.window + 1 {
            self.errors.pop_front();
        }
        Ok(ControlAction { fares, choice_set: ChoiceSet::Full })
    }
}
