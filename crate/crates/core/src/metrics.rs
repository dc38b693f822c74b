//! Passenger-hour accounting per step and per run.

use serde::{Deserialize, Serialize};

use crate::plant::{ModelParams, StepRates, SystemState, SOLO_OCCUPANCY};
use crate::trajectory::{ClampCounts, Trajectory};

/// Passenger-hours accrued during one step, split by mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub pht_pv: f64,
    pub pht_rs: f64,
    pub pht_b: f64,
    /// Queued (not yet matched) request hours.
    pub wt: f64,
    /// Bus-km lost below the target speed, `n_b * tau * max(target - v_b, 0)`.
    pub violation: f64,
    pub abandoned: f64,
}

impl StepMetrics {
    pub fn pht(&self) -> f64 {
        self.pht_pv + self.pht_rs + self.pht_b
    }
}

pub fn step_metrics(s: &SystemState, rates: &StepRates, p: &ModelParams, v_target: Option<f64>) -> StepMetrics {
    let tau = p.tau;
    StepMetrics {
        pht_pv: tau * s.n_pv * p.occ_pv,
        pht_rs: tau * (s.n_s * SOLO_OCCUPANCY + (s.n_p_v + s.n_p_b) * p.occ_pool),
        pht_b: tau * p.n_buses * s.o_b,
        wt: tau * s.c,
        violation: v_target.map_or(0.0, |v| p.n_buses * tau * (v - rates.v_bus).max(0.0)),
        abandoned: rates.abandoned,
    }
}

/// Run totals. `pht_total` is the sum of the three modal terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub pht_total: f64,
    pub wt_total: f64,
    pub pht_pv: f64,
    pub pht_rs: f64,
    pub pht_b: f64,
    pub abandonment_total: f64,
    /// veh·km.
    pub bus_violation: f64,
    pub clamp_counts: ClampCounts,
}

impl SummaryRecord {
    /// PHT + WT.
    pub fn objective(&self) -> f64 {
        self.pht_total + self.wt_total
    }

    fn add_step(&mut self, m: &StepMetrics) {
        self.pht_total += m.pht();
        self.wt_total += m.wt;
        self.pht_pv += m.pht_pv;
        self.pht_rs += m.pht_rs;
        self.pht_b += m.pht_b;
        self.abandonment_total += m.abandoned;
        self.bus_violation += m.violation;
    }
}

impl std::ops::Add for SummaryRecord {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            pht_total: self.pht_total + o.pht_total,
            wt_total: self.wt_total + o.wt_total,
            pht_pv: self.pht_pv + o.pht_pv,
            pht_rs: self.pht_rs + o.pht_rs,
            pht_b: self.pht_b + o.pht_b,
            abandonment_total: self.abandonment_total + o.abandonment_total,
            bus_violation: self.bus_violation + o.bus_violation,
            clamp_counts: self.clamp_counts + o.clamp_counts,
        }
    }
}

pub fn summarize(traj: &Trajectory, p: &ModelParams, v_target: Option<f64>) -> SummaryRecord {
    let mut out = SummaryRecord::default();
    for r in &traj.records {
        out.add_step(&step_metrics(&r.state, &r.rates, p, v_target));
        out.clamp_counts.record(&r.rates);
    }
    out
}
