use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controllers::{ControlAction, PiConfig, PiController};
use crate::demand::DemandSample;
use crate::error::{ensure, ParamError};
use crate::plant::{settle, steady_state, ModelParams, SystemState, SOLO_OCCUPANCY};

/// Grid of constant demands and PI set points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub q_pv: Vec<f64>,
    pub q_b: Vec<f64>,
    pub v_targets: Vec<f64>,
    /// Ride-hailing demand held fixed across the grid, pax/hr.
    pub q_rs: f64,
    /// Convergence threshold on the per-step state change.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            q_pv: vec![60000.0, 70000.0, 80000.0],
            q_b: vec![20000.0, 40000.0, 60000.0],
            v_targets: vec![12.0, 13.0, 14.0, 15.0, 16.0, 17.0, 18.0],
            q_rs: 12000.0,
            tol: 1e-6,
            max_iters: 400_000,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ParamError> {
        let grid_ok = |g: &[f64]| !g.is_empty() && g.iter().all(|v| v.is_finite() && *v >= 0.0);
        ensure("q_pv", grid_ok(&self.q_pv), "must be a non-empty list of non-negative rates")?;
        ensure("q_b", grid_ok(&self.q_b), "must be a non-empty list of non-negative rates")?;
        ensure(
            "v_targets",
            grid_ok(&self.v_targets) && self.v_targets.iter().all(|v| *v > 0.0),
            "must be a non-empty list of positive speeds",
        )?;
        ensure("q_rs", self.q_rs.is_finite() && self.q_rs >= 0.0, "must be non-negative and finite")?;
        ensure("tol", self.tol > 0.0 && self.tol.is_finite(), "must be positive and finite")?;
        ensure("max_iters", self.max_iters >= 1, "must be at least 1")
    }
}

/// One grid cell. `pht` and `wt` are steady-state rates in pax·hr per hour;
/// both are NaN when the cell gridlocked or failed to settle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q_pv: f64,
    pub q_b: f64,
    pub v_target: f64,
    pub pht: f64,
    pub wt: f64,
    pub best: bool,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        !self.pht.is_finite()
    }
}

fn pht_rate(s: &SystemState, p: &ModelParams) -> f64 {
    s.n_pv * p.occ_pv + p.n_buses * s.o_b + s.n_s * SOLO_OCCUPANCY + (s.n_p_v + s.n_p_b) * p.occ_pool
}

fn cell(q_pv: f64, q_b: f64, v_target: f64, spec: &SweepSpec, p: &ModelParams, pi: &PiConfig) -> SweepRow {
    let d = DemandSample::new(q_pv, spec.q_rs, q_b);
    let start = steady_state(&d, &ControlAction::default(), p, spec.tol, spec.max_iters)
        .unwrap_or_else(|_| SystemState::idle(p));
    let settled = PiController::new(PiConfig { v_target, ..*pi })
        .map_err(Into::into)
        .and_then(|mut ctl| settle(&start, &d, &mut ctl, p, spec.tol, spec.max_iters));
    let (pht, wt) = match settled {
        Ok(s) => (pht_rate(&s, p), s.c),
        Err(_) => (f64::NAN, f64::NAN),
    };
    SweepRow { q_pv, q_b, v_target, pht, wt, best: false }
}

/// Settles the PI loop at every grid cell and flags, per demand pair, the
/// set point with the lowest `pht + wt`. Ties go to the larger set point.
/// Rows come out ordered by `q_pv`, then `q_b`, then set point, as listed.
pub fn setpoint_sweep(spec: &SweepSpec, p: &ModelParams, pi: &PiConfig) -> Result<Vec<SweepRow>, ParamError> {
    spec.validate()?;
    p.validate()?;
    pi.validate()?;
    let cells: Vec<(f64, f64, f64)> = spec
        .q_pv
        .iter()
        .flat_map(|&a| spec.q_b.iter().flat_map(move |&b| spec.v_targets.iter().map(move |&v| (a, b, v))))
        .collect();
    let mut rows: Vec<SweepRow> = cells.par_iter().map(|&(a, b, v)| cell(a, b, v, spec, p, pi)).collect();

    for group in rows.chunks_mut(spec.v_targets.len()) {
        let mut best: Option<usize> = None;
        for (i, r) in group.iter().enumerate() {
            if r.failed() {
                continue;
            }
            let better = match best {
                None => true,
                Some(j) => {
                    let (cur, inc) = (r.pht + r.wt, group[j].pht + group[j].wt);
                    cur < inc || (cur == inc && r.v_target > group[j].v_target)
                }
            };
            if better {
                best = Some(i);
            }
        }
        if let Some(j) = best {
            group[j].best = true;
        }
    }
    Ok(rows)
}
