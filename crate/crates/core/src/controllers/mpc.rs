//! Finite-horizon fare planning and the receding-horizon loop.
//!
//! The planner searches piecewise-constant control fares, one value per
//! block of `control_block` steps, minimising passenger-hours plus queue
//! waiting time over a rollout of the internal model. The internal model
//! never abandons requests. Fares are searched in phi-space on the interval
//! whose xi-image is `[xi_min, xi_max]`.

use serde::{Deserialize, Serialize};

use crate::choice::{fare_to_xi, ChoiceSet, ControlFares};
use crate::controllers::optimizer::minimize_in_box;
use crate::controllers::{ControlAction, Controller};
use crate::demand::{DemandProfile, DemandSample};
use crate::error::{ensure, ParamError, SimError};
use crate::metrics::step_metrics;
use crate::plant::{simulate, step, ModelParams, StepRates, SystemState};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlDims {
    /// Only the bus-lane pool fare moves; `phi_v` stays at zero.
    #[default]
    PhiB,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcConfig {
    /// Steps planned by a single call to [`mpc_plan`].
    pub horizon: usize,
    /// Steps per constant-fare block (N_u).
    pub control_block: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    /// Soft lower bound on the bus commercial speed, km/hr.
    pub min_bus_speed: Option<f64>,
    pub dims: ControlDims,
    /// Receding horizon: steps looked ahead at each replan.
    pub prediction_window: usize,
    /// Receding horizon: steps applied before replanning.
    pub replan_period: usize,
    /// Objective evaluations per search.
    pub max_evaluations: usize,
    /// Cost per km/hr·hr below `min_bus_speed`, in pax·hr.
    pub penalty_weight: f64,
    /// Taken from the scenario seed.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon: 650,
            control_block: 180,
            xi_min: (-3.0f64).exp(),
            xi_max: 3.0f64.exp(),
            min_bus_speed: None,
            dims: ControlDims::PhiB,
            prediction_window: 650,
            replan_period: 200,
            max_evaluations: 2000,
            penalty_weight: 1.0e6,
            seed: 0,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), ParamError> {
        ensure("xi_min", self.xi_min > 0.0 && self.xi_min.is_finite(), "must be positive and finite")?;
        ensure("xi_max", self.xi_max >= self.xi_min && self.xi_max.is_finite(), "must be >= xi_min and finite")?;
        ensure("horizon", self.horizon >= 1, "must be at least 1")?;
        ensure(
            "control_block",
            self.control_block >= 1 && self.control_block <= self.horizon,
            "must lie in [1, horizon]",
        )?;
        ensure("prediction_window", self.prediction_window >= 1, "must be at least 1")?;
        ensure(
            "replan_period",
            self.replan_period >= 1 && self.replan_period <= self.prediction_window,
            "must lie in [1, prediction_window]",
        )?;
        ensure("max_evaluations", self.max_evaluations >= 1, "must be at least 1")?;
        ensure(
            "penalty_weight",
            self.penalty_weight >= 0.0 && self.penalty_weight.is_finite(),
            "must be non-negative and finite",
        )?;
        if let Some(v) = self.min_bus_speed {
            ensure("min_bus_speed", v > 0.0 && v.is_finite(), "must be positive and finite")?;
        }
        Ok(())
    }

    pub fn blocks(&self) -> usize {
        self.horizon.div_ceil(self.control_block)
    }

    /// The phi interval whose xi-image lies inside `[xi_min, xi_max]`,
    /// nudged inward so that round-off cannot leave the xi bounds.
    pub fn fare_range(&self, mu: f64) -> (f64, f64) {
        let mut lo = -self.xi_max.ln() / mu;
        let mut hi = -self.xi_min.ln() / mu;
        while fare_to_xi(lo, mu) > self.xi_max {
            lo = lo.next_up();
        }
        while fare_to_xi(hi, mu) < self.xi_min {
            hi = hi.next_down();
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FareBlock {
    pub start: usize,
    pub len: usize,
    pub fares: ControlFares,
}

/// Contiguous constant-fare blocks starting at offset 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FareSchedule {
    blocks: Vec<FareBlock>,
}

impl FareSchedule {
    pub fn uniform(fares: ControlFares, horizon: usize, block: usize) -> Self {
        Self::from_fares(&vec![fares; horizon.div_ceil(block)], horizon, block)
    }

    fn from_fares(fares: &[ControlFares], horizon: usize, block: usize) -> Self {
        let blocks = fares
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let start = i * block;
                FareBlock { start, len: block.min(horizon - start), fares: *f }
            })
            .collect();
        Self { blocks }
    }

    fn from_vector(x: &[f64], dims: ControlDims, horizon: usize, block: usize) -> Self {
        let nb = horizon.div_ceil(block);
        let fares: Vec<ControlFares> = match dims {
            ControlDims::PhiB => x.iter().map(|&b| ControlFares::new(0.0, b)).collect(),
            ControlDims::Both => (0..nb).map(|i| ControlFares::new(x[i], x[nb + i])).collect(),
        };
        Self::from_fares(&fares, horizon, block)
    }

    fn to_vector(&self, dims: ControlDims) -> Vec<f64> {
        match dims {
            ControlDims::PhiB => self.blocks.iter().map(|b| b.fares.phi_b).collect(),
            ControlDims::Both => {
                self.blocks.iter().map(|b| b.fares.phi_v).chain(self.blocks.iter().map(|b| b.fares.phi_b)).collect()
            }
        }
    }

    pub fn blocks(&self) -> &[FareBlock] {
        &self.blocks
    }

    pub fn horizon(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.start + b.len)
    }

    /// Fares at `offset` steps into the schedule; past the end the last block
    /// is held.
    pub fn fares_at(&self, offset: usize) -> ControlFares {
        let idx = self.blocks.partition_point(|b| b.start <= offset);
        self.blocks[idx.saturating_sub(1)].fares
    }

    /// Whether every block's xi-image lies in `[xi_min, xi_max]`.
    pub fn within_xi_bounds(&self, cfg: &MpcConfig, mu: f64) -> bool {
        let ok = |phi: f64| {
            let xi = fare_to_xi(phi, mu);
            xi >= cfg.xi_min && xi <= cfg.xi_max
        };
        self.blocks.iter().all(|b| ok(b.fares.phi_v) && ok(b.fares.phi_b))
    }

    /// Resamples onto a new block grid starting `shift` steps later.
    fn shifted(&self, shift: usize, horizon: usize, block: usize) -> Self {
        let nb = horizon.div_ceil(block);
        let fares: Vec<ControlFares> = (0..nb).map(|i| self.fares_at(shift + i * block)).collect();
        Self::from_fares(&fares, horizon, block)
    }
}

fn stage_cost(s: &SystemState, rates: &StepRates, p: &ModelParams, cfg: &MpcConfig) -> f64 {
    let m = step_metrics(s, rates, p, None);
    let mut cost = m.pht() + m.wt;
    if let Some(v_min) = cfg.min_bus_speed {
        cost += cfg.penalty_weight * p.tau * (v_min - rates.v_bus).max(0.0);
    }
    cost
}

/// Sum of PHT + WT over the recorded steps, plus the minimum-speed penalty
/// when configured.
pub fn mpc_objective(traj: &Trajectory, p: &ModelParams, cfg: &MpcConfig) -> f64 {
    traj.records.iter().map(|r| stage_cost(&r.state, &r.rates, p, cfg)).sum()
}

/// Cost of the abandonment-free rollout of `schedule` from `s0`.
fn rollout_cost(
    s0: &SystemState,
    forecast: &[DemandSample],
    schedule: &FareSchedule,
    p: &ModelParams,
    cfg: &MpcConfig,
) -> Result<f64, SimError> {
    let mut s = *s0;
    let mut total = 0.0;
    for (k, d) in forecast.iter().enumerate() {
        let action = ControlAction { fares: schedule.fares_at(k), choice_set: ChoiceSet::Full };
        let (next, rates) = step(&s, d, &action, p, false)?;
        total += stage_cost(&s, &rates, p, cfg);
        s = next;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub schedule: FareSchedule,
    pub objective: f64,
    /// Objective of zero control fares over the same forecast.
    pub baseline_objective: f64,
    pub evaluations: usize,
    /// The search stopped on budget rather than on convergence.
    pub budget_exhausted: bool,
}

/// Plans fares over `cfg.horizon` steps from `s`. `forecast` holds demand for
/// at least that many steps.
///
/// With both fares free, the one-fare problem is solved first and its
/// solution seeds the two-fare search, so the result is never worse than the
/// one-fare plan. Each search spends up to `cfg.max_evaluations`.
pub fn mpc_plan(
    s: &SystemState,
    forecast: &[DemandSample],
    p: &ModelParams,
    cfg: &MpcConfig,
) -> Result<Plan, SimError> {
    plan_seeded(s, forecast, p, cfg, None)
}

fn plan_seeded(
    s: &SystemState,
    forecast: &[DemandSample],
    p: &ModelParams,
    cfg: &MpcConfig,
    warm: Option<&FareSchedule>,
) -> Result<Plan, SimError> {
    cfg.validate()?;
    if forecast.len() < cfg.horizon {
        return Err(ParamError::new("forecast", format!("covers {} of {} steps", forecast.len(), cfg.horizon)).into());
    }
    let forecast = &forecast[..cfg.horizon];
    let (lo, hi) = cfg.fare_range(p.choice.scale);
    if lo > hi {
        return Err(ParamError::new("xi_min/xi_max", "fare interval is empty").into());
    }
    let horizon = cfg.horizon;
    let block = cfg.control_block;
    let nb = cfg.blocks();
    let baseline = rollout_cost(s, forecast, &FareSchedule::uniform(ControlFares::ZERO, horizon, block), p, cfg)?;

    let search = |dims: ControlDims, starts: Vec<Vec<f64>>| {
        let n = match dims {
            ControlDims::PhiB => nb,
            ControlDims::Both => 2 * nb,
        };
        let cost = |x: &[f64]| {
            let sched = FareSchedule::from_vector(x, dims, horizon, block);
            rollout_cost(s, forecast, &sched, p, cfg).unwrap_or(f64::INFINITY)
        };
        let seed = cfg.seed ^ s.step_index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let out = minimize_in_box(cost, &vec![lo; n], &vec![hi; n], &starts, cfg.max_evaluations, seed);
        (FareSchedule::from_vector(&out.x, dims, horizon, block), out)
    };

    let zero_start = |dims: ControlDims| match dims {
        ControlDims::PhiB => vec![0.0; nb],
        ControlDims::Both => vec![0.0; 2 * nb],
    };
    let mut starts = vec![zero_start(ControlDims::PhiB)];
    if let Some(w) = warm {
        starts.push(w.shifted(0, horizon, block).to_vector(ControlDims::PhiB));
    }
    let (mut schedule, mut out) = search(ControlDims::PhiB, starts);
    let mut evaluations = out.evaluations;
    let mut exhausted = out.exhausted;

    if cfg.dims == ControlDims::Both {
        let mut starts = vec![schedule.to_vector(ControlDims::Both), zero_start(ControlDims::Both)];
        if let Some(w) = warm {
            starts.push(w.shifted(0, horizon, block).to_vector(ControlDims::Both));
        }
        let (two, out2) = search(ControlDims::Both, starts);
        evaluations += out2.evaluations;
        exhausted |= out2.exhausted;
        if out2.value <= out.value {
            schedule = two;
            out = out2;
        }
    }

    // The zero schedule was a start, so the search result cannot be worse,
    // unless the zero schedule lies outside the xi bounds.
    let objective = out.value;
    Ok(Plan { schedule, objective, baseline_objective: baseline, evaluations, budget_exhausted: exhausted })
}

/// One replanning event of a receding-horizon run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanRecord {
    pub step: usize,
    pub window: usize,
    pub objective: f64,
    pub baseline_objective: f64,
    pub evaluations: usize,
    pub budget_exhausted: bool,
    pub schedule: FareSchedule,
}

/// Replans every `replan_period` steps from the state it is handed, over
/// `prediction_window` steps of its demand forecast (shortened at the end of
/// the run).
#[derive(Debug, Clone)]
pub struct MpcController {
    cfg: MpcConfig,
    forecast: Vec<DemandSample>,
    t: usize,
    current: Option<(usize, FareSchedule)>,
    log: Vec<ReplanRecord>,
}

impl MpcController {
    pub fn new(cfg: MpcConfig, forecast: Vec<DemandSample>) -> Result<Self, ParamError> {
        cfg.validate()?;
        Ok(Self { cfg, forecast, t: 0, current: None, log: Vec::new() })
    }

    pub fn log(&self) -> &[ReplanRecord] {
        &self.log
    }

    pub fn into_log(self) -> Vec<ReplanRecord> {
        self.log
    }
}

impl Controller for MpcController {
    fn act(&mut self, state: &SystemState, p: &ModelParams) -> Result<ControlAction, SimError> {
        let t = self.t;
        if t >= self.forecast.len() {
            return Err(SimError::Controller { step: state.step_index, message: "forecast exhausted".into() });
        }
        if t.is_multiple_of(self.cfg.replan_period) || self.current.is_none() {
            let window = self.cfg.prediction_window.min(self.forecast.len() - t);
            let cfg = MpcConfig { horizon: window, control_block: self.cfg.control_block.min(window), ..self.cfg };
            let warm = self.current.as_ref().map(|(start, sched)| {
                let shift = t - start;
                sched.shifted(shift, window, cfg.control_block)
            });
            let plan = plan_seeded(state, &self.forecast[t..t + window], p, &cfg, warm.as_ref())?;
            self.log.push(ReplanRecord {
                step: t,
                window,
                objective: plan.objective,
                baseline_objective: plan.baseline_objective,
                evaluations: plan.evaluations,
                budget_exhausted: plan.budget_exhausted,
                schedule: plan.schedule.clone(),
            });
            self.current = Some((t, plan.schedule));
        }
        let (start, sched) = self.current.as_ref().expect("plan exists after replanning");
        self.t += 1;
        Ok(ControlAction { fares: sched.fares_at(t - start), choice_set: ChoiceSet::Full })
    }
}

/// Closed loop: the plant (with abandonment if enabled) runs the first
/// `replan_period` steps of each plan, then the planner restarts from the
/// realised plant state.
pub fn receding_horizon_run(
    s0: &SystemState,
    demand: &DemandProfile,
    p: &ModelParams,
    cfg: &MpcConfig,
    steps: usize,
    abandonment_enabled: bool,
) -> Result<Trajectory, SimError> {
    let forecast = demand.samples(0, steps, p.tau)?;
    let mut ctl = MpcController::new(*cfg, forecast)?;
    let mut traj = simulate(s0, demand, &mut ctl, p, steps, abandonment_enabled)?;
    traj.replans = ctl.into_log();
    Ok(traj)
}
