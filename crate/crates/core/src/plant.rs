//! Discrete-time state update for private vehicles, the ride-hailing fleet,
//! the request queue and bus occupancy.

use serde::{Deserialize, Serialize};

use crate::choice::{
    abandonment, base_disutilities, matching_rate, mode_shares_within, ChoiceParams, ChoiceSet, ControlFares,
    MatchClamp, MatchingParams, ModeShares,
};
use crate::controllers::{ControlAction, Controller};
use crate::demand::{DemandProfile, DemandSample};
use crate::error::{ensure, finite_pos, ParamError, SimError};
use crate::mfd::{calibrate_bus_fleet, Accumulations, MfdParams, Productions, Speeds};
use crate::trajectory::{StepRecord, Trajectory};

/// Occupancy of a solo ride-hailing trip (the driver is not counted).
pub const SOLO_OCCUPANCY: f64 = 1.0;

/// Bus commercial speed on an otherwise empty bus network, used to size the
/// default bus fleet.
pub const EMPTY_LANE_BUS_SPEED: f64 = 19.0;

/// How abandoning requests are booked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbandonmentUnits {
    /// The whole excess leaves the queue in one step, while bus occupancy
    /// gains it scaled by `tau / n_b` like a per-hour rate.
    #[default]
    AsPrinted,
    /// The excess is a passenger count on both sides: removed from the queue
    /// and added to bus occupancy as `A / n_b`.
    CountConsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mfd: MfdParams,
    pub choice: ChoiceParams,
    pub matching: MatchingParams,
    /// Ride-hailing fleet size N.
    pub fleet_size: f64,
    pub n_buses: f64,
    /// Private-vehicle occupancy, pax/veh.
    pub occ_pv: f64,
    /// Pool-trip occupancy, pax/veh.
    pub occ_pool: f64,
    pub trip_len_pv: f64,
    pub trip_len_bus: f64,
    /// Step length in hours.
    pub tau: f64,
    pub abandonment_units: AbandonmentUnits,
}

impl Default for ModelParams {
    fn default() -> Self {
        let mfd = MfdParams::default();
        let trip = 3.86;
        Self {
            mfd,
            choice: ChoiceParams::default(),
            matching: MatchingParams::default(),
            fleet_size: 3500.0,
            n_buses: calibrate_bus_fleet(EMPTY_LANE_BUS_SPEED, &mfd, 1e-9)
                .expect("default diagram brackets the empty-lane bus speed"),
            occ_pv: 1.2,
            occ_pool: 1.5,
            trip_len_pv: trip,
            trip_len_bus: 1.4 * trip,
            tau: 6.0 / 3600.0,
            abandonment_units: AbandonmentUnits::AsPrinted,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        self.mfd.validate().map_err(|e| e.within("mfd"))?;
        self.choice.validate().map_err(|e| e.within("choice"))?;
        self.matching.validate().map_err(|e| e.within("matching"))?;
        ensure("fleet_size", finite_pos(self.fleet_size), "must be positive and finite")?;
        ensure("n_buses", finite_pos(self.n_buses), "must be positive and finite")?;
        ensure("occ_pv", finite_pos(self.occ_pv), "must be positive and finite")?;
        ensure("occ_pool", self.occ_pool > 1.0 && self.occ_pool <= 2.0, "must lie in (1, 2]")?;
        ensure("trip_len_pv", finite_pos(self.trip_len_pv), "must be positive and finite")?;
        ensure("trip_len_bus", finite_pos(self.trip_len_bus), "must be positive and finite")?;
        ensure("tau", finite_pos(self.tau), "must be positive and finite")
    }

    /// Number of steps covering `hours`.
    pub fn steps_in(&self, hours: f64) -> usize {
        (hours / self.tau).round() as usize
    }
}

/// State at one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub n_pv: f64,
    pub n_e: f64,
    pub n_s: f64,
    pub n_p_v: f64,
    pub n_p_b: f64,
    /// Requests waiting to be matched.
    pub c: f64,
    /// Passengers per bus.
    pub o_b: f64,
    /// Mean match rate over steps `1..=step_index` (zero before any history).
    pub match_avg: f64,
    pub step_index: u64,
}

impl SystemState {
    /// No traffic, the whole fleet idle.
    pub fn idle(p: &ModelParams) -> Self {
        Self { n_e: p.fleet_size, ..Self::default() }
    }

    pub fn fleet_total(&self) -> f64 {
        self.n_e + self.n_s + self.n_p_v + self.n_p_b
    }

    pub fn vehicle_net(&self) -> f64 {
        self.n_pv + self.n_e + self.n_s + self.n_p_v
    }

    pub fn accumulations(&self, p: &ModelParams) -> Accumulations {
        Accumulations { vehicle_net: self.vehicle_net(), pool_bus: self.n_p_b, buses: p.n_buses }
    }

    pub fn speeds(&self, p: &ModelParams) -> Speeds {
        Speeds::of(&self.accumulations(p), &p.mfd)
    }

    /// The seven dynamic fields, in a fixed order.
    pub fn dynamic_fields(&self) -> [(&'static str, f64); 7] {
        [
            ("n_pv", self.n_pv),
            ("n_e", self.n_e),
            ("n_s", self.n_s),
            ("n_p_v", self.n_p_v),
            ("n_p_b", self.n_p_b),
            ("c", self.c),
            ("o_b", self.o_b),
        ]
    }

    /// Largest absolute change across the dynamic fields.
    pub fn max_change(&self, other: &Self) -> f64 {
        self.dynamic_fields()
            .iter()
            .zip(other.dynamic_fields().iter())
            .map(|((_, a), (_, b))| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_finite(&self) -> Result<(), SimError> {
        for (field, v) in self.dynamic_fields() {
            if !v.is_finite() {
                return Err(SimError::NonFinite { step: self.step_index, field });
            }
        }
        if !self.match_avg.is_finite() {
            return Err(SimError::NonFinite { step: self.step_index, field: "match_avg" });
        }
        Ok(())
    }
}

/// Trip completion rates, trips/hr (bus: passengers/hr).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Outflows {
    pub pv: f64,
    pub solo: f64,
    pub pool_v: f64,
    pub pool_b: f64,
    pub bus_pax: f64,
}

/// Which feasibility guards acted during a step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepClamps {
    pub matching: MatchClamp,
    pub abandonment: bool,
    pub outflow: bool,
    /// A value within round-off of zero was floored at zero.
    pub roundoff: bool,
    /// Some subnetwork speed was zero.
    pub gridlock: bool,
}

impl StepClamps {
    pub fn any(&self) -> bool {
        self.matching != MatchClamp::None || self.abandonment || self.outflow || self.roundoff
    }
}

/// Rates derived during one step, for logging and metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRates {
    pub outflows: Outflows,
    /// Vehicle matches per hour.
    pub match_rate: f64,
    /// Requests abandoning this step.
    pub abandoned: f64,
    pub v_vehicle: f64,
    pub v_pool: f64,
    pub v_bus: f64,
    pub shares: ModeShares,
    pub clamps: StepClamps,
}

/// Completion rates and the speeds behind them. With an empty vehicle
/// network the vehicle-network ratios are zero.
pub fn completion_rates(s: &SystemState, p: &ModelParams) -> (Outflows, Speeds, Productions) {
    let acc = s.accumulations(p);
    let speeds = Speeds::of(&acc, &p.mfd);
    let prod = Productions::from_speeds(&acc, &speeds);
    let pool_len = p.choice.pool_trip_len();
    let share = |n: f64| if acc.vehicle_net > 0.0 { n / acc.vehicle_net } else { 0.0 };
    let out = Outflows {
        pv: share(s.n_pv) * prod.vehicle / p.trip_len_pv,
        solo: share(s.n_s) * prod.vehicle / p.choice.trip_len_solo,
        pool_v: share(s.n_p_v) * prod.vehicle / pool_len,
        pool_b: prod.pool / pool_len,
        bus_pax: prod.bus / p.trip_len_bus * s.o_b,
    };
    (out, speeds, prod)
}

/// Advances the state by one step of length `p.tau`.
///
/// Order within a step: speeds, disutilities, shares, matching (clamped),
/// abandonment, then all seven state updates from the pre-step state.
pub fn step(
    s: &SystemState,
    d: &DemandSample,
    action: &ControlAction,
    p: &ModelParams,
    abandonment_enabled: bool,
) -> Result<(SystemState, StepRates), SimError> {
    s.check_finite()?;
    let k = s.step_index;
    if !action.fares.is_finite() {
        return Err(SimError::NonFinite { step: k, field: "fares" });
    }
    let tau = p.tau;
    let mut clamps = StepClamps::default();

    let (mut out, speeds, _) = completion_rates(s, p);
    clamps.gridlock = speeds.any_gridlocked();
    // An outflow may not empty more than the category holds in one step.
    let mut cap = |rate: &mut f64, stock: f64| {
        if *rate * tau > stock {
            *rate = stock / tau;
            clamps.outflow = true;
        }
    };
    cap(&mut out.pv, s.n_pv);
    cap(&mut out.solo, s.n_s);
    cap(&mut out.pool_v, s.n_p_v);
    cap(&mut out.pool_b, s.n_p_b);
    cap(&mut out.bus_pax, s.o_b * p.n_buses);

    let u = base_disutilities(speeds.vehicle, speeds.pool, &p.choice);
    let (xi_v, xi_b) = action.fares.to_xi(p.choice.scale);
    let shares = mode_shares_within(&u, xi_v, xi_b, p.choice.scale, action.choice_set)
        .map_err(|_| SimError::NoViableAlternative { step: k })?;

    let matching = matching_rate(s.n_e, s.c, &shares, &p.matching, tau);
    clamps.matching = matching.clamp;
    let m = matching.rate;
    let queue_drain = (1.0 + shares.pool()) * m;

    // Running mean over steps 1..=k; step 0 has no history.
    let match_avg = if k == 0 { 0.0 } else { ((k - 1) as f64 * s.match_avg + m) / k as f64 };
    let mut abandoned = 0.0;
    if abandonment_enabled && k > 0 {
        abandoned = abandonment(s.c, Some(match_avg), p.matching.w_max);
        let room = (s.c - tau * queue_drain).max(0.0);
        if abandoned > room {
            abandoned = room;
            clamps.abandonment = true;
        }
    }

    let bus_gain = match p.abandonment_units {
        AbandonmentUnits::AsPrinted => tau / p.n_buses * (d.q_b + abandoned - out.bus_pax),
        AbandonmentUnits::CountConsistent => tau / p.n_buses * (d.q_b - out.bus_pax) + abandoned / p.n_buses,
    };
    let mut next = SystemState {
        n_pv: s.n_pv + tau * (d.q_pv / p.occ_pv - out.pv),
        n_e: s.n_e + tau * (out.solo + out.pool_v + out.pool_b - m),
        n_s: s.n_s + tau * (shares.solo * m - out.solo),
        n_p_v: s.n_p_v + tau * (shares.pool_v * m - out.pool_v),
        n_p_b: s.n_p_b + tau * (shares.pool_b * m - out.pool_b),
        c: s.c + tau * (d.q_rs - queue_drain) - abandoned,
        o_b: s.o_b + bus_gain,
        match_avg,
        step_index: k + 1,
    };
    next.check_finite()?;
    floor_roundoff(&mut next, p, &mut clamps)?;

    let rates = StepRates {
        outflows: out,
        match_rate: m,
        abandoned,
        v_vehicle: speeds.vehicle,
        v_pool: speeds.pool,
        v_bus: speeds.bus,
        shares,
        clamps,
    };
    Ok((next, rates))
}

fn floor_roundoff(s: &mut SystemState, p: &ModelParams, clamps: &mut StepClamps) -> Result<(), SimError> {
    let tol = 1e-9 * p.fleet_size.max(1.0);
    let step = s.step_index;
    let fields: [(&'static str, &mut f64); 7] = [
        ("n_pv", &mut s.n_pv),
        ("n_e", &mut s.n_e),
        ("n_s", &mut s.n_s),
        ("n_p_v", &mut s.n_p_v),
        ("n_p_b", &mut s.n_p_b),
        ("c", &mut s.c),
        ("o_b", &mut s.o_b),
    ];
    for (field, v) in fields {
        if *v < 0.0 {
            if *v < -tol {
                return Err(SimError::Negative { step, field, value: *v });
            }
            *v = 0.0;
            clamps.roundoff = true;
        }
    }
    Ok(())
}

/// Runs `horizon` steps from `s0`, asking the controller for an action at
/// every step. Demand at step `k` is read at `k * tau` hours.
pub fn simulate(
    s0: &SystemState,
    demand: &DemandProfile,
    controller: &mut dyn Controller,
    p: &ModelParams,
    horizon: usize,
    abandonment_enabled: bool,
) -> Result<Trajectory, SimError> {
    p.validate()?;
    let mut records = Vec::with_capacity(horizon);
    let mut state = *s0;
    for i in 0..horizon {
        let d = demand.at(i as f64 * p.tau)?;
        let action = controller.act(&state, p).map_err(|e| match e {
            SimError::Controller { .. } => e,
            other => SimError::Controller { step: state.step_index, message: other.to_string() },
        })?;
        let (next, rates) = step(&state, &d, &action, p, abandonment_enabled)?;
        records.push(StepRecord { state, action, rates });
        state = next;
    }
    Ok(Trajectory { records, final_state: state, replans: Vec::new() })
}

/// Runs a fixed action under constant demand until the largest per-step
/// change falls below `tol`. Starts from an idle network; abandonment is off.
pub fn steady_state(
    d: &DemandSample,
    action: &ControlAction,
    p: &ModelParams,
    tol: f64,
    max_iters: usize,
) -> Result<SystemState, SimError> {
    let mut fixed = FixedAction(*action);
    settle(&SystemState::idle(p), d, &mut fixed, p, tol, max_iters)
}

/// Closed-loop variant of [`steady_state`] starting from `s0`. The returned
/// state has its step counter and match history reset.
pub fn settle(
    s0: &SystemState,
    d: &DemandSample,
    controller: &mut dyn Controller,
    p: &ModelParams,
    tol: f64,
    max_iters: usize,
) -> Result<SystemState, SimError> {
    p.validate()?;
    if !d.is_valid() {
        return Err(ParamError::new("demand", "rates must be finite and non-negative").into());
    }
    let mut state = *s0;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        let action = controller.act(&state, p)?;
        let (next, rates) = step(&state, d, &action, p, false)?;
        if rates.clamps.gridlock {
            return Err(SimError::Gridlock { step: state.step_index });
        }
        residual = next.max_change(&state);
        state = next;
        if residual < tol {
            return Ok(SystemState { match_avg: 0.0, step_index: 0, ..state });
        }
    }
    Err(SimError::NotConverged { iters: max_iters, residual })
}

/// Applies the same action forever.
#[derive(Debug, Clone, Copy)]
pub struct FixedAction(pub ControlAction);

impl Controller for FixedAction {
    fn act(&mut self, _state: &SystemState, _p: &ModelParams) -> Result<ControlAction, SimError> {
        Ok(self.0)
    }
}

impl From<ControlFares> for FixedAction {
    fn from(fares: ControlFares) -> Self {
        FixedAction(ControlAction { fares, choice_set: ChoiceSet::Full })
    }
}
