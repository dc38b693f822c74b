//! Ride-hailing demand-side behaviour: disutilities of the three ride-hailing
//! alternatives, the fare-to-xi transform, multinomial logit shares,
//! Cobb–Douglas matching and request abandonment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ensure, finite_pos, ParamError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChoiceParams {
    /// CHF/hr.
    pub value_of_time: f64,
    /// Logit scale, 1/CHF.
    pub scale: f64,
    pub fare_solo: f64,
    pub fare_pool: f64,
    /// km.
    pub trip_len_solo: f64,
    /// Extra distance a pooling passenger rides, km.
    pub passenger_detour: f64,
    /// Extra distance a driver covers on a pool trip, km.
    pub driver_detour: f64,
}

impl Default for ChoiceParams {
    fn default() -> Self {
        let trip = 3.86;
        Self {
            value_of_time: 30.0,
            scale: 1.0,
            fare_solo: 5.0,
            fare_pool: 4.0,
            trip_len_solo: trip,
            passenger_detour: 0.15 * trip,
            driver_detour: 0.7 * trip,
        }
    }
}

impl ChoiceParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        ensure("value_of_time", finite_pos(self.value_of_time), "must be positive and finite")?;
        ensure("scale", finite_pos(self.scale), "must be positive and finite")?;
        ensure("fare_solo", self.fare_solo.is_finite(), "must be finite")?;
        ensure("fare_pool", self.fare_pool.is_finite(), "must be finite")?;
        ensure("trip_len_solo", finite_pos(self.trip_len_solo), "must be positive and finite")?;
        ensure(
            "passenger_detour",
            self.passenger_detour >= 0.0 && self.passenger_detour.is_finite(),
            "must be non-negative and finite",
        )?;
        ensure(
            "driver_detour",
            self.driver_detour >= 0.0 && self.driver_detour.is_finite(),
            "must be non-negative and finite",
        )
    }

    /// Distance driven on a pool trip.
    pub fn pool_trip_len(&self) -> f64 {
        self.trip_len_solo + self.driver_detour
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingParams {
    pub a0: f64,
    pub alpha_e: f64,
    pub alpha_c: f64,
    /// Waiting tolerance in hours. Configured through the abandonment
    /// section of a scenario rather than here.
    #[serde(skip)]
    pub w_max: f64,
}

impl Default for MatchingParams {
    fn default() -> Self {
        Self { a0: 0.025, alpha_e: 0.93, alpha_c: 0.98, w_max: 0.25 }
    }
}

impl MatchingParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        ensure("a0", finite_pos(self.a0), "must be positive and finite")?;
        ensure("alpha_e", finite_pos(self.alpha_e), "must be positive and finite")?;
        ensure("alpha_c", finite_pos(self.alpha_c), "must be positive and finite")?;
        ensure("w_max", self.w_max > 0.0, "must be positive (may be infinite)")
    }
}

/// Regulator fares added to the pool fare, CHF. Positive is a surcharge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlFares {
    pub phi_v: f64,
    pub phi_b: f64,
}

impl ControlFares {
    pub const ZERO: Self = Self { phi_v: 0.0, phi_b: 0.0 };

    pub fn new(phi_v: f64, phi_b: f64) -> Self {
        Self { phi_v, phi_b }
    }

    pub fn is_finite(&self) -> bool {
        self.phi_v.is_finite() && self.phi_b.is_finite()
    }

    pub fn to_xi(self, mu: f64) -> (f64, f64) {
        (fare_to_xi(self.phi_v, mu), fare_to_xi(self.phi_b, mu))
    }
}

/// `xi = exp(-mu * phi)`.
pub fn fare_to_xi(phi: f64, mu: f64) -> f64 {
    (-mu * phi).exp()
}

/// Inverse of [`fare_to_xi`].
pub fn xi_to_fare(xi: f64, mu: f64) -> f64 {
    -xi.ln() / mu
}

/// Disutilities (CHF) of solo, pool-in-vehicle-network and pool-in-bus-lane
/// trips, excluding the control fares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disutilities {
    pub solo: f64,
    pub pool_v: f64,
    pub pool_b: f64,
}

/// A non-positive speed makes the corresponding travel time, and hence the
/// disutility, infinite.
pub fn base_disutilities(v_vehicle: f64, v_pool: f64, cp: &ChoiceParams) -> Disutilities {
    let time_cost = |dist: f64, speed: f64| {
        if speed > 0.0 {
            cp.value_of_time * dist / speed
        } else {
            f64::INFINITY
        }
    };
    let pool_dist = cp.trip_len_solo + cp.passenger_detour;
    Disutilities {
        solo: cp.fare_solo + time_cost(cp.trip_len_solo, v_vehicle),
        pool_v: cp.fare_pool + time_cost(pool_dist, v_vehicle),
        pool_b: cp.fare_pool + time_cost(pool_dist, v_pool),
    }
}

/// Ride-hailing mode split. Fractions sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeShares {
    pub solo: f64,
    pub pool_v: f64,
    pub pool_b: f64,
}

impl ModeShares {
    pub const SOLO: Self = Self { solo: 1.0, pool_v: 0.0, pool_b: 0.0 };

    pub fn pool(&self) -> f64 {
        self.pool_v + self.pool_b
    }

    pub fn total(&self) -> f64 {
        self.solo + self.pool_v + self.pool_b
    }
}

/// Which ride-hailing alternatives are on offer. Anything other than
/// [`ChoiceSet::Full`] pins some shares regardless of fares.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceSet {
    #[default]
    Full,
    SoloOnly,
    SoloOrPoolVehicle,
    SoloOrPoolBus,
    PoolBusOnly,
}

impl ChoiceSet {
    fn offers(self) -> [bool; 3] {
        match self {
            ChoiceSet::Full => [true, true, true],
            ChoiceSet::SoloOnly => [true, false, false],
            ChoiceSet::SoloOrPoolVehicle => [true, true, false],
            ChoiceSet::SoloOrPoolBus => [true, false, true],
            ChoiceSet::PoolBusOnly => [false, false, true],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no viable ride-hailing alternative")]
pub struct NoViableAlternative;

/// Multinomial logit shares with the control entering as `xi` multipliers.
///
/// Exponents are shifted by their maximum before exponentiation.
pub fn mode_shares(u: &Disutilities, xi_v: f64, xi_b: f64, mu: f64) -> Result<ModeShares, NoViableAlternative> {
    mode_shares_within(u, xi_v, xi_b, mu, ChoiceSet::Full)
}

pub fn mode_shares_within(
    u: &Disutilities,
    xi_v: f64,
    xi_b: f64,
    mu: f64,
    set: ChoiceSet,
) -> Result<ModeShares, NoViableAlternative> {
    let offered = set.offers();
    let single = offered.iter().filter(|&&o| o).count() == 1;
    let exponent = |avail: bool, xi: f64, ui: f64| {
        if avail {
            xi.ln() - mu * ui
        } else {
            f64::NEG_INFINITY
        }
    };
    let w =
        [exponent(offered[0], 1.0, u.solo), exponent(offered[1], xi_v, u.pool_v), exponent(offered[2], xi_b, u.pool_b)];
    if single {
        // Pinned alternative: share one no matter what it costs.
        let pick = |i: usize| if offered[i] { 1.0 } else { 0.0 };
        return Ok(ModeShares { solo: pick(0), pool_v: pick(1), pool_b: pick(2) });
    }
    let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY || top.is_nan() {
        return Err(NoViableAlternative);
    }
    let e = w.map(|wi| (wi - top).exp());
    let denom = e[0] + e[1] + e[2];
    Ok(ModeShares { solo: e[0] / denom, pool_v: e[1] / denom, pool_b: e[2] / denom })
}

/// Unclamped Cobb–Douglas meeting rate (vehicle matches per hour). Pool
/// requests count half since two of them fill one vehicle.
pub fn matching_rate_raw(n_empty: f64, queue: f64, shares: &ModeShares, mp: &MatchingParams) -> f64 {
    let effective = shares.solo * queue + 0.5 * shares.pool() * queue;
    if n_empty <= 0.0 || effective <= 0.0 {
        return 0.0;
    }
    mp.a0 * n_empty.powf(mp.alpha_e) * effective.powf(mp.alpha_c)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchClamp {
    #[default]
    None,
    /// Limited by the empty vehicles available this step.
    Supply,
    /// Limited by the passengers waiting this step.
    Queue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matching {
    pub rate: f64,
    pub clamp: MatchClamp,
}

/// Matching rate limited so that one step of length `tau` never matches more
/// vehicles than are empty, nor more passengers than are queued. A pool match
/// removes two passengers, so the queue drain is `(1 + beta_pool) * M * tau`.
pub fn matching_rate(n_empty: f64, queue: f64, shares: &ModeShares, mp: &MatchingParams, tau: f64) -> Matching {
    let raw = matching_rate_raw(n_empty, queue, shares, mp);
    let supply_cap = n_empty / tau;
    let queue_cap = queue / ((1.0 + shares.pool()) * tau);
    if raw > supply_cap && supply_cap <= queue_cap {
        Matching { rate: supply_cap, clamp: MatchClamp::Supply }
    } else if raw > queue_cap {
        Matching { rate: queue_cap, clamp: MatchClamp::Queue }
    } else {
        Matching { rate: raw, clamp: MatchClamp::None }
    }
}

/// Splits a match rate into new solo, pool-in-vehicle and pool-in-bus trips.
pub fn pool_split_of_matches(rate: f64, shares: &ModeShares) -> (f64, f64, f64) {
    (shares.solo * rate, shares.pool_v * rate, shares.pool_b * rate)
}

/// Requests that give up waiting: the queue in excess of what the running
/// mean match rate clears within the tolerance `w_max`. With no match history
/// yet, nobody abandons.
pub fn abandonment(queue: f64, mean_match_rate: Option<f64>, w_max: f64) -> f64 {
    match mean_match_rate {
        Some(avg) if w_max.is_finite() => (queue - avg * w_max).max(0.0),
        _ => 0.0,
    }
}
