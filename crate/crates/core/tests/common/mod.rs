//! Test-only reference implementations shared by the integration suites.
#![allow(dead_code)]

use buslane_core::choice::{abandonment, matching_rate_raw, mode_shares, Disutilities};
use buslane_core::plant::AbandonmentUnits;
use buslane_core::{
    ChoiceSet, ControlAction, ControlFares, DemandSample, MatchingParams, ModeShares, ModelParams, SystemState,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Straight-line one-step update written from the model definitions, sharing
/// nothing with the library beyond the parameter struct.
pub fn oracle_step(s: &SystemState, d: &DemandSample, phi: (f64, f64), p: &ModelParams, ab: bool) -> SystemState {
    let m = &p.mfd;
    let tau = p.tau;
    let nb = p.n_buses;
    let v = |n: f64| (m.a0_cubic * n * n + m.b0_quad * n + m.c0_lin).max(0.0);

    let n_veh = s.n_pv + s.n_e + s.n_s + s.n_p_v;
    let v_veh = v(n_veh / m.alpha);
    let v_pool = v((s.n_p_b + nb) / (1.0 - m.alpha)) * (-m.bus_reduction_rate * nb).exp();
    let v_bus = v_pool / (1.0 + v_pool * m.dwell_time / m.stop_spacing);

    let prod_veh = n_veh * v_veh;
    let prod_pool = s.n_p_b * v_pool;
    let prod_bus = nb * v_bus;
    let ch = &p.choice;
    let l_pool = ch.trip_len_solo + ch.driver_detour;
    let frac = |x: f64| if n_veh > 0.0 { x / n_veh } else { 0.0 };
    let mut o_pv = frac(s.n_pv) * prod_veh / p.trip_len_pv;
    let mut o_s = frac(s.n_s) * prod_veh / ch.trip_len_solo;
    let mut o_pvv = frac(s.n_p_v) * prod_veh / l_pool;
    let mut o_pb = prod_pool / l_pool;
    let mut o_b = prod_bus / p.trip_len_bus * s.o_b;
    let limit = |o: &mut f64, stock: f64| *o = o.min(stock / tau);
    limit(&mut o_pv, s.n_pv);
    limit(&mut o_s, s.n_s);
    limit(&mut o_pvv, s.n_p_v);
    limit(&mut o_pb, s.n_p_b);
    limit(&mut o_b, s.o_b * nb);

    let mu = ch.scale;
    let u_s = ch.fare_solo + ch.value_of_time * ch.trip_len_solo / v_veh;
    let u_pv = ch.fare_pool + ch.value_of_time * (ch.trip_len_solo + ch.passenger_detour) / v_veh;
    let u_pb = ch.fare_pool + ch.value_of_time * (ch.trip_len_solo + ch.passenger_detour) / v_pool;
    let w_s = (-mu * u_s).exp();
    let w_v = (-mu * phi.0).exp() * (-mu * u_pv).exp();
    let w_b = (-mu * phi.1).exp() * (-mu * u_pb).exp();
    let den = w_s + w_v + w_b;
    let (b_s, b_v, b_b) = (w_s / den, w_v / den, w_b / den);

    let mp = &p.matching;
    let c_eff = b_s * s.c + 0.5 * (b_v + b_b) * s.c;
    let raw = if s.n_e > 0.0 && c_eff > 0.0 { mp.a0 * s.n_e.powf(mp.alpha_e) * c_eff.powf(mp.alpha_c) } else { 0.0 };
    let mm = raw.min(s.n_e / tau).min(s.c / ((1.0 + b_v + b_b) * tau));

    let k = s.step_index;
    let avg = if k == 0 { 0.0 } else { ((k - 1) as f64 * s.match_avg + mm) / k as f64 };
    let a = if ab && k > 0 {
        let excess = (s.c - avg * mp.w_max).max(0.0);
        excess.min((s.c - tau * (1.0 + b_v + b_b) * mm).max(0.0))
    } else {
        0.0
    };

    let bus = match p.abandonment_units {
        AbandonmentUnits::AsPrinted => s.o_b + tau / nb * (d.q_b + a - o_b),
        AbandonmentUnits::CountConsistent => s.o_b + tau / nb * (d.q_b - o_b) + a / nb,
    };
    let floor = |x: f64| if x < 0.0 && x > -1e-9 * p.fleet_size { 0.0 } else { x };
    SystemState {
        n_pv: floor(s.n_pv + tau * (d.q_pv / p.occ_pv - o_pv)),
        n_e: floor(s.n_e + tau * (o_s + o_pvv + o_pb - mm)),
        n_s: floor(s.n_s + tau * (b_s * mm - o_s)),
        n_p_v: floor(s.n_p_v + tau * (b_v * mm - o_pvv)),
        n_p_b: floor(s.n_p_b + tau * (b_b * mm - o_pb)),
        c: floor(s.c + tau * (d.q_rs - (1.0 + b_v + b_b) * mm) - a),
        o_b: floor(bus),
        match_avg: avg,
        step_index: k + 1,
    }
}

pub struct OracleCase {
    pub state: SystemState,
    pub demand: DemandSample,
    pub phi: (f64, f64),
    pub abandonment: bool,
    pub params: ModelParams,
}

/// A random state inside the uncongested operating range.
pub fn random_case(rng: &mut ChaCha8Rng) -> OracleCase {
    let mut params = ModelParams::default();
    params.matching.w_max = rng.gen_range(0.05..0.5);
    if rng.gen_bool(0.3) {
        params.abandonment_units = AbandonmentUnits::CountConsistent;
    }
    let n = params.fleet_size;
    let cuts = {
        let mut c = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
        c.sort_by(f64::total_cmp);
        c
    };
    let state = SystemState {
        n_pv: rng.gen_range(0.0..30000.0),
        n_e: n * cuts[0],
        n_s: n * (cuts[1] - cuts[0]),
        n_p_v: n * (cuts[2] - cuts[1]),
        n_p_b: n * (1.0 - cuts[2]),
        c: if rng.gen_bool(0.1) { rng.gen_range(0.0..5.0) } else { rng.gen_range(0.0..3000.0) },
        o_b: rng.gen_range(0.0..80.0),
        match_avg: rng.gen_range(0.0..8000.0),
        step_index: rng.gen_range(0..3600),
    };
    OracleCase {
        state,
        demand: DemandSample::new(
            rng.gen_range(0.0..90000.0),
            rng.gen_range(0.0..25000.0),
            rng.gen_range(0.0..40000.0),
        ),
        phi: (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
        abandonment: rng.gen_bool(0.5),
        params,
    }
}

/// Largest absolute difference between library and oracle over the
/// seven dynamic fields and the running match mean.
pub fn oracle_gap(case: &OracleCase) -> f64 {
    let action = ControlAction { fares: ControlFares::new(case.phi.0, case.phi.1), choice_set: ChoiceSet::Full };
    let (lib, _) = buslane_core::step(&case.state, &case.demand, &action, &case.params, case.abandonment)
        .expect("random cases stay feasible");
    let ora = oracle_step(&case.state, &case.demand, case.phi, &case.params, case.abandonment);
    assert_eq!(lib.step_index, ora.step_index);
    [
        lib.n_pv - ora.n_pv,
        lib.n_e - ora.n_e,
        lib.n_s - ora.n_s,
        lib.n_p_v - ora.n_p_v,
        lib.n_p_b - ora.n_p_b,
        lib.c - ora.c,
        lib.o_b - ora.o_b,
        lib.match_avg - ora.match_avg,
    ]
    .iter()
    .fold(0.0, |acc, x| acc.max(x.abs()))
}

fn shares(u: [f64; 3], xi: (f64, f64), mu: f64) -> ModeShares {
    let d = Disutilities { solo: u[0], pool_v: u[1], pool_b: u[2] };
    mode_shares(&d, xi.0, xi.1, mu).expect("full choice set")
}

fn share_gap(a: &ModeShares, b: &ModeShares) -> f64 {
    (a.solo - b.solo).abs().max((a.pool_v - b.pool_v).abs()).max((a.pool_b - b.pool_b).abs())
}

/// Shifting every disutility by the same amount leaves the shares alone.
pub fn translation_invariant(u: [f64; 3], shift: f64, xi: (f64, f64), mu: f64) -> bool {
    let base = shares(u, xi, mu);
    let moved = shares(u.map(|x| x + shift), xi, mu);
    let sum = base.solo + base.pool_v + base.pool_b;
    share_gap(&base, &moved) <= 1e-12 && (sum - 1.0).abs() <= 1e-12
}

/// Raising the bus-lane multiplier raises the bus-lane share; raising the
/// vehicle-network multiplier lowers it.
pub fn xi_monotone(u: [f64; 3], xi: (f64, f64), mu: f64, factor: f64) -> bool {
    let base = shares(u, xi, mu).pool_b;
    let up_b = shares(u, (xi.0, xi.1 * factor), mu).pool_b;
    let up_v = shares(u, (xi.0 * factor, xi.1), mu).pool_b;
    up_b > base && up_v < base
}

/// Scaling supply and queue by `lambda` scales raw matching by
/// `lambda^(alpha_e + alpha_c)`.
pub fn matching_homogeneous(n_e: f64, c: f64, lambda: f64, sh: &ModeShares, mp: &MatchingParams) -> bool {
    let base = matching_rate_raw(n_e, c, sh, mp);
    let scaled = matching_rate_raw(lambda * n_e, lambda * c, sh, mp);
    let expect = lambda.powf(mp.alpha_e + mp.alpha_c) * base;
    (scaled - expect).abs() <= 1e-12 * expect.abs().max(1e-300)
}

/// `0 <= A <= c`.
pub fn abandonment_bounded(c: f64, avg: Option<f64>, w_max: f64) -> bool {
    let a = abandonment(c, avg, w_max);
    (0.0..=c).contains(&a)
}

pub fn random_disutilities(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.gen_range(5.0..20.0), rng.gen_range(5.0..20.0), rng.gen_range(5.0..20.0)]
}

pub fn random_xi(rng: &mut ChaCha8Rng) -> (f64, f64) {
    ((rng.gen_range(-3.0..3.0f64)).exp(), (rng.gen_range(-3.0..3.0f64)).exp())
}

pub fn random_shares(rng: &mut ChaCha8Rng) -> ModeShares {
    let w = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
    let t = w[0] + w[1] + w[2];
    ModeShares { solo: w[0] / t, pool_v: w[1] / t, pool_b: w[2] / t }
}

/// Counts failures of each of the four properties over `cases` random draws.
pub fn property_violations(seed: u64, cases: usize) -> [usize; 4] {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mp = MatchingParams::default();
    let mut bad = [0; 4];
    for _ in 0..cases {
        let u = random_disutilities(&mut rng);
        let xi = random_xi(&mut rng);
        let mu = rng.gen_range(0.2..1.5);
        if !translation_invariant(u, rng.gen_range(-100.0..100.0), xi, mu) {
            bad[0] += 1;
        }
        if !xi_monotone(u, xi, mu, rng.gen_range(1.05..3.0)) {
            bad[1] += 1;
        }
        let sh = random_shares(&mut rng);
        if !matching_homogeneous(
            rng.gen_range(1.0..5000.0),
            rng.gen_range(1.0..5000.0),
            rng.gen_range(0.1..10.0),
            &sh,
            &mp,
        ) {
            bad[2] += 1;
        }
        let w = if rng.gen_bool(0.1) { f64::INFINITY } else { rng.gen_range(0.0..1.0) };
        let avg = if rng.gen_bool(0.1) { None } else { Some(rng.gen_range(0.0..10000.0)) };
        if !abandonment_bounded(rng.gen_range(0.0..100000.0), avg, w) {
            bad[3] += 1;
        }
    }
    bad
}
