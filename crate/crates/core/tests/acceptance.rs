mod common;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::time::{Duration, Instant};

use buslane_core::demand::DemandSample;
use buslane_core::mfd::{bus_speed, calibrate_bus_fleet, speed_full};
use buslane_core::scenario::{execute, preset, write_outputs, DemandConfig, RunResult, PRESET_NAMES};
use buslane_core::{MfdParams, Trajectory};
use common::{oracle_gap, property_violations, random_case};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Run {
    result: RunResult,
    elapsed: Duration,
}

fn run(name: &str, abandonment: bool) -> Run {
    let mut cfg = preset(name).unwrap();
    cfg.abandonment.enabled = abandonment;
    let t = Instant::now();
    let result = execute(&cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
    Run { result, elapsed: t.elapsed() }
}

fn objective(r: &Run) -> f64 {
    r.result.summary.objective()
}

struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn line(&mut self, id: usize, title: &str, ok: bool, detail: String) {
        let verdict = if ok { "PASS" } else { "FAIL" };
        let mut out = std::io::stdout().lock();
        writeln!(out, "criterion {id:>2} [{verdict}] {title}: {detail}").unwrap();
        out.flush().unwrap();
        if !ok {
            self.failed.push(id);
        }
    }
}

fn conservation(traj: &Trajectory, fleet: f64) -> (f64, bool, f64) {
    let mut drift: f64 = 0.0;
    let mut non_negative = true;
    let mut share_err: f64 = 0.0;
    let states = traj.records.iter().map(|r| &r.state).chain(std::iter::once(&traj.final_state));
    for s in states {
        drift = drift.max((s.fleet_total() - fleet).abs());
        non_negative &= [s.n_pv, s.n_e, s.n_s, s.n_p_v, s.n_p_b, s.c, s.o_b].iter().all(|v| *v >= 0.0);
    }
    for r in &traj.records {
        share_err = share_err.max((r.rates.shares.total() - 1.0).abs());
    }
    (drift, non_negative, share_err)
}

#[test]
fn acceptance() {
    let mut report = Report { failed: Vec::new() };

    let t = Instant::now();
    let mfd = MfdParams::default();
    let n_b = calibrate_bus_fleet(19.0, &mfd, 1e-9).expect("bracketed");
    let v_b = bus_speed(0.0, n_b, &mfd);
    let ok = speed_full(0.0, &mfd) == 36.0 && (v_b - 19.0).abs() <= 0.01 && t.elapsed() < Duration::from_secs(1);
    report.line(
        1,
        "calibration",
        ok,
        format!("v(0) = {}, n_b = {n_b:.3}, v_b(0, n_b) = {v_b:.6}", speed_full(0.0, &mfd)),
    );

    let mut with_ab = BTreeMap::new();
    let mut without_ab = BTreeMap::new();
    for name in PRESET_NAMES {
        with_ab.insert(name, run(name, true));
        without_ab.insert(name, run(name, false));
    }

    let mut worst = (0.0f64, true, 0.0f64);
    let mut slowest = Duration::ZERO;
    let mut all_steps = true;
    for r in with_ab.values().chain(without_ab.values()) {
        let n = r.result.params.fleet_size;
        let (drift, nn, share) = conservation(&r.result.trajectory, n);
        worst = (worst.0.max(drift / n), worst.1 && nn, worst.2.max(share));
        all_steps &= r.result.trajectory.len() == 3600;
        slowest = slowest.max(r.elapsed);
    }
    let ok = all_steps && worst.0 <= 1e-9 && worst.1 && worst.2 <= 1e-12 && slowest < Duration::from_secs(10);
    report.line(
        2,
        "conservation",
        ok,
        format!(
            "20 runs of 3600 steps, fleet drift {:.2e} N, non-negative {}, share error {:.2e}, slowest run {:.2?}",
            worst.0, worst.1, worst.2, slowest
        ),
    );

    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gap = (0..1000).map(|_| oracle_gap(&random_case(&mut rng))).fold(0.0, f64::max);
    let elapsed = t.elapsed();
    report.line(
        3,
        "oracle equivalence",
        gap <= 1e-10 && elapsed < Duration::from_secs(5),
        format!("max gap {gap:.2e} over 1000 states in {elapsed:.2?}"),
    );

    let o = |n: &str| objective(&without_ab[n]);
    let bus = |n: &str| without_ab[n].result.summary.pht_b;
    let ok = o("no_pool") > o("pool_V_only")
        && o("pool_V_only") > o("pool_B_only")
        && o("pool_B_only") >= o("free")
        && o("all_pool_B") > o("free")
        && bus("all_pool_B") > bus("free")
        && ["no_pool", "pool_V_only", "pool_B_only", "all_pool_B", "free"]
            .iter()
            .all(|n| without_ab[n].elapsed < Duration::from_secs(10));
    report.line(
        4,
        "scenario ordering",
        ok,
        format!(
            "no_pool {:.0} > pool_V_only {:.0} > pool_B_only {:.0} >= free {:.0}; all_pool_B {:.0}; bus PHT all_pool_B {:.0} vs free {:.0}",
            o("no_pool"), o("pool_V_only"), o("pool_B_only"), o("free"), o("all_pool_B"), bus("all_pool_B"), bus("free")
        ),
    );

    let mid = DemandSample::new(67500.0, 16000.0, 25000.0);
    let constant = |name: &str| {
        let mut cfg = preset(name).unwrap();
        cfg.abandonment.enabled = false;
        cfg.demand = DemandConfig::Constant { demand: mid };
        let t = Instant::now();
        let r = execute(&cfg).unwrap();
        (r, t.elapsed())
    };
    let (pi, pi_time) = constant("pi");
    let (free, _) = constant("free");
    let v_end = pi.trajectory.records.last().unwrap().rates.v_bus;
    let (vi_pi, vi_free) = (pi.summary.bus_violation, free.summary.bus_violation);
    let ok = (v_end - 17.0).abs() <= 0.5 && vi_pi * 10.0 <= vi_free && pi_time < Duration::from_secs(10);
    report.line(
        5,
        "PI tracking",
        ok,
        format!("final v_b {v_end:.3} km/hr, violation PI {vi_pi:.1} vs free {vi_free:.1} veh km, run {pi_time:.2?}"),
    );

    let (m1, m2) = (&without_ab["mpc_phiB"], &without_ab["mpc_both"]);
    let ok = objective(m1) <= o("free")
        && objective(m2) <= objective(m1)
        && m1.elapsed.max(m2.elapsed) < Duration::from_secs(300);
    report.line(
        6,
        "MPC dominance",
        ok,
        format!(
            "phi_B {:.0} <= free {:.0}; both {:.0} <= phi_B; runs {:.2?} and {:.2?}",
            objective(m1),
            o("free"),
            objective(m2),
            m1.elapsed,
            m2.elapsed
        ),
    );

    let mut ok = true;
    let mut details = Vec::new();
    for (free_name, con_name) in [("mpc_phiB", "mpc_phiB_vmin"), ("mpc_both", "mpc_both_vmin")] {
        let (u, c) = (&without_ab[free_name].result.summary, &without_ab[con_name].result.summary);
        ok &= c.bus_violation.abs() <= 1.0 && u.bus_violation > 0.0 && c.objective() >= u.objective();
        details.push(format!(
            "{con_name} violation {:.3} vs {:.1}, objective {:.0} >= {:.0}",
            c.bus_violation,
            u.bus_violation,
            c.objective(),
            u.objective()
        ));
    }
    report.line(7, "min-speed MPC", ok, details.join("; "));

    let worse: Vec<&str> = PRESET_NAMES.iter().copied().filter(|n| objective(&with_ab[n]) > o(n)).collect();
    let ab = |n: &str| with_ab[n].result.summary.abandonment_total;
    let ok = worse.is_empty() && ab("no_pool") > ab("free");
    report.line(
        8,
        "abandonment effect",
        ok,
        format!(
            "scenarios worse with abandonment {worse:?}; abandoned no_pool {:.0} > free {:.0}",
            ab("no_pool"),
            ab("free")
        ),
    );

    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    for name in ["free", "pi", "all_pool_B", "mpc_both_vmin"] {
        let first = &with_ab[name].result;
        let second = execute(&first.config).unwrap();
        let mut files = Vec::new();
        for (tag, r) in [("a", first.clone()), ("b", second)] {
            let mut r = r;
            r.config.output.dir = dir.path().join(format!("{name}-{tag}"));
            files.push(write_outputs(&r).unwrap());
        }
        for (a, b) in files[0].iter().zip(&files[1]) {
            identical &= fs::read(a).unwrap() == fs::read(b).unwrap();
        }
    }
    report.line(
        9,
        "determinism",
        identical,
        "free, pi, all_pool_B and mpc_both_vmin reruns compared file by file".into(),
    );

    let t = Instant::now();
    let bad = property_violations(11, 10_000);
    let elapsed = t.elapsed();
    report.line(
        10,
        "logit and matching properties",
        bad == [0; 4] && elapsed < Duration::from_secs(10),
        format!(
            "violations (translation, monotone, homogeneity, abandonment) {bad:?} over 10000 cases in {elapsed:.2?}"
        ),
    );

    assert!(report.failed.is_empty(), "failed criteria: {:?}", report.failed);
}
