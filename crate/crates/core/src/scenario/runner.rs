use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::controllers::{
    forced_share_controller, no_control, receding_horizon_run, setpoint_sweep, ControlAction, MpcConfig, PiConfig,
    PiController, ReplanRecord, SweepRow,
};
use crate::demand::{DemandProfile, DemandSample};
use crate::error::{ParamError, SimError};
use crate::metrics::{step_metrics, summarize, SummaryRecord};
use crate::mfd::Speeds;
use crate::plant::{settle, simulate, steady_state, ModelParams, SystemState};
use crate::trajectory::{ClampCounts, Trajectory};

use super::config::{ConfigError, ControllerConfig, DemandConfig, OutputConfig, ScenarioConfig};

/// Fixed column order of the per-step time series.
pub const TIMESERIES_HEADER: [&str; 21] = [
    "step", "time_hr", "n_pv", "n_e", "n_s", "n_p_V", "n_p_B", "c", "o_b", "v_V", "v_p", "v_b", "beta_s", "beta_V",
    "beta_B", "phi_V", "phi_B", "M", "A", "pht", "wt",
];

pub const SUMMARY_HEADER: [&str; 15] = [
    "scenario",
    "objective",
    "pht_total",
    "wt_total",
    "pht_pv",
    "pht_rs",
    "pht_b",
    "abandonment_total",
    "bus_violation",
    "clamp_match_supply",
    "clamp_match_queue",
    "clamp_abandonment",
    "clamp_outflow",
    "clamp_roundoff",
    "clamp_gridlock",
];

pub const SWEEP_HEADER: [&str; 6] = ["q_pv", "q_b", "v_target", "pht", "wt", "best"];

/// Convergence threshold and iteration cap for initial and reported
/// steady states.
const STEADY_TOL: f64 = 1e-8;
const STEADY_MAX_ITERS: usize = 2_000_000;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl From<ParamError> for RunError {
    fn from(e: ParamError) -> Self {
        RunError::Config(ConfigError::Invalid(e))
    }
}

impl RunError {
    /// 1 for configuration problems, 2 for simulation failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Sim(SimError::Param(_)) => 1,
            RunError::Sim(_) => 2,
            RunError::Io { .. } => 3,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io { path: path.to_path_buf(), source }
    }
}

/// An in-memory run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub params: ModelParams,
    pub initial_state: SystemState,
    pub trajectory: Trajectory,
    pub summary: SummaryRecord,
}

/// Free-choice steady state under the demand at the start of the run. Every
/// scenario on the same demand starts from it.
pub fn initial_state(demand: &DemandProfile, p: &ModelParams) -> Result<SystemState, SimError> {
    steady_state(&demand.at(0.0)?, &ControlAction::default(), p, STEADY_TOL, STEADY_MAX_ITERS)
}

/// Runs the configured scenario without touching the file system.
pub fn execute(cfg: &ScenarioConfig) -> Result<RunResult, RunError> {
    cfg.validate()?;
    let p = cfg.model_params()?;
    let demand = cfg.demand_profile()?;
    let steps = p.steps_in(cfg.horizon_hr);
    let ab = cfg.abandonment.enabled;
    let s0 = initial_state(&demand, &p)?;
    let trajectory = match cfg.controller {
        ControllerConfig::Free => simulate(&s0, &demand, &mut no_control(), &p, steps, ab)?,
        ControllerConfig::Forced { choice_set } => {
            simulate(&s0, &demand, &mut forced_share_controller(choice_set), &p, steps, ab)?
        }
        ControllerConfig::Pi(c) => simulate(&s0, &demand, &mut PiController::new(c)?, &p, steps, ab)?,
        ControllerConfig::Mpc(m) => {
            let m = MpcConfig { seed: cfg.seed, ..m };
            receding_horizon_run(&s0, &demand, &p, &m, steps, ab)?
        }
    };
    let summary = summarize(&trajectory, &p, Some(cfg.violation_speed));
    Ok(RunResult { config: cfg.clone(), params: p, initial_state: s0, trajectory, summary })
}

/// SHA-256 over the canonical TOML form of `cfg` with its output section
/// reset, followed by the bytes of the demand file if there is one.
pub fn config_hash(cfg: &ScenarioConfig) -> Result<String, RunError> {
    let canonical = ScenarioConfig { output: OutputConfig::default(), ..cfg.clone() };
    let mut h = Sha256::new();
    h.update(canonical.to_toml_string().as_bytes());
    if let DemandConfig::File { path } = &cfg.demand {
        h.update(fs::read(path).map_err(|e| RunError::io(path, e))?);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, RunError> {
    csv::Writer::from_path(path).map_err(|e| RunError::io(path, e.into()))
}

fn csv_io(path: &Path) -> impl Fn(csv::Error) -> RunError + '_ {
    move |e| RunError::io(path, e.into())
}

pub fn write_timeseries(path: &Path, traj: &Trajectory, p: &ModelParams) -> Result<(), RunError> {
    let err = csv_io(path);
    let mut w = csv_writer(path)?;
    w.write_record(TIMESERIES_HEADER).map_err(&err)?;
    for (k, r) in traj.records.iter().enumerate() {
        let s = &r.state;
        let m = step_metrics(s, &r.rates, p, None);
        let f = [
            k as f64 * p.tau,
            s.n_pv,
            s.n_e,
            s.n_s,
            s.n_p_v,
            s.n_p_b,
            s.c,
            s.o_b,
            r.rates.v_vehicle,
            r.rates.v_pool,
            r.rates.v_bus,
            r.rates.shares.solo,
            r.rates.shares.pool_v,
            r.rates.shares.pool_b,
            r.action.fares.phi_v,
            r.action.fares.phi_b,
            r.rates.match_rate,
            r.rates.abandoned,
            m.pht(),
            m.wt,
        ];
        let mut row = Vec::with_capacity(TIMESERIES_HEADER.len());
        row.push(k.to_string());
        row.extend(f.iter().map(f64::to_string));
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

pub fn write_summary(path: &Path, name: &str, s: &SummaryRecord) -> Result<(), RunError> {
    let err = csv_io(path);
    let mut w = csv_writer(path)?;
    w.write_record(SUMMARY_HEADER).map_err(&err)?;
    let c = &s.clamp_counts;
    let mut row = vec![name.to_string()];
    row.extend(
        [s.objective(), s.pht_total, s.wt_total, s.pht_pv, s.pht_rs, s.pht_b, s.abandonment_total, s.bus_violation]
            .iter()
            .map(f64::to_string),
    );
    row.extend(
        [c.match_supply, c.match_queue, c.abandonment, c.outflow, c.roundoff, c.gridlock].iter().map(u64::to_string),
    );
    w.write_record(&row).map_err(&err)?;
    w.flush().map_err(|e| RunError::io(path, e))
}

#[derive(Serialize)]
struct RunManifest<'a> {
    kind: &'static str,
    name: &'a str,
    version: &'static str,
    config_hash: String,
    seed: u64,
    steps: usize,
    tau_hr: f64,
    abandonment: bool,
    n_buses: f64,
    initial_state: &'a SystemState,
    clamp_counts: &'a ClampCounts,
    summary: &'a SummaryRecord,
    replans: &'a [ReplanRecord],
    files: Vec<String>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).expect("manifest serialises");
    text.push('\n');
    fs::write(path, text).map_err(|e| RunError::io(path, e))
}

fn prepare_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))
}

/// Writes the time series, summary and manifest of a finished run into
/// `cfg.output.dir` and returns their paths.
pub fn write_outputs(result: &RunResult) -> Result<Vec<PathBuf>, RunError> {
    let cfg = &result.config;
    let out = &cfg.output;
    prepare_dir(&out.dir)?;
    let ts = out.dir.join(&out.timeseries);
    let sum = out.dir.join(&out.summary);
    let man = out.dir.join(&out.manifest);
    write_timeseries(&ts, &result.trajectory, &result.params)?;
    write_summary(&sum, &cfg.name, &result.summary)?;
    let manifest = RunManifest {
        kind: "run",
        name: &cfg.name,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: config_hash(cfg)?,
        seed: cfg.seed,
        steps: result.trajectory.len(),
        tau_hr: result.params.tau,
        abandonment: cfg.abandonment.enabled,
        n_buses: result.params.n_buses,
        initial_state: &result.initial_state,
        clamp_counts: &result.summary.clamp_counts,
        summary: &result.summary,
        replans: &result.trajectory.replans,
        files: vec![out.timeseries.clone(), out.summary.clone()],
    };
    write_json(&man, &manifest)?;
    Ok(vec![ts, sum, man])
}

/// [`execute`] followed by [`write_outputs`].
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunResult, RunError> {
    let result = execute(cfg)?;
    write_outputs(&result)?;
    Ok(result)
}

/// The PI settings a sweep varies the set point of.
pub fn sweep_pi_template(cfg: &ScenarioConfig) -> PiConfig {
    match cfg.controller {
        ControllerConfig::Pi(c) => c,
        _ => PiConfig::default(),
    }
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<(), RunError> {
    let err = csv_io(path);
    let mut w = csv_writer(path)?;
    w.write_record(SWEEP_HEADER).map_err(&err)?;
    for r in rows {
        let row = [
            r.q_pv.to_string(),
            r.q_b.to_string(),
            r.v_target.to_string(),
            r.pht.to_string(),
            r.wt.to_string(),
            u8::from(r.best).to_string(),
        ];
        w.write_record(row).map_err(&err)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

#[derive(Serialize)]
struct SweepManifest<'a> {
    kind: &'static str,
    name: &'a str,
    version: &'static str,
    config_hash: String,
    seed: u64,
    cells: usize,
    failed_cells: usize,
    pi: PiConfig,
    file: &'a str,
}

/// Runs the configured set-point sweep and writes the grid plus a manifest
/// named after it (`sweep.csv` gets `sweep_manifest.json`).
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<Vec<SweepRow>, RunError> {
    cfg.validate()?;
    let p = cfg.model_params()?;
    let pi = sweep_pi_template(cfg);
    let rows = setpoint_sweep(&cfg.sweep, &p, &pi)?;
    let out = &cfg.output;
    prepare_dir(&out.dir)?;
    let grid = out.dir.join(&out.sweep);
    write_sweep(&grid, &rows)?;
    let stem = Path::new(&out.sweep).file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let manifest = SweepManifest {
        kind: "sweep",
        name: &cfg.name,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: config_hash(cfg)?,
        seed: cfg.seed,
        cells: rows.len(),
        failed_cells: rows.iter().filter(|r| r.failed()).count(),
        pi,
        file: &out.sweep,
    };
    write_json(&out.dir.join(format!("{stem}_manifest.json")), &manifest)?;
    Ok(rows)
}

/// A steady state together with the quantities usually inspected with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyReport {
    pub demand: DemandSample,
    pub state: SystemState,
    pub speeds: Speeds,
    /// pax·hr per hour.
    pub pht_rate: f64,
    /// Waiting requests.
    pub wt_rate: f64,
}

/// Steady state under the demand at `t_hr` with the configured controller.
/// Free and forced controllers settle from an idle network; PI settles from
/// the free steady state. Planning controllers have no steady state.
pub fn steady_report(cfg: &ScenarioConfig, t_hr: f64) -> Result<SteadyReport, RunError> {
    cfg.validate()?;
    let p = cfg.model_params()?;
    let d = cfg.demand_profile()?.at(t_hr)?;
    let state = match cfg.controller {
        ControllerConfig::Free => steady_state(&d, &ControlAction::default(), &p, STEADY_TOL, STEADY_MAX_ITERS)?,
        ControllerConfig::Forced { choice_set } => {
            let a = forced_share_controller(choice_set).0;
            steady_state(&d, &a, &p, STEADY_TOL, STEADY_MAX_ITERS)?
        }
        ControllerConfig::Pi(c) => {
            let free = steady_state(&d, &ControlAction::default(), &p, STEADY_TOL, STEADY_MAX_ITERS)?;
            settle(&free, &d, &mut PiController::new(c)?, &p, STEADY_TOL, STEADY_MAX_ITERS)?
        }
        ControllerConfig::Mpc(_) => {
            return Err(ParamError::new("controller.kind", "steady states need a free, forced or pi controller").into())
        }
    };
    let m = step_metrics(&state, &crate::plant::step(&state, &d, &ControlAction::default(), &p, false)?.1, &p, None);
    Ok(SteadyReport { demand: d, state, speeds: state.speeds(&p), pht_rate: m.pht() / p.tau, wt_rate: m.wt / p.tau })
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        prepare_dir(dir)?;
    }
    let mut f = fs::File::create(path).map_err(|e| RunError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| RunError::io(path, e))
}
