use std::path::PathBuf;
use std::process::ExitCode;

use buslane_core::mfd::{bus_speed, calibrate_bus_fleet};
use buslane_core::scenario::{
    apply_preset, load_config, run_scenario, run_sweep, steady_report, RunError, ScenarioConfig,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "buslane", version, about = "Bus-lane ride-pooling traffic simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its time series, summary and manifest.
    Run(Common),
    /// Settle the PI loop over a demand grid and write the set-point table.
    Sweep(Common),
    /// Print the steady state under the demand at a given time as JSON.
    Steady {
        #[command(flatten)]
        common: Common,
        /// Hours after the start of the run.
        #[arg(long, default_value_t = 0.0)]
        time: f64,
    },
    /// Print the bus fleet size that gives the target empty-lane bus speed.
    CalibrateBuses {
        #[command(flatten)]
        common: Common,
        /// Empty-lane bus speed, km/hr.
        #[arg(long, default_value_t = 19.0)]
        target: f64,
    },
}

#[derive(Args)]
struct Common {
    /// TOML scenario file; omitted sections take default values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named scenario whose controller replaces the configured one.
    #[arg(long, value_name = "PRESET")]
    scenario: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run length, hours.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    no_abandonment: bool,
}

impl Common {
    fn resolve(&self) -> Result<ScenarioConfig, RunError> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(name) = &self.scenario {
            cfg = apply_preset(&cfg, name)?;
        }
        if let Some(dir) = &self.out_dir {
            cfg.output.dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(h) = self.horizon {
            cfg.horizon_hr = h;
        }
        if self.no_abandonment {
            cfg.abandonment.enabled = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn dispatch(cmd: Command) -> Result<(), RunError> {
    match cmd {
        Command::Run(common) => {
            let cfg = common.resolve()?;
            let res = run_scenario(&cfg)?;
            let s = &res.summary;
            println!(
                "{}: {} steps, PHT {:.1}, WT {:.1}, PHT+WT {:.1} pax·hr -> {}",
                cfg.name,
                res.trajectory.len(),
                s.pht_total,
                s.wt_total,
                s.objective(),
                cfg.output.dir.display()
            );
        }
        Command::Sweep(common) => {
            let cfg = common.resolve()?;
            let rows = run_sweep(&cfg)?;
            println!(
                "{} cells ({} failed) -> {}",
                rows.len(),
                rows.iter().filter(|r| r.failed()).count(),
                cfg.output.dir.join(&cfg.output.sweep).display()
            );
        }
        Command::Steady { common, time } => {
            let cfg = common.resolve()?;
            println!("{}", serde_json::to_string_pretty(&steady_report(&cfg, time)?).expect("report serialises"));
        }
        Command::CalibrateBuses { common, target } => {
            let cfg = common.resolve()?;
            let mfd = cfg.model.mfd;
            let n = calibrate_bus_fleet(target, &mfd, 1e-9).ok_or_else(|| {
                RunError::from(buslane_core::ParamError::new("target", "not attainable on an empty bus lane"))
            })?;
            let report = serde_json::json!({
                "target_speed": target,
                "n_buses": n,
                "bus_speed": bus_speed(0.0, n, &mfd),
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
