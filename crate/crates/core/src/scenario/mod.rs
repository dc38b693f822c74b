//! Scenario configuration, the preset catalogue and file outputs.

mod config;
mod presets;
mod runner;

pub use config::{
    load_config, AbandonmentConfig, ConfigError, ControllerConfig, DemandConfig, ModelConfig, OutputConfig,
    ScenarioConfig, DEFAULT_BASE_DEMAND, DEFAULT_PEAK_DEMAND, DEFAULT_PEAK_TIMES,
};
pub use presets::{apply_preset, preset, preset_controller, PRESET_NAMES};
pub use runner::{
    config_hash, execute, initial_state, run_scenario, run_sweep, steady_report, sweep_pi_template, write_outputs,
    write_summary, write_sweep, write_text, write_timeseries, RunError, RunResult, SteadyReport, SUMMARY_HEADER,
    SWEEP_HEADER, TIMESERIES_HEADER,
};
