use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::choice::{ChoiceParams, ChoiceSet, MatchingParams};
use crate::controllers::{MpcConfig, PiConfig, SweepSpec};
use crate::demand::{Breakpoint, DemandProfile, DemandSample};
use crate::error::{ensure, finite_pos, ParamError};
use crate::mfd::{calibrate_bus_fleet, MfdParams};
use crate::plant::{AbandonmentUnits, ModelParams, EMPTY_LANE_BUS_SPEED};

/// Default off-peak demand, pax/hr.
pub const DEFAULT_BASE_DEMAND: DemandSample = DemandSample { q_pv: 60000.0, q_rs: 12000.0, q_b: 20000.0 };
/// Default peak demand, pax/hr.
pub const DEFAULT_PEAK_DEMAND: DemandSample = DemandSample { q_pv: 75000.0, q_rs: 20000.0, q_b: 30000.0 };
/// Rise start, plateau start, plateau end and fall end of the default
/// trapezoid, hours after the start of the run.
pub const DEFAULT_PEAK_TIMES: [f64; 4] = [2.0, 2.5, 3.5, 4.0];

/// A configuration problem, located by field path or file.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Invalid(#[from] ParamError),
    #[error("unknown scenario preset `{0}` (known: {known})", known = super::presets::PRESET_NAMES.join(", "))]
    UnknownPreset(String),
}

/// Model parameters as written in a config file. Omitted fields take the
/// reference values; an omitted bus fleet is calibrated so that buses run
/// at 19 km/hr on an empty lane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub mfd: MfdParams,
    pub choice: ChoiceParams,
    pub matching: MatchingParams,
    pub fleet_size: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_buses: Option<f64>,
    pub occ_pv: f64,
    pub occ_pool: f64,
    pub trip_len_pv: f64,
    pub trip_len_bus: f64,
    /// Step length in seconds.
    pub tau_s: f64,
    pub abandonment_units: AbandonmentUnits,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            mfd: p.mfd,
            choice: p.choice,
            matching: p.matching,
            fleet_size: p.fleet_size,
            n_buses: None,
            occ_pv: p.occ_pv,
            occ_pool: p.occ_pool,
            trip_len_pv: p.trip_len_pv,
            trip_len_bus: p.trip_len_bus,
            tau_s: p.tau * 3600.0,
            abandonment_units: p.abandonment_units,
        }
    }
}

impl ModelConfig {
    pub fn to_params(&self, w_max_hr: f64) -> Result<ModelParams, ParamError> {
        self.mfd.validate().map_err(|e| e.within("model.mfd"))?;
        let n_buses = match self.n_buses {
            Some(n) => n,
            None => calibrate_bus_fleet(EMPTY_LANE_BUS_SPEED, &self.mfd, 1e-9).ok_or_else(|| {
                ParamError::new("model.n_buses", "cannot calibrate: empty-lane bus speed never reaches 19 km/hr")
            })?,
        };
        let p = ModelParams {
            mfd: self.mfd,
            choice: self.choice,
            matching: MatchingParams { w_max: w_max_hr, ..self.matching },
            fleet_size: self.fleet_size,
            n_buses,
            occ_pv: self.occ_pv,
            occ_pool: self.occ_pool,
            trip_len_pv: self.trip_len_pv,
            trip_len_bus: self.trip_len_bus,
            tau: self.tau_s / 3600.0,
            abandonment_units: self.abandonment_units,
        };
        p.validate().map_err(|e| e.within("model"))?;
        Ok(p)
    }
}

/// Where demand comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandConfig {
    /// Base demand, linear rise to the peak, plateau, linear return.
    Trapezoid {
        base: DemandSample,
        peak: DemandSample,
        times_hr: [f64; 4],
    },
    Constant {
        demand: DemandSample,
    },
    Breakpoints {
        points: Vec<Breakpoint>,
    },
    /// A `time_hr,q_pv,q_rs,q_b` file. Relative paths resolve against the
    /// directory of the config file.
    File {
        path: PathBuf,
    },
}

impl Default for DemandConfig {
    fn default() -> Self {
        Self::Trapezoid { base: DEFAULT_BASE_DEMAND, peak: DEFAULT_PEAK_DEMAND, times_hr: DEFAULT_PEAK_TIMES }
    }
}

impl DemandConfig {
    pub fn profile(&self, horizon_hr: f64) -> Result<DemandProfile, ParamError> {
        let within = |e: ParamError| {
            if e.field.starts_with("demand") {
                e
            } else {
                e.within("demand")
            }
        };
        match self {
            Self::Trapezoid { base, peak, times_hr } => {
                DemandProfile::trapezoid(*base, *peak, *times_hr, horizon_hr).map_err(within)
            }
            Self::Constant { demand } => DemandProfile::constant(*demand, horizon_hr).map_err(within),
            Self::Breakpoints { points } => DemandProfile::new(points.clone(), horizon_hr).map_err(within),
            Self::File { path } => DemandProfile::from_csv(path, horizon_hr).map_err(within),
        }
    }
}

/// The fare-setting strategy of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerConfig {
    /// Zero control fares, full choice.
    #[default]
    Free,
    /// Zero control fares with only `choice_set` on offer.
    Forced {
        choice_set: ChoiceSet,
    },
    Pi(PiConfig),
    Mpc(MpcConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbandonmentConfig {
    pub enabled: bool,
    /// Waiting tolerance, minutes.
    pub w_max_min: f64,
}

impl Default for AbandonmentConfig {
    fn default() -> Self {
        Self { enabled: true, w_max_min: 15.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub timeseries: String,
    pub summary: String,
    pub manifest: String,
    pub sweep: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            timeseries: "timeseries.csv".into(),
            summary: "summary.csv".into(),
            manifest: "manifest.json".into(),
            sweep: "sweep.csv".into(),
        }
    }
}

/// Everything needed to reproduce one run or one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub horizon_hr: f64,
    pub seed: u64,
    /// Set point against which bus-speed violations are reported, km/hr.
    pub violation_speed: f64,
    pub model: ModelConfig,
    pub demand: DemandConfig,
    pub controller: ControllerConfig,
    pub abandonment: AbandonmentConfig,
    pub sweep: SweepSpec,
    pub output: OutputConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "free".into(),
            horizon_hr: 6.0,
            seed: 0,
            violation_speed: 17.0,
            model: ModelConfig::default(),
            demand: DemandConfig::default(),
            controller: ControllerConfig::default(),
            abandonment: AbandonmentConfig::default(),
            sweep: SweepSpec::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Parses TOML text. Relative demand-file paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, origin: &str, base_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg: Self =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.into(), message: e.to_string() })?;
        if let (DemandConfig::File { path }, Some(dir)) = (&mut cfg.demand, base_dir) {
            if path.is_relative() {
                *path = dir.join(&*path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// TOML text that [`ScenarioConfig::from_toml_str`] reads back to an
    /// equal config.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config always serialises")
    }

    pub fn model_params(&self) -> Result<ModelParams, ParamError> {
        self.model.to_params(self.abandonment.w_max_min / 60.0)
    }

    pub fn demand_profile(&self) -> Result<DemandProfile, ParamError> {
        self.demand.profile(self.horizon_hr)
    }

    pub fn steps(&self) -> Result<usize, ParamError> {
        Ok(self.model_params()?.steps_in(self.horizon_hr))
    }

    /// Checks every section and names the offending field.
    pub fn validate(&self) -> Result<(), ParamError> {
        ensure("horizon_hr", finite_pos(self.horizon_hr), "must be positive and finite")?;
        ensure("violation_speed", finite_pos(self.violation_speed), "must be positive and finite")?;
        ensure(
            "abandonment.w_max_min",
            self.abandonment.w_max_min > 0.0 && !self.abandonment.w_max_min.is_nan(),
            "must be positive",
        )?;
        ensure("model.tau_s", finite_pos(self.model.tau_s), "must be positive and finite")?;
        if let DemandConfig::File { path } = &self.demand {
            ensure("demand.path", path.is_file(), "file does not exist")?;
        }
        self.model_params()?;
        self.demand_profile()?;
        match &self.controller {
            ControllerConfig::Pi(c) => c.validate().map_err(|e| e.within("controller"))?,
            ControllerConfig::Mpc(c) => c.validate().map_err(|e| e.within("controller"))?,
            ControllerConfig::Free | ControllerConfig::Forced { .. } => {}
        }
        self.sweep.validate().map_err(|e| e.within("sweep"))?;
        for (field, name) in [
            ("output.timeseries", &self.output.timeseries),
            ("output.summary", &self.output.summary),
            ("output.manifest", &self.output.manifest),
            ("output.sweep", &self.output.sweep),
        ] {
            ensure(field, !name.is_empty() && !name.contains(['/', '\\']), "must be a plain file name")?;
        }
        Ok(())
    }
}

/// Reads and validates a TOML scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Parse { path: path.display().to_string(), message: e.to_string() })?;
    ScenarioConfig::from_toml_str(&text, &path.display().to_string(), path.parent())
}
