use crate::choice::ChoiceSet;
use crate::controllers::{ControlDims, MpcConfig, PiConfig};

use super::config::{ConfigError, ControllerConfig, ScenarioConfig};

/// Every named scenario, in catalogue order.
pub const PRESET_NAMES: [&str; 10] = [
    "no_pool",
    "pool_V_only",
    "pool_B_only",
    "all_pool_B",
    "free",
    "pi",
    "mpc_phiB",
    "mpc_both",
    "mpc_phiB_vmin",
    "mpc_both_vmin",
];

/// Controller of a named scenario.
pub fn preset_controller(name: &str) -> Option<ControllerConfig> {
    let forced = |choice_set| ControllerConfig::Forced { choice_set };
    let mpc = |dims, min_bus_speed| ControllerConfig::Mpc(MpcConfig { dims, min_bus_speed, ..Default::default() });
    Some(match name {
        "no_pool" => forced(ChoiceSet::SoloOnly),
        "pool_V_only" => forced(ChoiceSet::SoloOrPoolVehicle),
        "pool_B_only" => forced(ChoiceSet::SoloOrPoolBus),
        "all_pool_B" => forced(ChoiceSet::PoolBusOnly),
        "free" => ControllerConfig::Free,
        "pi" => ControllerConfig::Pi(PiConfig::default()),
        "mpc_phiB" => mpc(ControlDims::PhiB, None),
        "mpc_both" => mpc(ControlDims::Both, None),
        "mpc_phiB_vmin" => mpc(ControlDims::PhiB, Some(17.0)),
        "mpc_both_vmin" => mpc(ControlDims::Both, Some(17.0)),
        _ => return None,
    })
}

/// `base` with the named scenario's controller and name.
pub fn apply_preset(base: &ScenarioConfig, name: &str) -> Result<ScenarioConfig, ConfigError> {
    let controller = preset_controller(name).ok_or_else(|| ConfigError::UnknownPreset(name.into()))?;
    Ok(ScenarioConfig { name: name.into(), controller, ..base.clone() })
}

/// A named scenario on default settings.
pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    apply_preset(&ScenarioConfig::default(), name)
}
