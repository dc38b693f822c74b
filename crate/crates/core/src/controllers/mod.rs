//! Fare-setting strategies.

use serde::{Deserialize, Serialize};

use crate::choice::{ChoiceSet, ControlFares};
use crate::error::SimError;
use crate::plant::{FixedAction, ModelParams, SystemState};

mod mpc;
mod optimizer;
mod pi;
mod sweep;

pub use mpc::{
    mpc_objective, mpc_plan, receding_horizon_run, ControlDims, FareBlock, FareSchedule, MpcConfig, MpcController,
    Plan, ReplanRecord,
};
pub use optimizer::{minimize_in_box, SearchOutcome};
pub use pi::{pi_fare, PiConfig, PiController};
pub use sweep::{setpoint_sweep, SweepRow, SweepSpec};

/// What a controller applies at one step: the control fares and the set of
/// ride-hailing alternatives offered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlAction {
    pub fares: ControlFares,
    pub choice_set: ChoiceSet,
}

impl From<ControlFares> for ControlAction {
    fn from(fares: ControlFares) -> Self {
        Self { fares, choice_set: ChoiceSet::Full }
    }
}

/// A controller sees the current state (which carries the step index) and
/// returns the action for this step. Implementations may keep private state
/// and must not be shared between concurrent runs.
pub trait Controller {
    fn act(&mut self, state: &SystemState, p: &ModelParams) -> Result<ControlAction, SimError>;
}

impl<C: Controller + ?Sized> Controller for &mut C {
    fn act(&mut self, state: &SystemState, p: &ModelParams) -> Result<ControlAction, SimError> {
        (**self).act(state, p)
    }
}

/// Zero control fares with the full logit.
pub fn no_control() -> FixedAction {
    FixedAction(ControlAction::default())
}

/// Pins shares by restricting the alternatives on offer; the remaining
/// alternatives split by the logit at zero control fares.
pub fn forced_share_controller(set: ChoiceSet) -> FixedAction {
    FixedAction(ControlAction { fares: ControlFares::ZERO, choice_set: set })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::DemandSample;
    use crate::plant::step;

    #[test]
    fn forced_shares_hold_at_every_step() {
        let p = ModelParams::default();
        let d = DemandSample::new(40000.0, 6000.0, 20000.0);
        let cases = [
            (ChoiceSet::SoloOnly, Some((1.0, 0.0, 0.0))),
            (ChoiceSet::PoolBusOnly, Some((0.0, 0.0, 1.0))),
            (ChoiceSet::SoloOrPoolBus, None),
            (ChoiceSet::SoloOrPoolVehicle, None),
        ];
        for (set, pinned) in cases {
            let mut ctl = forced_share_controller(set);
            let mut s = SystemState { n_pv: 15000.0, c: 300.0, o_b: 10.0, ..SystemState::idle(&p) };
            for _ in 0..50 {
                let a = ctl.act(&s, &p).unwrap();
                let (next, r) = step(&s, &d, &a, &p, false).unwrap();
                let sh = r.shares;
                if let Some((a, b, c)) = pinned {
                    assert_eq!((sh.solo, sh.pool_v, sh.pool_b), (a, b, c));
                }
                match set {
                    ChoiceSet::SoloOrPoolBus => assert_eq!(sh.pool_v, 0.0),
                    ChoiceSet::SoloOrPoolVehicle => assert_eq!(sh.pool_b, 0.0),
                    _ => {}
                }
                s = next;
            }
        }
    }
}
