//! Macroscopic simulation of a city network with a dedicated bus lane that
//! ride-pooling vehicles may share, and fare-based control of that access.
//!
//! The network is split into a vehicle subnetwork and a bus-lane subnetwork,
//! each following a speed-accumulation curve. Ride-hailing requests choose
//! between solo rides, pooled rides in general traffic and pooled rides on
//! the bus lane; a control fare on each pooled option steers that choice.

pub mod choice;
pub mod controllers;
pub mod demand;
pub mod error;
pub mod metrics;
pub mod mfd;
pub mod plant;
pub mod scenario;
pub mod trajectory;

pub use choice::{ChoiceParams, ChoiceSet, ControlFares, MatchingParams, ModeShares};
pub use controllers::{ControlAction, Controller};
pub use demand::{DemandProfile, DemandSample};
pub use error::{ParamError, SimError};
pub use metrics::{summarize, SummaryRecord};
pub use mfd::MfdParams;
pub use plant::{simulate, steady_state, step, ModelParams, SystemState};
pub use trajectory::Trajectory;
