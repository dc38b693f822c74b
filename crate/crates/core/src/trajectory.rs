use serde::{Deserialize, Serialize};

use crate::choice::MatchClamp;
use crate::controllers::{ControlAction, ReplanRecord};
use crate::plant::{StepRates, SystemState};

/// One simulated step: the pre-step state, the action applied and the rates
/// computed from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub state: SystemState,
    pub action: ControlAction,
    pub rates: StepRates,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    /// State after the last recorded step.
    pub final_state: SystemState,
    /// Planner log for receding-horizon runs.
    pub replans: Vec<ReplanRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn clamp_counts(&self) -> ClampCounts {
        let mut c = ClampCounts::default();
        for r in &self.records {
            c.record(&r.rates);
        }
        c
    }

    /// Appends `other`, which is assumed to start where `self` ended.
    pub fn concat(mut self, other: Trajectory) -> Trajectory {
        self.records.extend(other.records);
        self.final_state = other.final_state;
        self.replans.extend(other.replans);
        self
    }

    /// Splits after the first `at` records.
    pub fn split_at(&self, at: usize) -> (Trajectory, Trajectory) {
        let (a, b) = self.records.split_at(at);
        let head_final = b.first().map(|r| r.state).unwrap_or(self.final_state);
        (
            Trajectory { records: a.to_vec(), final_state: head_final, replans: Vec::new() },
            Trajectory { records: b.to_vec(), final_state: self.final_state, replans: Vec::new() },
        )
    }
}

/// How many steps had each feasibility guard active.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClampCounts {
    pub match_supply: u64,
    pub match_queue: u64,
    pub abandonment: u64,
    pub outflow: u64,
    pub roundoff: u64,
    pub gridlock: u64,
}

impl ClampCounts {
    pub fn record(&mut self, rates: &StepRates) {
        let c = &rates.clamps;
        match c.matching {
            MatchClamp::Supply => self.match_supply += 1,
            MatchClamp::Queue => self.match_queue += 1,
            MatchClamp::None => {}
        }
        self.abandonment += c.abandonment as u64;
        self.outflow += c.outflow as u64;
        self.roundoff += c.roundoff as u64;
        self.gridlock += c.gridlock as u64;
    }

    pub fn total(&self) -> u64 {
        self.match_supply + self.match_queue + self.abandonment + self.outflow + self.roundoff
    }
}

impl std::ops::Add for ClampCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            match_supply: self.match_supply + o.match_supply,
            match_queue: self.match_queue + o.match_queue,
            abandonment: self.abandonment + o.abandonment,
            outflow: self.outflow + o.outflow,
            roundoff: self.roundoff + o.roundoff,
            gridlock: self.gridlock + o.gridlock,
        }
    }
}
