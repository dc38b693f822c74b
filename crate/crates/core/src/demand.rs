//! Exogenous demand: piecewise-linear profiles over the simulated horizon.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ParamError, SimError};

/// Demand rates in passengers per hour.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DemandSample {
    pub q_pv: f64,
    pub q_rs: f64,
    pub q_b: f64,
}

impl DemandSample {
    pub const ZERO: Self = Self { q_pv: 0.0, q_rs: 0.0, q_b: 0.0 };

    pub fn new(q_pv: f64, q_rs: f64, q_b: f64) -> Self {
        Self { q_pv, q_rs, q_b }
    }

    pub fn is_valid(&self) -> bool {
        [self.q_pv, self.q_rs, self.q_b].iter().all(|q| q.is_finite() && *q >= 0.0)
    }

    fn lerp(&self, other: &Self, w: f64) -> Self {
        let mix = |a: f64, b: f64| a + (b - a) * w;
        Self { q_pv: mix(self.q_pv, other.q_pv), q_rs: mix(self.q_rs, other.q_rs), q_b: mix(self.q_b, other.q_b) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    /// Hours since the start of the run.
    pub t: f64,
    #[serde(flatten)]
    pub demand: DemandSample,
}

/// Piecewise-linear demand. The first breakpoint sits at `t = 0`; after the
/// last breakpoint demand is held flat until `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile {
    breakpoints: Vec<Breakpoint>,
    horizon: f64,
}

impl DemandProfile {
    pub fn new(breakpoints: Vec<Breakpoint>, horizon: f64) -> Result<Self, ParamError> {
        let first = breakpoints.first().ok_or_else(|| ParamError::new("demand.breakpoints", "must not be empty"))?;
        if first.t != 0.0 {
            return Err(ParamError::new("demand.breakpoints", "first breakpoint must be at t = 0"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(ParamError::new("demand.horizon", "must be positive and finite"));
        }
        for (i, pair) in breakpoints.windows(2).enumerate() {
            if pair[1].t.partial_cmp(&pair[0].t) != Some(std::cmp::Ordering::Greater) {
                return Err(ParamError::new(
                    format!("demand.breakpoints[{}]", i + 1),
                    "times must be strictly increasing",
                ));
            }
        }
        for (i, bp) in breakpoints.iter().enumerate() {
            if !bp.t.is_finite() || !bp.demand.is_valid() {
                return Err(ParamError::new(
                    format!("demand.breakpoints[{i}]"),
                    "time and rates must be finite, rates non-negative",
                ));
            }
        }
        Ok(Self { breakpoints, horizon })
    }

    pub fn constant(sample: DemandSample, horizon: f64) -> Result<Self, ParamError> {
        Self::new(vec![Breakpoint { t: 0.0, demand: sample }], horizon)
    }

    /// Base demand with a trapezoidal peak: linear rise over
    /// `[rise_start, plateau_start]`, flat until `plateau_end`, linear return
    /// to base by `fall_end`.
    pub fn trapezoid(
        base: DemandSample,
        peak: DemandSample,
        [rise_start, plateau_start, plateau_end, fall_end]: [f64; 4],
        horizon: f64,
    ) -> Result<Self, ParamError> {
        let mut bps = vec![Breakpoint { t: 0.0, demand: base }];
        if rise_start > 0.0 {
            bps.push(Breakpoint { t: rise_start, demand: base });
        }
        bps.push(Breakpoint { t: plateau_start, demand: peak });
        bps.push(Breakpoint { t: plateau_end, demand: peak });
        bps.push(Breakpoint { t: fall_end, demand: base });
        if fall_end < horizon {
            bps.push(Breakpoint { t: horizon, demand: base });
        }
        Self::new(bps, horizon)
    }

    /// Reads `time_hr,q_pv,q_rs,q_b` rows (with header).
    pub fn from_csv(path: &Path, horizon: f64) -> Result<Self, ParamError> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| ParamError::new("demand.file", format!("{}: {e}", path.display())))?;
        let mut bps = Vec::new();
        for (i, row) in reader.deserialize::<(f64, f64, f64, f64)>().enumerate() {
            let (t, q_pv, q_rs, q_b) =
                row.map_err(|e| ParamError::new("demand.file", format!("{} row {}: {e}", path.display(), i + 1)))?;
            bps.push(Breakpoint { t, demand: DemandSample { q_pv, q_rs, q_b } });
        }
        Self::new(bps, horizon)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    /// Demand at `t` hours, linearly interpolated between breakpoints.
    pub fn at(&self, t: f64) -> Result<DemandSample, SimError> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(SimError::DemandOutOfRange { t, horizon: self.horizon });
        }
        let idx = self.breakpoints.partition_point(|bp| bp.t <= t);
        // idx >= 1 because the first breakpoint is at 0 <= t.
        let left = &self.breakpoints[idx - 1];
        match self.breakpoints.get(idx) {
            Some(right) => {
                let w = (t - left.t) / (right.t - left.t);
                Ok(left.demand.lerp(&right.demand, w))
            }
            None => Ok(left.demand),
        }
    }

    /// Demand for steps `start..start + len` of length `tau`.
    pub fn samples(&self, start: u64, len: usize, tau: f64) -> Result<Vec<DemandSample>, SimError> {
        (0..len).map(|i| self.at((start + i as u64) as f64 * tau)).collect()
    }

    /// Same profile with every rate scaled per mode.
    pub fn scaled(&self, pv: f64, rs: f64, b: f64) -> Self {
        let breakpoints = self
            .breakpoints
            .iter()
            .map(|bp| Breakpoint {
                t: bp.t,
                demand: DemandSample { q_pv: bp.demand.q_pv * pv, q_rs: bp.demand.q_rs * rs, q_b: bp.demand.q_b * b },
            })
            .collect();
        Self { breakpoints, horizon: self.horizon }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(a: f64, b: f64, c: f64) -> DemandSample {
        DemandSample::new(a, b, c)
    }

    fn two_point() -> DemandProfile {
        DemandProfile::new(
            vec![
                Breakpoint { t: 0.0, demand: s(100.0, 10.0, 50.0) },
                Breakpoint { t: 2.0, demand: s(300.0, 30.0, 150.0) },
            ],
            4.0,
        )
        .unwrap()
    }

    #[test]
    fn exact_at_breakpoints_and_mean_at_midpoint() {
        let p = two_point();
        assert_eq!(p.at(0.0).unwrap(), s(100.0, 10.0, 50.0));
        assert_eq!(p.at(2.0).unwrap(), s(300.0, 30.0, 150.0));
        assert_eq!(p.at(1.0).unwrap(), s(200.0, 20.0, 100.0));
        assert_eq!(p.at(3.5).unwrap(), s(300.0, 30.0, 150.0));
    }

    #[test]
    fn outside_horizon_is_an_error() {
        let p = two_point();
        assert!(matches!(p.at(4.5), Err(SimError::DemandOutOfRange { .. })));
        assert!(p.at(-0.1).is_err());
    }

    #[test]
    fn construction_checks() {
        let bad_start = vec![Breakpoint { t: 1.0, demand: DemandSample::ZERO }];
        assert!(DemandProfile::new(bad_start, 2.0).is_err());
        let unordered = vec![
            Breakpoint { t: 0.0, demand: DemandSample::ZERO },
            Breakpoint { t: 1.0, demand: DemandSample::ZERO },
            Breakpoint { t: 1.0, demand: DemandSample::ZERO },
        ];
        let err = DemandProfile::new(unordered, 2.0).unwrap_err();
        assert_eq!(err.field, "demand.breakpoints[2]");
        let negative = vec![Breakpoint { t: 0.0, demand: s(-1.0, 0.0, 0.0) }];
        assert!(DemandProfile::new(negative, 2.0).is_err());
    }

    #[test]
    fn trapezoid_shape() {
        let base = s(40000.0, 6000.0, 20000.0);
        let peak = s(60000.0, 9000.0, 30000.0);
        let p = DemandProfile::trapezoid(base, peak, [2.0, 2.5, 3.5, 4.0], 6.0).unwrap();
        assert_eq!(p.at(1.0).unwrap(), base);
        assert_eq!(p.at(2.0).unwrap(), base);
        assert_eq!(p.at(3.0).unwrap(), peak);
        assert_eq!(p.at(2.25).unwrap(), s(50000.0, 7500.0, 25000.0));
        assert_eq!(p.at(4.0).unwrap(), base);
        assert_eq!(p.at(6.0).unwrap(), base);
    }

    #[test]
    fn csv_ingest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "time_hr,q_pv,q_rs,q_b\n0,100,10,50\n2,300,30,150\n").unwrap();
        let p = DemandProfile::from_csv(&path, 4.0).unwrap();
        assert_eq!(p, two_point());
    }
}
