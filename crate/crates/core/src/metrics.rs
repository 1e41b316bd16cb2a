//! Intersection delay and its empirical distribution.
//!
//! Delay is the traversal time from *scheduled* spawn to the front bumper
//! reaching the end of the path, minus the free-flow time `path_length /
//! max_speed`. Quantiles use the lower empirical convention: `quantile(q)` is
//! the smallest sample `x` with `F(x) >= q`, with no interpolation.

use crate::dynamics::VehicleParams;
use crate::error::MetricsError;
use crate::geometry::{Direction, IntersectionGeometry};

/// Negative delays down to this value are discretization noise and clamp
/// to zero.
pub const NEGATIVE_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayRecord {
    pub id: u64,
    pub direction: Direction,
    pub scheduled_spawn: f64,
    pub exit_time: f64,
    pub delay: f64,
}

pub fn free_flow_time(geometry: &IntersectionGeometry, params: &VehicleParams) -> f64 {
    geometry.path_length() / params.max_speed
}

pub fn delay_of(
    spawned: f64,
    exited: f64,
    geometry: &IntersectionGeometry,
    params: &VehicleParams,
) -> Result<f64, MetricsError> {
    if exited < spawned {
        return Err(MetricsError::ExitBeforeSpawn { spawned, exited });
    }
    let delay = exited - spawned - free_flow_time(geometry, params);
    if delay < -NEGATIVE_SLACK {
        return Err(MetricsError::NegativeDelay(delay));
    }
    Ok(delay.max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(delays: impl IntoIterator<Item = f64>) -> Self {
        let mut sorted: Vec<f64> = delays.into_iter().collect();
        sorted.sort_by(f64::total_cmp);
        EmpiricalCdf { sorted }
    }

    pub fn from_records(records: &[DelayRecord]) -> Self {
        EmpiricalCdf::new(records.iter().map(|r| r.delay))
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`. `None` on an empty sample.
    pub fn eval(&self, x: f64) -> Option<f64> {
        if self.sorted.is_empty() {
            return None;
        }
        let count = self.sorted.partition_point(|&s| s <= x);
        Some(count as f64 / self.sorted.len() as f64)
    }

    pub fn quantile(&self, q: f64) -> Result<f64, MetricsError> {
        if !(0.0..=1.0).contains(&q) {
            return Err(MetricsError::BadQuantile(q));
        }
        let n = self.sorted.len();
        if n == 0 {
            return Err(MetricsError::Empty);
        }
        // Guard against q * n landing a hair above an integer.
        let rank = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
        Ok(self.sorted[rank.min(n) - 1])
    }

    pub fn median(&self) -> Result<f64, MetricsError> {
        self.quantile(0.5)
    }

    /// `(delay, F(delay))` at every distinct sample, ready to plot.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = f,
                _ => out.push((x, f)),
            }
        }
        out
    }
}

pub fn exceedance_fraction(records: &[DelayRecord], threshold: f64) -> Result<f64, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let above = records.iter().filter(|r| r.delay > threshold).count();
    Ok(above as f64 / records.len() as f64)
}

/// Summary row for one population of records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaySummary {
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
    /// Fraction of vehicles delayed more than 20 s.
    pub over_20s: f64,
}

pub const EXCEEDANCE_THRESHOLD: f64 = 20.0;

impl DelaySummary {
    pub fn of(records: &[DelayRecord]) -> Result<Self, MetricsError> {
        let cdf = EmpiricalCdf::from_records(records);
        let median = cdf.median()?;
        let mean = records.iter().map(|r| r.delay).sum::<f64>() / records.len() as f64;
        let max = cdf.samples().last().copied().unwrap_or(0.0);
        Ok(DelaySummary {
            count: records.len(),
            median,
            mean,
            max,
            over_20s: exceedance_fraction(records, EXCEEDANCE_THRESHOLD)?,
        })
    }
}

pub fn records_for(records: &[DelayRecord], direction: Direction) -> Vec<DelayRecord> {
    records.iter().filter(|r| r.direction == direction).copied().collect()
}
