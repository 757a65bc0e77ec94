//! Customer attributes (demand, service time, time window) and the battery
//! capacity that ties energy to the realised geometry.

use crate::config::FieldIssue;
use crate::model::{euclidean_distance, Point, TimeWindow};
use crate::rng::uniform;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Raw demands are drawn from `U(0.02 Q, 0.30 Q)`.
pub const DEMAND_LOW: f64 = 0.02;
pub const DEMAND_HIGH: f64 = 0.30;
/// Total demand is capped at this multiple of `Q`.
pub const DEMAND_TOTAL_CAP: f64 = 3.0;
/// Staggered window starts spread over the first 30% of the horizon.
pub const WINDOW_START_SPREAD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BatteryMode {
    Fixed { battery: f64 },
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyConfig {
    pub mode: BatteryMode,
    pub kappa: f64,
    pub range_min: f64,
    pub range_max: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self { mode: BatteryMode::Adaptive, kappa: 0.8, range_min: 0.15, range_max: 0.40 }
    }
}

impl EnergyConfig {
    pub(crate) fn collect_issues(&self, issues: &mut Vec<FieldIssue>) {
        if !(self.kappa > 0.0) {
            issues.push(FieldIssue::new("energy.kappa", "must be positive"));
        }
        if !(self.range_min > 0.0 && self.range_min <= self.range_max) || !self.range_max.is_finite() {
            issues.push(FieldIssue::new("energy.range_min", "need 0 < range_min <= range_max"));
        }
        if let BatteryMode::Fixed { battery } = self.mode {
            if !(battery > 0.0) || !battery.is_finite() {
                issues.push(FieldIssue::new("energy.mode.battery", "must be positive"));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub min: f64,
    pub max: f64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { min: 0.01, max: 0.03 }
    }
}

impl ServiceConfig {
    pub(crate) fn collect_issues(&self, issues: &mut Vec<FieldIssue>) {
        if !(self.min >= 0.0 && self.min <= self.max) || !self.max.is_finite() {
            issues.push(FieldIssue::new("service.min", "need 0 <= min <= max"));
        }
    }
}

/// Uniform demands, scaled down proportionally when they exceed `3 Q` in
/// total. Scaling never pushes a demand above `0.30 Q`, but may push it
/// below `0.02 Q`.
pub fn sample_demands<R: Rng + ?Sized>(n: usize, capacity: f64, rng: &mut R) -> Vec<f64> {
    let mut demands: Vec<f64> = (0..n)
        .map(|_| uniform(rng, DEMAND_LOW * capacity, DEMAND_HIGH * capacity))
        .collect();
    rescale_demands(&mut demands, capacity);
    demands
}

pub fn rescale_demands(demands: &mut [f64], capacity: f64) {
    let cap = DEMAND_TOTAL_CAP * capacity;
    let total: f64 = demands.iter().sum();
    if total > cap {
        let factor = cap / total;
        for q in demands.iter_mut() {
            *q *= factor;
        }
    }
}

pub fn sample_service_times<R: Rng + ?Sized>(n: usize, min: f64, max: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, min, max)).collect()
}

/// Largest pairwise distance; zero for fewer than two points.
pub fn max_pairwise_distance(points: &[Point]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(euclidean_distance(*a, *b));
        }
    }
    best
}

/// `B = r * clamp(kappa * d_max, R_min, R_max)`.
pub fn adaptive_battery(customers: &[Point], rate: f64, config: &EnergyConfig) -> f64 {
    let target = config.kappa * max_pairwise_distance(customers);
    rate * config.range_min.max(config.range_max.min(target))
}

pub fn battery_capacity(customers: &[Point], rate: f64, config: &EnergyConfig) -> f64 {
    match config.mode {
        BatteryMode::Fixed { battery } => battery,
        BatteryMode::Adaptive => adaptive_battery(customers, rate, config),
    }
}

/// Staggered windows: `e_i = (i/N) 0.3 H`, `l_i = min(H, e_i + W)`, and
/// windows clipped at `H` are shifted back to keep width `W`.
pub fn assign_time_windows(n: usize, horizon: f64, phi: f64) -> Vec<TimeWindow> {
    let width = phi * horizon;
    (1..=n)
        .map(|i| {
            let earliest = (i as f64 / n as f64) * WINDOW_START_SPREAD * horizon;
            if earliest + width >= horizon {
                TimeWindow::new(horizon - width, horizon)
            } else {
                TimeWindow::new(earliest, earliest + width)
            }
        })
        .collect()
}

/// Window starts drawn uniformly in `[0, H - W]`.
pub fn sample_time_windows<R: Rng + ?Sized>(
    n: usize,
    horizon: f64,
    phi: f64,
    rng: &mut R,
) -> Vec<TimeWindow> {
    let width = phi * horizon;
    (0..n)
        .map(|_| {
            let earliest = uniform(rng, 0.0, horizon - width);
            TimeWindow::new(earliest, earliest + width)
        })
        .collect()
}
