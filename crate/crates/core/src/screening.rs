//! Linear-time structural screening.
//!
//! Three necessary conditions per customer: some replenishing node (depot or
//! station) within range, a depot return that fits the horizon after the
//! earliest service, and an external station within range. Passing all of
//! them does not guarantee that feasible routes exist.

use crate::model::{euclidean_distance, travel_time, Instance, EPS};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    EnergyReachability,
    DepotReturn,
    StationAccessibility,
}

impl Condition {
    pub const ALL: [Condition; 3] =
        [Condition::EnergyReachability, Condition::DepotReturn, Condition::StationAccessibility];

    pub fn label(self) -> &'static str {
        match self {
            Condition::EnergyReachability => "energy_reachability",
            Condition::DepotReturn => "depot_return",
            Condition::StationAccessibility => "station_accessibility",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    pub customer: usize,
    /// Measured quantity; `None` when the minimum ranges over an empty set.
    pub measured: Option<f64>,
    pub threshold: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.measured {
            Some(m) => write!(f, "{} at customer {}: {} > {}", self.condition, self.customer, m, self.threshold),
            None => write!(f, "{} at customer {}: no candidate node", self.condition, self.customer),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl ScreeningReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self { passed: violations.is_empty(), violations }
    }

    /// Distinct violated conditions in canonical order.
    pub fn conditions(&self) -> Vec<Condition> {
        Condition::ALL
            .into_iter()
            .filter(|c| self.violations.iter().any(|v| v.condition == *c))
            .collect()
    }

    pub fn violates(&self, condition: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }
}

pub fn check_energy_reachability(instance: &Instance) -> Vec<Violation> {
    let range = instance.range();
    let depot = instance.depot.position;
    instance
        .customers
        .iter()
        .filter_map(|c| {
            let p = c.position();
            let nearest = instance
                .stations
                .iter()
                .map(|s| euclidean_distance(p, s.position))
                .fold(euclidean_distance(p, depot), f64::min);
            (nearest > range + EPS).then(|| Violation {
                condition: Condition::EnergyReachability,
                customer: c.id(),
                measured: Some(nearest),
                threshold: range,
            })
        })
        .collect()
}

pub fn check_depot_return(instance: &Instance) -> Vec<Violation> {
    let depot = instance.depot.position;
    instance
        .customers
        .iter()
        .filter_map(|c| {
            let finish = c.window.earliest + c.service + travel_time(euclidean_distance(c.position(), depot));
            (finish > instance.horizon + EPS).then(|| Violation {
                condition: Condition::DepotReturn,
                customer: c.id(),
                measured: Some(finish),
                threshold: instance.horizon,
            })
        })
        .collect()
}

/// The depot does not count here; with no stations every customer fails.
pub fn check_station_accessibility(instance: &Instance) -> Vec<Violation> {
    let range = instance.range();
    instance
        .customers
        .iter()
        .filter_map(|c| {
            let p = c.position();
            let nearest = instance
                .stations
                .iter()
                .map(|s| euclidean_distance(p, s.position))
                .min_by(f64::total_cmp);
            let ok = nearest.is_some_and(|d| d <= range + EPS);
            (!ok).then(|| Violation {
                condition: Condition::StationAccessibility,
                customer: c.id(),
                measured: nearest,
                threshold: range,
            })
        })
        .collect()
}

/// Runs all three checks without short-circuiting.
pub fn screen(instance: &Instance) -> ScreeningReport {
    let mut violations = check_energy_reachability(instance);
    violations.extend(check_depot_return(instance));
    violations.extend(check_station_accessibility(instance));
    ScreeningReport::from_violations(violations)
}
