//! Generator configuration and its validation.

use crate::attributes::{EnergyConfig, ServiceConfig};
use crate::model::TemporalConfig;
use crate::spatial::SpatialConfig;
use crate::stations::StationConfig;
use crate::verify::SearchLimits;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Planning horizon used when none is given.
pub const DEFAULT_HORIZON: f64 = 2.0;

/// Instance sizes of the standard sweep as `(customers, stations)`.
pub const STANDARD_SIZES: [(usize, usize); 11] = [
    (5, 2),
    (10, 3),
    (20, 4),
    (30, 4),
    (40, 5),
    (50, 6),
    (60, 7),
    (70, 8),
    (80, 9),
    (90, 10),
    (100, 12),
];

/// Station count paired with `customers` in the standard sweep; sizes in
/// between take the value of the next smaller standard size.
pub fn standard_station_count(customers: usize) -> usize {
    STANDARD_SIZES
        .iter()
        .rev()
        .find(|(n, _)| *n <= customers)
        .map_or(2, |(_, s)| *s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldIssue {
    pub field: String,
    pub message: String,
}

impl FieldIssue {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid configuration: {}", .issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct ConfigError {
    pub issues: Vec<FieldIssue>,
}

impl ConfigError {
    pub fn single(field: &str, message: &str) -> Self {
        Self { issues: vec![FieldIssue::new(field, message)] }
    }
}

/// Named window-width regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Wide,
    Medium,
    Tight,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Wide, Regime::Medium, Regime::Tight];

    pub fn phi(self) -> f64 {
        match self {
            Regime::Wide => 0.8,
            Regime::Medium => 0.4,
            Regime::Tight => 0.2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::Wide => "wide",
            Regime::Medium => "medium",
            Regime::Tight => "tight",
        }
    }

    pub fn from_phi(phi: f64) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.phi() == phi)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wide" => Ok(Regime::Wide),
            "medium" => Ok(Regime::Medium),
            "tight" => Ok(Regime::Tight),
            other => Err(format!("unknown regime '{other}' (expected wide, medium or tight)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    pub capacity: f64,
    pub consumption_rate: f64,
    pub charge_rate: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self { capacity: 1.5, consumption_rate: 0.25, charge_rate: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerificationConfig {
    pub enabled: bool,
    /// Exact verification runs only up to this many customers.
    pub max_customers: usize,
    pub limits: SearchLimits,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self { enabled: true, max_customers: 10, limits: SearchLimits::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub spatial: SpatialConfig,
    pub stations: StationConfig,
    pub energy: EnergyConfig,
    pub service: ServiceConfig,
    pub temporal: TemporalConfig,
    pub vehicle: VehicleParams,
    pub verification: VerificationConfig,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        Self { horizon: DEFAULT_HORIZON, phi: Regime::Medium.phi(), randomized_window_starts: false }
    }
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            spatial: SpatialConfig::default(),
            stations: StationConfig::default(),
            energy: EnergyConfig::default(),
            service: ServiceConfig::default(),
            temporal: TemporalConfig::default(),
            vehicle: VehicleParams::default(),
            verification: VerificationConfig::default(),
        }
    }
}

impl GeneratorConfig {
    /// Standard-sweep configuration for one `(family, regime, size)` cell.
    pub fn cell(
        family: crate::spatial::SpatialFamily,
        regime: Regime,
        customers: usize,
        stations: usize,
    ) -> Self {
        let mut cfg = Self::default();
        cfg.spatial.family = family;
        cfg.spatial.customers = customers;
        cfg.stations.target_count = stations;
        cfg.temporal.phi = regime.phi();
        cfg
    }

    pub fn customers(&self) -> usize {
        self.spatial.customers
    }

    pub fn regime(&self) -> Option<Regime> {
        Regime::from_phi(self.temporal.phi)
    }

    /// Regime name, or `phi<value>` for widths outside the named regimes.
    pub fn regime_label(&self) -> String {
        match self.regime() {
            Some(r) => r.label().to_string(),
            None => format!("phi{:.3}", self.temporal.phi),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        self.spatial.collect_issues(&mut issues);
        self.stations.collect_issues(&mut issues);
        self.energy.collect_issues(&mut issues);
        self.service.collect_issues(&mut issues);
        let t = &self.temporal;
        if !(t.horizon > 0.0) || !t.horizon.is_finite() {
            issues.push(FieldIssue::new("temporal.horizon", "must be positive"));
        }
        if !(t.phi > 0.0 && t.phi <= 1.0) {
            issues.push(FieldIssue::new("temporal.phi", "must lie in (0, 1]"));
        }
        let v = &self.vehicle;
        for (field, value) in [
            ("vehicle.capacity", v.capacity),
            ("vehicle.consumption_rate", v.consumption_rate),
            ("vehicle.charge_rate", v.charge_rate),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                issues.push(FieldIssue::new(field, "must be positive"));
            }
        }
        self.verification.limits.collect_issues(&mut issues);
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { issues })
        }
    }
}
