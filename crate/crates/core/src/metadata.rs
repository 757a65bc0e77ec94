//! Per-instance JSON metadata.
//!
//! Schema (version 1):
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "generator": { "name": "evgen", "version": "0.1.0" },
//!   "seed": 42,
//!   "status": "feasible" | "infeasible" | "unverified",
//!   "config": { ...full generator configuration... },
//!   "summary": { "customers": 10, "stations": 3, "battery": 0.1, "range": 0.4, "total_demand": 1.7 },
//!   "screening": { "passed": true, "violations": [ { "condition": "depot_return", "customer": 3, "measured": 2.1, "threshold": 2.0 } ] },
//!   "verification": { "outcome": "skipped" | "feasible" | "infeasible" | "unknown", "nodes_explored": 118, "witness": [[0, 2, 11, 0]] },
//!   "diagnostics": { "cluster_centers": [[0.2, 0.7]], "forced_separations": 0, "infrastructure": { ... } }
//! }
//! ```
//!
//! The record holds no wall-clock data, so the same config and seed always
//! produce the same bytes. Timings live in batch statistics.

use crate::config::GeneratorConfig;
use crate::model::Instance;
use crate::screening::ScreeningReport;
use crate::stations::InfrastructureDiagnostics;
use crate::verify::{VerificationResult, VerificationStatus};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
pub const GENERATOR_NAME: &str = "evgen";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Feasible,
    Infeasible,
    Unverified,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Unverified => "unverified",
        }
    }

    /// Output subdirectory; only feasible instances land in `feasible/`.
    pub fn directory(self) -> &'static str {
        match self {
            Status::Feasible => "feasible",
            Status::Infeasible | Status::Unverified => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub name: String,
    pub version: String,
}

impl Default for GeneratorInfo {
    fn default() -> Self {
        Self { name: GENERATOR_NAME.into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub customers: usize,
    pub stations: usize,
    pub battery: f64,
    pub range: f64,
    pub total_demand: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationOutcome {
    Skipped,
    Feasible,
    Infeasible,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub outcome: VerificationOutcome,
    pub nodes_explored: u64,
    pub witness: Option<Vec<Vec<usize>>>,
}

impl VerificationSummary {
    pub fn skipped() -> Self {
        Self { outcome: VerificationOutcome::Skipped, nodes_explored: 0, witness: None }
    }

    pub fn is_skipped(&self) -> bool {
        self.outcome == VerificationOutcome::Skipped
    }
}

impl From<&VerificationResult> for VerificationSummary {
    fn from(r: &VerificationResult) -> Self {
        let outcome = match r.status {
            VerificationStatus::Feasible => VerificationOutcome::Feasible,
            VerificationStatus::Infeasible => VerificationOutcome::Infeasible,
            VerificationStatus::Unknown => VerificationOutcome::Unknown,
        };
        Self { outcome, nodes_explored: r.nodes_explored, witness: r.witness.clone() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub cluster_centers: Vec<[f64; 2]>,
    pub forced_separations: usize,
    pub infrastructure: InfrastructureDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataRecord {
    pub schema_version: u32,
    pub generator: GeneratorInfo,
    pub seed: u64,
    pub status: Status,
    pub config: GeneratorConfig,
    pub summary: InstanceSummary,
    pub screening: ScreeningReport,
    pub verification: VerificationSummary,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Error)]
pub enum MetadataError {
    #[error("malformed metadata: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}")]
    Version(u32),
    #[error("inconsistent metadata: {0}")]
    Inconsistent(String),
}

impl MetadataRecord {
    pub fn new(
        config: &GeneratorConfig,
        seed: u64,
        instance: &Instance,
        status: Status,
        screening: ScreeningReport,
        verification: Option<&VerificationResult>,
        diagnostics: Diagnostics,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            generator: GeneratorInfo::default(),
            seed,
            status,
            config: config.clone(),
            summary: InstanceSummary {
                customers: instance.customer_count(),
                stations: instance.station_count(),
                battery: instance.vehicle.battery,
                range: instance.range(),
                total_demand: instance.total_demand(),
            },
            screening,
            verification: verification.map_or_else(VerificationSummary::skipped, VerificationSummary::from),
            diagnostics,
        }
    }

    /// Checks that the status agrees with the embedded reports.
    pub fn validate(&self) -> Result<(), MetadataError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(MetadataError::Version(self.schema_version));
        }
        let bad = |m: &str| Err(MetadataError::Inconsistent(m.to_string()));
        if self.screening.passed != self.screening.violations.is_empty() {
            return bad("screening.passed disagrees with its violation list");
        }
        let v = &self.verification;
        if (v.outcome == VerificationOutcome::Feasible) != v.witness.is_some() {
            return bad("a witness is present exactly when verification is feasible");
        }
        if !self.screening.passed && !v.is_skipped() {
            return bad("screening-rejected instances are never verified");
        }
        let expected = match (self.screening.passed, v.outcome) {
            (false, _) => Status::Infeasible,
            (true, VerificationOutcome::Skipped | VerificationOutcome::Feasible) => Status::Feasible,
            (true, VerificationOutcome::Infeasible) => Status::Infeasible,
            (true, VerificationOutcome::Unknown) => Status::Unverified,
        };
        if self.status != expected {
            return bad(&format!("status {} but reports imply {}", self.status.label(), expected.label()));
        }
        if self.summary.customers > self.config.verification.max_customers && !v.is_skipped() {
            return bad("instances above the verification size limit carry no verification verdict");
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metadata serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, MetadataError> {
        let record: MetadataRecord = serde_json::from_str(text)?;
        record.validate()?;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::generate_one;
    use crate::screening::{Condition, Violation};

    #[test]
    fn roundtrip_and_validation() {
        let cfg = GeneratorConfig::default();
        let o = generate_one(&cfg, 3).unwrap();
        let json = o.metadata.to_json();
        let back = MetadataRecord::from_json(&json).unwrap();
        assert_eq!(back, o.metadata);
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn inconsistent_status_rejected() {
        let cfg = GeneratorConfig::default();
        let mut m = generate_one(&cfg, 3).unwrap().metadata;
        m.screening.passed = false;
        m.screening.violations =
            vec![Violation { condition: Condition::DepotReturn, customer: 1, measured: Some(2.5), threshold: 2.0 }];
        m.verification = VerificationSummary::skipped();
        m.status = Status::Feasible;
        assert!(matches!(MetadataRecord::from_json(&m.to_json()), Err(MetadataError::Inconsistent(_))));
        m.status = Status::Infeasible;
        assert!(MetadataRecord::from_json(&m.to_json()).is_ok());
        m.schema_version = 9;
        assert!(matches!(MetadataRecord::from_json(&m.to_json()), Err(MetadataError::Version(9))));
        assert!(matches!(MetadataRecord::from_json("{"), Err(MetadataError::Json(_))));
    }

    #[test]
    fn directories() {
        assert_eq!(Status::Feasible.directory(), "feasible");
        assert_eq!(Status::Unverified.directory(), "infeasible");
    }
}
