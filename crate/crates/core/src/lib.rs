//! Synthetic instance generation for the electric vehicle routing problem
//! with time windows: geometry, charging infrastructure, attributes,
//! two-stage feasibility filtering, file formats and a baseline solver.

pub mod attributes;
pub mod bench;
pub mod config;
pub mod io;
pub mod metadata;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod route;
pub mod screening;
pub mod solver;
pub mod spatial;
pub mod stations;
pub mod store;
pub mod verify;

pub use config::{ConfigError, FieldIssue, GeneratorConfig, Regime};
pub use model::{Customer, Instance, Node, NodeKind, Point, TimeWindow, VehicleConfig, EPS};
pub use verify::{verify, SearchLimits, VerificationResult, VerificationStatus};
