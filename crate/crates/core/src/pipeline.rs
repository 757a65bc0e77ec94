//! Generate, screen, verify, and account.
//!
//! Per-instance draw order from a fresh ChaCha8 stream seeded with the
//! attempt seed:
//!
//! 1. depot (only in random mode: x then y)
//! 2. cluster centres (x then y each), then customer coordinates
//! 3. midpoint perturbations (x then y per candidate pair, `i < j` order)
//! 4. top-up station draws
//! 5. demands, then service times
//! 6. window starts (only when randomized)
//!
//! Battery capacity and depot-ray stations are deterministic functions of
//! the geometry. All instance floats are rounded to 12 significant digits
//! before screening, so a written instance reproduces the same verdicts.

use crate::attributes::{assign_time_windows, battery_capacity, sample_demands, sample_service_times, sample_time_windows};
use crate::config::{ConfigError, GeneratorConfig};
use crate::io::quantize_instance;
use crate::metadata::{Diagnostics, MetadataRecord, Status};
use crate::model::{Customer, Instance, Node, VehicleConfig};
use crate::rng::{instance_rng, stream_seed};
use crate::screening::{screen, Condition};
use crate::spatial::{generate_customers, place_depot};
use crate::stations::build_infrastructure;
use crate::verify::{verify, VerificationResult, VerificationStatus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

/// Attempts allowed per requested acceptance before a batch gives up.
pub const ATTEMPT_CAP_FACTOR: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Rejection {
    Screening { conditions: Vec<Condition> },
    Infeasible,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub instance: Instance,
    pub metadata: MetadataRecord,
    pub rejection: Option<Rejection>,
    /// Wall-clock seconds spent on this attempt.
    pub elapsed_secs: f64,
}

impl Outcome {
    pub fn accepted(&self) -> bool {
        self.rejection.is_none()
    }
}

/// Builds the instance for `seed` without screening it.
pub fn sample_instance(config: &GeneratorConfig, seed: u64) -> Result<(Instance, Diagnostics), ConfigError> {
    config.validate()?;
    let mut rng = instance_rng(seed);
    let depot = place_depot(config.spatial.depot, &mut rng)?;
    let layout = generate_customers(&config.spatial, &mut rng);
    let v = &config.vehicle;
    let battery = battery_capacity(&layout.points, v.consumption_rate, &config.energy);
    let range = battery / v.consumption_rate;
    let infra = build_infrastructure(depot, &layout.points, &config.stations, range, &mut rng);
    let n = layout.points.len();
    let demands = sample_demands(n, v.capacity, &mut rng);
    let services = sample_service_times(n, config.service.min, config.service.max, &mut rng);
    let t = &config.temporal;
    let windows = if t.randomized_window_starts {
        sample_time_windows(n, t.horizon, t.phi, &mut rng)
    } else {
        assign_time_windows(n, t.horizon, t.phi)
    };
    let customers = (0..n)
        .map(|i| Customer::new(i + 1, layout.points[i], demands[i], services[i], windows[i]))
        .collect();
    let mut instance = Instance {
        depot: Node::depot(depot),
        customers,
        stations: infra.stations,
        vehicle: VehicleConfig {
            capacity: v.capacity,
            battery,
            consumption_rate: v.consumption_rate,
            charge_rate: v.charge_rate,
        },
        horizon: t.horizon,
    };
    quantize_instance(&mut instance);
    let diagnostics = Diagnostics {
        cluster_centers: layout.cluster_centers.iter().map(|p| [p.x, p.y]).collect(),
        forced_separations: layout.forced_acceptances,
        infrastructure: infra.diagnostics,
    };
    Ok((instance, diagnostics))
}

/// One attempt: sample, screen, and (for small instances) verify.
pub fn generate_one(config: &GeneratorConfig, seed: u64) -> Result<Outcome, ConfigError> {
    let started = Instant::now();
    let (instance, diagnostics) = sample_instance(config, seed)?;
    let report = screen(&instance);
    let mut verification: Option<VerificationResult> = None;
    let rejection = if !report.passed {
        Some(Rejection::Screening { conditions: report.conditions() })
    } else if config.verification.enabled && instance.customer_count() <= config.verification.max_customers {
        let result = verify(&instance, &config.verification.limits);
        let status = result.status;
        verification = Some(result);
        match status {
            VerificationStatus::Feasible => None,
            VerificationStatus::Infeasible => Some(Rejection::Infeasible),
            VerificationStatus::Unknown => Some(Rejection::Unknown),
        }
    } else {
        None
    };
    let status = match &rejection {
        None => Status::Feasible,
        Some(Rejection::Unknown) => Status::Unverified,
        Some(_) => Status::Infeasible,
    };
    let metadata = MetadataRecord::new(config, seed, &instance, status, report, verification.as_ref(), diagnostics);
    Ok(Outcome { instance, metadata, rejection, elapsed_secs: started.elapsed().as_secs_f64() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptTiming {
    pub customers: usize,
    pub seed: u64,
    pub secs: f64,
    pub accepted: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("acceptance rate is undefined with zero attempts")]
    NoAttempts,
    #[error("no timing samples")]
    NoTimings,
    #[error("no accepted instances at size {0}")]
    NoAccepted(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub attempted: u64,
    pub accepted: u64,
    pub rejected_stage1: u64,
    pub rejected_stage2: u64,
    pub unknown_stage2: u64,
    /// Attempts violating each condition (an attempt may count under several).
    pub violations: BTreeMap<Condition, u64>,
    pub timings: Vec<AttemptTiming>,
    /// The attempt cap was reached before the target was met.
    pub underflow: bool,
}

impl BatchStats {
    pub fn record(&mut self, outcome: &Outcome) {
        self.attempted += 1;
        match &outcome.rejection {
            None => self.accepted += 1,
            Some(Rejection::Screening { .. }) => self.rejected_stage1 += 1,
            Some(Rejection::Infeasible) => self.rejected_stage2 += 1,
            Some(Rejection::Unknown) => self.unknown_stage2 += 1,
        }
        for c in outcome.metadata.screening.conditions() {
            *self.violations.entry(c).or_default() += 1;
        }
        self.timings.push(AttemptTiming {
            customers: outcome.instance.customer_count(),
            seed: outcome.metadata.seed,
            secs: outcome.elapsed_secs,
            accepted: outcome.accepted(),
        });
    }

    pub fn acceptance_rate(&self) -> Result<f64, StatsError> {
        acceptance_rate(self)
    }

    pub fn is_conserved(&self) -> bool {
        self.accepted + self.rejected_stage1 + self.rejected_stage2 + self.unknown_stage2 == self.attempted
    }

    /// Counter-wise sum; order-insensitive apart from the timing list.
    pub fn merge(&mut self, other: &BatchStats) {
        self.attempted += other.attempted;
        self.accepted += other.accepted;
        self.rejected_stage1 += other.rejected_stage1;
        self.rejected_stage2 += other.rejected_stage2;
        self.unknown_stage2 += other.unknown_stage2;
        for (c, k) in &other.violations {
            *self.violations.entry(*c).or_default() += k;
        }
        self.timings.extend(other.timings.iter().cloned());
        self.underflow |= other.underflow;
    }
}

pub fn acceptance_rate(stats: &BatchStats) -> Result<f64, StatsError> {
    if stats.attempted == 0 {
        return Err(StatsError::NoAttempts);
    }
    Ok(stats.accepted as f64 / stats.attempted as f64)
}

/// Mean wall-clock seconds per accepted instance, grouped by customer count:
/// all attempt time at a size (rejected attempts included) divided by the
/// number accepted at that size.
pub fn timing_profile(stats: &BatchStats) -> Result<BTreeMap<usize, f64>, StatsError> {
    if stats.timings.is_empty() {
        return Err(StatsError::NoTimings);
    }
    let mut sums: BTreeMap<usize, (f64, u64)> = BTreeMap::new();
    for t in &stats.timings {
        let e = sums.entry(t.customers).or_default();
        e.0 += t.secs;
        e.1 += u64::from(t.accepted);
    }
    sums.into_iter()
        .map(|(n, (secs, acc))| if acc == 0 { Err(StatsError::NoAccepted(n)) } else { Ok((n, secs / acc as f64)) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    /// Run attempts on the rayon pool; results are still consumed in seed order.
    pub parallel: bool,
    pub attempt_cap_factor: u64,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self { parallel: true, attempt_cap_factor: ATTEMPT_CAP_FACTOR }
    }
}

#[derive(Debug)]
pub struct Batch {
    pub accepted: Vec<Outcome>,
    pub stats: BatchStats,
}

/// Runs attempts with seeds `base_seed + k` until `target` acceptances.
/// `on_attempt` sees every counted attempt in seed order; returning an error
/// stops the batch. The counted set never depends on parallelism.
pub fn generate_batch_with<E, F>(
    config: &GeneratorConfig,
    target: u64,
    base_seed: u64,
    options: BatchOptions,
    mut on_attempt: F,
) -> Result<Result<Batch, E>, ConfigError>
where
    F: FnMut(&Outcome) -> Result<(), E>,
{
    config.validate()?;
    if target == 0 {
        return Err(ConfigError::single("count", "must be at least 1"));
    }
    let cap = target.saturating_mul(options.attempt_cap_factor.max(1));
    let wave = if options.parallel { (rayon::current_num_threads() as u64 * 4).max(4) } else { 1 };
    let mut stats = BatchStats::default();
    let mut accepted = Vec::new();
    let mut next: u64 = 0;
    while stats.accepted < target && next < cap {
        let end = (next + wave).min(cap);
        let run = |k: u64| generate_one(config, stream_seed(base_seed, k));
        let results: Vec<Result<Outcome, ConfigError>> = if options.parallel {
            (next..end).into_par_iter().map(run).collect()
        } else {
            (next..end).map(run).collect()
        };
        next = end;
        for outcome in results {
            let outcome = outcome?;
            stats.record(&outcome);
            if let Err(e) = on_attempt(&outcome) {
                return Ok(Err(e));
            }
            if outcome.accepted() {
                accepted.push(outcome);
                if stats.accepted == target {
                    break;
                }
            }
        }
    }
    stats.underflow = stats.accepted < target;
    Ok(Ok(Batch { accepted, stats }))
}

pub fn generate_batch(config: &GeneratorConfig, target: u64, base_seed: u64) -> Result<Batch, ConfigError> {
    generate_batch_with(config, target, base_seed, BatchOptions::default(), |_| Ok::<(), std::convert::Infallible>(()))
        .map(|r| match r {
            Ok(b) => b,
        })
}

/// Fixed number of attempts (seeds `base_seed..base_seed + attempts`), for
/// acceptance-rate sweeps. Only counters are kept, not instances.
pub fn sample_acceptance(config: &GeneratorConfig, attempts: u64, base_seed: u64, parallel: bool) -> Result<BatchStats, ConfigError> {
    config.validate()?;
    let one = |k: u64| -> Result<BatchStats, ConfigError> {
        let mut s = BatchStats::default();
        s.record(&generate_one(config, stream_seed(base_seed, k))?);
        Ok(s)
    };
    let parts: Vec<BatchStats> = if parallel {
        (0..attempts).into_par_iter().map(one).collect::<Result<_, _>>()?
    } else {
        (0..attempts).map(one).collect::<Result<_, _>>()?
    };
    let mut total = BatchStats::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

/// `20C4S_RC_tight_seed00042`.
pub fn instance_name(config: &GeneratorConfig, instance: &Instance, seed: u64) -> String {
    format!(
        "{}C{}S_{}_{}_seed{:05}",
        instance.customer_count(),
        instance.station_count(),
        config.spatial.family.label(),
        config.regime_label(),
        seed
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Regime;
    use crate::spatial::SpatialFamily;

    #[test]
    fn rate_examples() {
        let mut s = BatchStats { attempted: 100, accepted: 37, ..Default::default() };
        assert!((acceptance_rate(&s).unwrap() - 0.37).abs() < 1e-15);
        s.attempted = 0;
        assert_eq!(acceptance_rate(&s), Err(StatsError::NoAttempts));
        assert_eq!(timing_profile(&s), Err(StatsError::NoTimings));
    }

    #[test]
    fn deterministic_outcome() {
        let cfg = GeneratorConfig::cell(SpatialFamily::RC, Regime::Medium, 5, 2);
        let a = generate_one(&cfg, 11).unwrap();
        let b = generate_one(&cfg, 11).unwrap();
        assert_eq!(a.instance, b.instance);
        assert_eq!(a.metadata, b.metadata);
        assert_eq!(a.instance.station_count(), 2);
    }

    #[test]
    fn large_sizes_skip_stage_two() {
        let cfg = GeneratorConfig::cell(SpatialFamily::R, Regime::Wide, 20, 4);
        for seed in 0..20 {
            let o = generate_one(&cfg, seed).unwrap();
            assert!(o.metadata.verification.is_skipped());
        }
    }

    #[test]
    fn batch_is_conserved_and_parallel_invariant() {
        let cfg = GeneratorConfig::cell(SpatialFamily::C, Regime::Tight, 10, 3);
        let par = generate_batch(&cfg, 3, 100).unwrap();
        let seq = generate_batch_with(&cfg, 3, 100, BatchOptions { parallel: false, ..Default::default() }, |_| {
            Ok::<(), ()>(())
        })
        .unwrap()
        .unwrap();
        assert!(par.stats.is_conserved());
        assert_eq!(par.stats.attempted, seq.stats.attempted);
        let names = |b: &Batch| b.accepted.iter().map(|o| o.metadata.seed).collect::<Vec<_>>();
        assert_eq!(names(&par), names(&seq));
    }

    #[test]
    fn naming() {
        let cfg = GeneratorConfig::cell(SpatialFamily::RC, Regime::Tight, 20, 4);
        let o = generate_one(&cfg, 42).unwrap();
        assert_eq!(instance_name(&cfg, &o.instance, 42), "20C4S_RC_tight_seed00042");
    }
}
