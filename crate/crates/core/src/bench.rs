//! Acceptance-rate sweeps over (family x regime x size) grids, with optional
//! solver runs on accepted instances.
//!
//! Every reported number is rounded to [`REPORT_DECIMALS`] decimals so that
//! exported reports diff cleanly.

use crate::config::{ConfigError, GeneratorConfig, Regime, STANDARD_SIZES};
use crate::pipeline::{generate_one, sample_acceptance, BatchStats};
use crate::rng::stream_seed;
use crate::solver::{evaluate_solution, solve, SolverParams};
use crate::spatial::SpatialFamily;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

pub const REPORT_DECIMALS: i32 = 6;

pub fn fixed(x: f64) -> f64 {
    let scale = 10f64.powi(REPORT_DECIMALS);
    (x * scale).round() / scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchGrid {
    pub families: Vec<SpatialFamily>,
    pub regimes: Vec<Regime>,
    /// `(customers, stations)` pairs.
    pub sizes: Vec<(usize, usize)>,
    pub attempts: u64,
    pub base_seed: u64,
    pub parallel: bool,
    /// Solve up to this many accepted instances per cell (0 disables).
    pub solver_samples: usize,
    pub solver: SolverParams,
    /// Applied to every cell before family, regime and size are set.
    pub base_config: GeneratorConfig,
}

impl Default for BenchGrid {
    fn default() -> Self {
        Self {
            families: SpatialFamily::ALL.to_vec(),
            regimes: Regime::ALL.to_vec(),
            sizes: STANDARD_SIZES.to_vec(),
            attempts: 100,
            base_seed: 0,
            parallel: true,
            solver_samples: 0,
            solver: SolverParams::default(),
            base_config: GeneratorConfig::default(),
        }
    }
}

impl BenchGrid {
    pub fn cell_count(&self) -> usize {
        self.families.len() * self.regimes.len() * self.sizes.len()
    }

    pub fn cell_config(&self, family: SpatialFamily, regime: Regime, customers: usize, stations: usize) -> GeneratorConfig {
        let mut cfg = self.base_config.clone();
        cfg.spatial.family = family;
        cfg.spatial.customers = customers;
        cfg.stations.target_count = stations;
        cfg.temporal.phi = regime.phi();
        cfg
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        if self.families.is_empty() {
            issues.push(crate::FieldIssue::new("families", "must not be empty"));
        }
        if self.regimes.is_empty() {
            issues.push(crate::FieldIssue::new("regimes", "must not be empty"));
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|&(n, _)| n == 0) {
            issues.push(crate::FieldIssue::new("sizes", "must be a non-empty list of positive sizes"));
        }
        if self.attempts == 0 {
            issues.push(crate::FieldIssue::new("attempts", "must be at least 1"));
        }
        if let Err(e) = self.solver.validate() {
            issues.push(crate::FieldIssue::new("solver", e.to_string()));
        }
        if let Err(e) = self.base_config.validate() {
            issues.extend(e.issues);
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { issues })
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub attempted: usize,
    pub solved: usize,
    pub mean_distance: Option<f64>,
    pub mean_ev_count: Option<f64>,
    pub mean_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub family: SpatialFamily,
    pub regime: Regime,
    pub customers: usize,
    pub stations: usize,
    pub attempted: u64,
    pub accepted: u64,
    pub rejected_stage1: u64,
    pub rejected_stage2: u64,
    pub unknown_stage2: u64,
    pub acceptance_rate: f64,
    /// Attempt time divided by acceptances; `None` when nothing was accepted.
    pub secs_per_accepted: Option<f64>,
    pub solver: Option<SolverSummary>,
}

impl BenchCell {
    pub fn is_conserved(&self) -> bool {
        self.accepted + self.rejected_stage1 + self.rejected_stage2 + self.unknown_stage2 == self.attempted
    }
}

/// Acceptance rate of one (family, regime) pair across sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSummary {
    pub family: SpatialFamily,
    pub regime: Regime,
    pub mean: f64,
    /// Population standard deviation across sizes.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchMatrix {
    pub cells: Vec<BenchCell>,
    pub regimes: Vec<RegimeSummary>,
    /// Set when the run was interrupted; `cells` then holds only finished cells.
    pub incomplete: bool,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn run_cell(grid: &BenchGrid, family: SpatialFamily, regime: Regime, n: usize, s: usize) -> Result<BenchCell, ConfigError> {
    let cfg = grid.cell_config(family, regime, n, s);
    let stats: BatchStats = sample_acceptance(&cfg, grid.attempts, grid.base_seed, grid.parallel)?;
    let total_secs: f64 = stats.timings.iter().map(|t| t.secs).sum();
    let solver = (grid.solver_samples > 0).then(|| {
        let seeds: Vec<u64> = (0..grid.attempts)
            .map(|k| stream_seed(grid.base_seed, k))
            .filter(|seed| stats.timings.iter().any(|t| t.seed == *seed && t.accepted))
            .take(grid.solver_samples)
            .collect();
        let run = |seed: &u64| {
            let outcome = generate_one(&cfg, *seed).expect("config validated above");
            let started = Instant::now();
            let result = solve(&outcome.instance, &grid.solver).ok().and_then(|s| evaluate_solution(&outcome.instance, &s).ok());
            (result, started.elapsed().as_secs_f64())
        };
        let results: Vec<_> = if grid.parallel { seeds.par_iter().map(run).collect() } else { seeds.iter().map(run).collect() };
        let solved: Vec<_> = results.iter().filter_map(|(m, secs)| m.as_ref().map(|m| (m, *secs))).collect();
        SolverSummary {
            attempted: results.len(),
            solved: solved.len(),
            mean_distance: mean(solved.iter().map(|(m, _)| m.total_distance)).map(fixed),
            mean_ev_count: mean(solved.iter().map(|(m, _)| m.ev_count as f64)).map(fixed),
            mean_secs: mean(solved.iter().map(|(_, s)| *s)).map(fixed),
        }
    });
    Ok(BenchCell {
        family,
        regime,
        customers: n,
        stations: s,
        attempted: stats.attempted,
        accepted: stats.accepted,
        rejected_stage1: stats.rejected_stage1,
        rejected_stage2: stats.rejected_stage2,
        unknown_stage2: stats.unknown_stage2,
        acceptance_rate: fixed(stats.acceptance_rate().unwrap_or(0.0)),
        secs_per_accepted: (stats.accepted > 0).then(|| fixed(total_secs / stats.accepted as f64)),
        solver,
    })
}

fn summarize(cells: &[BenchCell], grid: &BenchGrid) -> Vec<RegimeSummary> {
    let mut out = Vec::new();
    for &family in &grid.families {
        for &regime in &grid.regimes {
            let rates: Vec<f64> =
                cells.iter().filter(|c| c.family == family && c.regime == regime).map(|c| c.acceptance_rate).collect();
            if let Some(m) = mean(rates.iter().copied()) {
                let var = rates.iter().map(|r| (r - m).powi(2)).sum::<f64>() / rates.len() as f64;
                out.push(RegimeSummary { family, regime, mean: fixed(m), std: fixed(var.sqrt()) });
            }
        }
    }
    out
}

/// Runs the grid cell by cell (family, then regime, then size). Checking
/// `cancel` between cells; a cancelled run returns what finished so far with
/// `incomplete` set.
pub fn run_bench(grid: &BenchGrid, cancel: Option<&AtomicBool>) -> Result<BenchMatrix, ConfigError> {
    grid.validate()?;
    let mut cells = Vec::with_capacity(grid.cell_count());
    let mut incomplete = false;
    'grid: for &family in &grid.families {
        for &regime in &grid.regimes {
            for &(n, s) in &grid.sizes {
                if cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
                    incomplete = true;
                    break 'grid;
                }
                cells.push(run_cell(grid, family, regime, n, s)?);
            }
        }
    }
    Ok(BenchMatrix { regimes: summarize(&cells, grid), cells, incomplete })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.6}"))
}

impl BenchMatrix {
    /// One row per cell.
    pub fn cells_csv(&self) -> String {
        let mut s = String::from(
            "family,regime,customers,stations,attempted,accepted,rejected_stage1,rejected_stage2,unknown_stage2,acceptance_rate,secs_per_accepted,solved,mean_distance,mean_ev_count\n",
        );
        for c in &self.cells {
            let sv = c.solver.as_ref();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{:.6},{},{},{},{}",
                c.family.label(),
                c.regime.label(),
                c.customers,
                c.stations,
                c.attempted,
                c.accepted,
                c.rejected_stage1,
                c.rejected_stage2,
                c.unknown_stage2,
                c.acceptance_rate,
                opt(c.secs_per_accepted),
                sv.map_or_else(String::new, |v| v.solved.to_string()),
                opt(sv.and_then(|v| v.mean_distance)),
                opt(sv.and_then(|v| v.mean_ev_count)),
            );
        }
        s
    }

    /// Mean and standard deviation of the acceptance rate per regime.
    pub fn regimes_csv(&self) -> String {
        let mut s = String::from("family,regime,mean,std\n");
        for r in &self.regimes {
            let _ = writeln!(s, "{},{},{:.6},{:.6}", r.family.label(), r.regime.label(), r.mean, r.std);
        }
        s
    }

    /// Utilization rows: size, family, regime, mean distance, mean ev count.
    pub fn utilization_csv(&self) -> String {
        let mut s = String::from("customers,family,regime,mean_distance,mean_ev_count\n");
        for c in &self.cells {
            if let Some(v) = &c.solver {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    c.customers,
                    c.family.label(),
                    c.regime.label(),
                    opt(v.mean_distance),
                    opt(v.mean_ev_count)
                );
            }
        }
        s
    }

    /// Human-readable acceptance matrix: one row per (family, regime),
    /// one column per size, then mean and std.
    pub fn render_table(&self) -> String {
        let mut sizes: Vec<(usize, usize)> = self.cells.iter().map(|c| (c.customers, c.stations)).collect();
        sizes.sort_unstable();
        sizes.dedup();
        let mut s = format!("{:<10}", "cell");
        for (n, k) in &sizes {
            let _ = write!(s, " {:>8}", format!("{n}C{k}S"));
        }
        s.push_str("      mean +- std\n");
        for r in &self.regimes {
            let _ = write!(s, "{:<10}", format!("{}-{}", r.family.label(), r.regime.label()));
            for &(n, _) in &sizes {
                let cell = self.cells.iter().find(|c| c.family == r.family && c.regime == r.regime && c.customers == n);
                let _ = write!(s, " {:>8}", cell.map_or("-".into(), |c| format!("{:.1}", 100.0 * c.acceptance_rate)));
            }
            let _ = writeln!(s, "   {:5.1} +- {:4.1}", 100.0 * r.mean, 100.0 * r.std);
        }
        if self.incomplete {
            s.push_str("(incomplete: run interrupted)\n");
        }
        s
    }
}
