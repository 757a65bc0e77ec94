use crate::api::{router, AppState};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use evgen_core::bench::{run_bench, BenchGrid};
use evgen_core::config::{standard_station_count, STANDARD_SIZES};
use evgen_core::io::parse_instance_text;
use evgen_core::pipeline::{generate_batch_with, BatchOptions};
use evgen_core::screening::screen;
use evgen_core::solver::{evaluate_solution, solve, SolverParams};
use evgen_core::spatial::SpatialFamily;
use evgen_core::store::{persist_outcome, StoreError};
use evgen_core::{verify, GeneratorConfig, Regime, SearchLimits};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

#[derive(Debug, Parser)]
#[command(name = "evgen", version, about = "Generate, screen, verify and solve EVRPTW benchmark instances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a batch of accepted instances and store them on disk.
    Generate(GenerateArgs),
    /// Sweep acceptance rates over a (family x regime x size) grid.
    Bench(BenchArgs),
    /// Screen an instance file and verify it exactly when small enough.
    Verify(VerifyArgs),
    /// Run the baseline solver on an instance file.
    Solve(SolveArgs),
    /// Serve the HTTP API and the studio bundle.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 10)]
    pub customers: usize,
    /// Defaults to the standard pairing (5C2S, 10C3S, 20C4S, ...).
    #[arg(long)]
    pub stations: Option<usize>,
    #[arg(long, default_value = "R")]
    pub family: SpatialFamily,
    #[arg(long, default_value = "medium")]
    pub regime: Regime,
    /// Number of accepted instances to produce.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "data")]
    pub out: PathBuf,
    /// Cluster spread.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Clustered share for the RC family.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Vehicle load capacity.
    #[arg(long)]
    pub capacity: Option<f64>,
    /// Energy consumed per unit distance.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Energy recharged per unit time.
    #[arg(long)]
    pub charge_rate: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Also store rejected attempts under `infeasible/`.
    #[arg(long)]
    pub persist_rejects: bool,
    /// Base configuration as JSON; the flags above override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run attempts one at a time instead of on the thread pool.
    #[arg(long)]
    pub sequential: bool,
}

impl GenerateArgs {
    pub fn to_config(&self) -> Result<GeneratorConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => GeneratorConfig::default(),
        };
        cfg.spatial.customers = self.customers;
        cfg.spatial.family = self.family;
        cfg.stations.target_count = self.stations.unwrap_or_else(|| standard_station_count(self.customers));
        cfg.temporal.phi = self.regime.phi();
        if let Some(v) = self.sigma {
            cfg.spatial.sigma = v;
        }
        if let Some(v) = self.rho {
            cfg.spatial.rho = v;
        }
        if let Some(v) = self.capacity {
            cfg.vehicle.capacity = v;
        }
        if let Some(v) = self.rate {
            cfg.vehicle.consumption_rate = v;
        }
        if let Some(v) = self.charge_rate {
            cfg.vehicle.charge_rate = v;
        }
        if let Some(v) = self.horizon {
            cfg.temporal.horizon = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated families.
    #[arg(long, value_delimiter = ',', default_values = ["R", "C", "RC"])]
    pub families: Vec<SpatialFamily>,
    #[arg(long, value_delimiter = ',', default_values = ["wide", "medium", "tight"])]
    pub regimes: Vec<Regime>,
    /// Comma-separated sizes as `customers` or `customers:stations`; defaults to 5C2S..100C12S.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<String>,
    /// Attempts per cell.
    #[arg(long, default_value_t = 100)]
    pub attempts: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Solve this many accepted instances per cell and report distance and fleet size.
    #[arg(long, num_args = 0..=1, default_missing_value = "10")]
    pub with_solver: Option<usize>,
    /// Solver time budget per instance, seconds.
    #[arg(long, default_value_t = 5.0)]
    pub solver_budget: f64,
    /// Write cells.csv, regimes.csv, utilization.csv and bench.json here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
    /// Base configuration as JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    let (n, k) = match s.split_once(':') {
        Some((n, k)) => (n.trim().parse()?, k.trim().parse()?),
        None => {
            let n: usize = s.trim().parse()?;
            (n, standard_station_count(n))
        }
    };
    if n == 0 {
        bail!("size must be positive");
    }
    Ok((n, k))
}

impl BenchArgs {
    pub fn to_grid(&self) -> Result<BenchGrid> {
        let sizes = if self.sizes.is_empty() {
            STANDARD_SIZES.to_vec()
        } else {
            self.sizes.iter().map(|s| parse_size(s).with_context(|| format!("bad size '{s}'"))).collect::<Result<_>>()?
        };
        let base_config = match &self.config {
            Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
            None => GeneratorConfig::default(),
        };
        let grid = BenchGrid {
            families: self.families.clone(),
            regimes: self.regimes.clone(),
            sizes,
            attempts: self.attempts,
            base_seed: self.seed,
            parallel: !self.sequential,
            solver_samples: self.with_solver.unwrap_or(0),
            solver: SolverParams { time_budget_secs: self.solver_budget, ..Default::default() },
            base_config,
        };
        grid.validate()?;
        Ok(grid)
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub path: PathBuf,
    /// Run exact verification regardless of instance size.
    #[arg(long)]
    pub force: bool,
    /// Customers up to which exact verification runs without --force.
    #[arg(long, default_value_t = 10)]
    pub max_customers: usize,
    #[arg(long, default_value_t = 10.0)]
    pub time_budget: f64,
    #[arg(long, default_value_t = 2)]
    pub max_station_visits: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub path: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    pub time_budget: f64,
    #[arg(long)]
    pub iterations: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print the full solution as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    #[arg(long, env = "EVGEN_DATA_ROOT", default_value = "data")]
    pub data_root: PathBuf,
    /// Directory holding the built studio bundle.
    #[arg(long, env = "EVGEN_STATIC_DIR", default_value = "studio/dist")]
    pub static_dir: PathBuf,
    /// Concurrent batch jobs.
    #[arg(long, default_value_t = 2)]
    pub workers: usize,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Serve(a) => cmd_serve(a),
    }
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.to_config()?;
    let options = BatchOptions { parallel: !a.sequential, ..Default::default() };
    let mut stored = 0usize;
    let batch = generate_batch_with(&cfg, a.count, a.seed, options, |o| {
        if persist_outcome(o, &a.out, a.persist_rejects)?.is_some() {
            stored += 1;
        }
        Ok::<(), StoreError>(())
    })??;
    let s = &batch.stats;
    writeln!(out, "attempted        {}", s.attempted)?;
    writeln!(out, "accepted         {}", s.accepted)?;
    writeln!(out, "rejected stage 1 {}", s.rejected_stage1)?;
    writeln!(out, "rejected stage 2 {}", s.rejected_stage2)?;
    writeln!(out, "unknown stage 2  {}", s.unknown_stage2)?;
    for (c, k) in &s.violations {
        writeln!(out, "  {c:<22} {k}")?;
    }
    writeln!(out, "acceptance rate  {:.4}", s.acceptance_rate().unwrap_or(0.0))?;
    writeln!(out, "files written    {stored} under {}", a.out.display())?;
    if s.underflow {
        writeln!(out, "warning: attempt cap reached with {} of {} accepted", s.accepted, a.count)?;
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let grid = a.to_grid()?;
    let cancel = Arc::new(AtomicBool::new(false));
    let flag = cancel.clone();
    std::thread::spawn(move || {
        if let Ok(rt) = tokio::runtime::Builder::new_current_thread().enable_all().build() {
            if rt.block_on(tokio::signal::ctrl_c()).is_ok() {
                eprintln!("interrupt received; finishing the current cell");
                flag.store(true, Ordering::Relaxed);
            }
        }
    });
    let matrix = run_bench(&grid, Some(&cancel))?;
    write!(out, "{}", matrix.render_table())?;
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("cells.csv"), matrix.cells_csv())?;
        std::fs::write(dir.join("regimes.csv"), matrix.regimes_csv())?;
        std::fs::write(dir.join("utilization.csv"), matrix.utilization_csv())?;
        std::fs::write(dir.join("bench.json"), serde_json::to_string_pretty(&matrix)? + "\n")?;
        writeln!(out, "reports written to {}", dir.display())?;
    }
    Ok(())
}

fn read_instance(path: &Path) -> Result<evgen_core::Instance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance_text(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<()> {
    let inst = read_instance(&a.path)?;
    let report = screen(&inst);
    writeln!(out, "customers {}  stations {}  range {}", inst.customer_count(), inst.station_count(), inst.range())?;
    if report.passed {
        writeln!(out, "stage 1: passed")?;
    } else {
        writeln!(out, "stage 1: failed")?;
        for v in &report.violations {
            writeln!(out, "  {v}")?;
        }
    }
    if !(a.force || inst.customer_count() <= a.max_customers) {
        writeln!(out, "stage 2: skipped ({} customers; use --force)", inst.customer_count())?;
        return Ok(());
    }
    let limits = SearchLimits {
        time_budget_secs: a.time_budget,
        max_station_visits: a.max_station_visits,
        ..Default::default()
    };
    limits.validate()?;
    let r = verify(&inst, &limits);
    writeln!(out, "stage 2: {} ({} nodes, {:.3}s)", r.status.label(), r.nodes_explored, r.elapsed_secs)?;
    if let Some(w) = &r.witness {
        for route in w {
            writeln!(out, "  {}", route.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "))?;
        }
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<()> {
    let inst = read_instance(&a.path)?;
    let mut params = SolverParams { time_budget_secs: a.time_budget, seed: a.seed, ..Default::default() };
    if let Some(i) = a.iterations {
        params.max_iterations = i;
    }
    let solution = solve(&inst, &params)?;
    let metrics = evaluate_solution(&inst, &solution)?;
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&serde_json::json!({ "solution": solution, "metrics": metrics }))?)?;
        return Ok(());
    }
    writeln!(out, "total distance {:.6}", metrics.total_distance)?;
    writeln!(out, "vehicles       {}", metrics.ev_count)?;
    for (route, m) in solution.routes.iter().zip(&metrics.routes) {
        writeln!(
            out,
            "  {}  (distance {:.4}, slack {:.4})",
            route.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
            m.distance,
            m.slack
        )?;
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        std::fs::create_dir_all(&a.data_root)?;
        let state = AppState::new(a.data_root.clone(), a.workers);
        let static_dir = a.static_dir.is_dir().then(|| a.static_dir.clone());
        if static_dir.is_none() {
            log::warn!("static directory {} not found; serving the API only", a.static_dir.display());
        }
        let listener = tokio::net::TcpListener::bind(&a.addr).await.with_context(|| format!("binding {}", a.addr))?;
        log::info!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(state, static_dir))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
