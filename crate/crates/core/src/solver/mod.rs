//! Baseline metaheuristic: greedy construction followed by a tabu search
//! over customer sequences with shaking on stagnation.
//!
//! Search works on the customer order of each route only. Charging stops
//! are re-planned from scratch for every candidate route (see [`plan`]), so
//! station insertion and removal happen implicitly whenever a route changes.
//! Only fully feasible routes are ever accepted.

mod plan;
mod search;

pub use plan::Planner;
pub use search::solve;

use crate::model::Instance;
use crate::route::{simulate_route, RouteTrace, RouteViolation};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Wall-clock budget for the improvement loop.
    pub time_budget_secs: f64,
    pub max_iterations: u64,
    /// Iterations during which a reversed move stays forbidden.
    pub tabu_tenure: u64,
    /// Iterations without a new best before shaking.
    pub stagnation_limit: u64,
    /// Customers displaced per shake.
    pub shake_strength: usize,
    /// Candidate positions per customer come from this many nearest neighbours.
    pub neighbours: usize,
    pub relocate: bool,
    pub exchange: bool,
    pub two_opt_star: bool,
    pub merge: bool,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            time_budget_secs: 5.0,
            max_iterations: 200,
            tabu_tenure: 12,
            stagnation_limit: 25,
            shake_strength: 3,
            neighbours: 10,
            relocate: true,
            exchange: true,
            two_opt_star: true,
            merge: true,
            seed: 0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.time_budget_secs > 0.0 && self.time_budget_secs.is_finite()) {
            return Err(SolverError::Params("time_budget_secs must be positive".into()));
        }
        if self.max_iterations == 0 || self.neighbours == 0 {
            return Err(SolverError::Params("max_iterations and neighbours must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Depot-anchored node sequences, stations included.
    pub routes: Vec<Vec<usize>>,
    pub total_distance: f64,
}

impl Solution {
    pub fn ev_count(&self) -> usize {
        self.routes.iter().filter(|r| r.len() > 2).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteMetrics {
    pub distance: f64,
    pub completion: f64,
    /// Horizon minus completion time.
    pub slack: f64,
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionMetrics {
    pub total_distance: f64,
    pub ev_count: usize,
    pub routes: Vec<RouteMetrics>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver parameters: {0}")]
    Params(String),
    #[error("no feasible insertion for customer {0}")]
    Construction(usize),
    #[error("route {route}: {violation}")]
    InvalidRoute { route: usize, violation: RouteViolation },
    #[error("customer {0} is not served")]
    Missing(usize),
    #[error("customer {0} is served more than once")]
    Repeated(usize),
}

/// Re-simulates every route and checks that each customer is served once.
pub fn evaluate_solution(inst: &Instance, solution: &Solution) -> Result<SolutionMetrics, SolverError> {
    let mut seen = vec![false; inst.customer_count() + 1];
    let mut routes = Vec::with_capacity(solution.routes.len());
    let mut total = 0.0;
    let mut ev_count = 0;
    for (i, route) in solution.routes.iter().enumerate() {
        let trace: RouteTrace =
            simulate_route(inst, route).map_err(|violation| SolverError::InvalidRoute { route: i, violation })?;
        for &n in route {
            if inst.is_customer(n) {
                if seen[n] {
                    return Err(SolverError::Repeated(n));
                }
                seen[n] = true;
            }
        }
        if route.len() > 2 {
            ev_count += 1;
        }
        total += trace.distance;
        routes.push(RouteMetrics {
            distance: trace.distance,
            completion: trace.completion,
            slack: inst.horizon - trace.completion,
            load: trace.load,
        });
    }
    if let Some(c) = (1..=inst.customer_count()).find(|&c| !seen[c]) {
        return Err(SolverError::Missing(c));
    }
    Ok(SolutionMetrics { total_distance: total, ev_count, routes })
}

/// Greedy insertion in order of window opening (ties by id). Each customer
/// goes to the cheapest feasible position; a new route opens when none
/// exists.
pub fn construct_initial(inst: &Instance) -> Result<Solution, SolverError> {
    let planner = Planner::new(inst);
    let routes = search::construct(&planner)?;
    Ok(search::to_solution(&planner, &routes))
}
