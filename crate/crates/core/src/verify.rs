//! Exact feasibility search for small instances.
//!
//! Depth-first branch-and-bound that builds routes one at a time. Each route
//! leaves the depot at time 0 with a full battery and must contain the
//! lowest-indexed customer still unserved when it opens, which removes route
//! permutation symmetry. Stations may be visited up to a configurable number
//! of times per route. Failed states are memoised (with dominance) only after
//! their subtree has been exhausted, so a budget abort never poisons the memo.

use crate::config::FieldIssue;
use crate::model::{DistanceMatrix, Instance, EPS};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::time::Instant;

/// Largest customer count the bitmask search supports.
pub const MAX_SEARCH_CUSTOMERS: usize = 63;

/// Labels kept per memo key; further failures are simply not recorded.
const LABELS_PER_KEY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FleetMode {
    /// Up to `max_vehicles` routes operating in parallel.
    #[default]
    Fleet,
    /// A single route must serve everyone.
    Single,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchLimits {
    pub time_budget_secs: f64,
    pub node_budget: u64,
    pub max_station_visits: usize,
    /// `None` selects `min(N, ceil(total demand / Q) + 1)`.
    pub max_vehicles: Option<usize>,
    pub fleet: FleetMode,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            time_budget_secs: 10.0,
            node_budget: 500_000_000,
            max_station_visits: 2,
            max_vehicles: None,
            fleet: FleetMode::Fleet,
        }
    }
}

impl SearchLimits {
    pub(crate) fn collect_issues(&self, issues: &mut Vec<FieldIssue>) {
        if !(self.time_budget_secs > 0.0) || self.time_budget_secs.is_nan() {
            issues.push(FieldIssue::new("verification.limits.time_budget_secs", "must be positive"));
        }
        if self.node_budget == 0 {
            issues.push(FieldIssue::new("verification.limits.node_budget", "must be positive"));
        }
        if self.max_station_visits == 0 {
            issues.push(FieldIssue::new("verification.limits.max_station_visits", "must be positive"));
        }
        if self.max_vehicles == Some(0) {
            issues.push(FieldIssue::new("verification.limits.max_vehicles", "must be positive"));
        }
    }

    pub fn validate(&self) -> Result<(), crate::ConfigError> {
        let mut issues = Vec::new();
        self.collect_issues(&mut issues);
        if issues.is_empty() {
            Ok(())
        } else {
            Err(crate::ConfigError { issues })
        }
    }

    /// Route limit for `instance` under these limits.
    pub fn vehicle_limit(&self, instance: &Instance) -> usize {
        match self.fleet {
            FleetMode::Single => 1,
            FleetMode::Fleet => self.max_vehicles.unwrap_or_else(|| default_vehicle_limit(instance)),
        }
    }
}

/// `min(N, ceil(total demand / Q) + 1)`, at least 1.
pub fn default_vehicle_limit(instance: &Instance) -> usize {
    let n = instance.customer_count();
    let needed = (instance.total_demand() / instance.vehicle.capacity - 1e-9).ceil().max(0.0) as usize;
    (needed + 1).min(n).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationStatus {
    Feasible,
    Infeasible,
    Unknown,
}

impl VerificationStatus {
    pub fn label(self) -> &'static str {
        match self {
            VerificationStatus::Feasible => "feasible",
            VerificationStatus::Infeasible => "infeasible",
            VerificationStatus::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub status: VerificationStatus,
    /// Depot-anchored routes, present exactly when feasible.
    pub witness: Option<Vec<Vec<usize>>>,
    pub nodes_explored: u64,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Found,
    Failed,
    Aborted,
}

#[derive(Debug, Clone)]
struct Label {
    time: f64,
    battery: f64,
    load: f64,
    visits: Box<[u8]>,
}

impl Label {
    /// A failed label covers every state that is no better in any resource.
    fn covers(&self, time: f64, battery: f64, load: f64, visits: &[u8]) -> bool {
        self.time <= time
            && self.battery >= battery
            && self.load <= load
            && self.visits.iter().zip(visits).all(|(a, b)| a <= b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct RouteKey {
    route: u16,
    mask: u64,
    node: u16,
    required: u16,
}

struct Search<'a> {
    inst: &'a Instance,
    dist: DistanceMatrix,
    n: usize,
    vehicles: usize,
    max_visits: u8,
    by_deadline: Vec<usize>,
    full: u64,
    nodes: u64,
    node_budget: u64,
    deadline: f64,
    started: Instant,
    /// Smallest route index at which opening a route on this mask failed.
    boundary: HashMap<u64, usize>,
    memo: HashMap<RouteKey, Vec<Label>>,
    routes: Vec<Vec<usize>>,
    visits: Vec<u8>,
}

#[derive(Debug, Clone, Copy)]
struct State {
    route: usize,
    mask: u64,
    node: usize,
    time: f64,
    battery: f64,
    load: f64,
    required: usize,
}

impl<'a> Search<'a> {
    fn bit(&self, customer: usize) -> u64 {
        1u64 << (customer - 1)
    }

    fn remaining_demand(&self, mask: u64) -> f64 {
        (1..=self.n)
            .filter(|&j| mask & self.bit(j) == 0)
            .map(|j| self.inst.customer(j).demand)
            .sum()
    }

    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.node_budget {
            return false;
        }
        self.nodes % 1024 != 0 || self.started.elapsed().as_secs_f64() <= self.deadline
    }

    fn open_route(&mut self, mask: u64, route: usize) -> Outcome {
        if mask == self.full {
            return Outcome::Found;
        }
        if route >= self.vehicles || self.boundary.get(&mask).is_some_and(|&k| route >= k) {
            return Outcome::Failed;
        }
        let q = self.inst.vehicle.capacity;
        if self.remaining_demand(mask) > (self.vehicles - route) as f64 * q + EPS {
            return Outcome::Failed;
        }
        let required = (1..=self.n).find(|&j| mask & self.bit(j) == 0).expect("mask not full");
        self.routes.push(vec![0]);
        self.visits.iter_mut().for_each(|v| *v = 0);
        let state = State {
            route,
            mask,
            node: 0,
            time: 0.0,
            battery: self.inst.vehicle.battery,
            load: 0.0,
            required,
        };
        let out = self.extend(state);
        if out != Outcome::Found {
            self.routes.pop();
        }
        if out == Outcome::Failed {
            let k = self.boundary.entry(mask).or_insert(route);
            *k = (*k).min(route);
        }
        out
    }

    fn memo_key(&self, s: &State) -> RouteKey {
        RouteKey { route: s.route as u16, mask: s.mask, node: s.node as u16, required: s.required as u16 }
    }

    fn pruned(&self, s: &State) -> bool {
        let h = self.inst.horizon;
        let d = |a: usize, b: usize| self.dist.get(a, b);
        if s.time + d(s.node, 0) > h + EPS {
            return true;
        }
        let req_bit = self.bit(s.required);
        if s.mask & req_bit == 0 && s.time + d(s.node, s.required) > self.inst.customer(s.required).window.latest + EPS {
            return true;
        }
        let q = self.inst.vehicle.capacity;
        let later = (self.vehicles - s.route - 1) as f64;
        if self.remaining_demand(s.mask) > (q - s.load) + later * q + EPS {
            return true;
        }
        if s.route + 1 == self.vehicles {
            // last route: every unserved customer must still be directly reachable
            for j in 1..=self.n {
                if s.mask & self.bit(j) == 0 && s.time + d(s.node, j) > self.inst.customer(j).window.latest + EPS {
                    return true;
                }
            }
        }
        false
    }

    fn extend(&mut self, s: State) -> Outcome {
        if !self.tick() {
            return Outcome::Aborted;
        }
        if self.pruned(&s) {
            return Outcome::Failed;
        }
        let key = self.memo_key(&s);
        if let Some(labels) = self.memo.get(&key) {
            if labels.iter().any(|l| l.covers(s.time, s.battery, s.load, &self.visits)) {
                return Outcome::Failed;
            }
        }
        let out = self.branch(s);
        if out == Outcome::Failed {
            let label = Label { time: s.time, battery: s.battery, load: s.load, visits: self.visits.clone().into() };
            let labels = self.memo.entry(key).or_default();
            if labels.len() < LABELS_PER_KEY {
                labels.push(label);
            }
        }
        out
    }

    fn branch(&mut self, s: State) -> Outcome {
        let v = self.inst.vehicle;
        let h = self.inst.horizon;

        for idx in 0..self.by_deadline.len() {
            let j = self.by_deadline[idx];
            if s.mask & self.bit(j) != 0 {
                continue;
            }
            let c = self.inst.customer(j);
            let d = self.dist.get(s.node, j);
            let energy = v.energy_for(d);
            if energy > s.battery + EPS {
                continue;
            }
            let arrival = s.time + d;
            let start = arrival.max(c.window.earliest);
            if arrival > h + EPS || start > c.window.latest + EPS || s.load + c.demand > v.capacity + EPS {
                continue;
            }
            let next = State {
                mask: s.mask | self.bit(j),
                node: j,
                time: start + c.service,
                battery: (s.battery - energy).max(0.0),
                load: s.load + c.demand,
                ..s
            };
            match self.step(j, next) {
                Outcome::Failed => {}
                other => return other,
            }
        }

        if s.node != 0 && s.mask & self.bit(s.required) != 0 {
            let d = self.dist.get(s.node, 0);
            if v.energy_for(d) <= s.battery + EPS && s.time + d <= h + EPS {
                self.current().push(0);
                let saved = std::mem::take(&mut self.visits);
                self.visits = vec![0; saved.len()];
                let out = self.open_route(s.mask, s.route + 1);
                self.visits = saved;
                if out == Outcome::Found {
                    return out;
                }
                self.current().pop();
                if out == Outcome::Aborted {
                    return out;
                }
            }
        }

        for (i, station) in self.inst.station_ids().enumerate() {
            if station == s.node || self.visits[i] >= self.max_visits {
                continue;
            }
            let d = self.dist.get(s.node, station);
            let energy = v.energy_for(d);
            if energy > s.battery + EPS {
                continue;
            }
            let arrival = s.time + d;
            let departure = arrival + v.recharge_time((s.battery - energy).max(0.0));
            if arrival > h + EPS || departure > h + EPS {
                continue;
            }
            let next = State { node: station, time: departure, battery: v.battery, ..s };
            self.visits[i] += 1;
            let out = self.step(station, next);
            self.visits[i] -= 1;
            match out {
                Outcome::Failed => {}
                other => return other,
            }
        }
        Outcome::Failed
    }

    fn step(&mut self, node: usize, next: State) -> Outcome {
        self.current().push(node);
        let out = self.extend(next);
        if out != Outcome::Found {
            self.current().pop();
        }
        out
    }

    fn current(&mut self) -> &mut Vec<usize> {
        self.routes.last_mut().expect("an open route")
    }
}

/// Decides whether `instance` admits a feasible set of routes.
pub fn verify(instance: &Instance, limits: &SearchLimits) -> VerificationResult {
    let started = Instant::now();
    let n = instance.customer_count();
    let done = |status, witness, nodes| VerificationResult {
        status,
        witness,
        nodes_explored: nodes,
        elapsed_secs: started.elapsed().as_secs_f64(),
    };
    if n == 0 {
        return done(VerificationStatus::Feasible, Some(Vec::new()), 0);
    }
    if n > MAX_SEARCH_CUSTOMERS || instance.station_count() > u16::MAX as usize - n {
        return done(VerificationStatus::Unknown, None, 0);
    }
    // A customer unreachable by its deadline straight from the depot can
    // never be served.
    let dist = DistanceMatrix::new(instance);
    if instance.customers.iter().any(|c| dist.get(0, c.id()) > c.window.latest + EPS) {
        return done(VerificationStatus::Infeasible, None, 0);
    }
    let mut by_deadline: Vec<usize> = (1..=n).collect();
    by_deadline.sort_by(|&a, &b| {
        instance.customer(a).window.latest.total_cmp(&instance.customer(b).window.latest).then(a.cmp(&b))
    });
    let mut search = Search {
        inst: instance,
        dist,
        n,
        vehicles: limits.vehicle_limit(instance).max(1),
        max_visits: limits.max_station_visits.min(u8::MAX as usize) as u8,
        by_deadline,
        full: if n == 64 { u64::MAX } else { (1u64 << n) - 1 },
        nodes: 0,
        node_budget: limits.node_budget,
        deadline: limits.time_budget_secs,
        started,
        boundary: HashMap::new(),
        memo: HashMap::new(),
        routes: Vec::new(),
        visits: vec![0; instance.station_count()],
    };
    let out = search.open_route(0, 0);
    let nodes = search.nodes;
    match out {
        Outcome::Found => done(VerificationStatus::Feasible, Some(search.routes), nodes),
        Outcome::Failed => done(VerificationStatus::Infeasible, None, nodes),
        Outcome::Aborted => done(VerificationStatus::Unknown, None, nodes),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Customer, Node, Point, TimeWindow, VehicleConfig};
    use crate::route::check_route;

    fn single(pos: Point, window: TimeWindow, battery: f64) -> Instance {
        Instance {
            depot: Node::depot(Point::new(0.5, 0.5)),
            customers: vec![Customer::new(1, pos, 0.1, 0.02, window)],
            stations: vec![Node::station(2, Point::new(0.5, 0.6))],
            vehicle: VehicleConfig { capacity: 1.5, battery, consumption_rate: 0.25, charge_rate: 1.0 },
            horizon: 2.0,
        }
    }

    #[test]
    fn reachable_single_customer() {
        let inst = single(Point::new(0.6, 0.5), TimeWindow::new(0.0, 2.0), 0.1);
        let r = verify(&inst, &SearchLimits::default());
        assert_eq!(r.status, VerificationStatus::Feasible);
        for route in r.witness.unwrap() {
            check_route(&inst, &route).unwrap();
        }
    }

    #[test]
    fn unreachable_customer() {
        // range 0.2, customer 0.45 away with no helpful station
        let inst = single(Point::new(0.95, 0.5), TimeWindow::new(0.0, 2.0), 0.05);
        assert_eq!(verify(&inst, &SearchLimits::default()).status, VerificationStatus::Infeasible);
    }

    #[test]
    fn late_window_infeasible() {
        let inst = single(Point::new(0.6, 0.5), TimeWindow::new(1.95, 2.0), 0.1);
        assert_eq!(verify(&inst, &SearchLimits::default()).status, VerificationStatus::Infeasible);
    }

    #[test]
    fn station_needed() {
        let inst = Instance {
            depot: Node::depot(Point::new(0.1, 0.5)),
            customers: vec![Customer::new(1, Point::new(0.7, 0.5), 0.2, 0.02, TimeWindow::new(0.0, 2.0))],
            stations: vec![Node::station(2, Point::new(0.5, 0.5))],
            vehicle: VehicleConfig { capacity: 1.5, battery: 0.1125, consumption_rate: 0.25, charge_rate: 1.0 },
            horizon: 2.0,
        };
        let r = verify(&inst, &SearchLimits::default());
        assert_eq!(r.witness, Some(vec![vec![0, 2, 1, 2, 0]]));
        let mut one = SearchLimits::default();
        one.max_station_visits = 1;
        assert_eq!(verify(&inst, &one).status, VerificationStatus::Infeasible);
    }

    #[test]
    fn node_budget_gives_unknown() {
        let inst = single(Point::new(0.6, 0.5), TimeWindow::new(0.0, 2.0), 0.1);
        let limits = SearchLimits { node_budget: 1, ..SearchLimits::default() };
        assert_eq!(verify(&inst, &limits).status, VerificationStatus::Unknown);
    }

    #[test]
    fn vehicle_limit() {
        let mut inst = single(Point::new(0.6, 0.5), TimeWindow::new(0.0, 2.0), 0.1);
        assert_eq!(default_vehicle_limit(&inst), 1);
        inst.customers = (1..=4)
            .map(|i| Customer::new(i, Point::new(0.6, 0.5), 0.75, 0.0, TimeWindow::new(0.0, 2.0)))
            .collect();
        inst.stations = vec![Node::station(5, Point::new(0.5, 0.6))];
        // total 3.0 = 2Q exactly -> 2 + 1
        assert_eq!(default_vehicle_limit(&inst), 3);
        let single = SearchLimits { fleet: FleetMode::Single, ..SearchLimits::default() };
        assert_eq!(single.vehicle_limit(&inst), 1);
        assert_eq!(verify(&inst, &single).status, VerificationStatus::Infeasible);
        assert_eq!(verify(&inst, &SearchLimits::default()).status, VerificationStatus::Feasible);
    }
}
