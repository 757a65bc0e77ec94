//! Forward simulation of a single depot-anchored route.
//!
//! The vehicle leaves the depot at time 0 with a full battery. Each arc
//! costs `r * d` energy and `d` time. At a customer the vehicle may wait for
//! the window to open, service must start no later than the window closes,
//! and the delivered load accumulates. At a station the battery is refilled
//! to `B`, dwelling `(B - y) / g`. The route must come back to the depot by
//! the horizon without the battery ever going negative.

use crate::model::{Instance, NodeKind, EPS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub node: usize,
    pub arrival: f64,
    /// Service start (`b_i`); equals arrival at stations and the depot.
    pub start: f64,
    pub departure: f64,
    /// Energy on arrival (`y_i`).
    pub battery_on_arrival: f64,
    pub battery_on_departure: f64,
    /// Cumulative delivered load after this node.
    pub load: f64,
    /// Charging dwell (zero outside stations).
    pub dwell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteTrace {
    pub visits: Vec<Visit>,
    pub distance: f64,
    /// Arrival time back at the depot.
    pub completion: f64,
    pub load: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteSummary {
    pub distance: f64,
    pub completion: f64,
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    #[error("route must start and end at the depot and visit it nowhere else")]
    Structure,
    #[error("unknown node")]
    UnknownNode,
    #[error("customer visited twice")]
    Duplicate,
    #[error("energy: needs {required}, has {available}")]
    Energy { required: f64, available: f64 },
    #[error("time window: service starts at {start}, window closes at {latest}")]
    TimeWindow { start: f64, latest: f64 },
    #[error("capacity: load {load} exceeds {capacity}")]
    Capacity { load: f64, capacity: f64 },
    #[error("horizon: at {time}, horizon is {horizon}")]
    Horizon { time: f64, horizon: f64 },
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("position {position} (node {node}): {kind}")]
pub struct RouteViolation {
    pub position: usize,
    pub node: usize,
    pub kind: ViolationKind,
}

/// Walks `route`, reporting each visit to `on_visit`, and stops at the first
/// violated constraint.
pub fn walk_route<F: FnMut(&Visit)>(
    instance: &Instance,
    route: &[usize],
    on_visit: F,
) -> Result<RouteSummary, RouteViolation> {
    walk(instance, route, false, on_visit)
}

fn walk<F: FnMut(&Visit)>(
    instance: &Instance,
    route: &[usize],
    open_end: bool,
    mut on_visit: F,
) -> Result<RouteSummary, RouteViolation> {
    let fail = |position: usize, node: usize, kind| Err(RouteViolation { position, node, kind });
    let last = if open_end { usize::MAX } else { route.len().saturating_sub(1) };
    let closed_ok = open_end || (route.len() >= 2 && route[route.len() - 1] == 0);
    if route.is_empty() || route[0] != 0 || !closed_ok {
        return fail(0, route.first().copied().unwrap_or(0), ViolationKind::Structure);
    }
    let v = &instance.vehicle;
    let n = instance.customer_count();
    let mut seen = vec![false; n + 1];
    let (mut time, mut battery, mut load, mut distance) = (0.0f64, v.battery, 0.0f64, 0.0f64);
    on_visit(&Visit {
        node: 0,
        arrival: 0.0,
        start: 0.0,
        departure: 0.0,
        battery_on_arrival: v.battery,
        battery_on_departure: v.battery,
        load: 0.0,
        dwell: 0.0,
    });
    for position in 1..route.len() {
        let (prev, node) = (route[position - 1], route[position]);
        let Some(kind) = instance.kind(node) else {
            return fail(position, node, ViolationKind::UnknownNode);
        };
        if kind == NodeKind::Depot && position != last {
            return fail(position, node, ViolationKind::Structure);
        }
        let d = instance.distance(prev, node);
        let required = v.energy_for(d);
        if required > battery + EPS {
            return fail(position, node, ViolationKind::Energy { required, available: battery });
        }
        distance += d;
        battery = (battery - required).max(0.0);
        let arrival = time + d;
        if arrival > instance.horizon + EPS {
            return fail(position, node, ViolationKind::Horizon { time: arrival, horizon: instance.horizon });
        }
        let arrival_battery = battery;
        let mut visit = Visit {
            node,
            arrival,
            start: arrival,
            departure: arrival,
            battery_on_arrival: arrival_battery,
            battery_on_departure: arrival_battery,
            load,
            dwell: 0.0,
        };
        match kind {
            NodeKind::Customer => {
                if std::mem::replace(&mut seen[node], true) {
                    return fail(position, node, ViolationKind::Duplicate);
                }
                let c = instance.customer(node);
                let start = arrival.max(c.window.earliest);
                if start > c.window.latest + EPS {
                    return fail(position, node, ViolationKind::TimeWindow { start, latest: c.window.latest });
                }
                load += c.demand;
                if load > v.capacity + EPS {
                    return fail(position, node, ViolationKind::Capacity { load, capacity: v.capacity });
                }
                time = start + c.service;
                visit.start = start;
                visit.departure = time;
                visit.load = load;
            }
            NodeKind::Station => {
                let dwell = v.recharge_time(battery);
                battery = v.battery;
                time = arrival + dwell;
                if time > instance.horizon + EPS {
                    return fail(position, node, ViolationKind::Horizon { time, horizon: instance.horizon });
                }
                visit.departure = time;
                visit.battery_on_departure = battery;
                visit.dwell = dwell;
            }
            NodeKind::Depot => {
                time = arrival;
            }
        }
        on_visit(&visit);
    }
    Ok(RouteSummary { distance, completion: time, load })
}

pub fn simulate_route(instance: &Instance, route: &[usize]) -> Result<RouteTrace, RouteViolation> {
    let mut visits = Vec::with_capacity(route.len());
    let summary = walk_route(instance, route, |v| visits.push(*v))?;
    Ok(RouteTrace { visits, distance: summary.distance, completion: summary.completion, load: summary.load })
}

/// Checks a route prefix that starts at the depot and has not yet returned.
/// Every violation found here persists in any completion of the prefix.
pub fn check_prefix(instance: &Instance, prefix: &[usize]) -> Result<RouteSummary, RouteViolation> {
    walk(instance, prefix, true, |_| {})
}

/// Feasibility check without building a trace.
pub fn check_route(instance: &Instance, route: &[usize]) -> Result<RouteSummary, RouteViolation> {
    walk_route(instance, route, |_| {})
}
