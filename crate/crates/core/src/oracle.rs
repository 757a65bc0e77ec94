//! Exhaustive reference check for tiny instances.
//!
//! Enumerates every partition of the customers into at most `m` routes and,
//! for each route, every customer order with every interleaving of station
//! visits allowed by the per-route visit limit. A candidate is accepted only
//! when `check_route` accepts it. Prefixes that `check_prefix` already
//! rejects are not extended; nothing else is pruned.

use crate::model::Instance;
use crate::route::{check_prefix, check_route};
use crate::verify::SearchLimits;
use std::collections::HashMap;
use thiserror::Error;

pub const ORACLE_MAX_CUSTOMERS: usize = 6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle supports at most {ORACLE_MAX_CUSTOMERS} customers, got {0}")]
    TooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    Feasible(Vec<Vec<usize>>),
    Infeasible,
}

impl OracleVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, OracleVerdict::Feasible(_))
    }
}

/// Finds some feasible single route serving exactly `block`.
fn route_for_block(instance: &Instance, block: &[usize], max_visits: usize) -> Option<Vec<usize>> {
    fn go(
        instance: &Instance,
        block: &[usize],
        max_visits: usize,
        path: &mut Vec<usize>,
        served: &mut Vec<bool>,
        visits: &mut Vec<usize>,
    ) -> bool {
        if served.iter().all(|s| *s) {
            path.push(0);
            if check_route(instance, path).is_ok() {
                return true;
            }
            path.pop();
        }
        let last = *path.last().expect("path starts at the depot");
        let n = instance.customer_count();
        let candidates: Vec<usize> = block
            .iter()
            .enumerate()
            .filter(|(i, _)| !served[*i])
            .map(|(_, c)| *c)
            .chain(instance.station_ids().filter(|s| *s != last && visits[*s - n - 1] < max_visits))
            .collect();
        for node in candidates {
            path.push(node);
            if check_prefix(instance, path).is_ok() {
                let slot = if node <= n { block.iter().position(|c| *c == node) } else { None };
                match slot {
                    Some(i) => served[i] = true,
                    None => visits[node - n - 1] += 1,
                }
                let found = go(instance, block, max_visits, path, served, visits);
                match slot {
                    Some(i) => served[i] = false,
                    None => visits[node - n - 1] -= 1,
                }
                if found {
                    return true;
                }
            }
            path.pop();
        }
        false
    }

    let mut path = vec![0];
    let mut served = vec![false; block.len()];
    let mut visits = vec![0; instance.station_count()];
    go(instance, block, max_visits, &mut path, &mut served, &mut visits).then_some(path)
}

pub fn bruteforce_oracle(instance: &Instance, limits: &SearchLimits) -> Result<OracleVerdict, OracleError> {
    let n = instance.customer_count();
    if n > ORACLE_MAX_CUSTOMERS {
        return Err(OracleError::TooLarge(n));
    }
    if n == 0 {
        return Ok(OracleVerdict::Feasible(Vec::new()));
    }
    let m = limits.vehicle_limit(instance);
    let mut cache: HashMap<u32, Option<Vec<usize>>> = HashMap::new();
    let mut feasible_block = |mask: u32| -> Option<Vec<usize>> {
        cache
            .entry(mask)
            .or_insert_with(|| {
                let block: Vec<usize> = (1..=n).filter(|c| mask & (1 << (c - 1)) != 0).collect();
                route_for_block(instance, &block, limits.max_station_visits)
            })
            .clone()
    };

    // Set partitions: each block contains the lowest remaining customer.
    fn partition(
        remaining: u32,
        routes_left: usize,
        feasible_block: &mut dyn FnMut(u32) -> Option<Vec<usize>>,
        acc: &mut Vec<Vec<usize>>,
    ) -> bool {
        if remaining == 0 {
            return true;
        }
        if routes_left == 0 {
            return false;
        }
        let lowest = remaining & remaining.wrapping_neg();
        let rest = remaining & !lowest;
        // enumerate all subsets of `rest`
        let mut sub = rest;
        loop {
            let block = sub | lowest;
            if let Some(route) = feasible_block(block) {
                acc.push(route);
                if partition(remaining & !block, routes_left - 1, feasible_block, acc) {
                    return true;
                }
                acc.pop();
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        false
    }

    let mut acc = Vec::new();
    let all = (1u32 << n) - 1;
    Ok(if partition(all, m, &mut feasible_block, &mut acc) {
        OracleVerdict::Feasible(acc)
    } else {
        OracleVerdict::Infeasible
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Customer, Node, Point, TimeWindow, VehicleConfig};

    fn one(window: TimeWindow) -> Instance {
        Instance {
            depot: Node::depot(Point::new(0.5, 0.5)),
            customers: vec![Customer::new(1, Point::new(0.6, 0.5), 0.1, 0.02, window)],
            stations: vec![Node::station(2, Point::new(0.5, 0.6))],
            vehicle: VehicleConfig { capacity: 1.5, battery: 0.1, consumption_rate: 0.25, charge_rate: 1.0 },
            horizon: 2.0,
        }
    }

    #[test]
    fn single_customer_cases() {
        let limits = SearchLimits::default();
        assert!(bruteforce_oracle(&one(TimeWindow::new(0.0, 2.0)), &limits).unwrap().is_feasible());
        // e + s + t back = 1.95 + 0.02 + 0.1 > 2
        assert_eq!(
            bruteforce_oracle(&one(TimeWindow::new(1.95, 2.0)), &limits).unwrap(),
            OracleVerdict::Infeasible
        );
    }

    #[test]
    fn rejects_large() {
        let mut inst = one(TimeWindow::new(0.0, 2.0));
        inst.customers = (1..=7)
            .map(|i| Customer::new(i, Point::new(0.6, 0.5), 0.1, 0.02, TimeWindow::new(0.0, 2.0)))
            .collect();
        inst.stations = vec![Node::station(8, Point::new(0.5, 0.6))];
        assert_eq!(bruteforce_oracle(&inst, &SearchLimits::default()), Err(OracleError::TooLarge(7)));
    }
}
