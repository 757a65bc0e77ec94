//! Turning an ordered customer sequence into a drivable route.
//!
//! A route first tries the bare sequence. If that runs out of energy, a
//! label-setting pass decides where to charge: between consecutive stops it
//! goes direct or through a chain of stations, one candidate chain per final
//! station (the shortest one enterable on the current charge).
//! Labels are Pareto-pruned on (departure time, battery, distance), and the
//! cheapest label that reaches the depot in time wins. Ties go to the lower
//! station id because stations are scanned in id order.

use crate::model::{DistanceMatrix, Instance, EPS};

const MAX_LABELS: usize = 24;

#[derive(Debug, Clone)]
struct Label {
    time: f64,
    battery: f64,
    distance: f64,
    /// Stations inserted before each stop so far, flattened with markers.
    path: Vec<usize>,
}

impl Label {
    fn dominates(&self, other: &Label) -> bool {
        self.time <= other.time + EPS && self.battery + EPS >= other.battery && self.distance <= other.distance + EPS
    }
}

pub struct Planner<'a> {
    pub inst: &'a Instance,
    pub dist: DistanceMatrix,
    stations: Vec<usize>,
    /// Shortest station-to-station chains, indexed by position in `stations`.
    chains: Vec<Vec<Option<Vec<usize>>>>,
    chain_len: Vec<Vec<f64>>,
}

impl<'a> Planner<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        let dist = DistanceMatrix::new(inst);
        let stations: Vec<usize> = inst.station_ids().collect();
        let (chains, chain_len) = station_chains(&dist, &stations, inst.range());
        Self { inst, dist, stations, chains, chain_len }
    }

    pub fn d(&self, a: usize, b: usize) -> f64 {
        self.dist.get(a, b)
    }

    /// Distance of the bare depot-customers-depot cycle.
    pub fn bare_distance(&self, customers: &[usize]) -> f64 {
        let mut prev = 0;
        let mut total = 0.0;
        for &c in customers.iter().chain(std::iter::once(&0)) {
            total += self.d(prev, c);
            prev = c;
        }
        total
    }

    /// Load and time-window check that ignores energy; stations only add
    /// time, so failing here rules the sequence out.
    pub fn time_feasible(&self, customers: &[usize]) -> bool {
        let inst = self.inst;
        let load: f64 = customers.iter().map(|&c| inst.customer(c).demand).sum();
        if load > inst.vehicle.capacity + EPS {
            return false;
        }
        let mut t = 0.0;
        let mut prev = 0;
        for &c in customers {
            let cu = inst.customer(c);
            let start = (t + self.d(prev, c)).max(cu.window.earliest);
            if start > cu.window.latest + EPS {
                return false;
            }
            t = start + cu.service;
            prev = c;
        }
        t + self.d(prev, 0) <= inst.horizon + EPS
    }

    /// Full route (depot-anchored, stations included) for `customers`, or
    /// `None` when the planner finds no way to charge along it.
    pub fn plan(&self, customers: &[usize]) -> Option<(Vec<usize>, f64)> {
        if customers.is_empty() {
            return Some((vec![0, 0], 0.0));
        }
        if !self.time_feasible(customers) {
            return None;
        }
        let inst = self.inst;
        let v = inst.vehicle;
        let h = inst.horizon;
        let mut labels = vec![Label { time: 0.0, battery: v.battery, distance: 0.0, path: vec![0] }];
        let mut prev = 0;
        for (pos, &target) in customers.iter().chain(std::iter::once(&0)).enumerate() {
            let last = pos == customers.len();
            let mut next: Vec<Label> = Vec::new();
            let arrive = |label: &Label, via: &[usize], next: &mut Vec<Label>| {
                let mut t = label.time;
                let mut y = label.battery;
                let mut dist = label.distance;
                let mut at = prev;
                for &s in via {
                    let d = self.d(at, s);
                    if v.energy_for(d) > y + EPS {
                        return;
                    }
                    y = (y - v.energy_for(d)).max(0.0);
                    t += d + v.recharge_time(y);
                    dist += d;
                    if t > h + EPS {
                        return;
                    }
                    y = v.battery;
                    at = s;
                }
                let d = self.d(at, target);
                if v.energy_for(d) > y + EPS {
                    return;
                }
                y = (y - v.energy_for(d)).max(0.0);
                t += d;
                dist += d;
                if t > h + EPS {
                    return;
                }
                if !last {
                    let c = inst.customer(target);
                    t = t.max(c.window.earliest);
                    if t > c.window.latest + EPS {
                        return;
                    }
                    t += c.service;
                    if t + self.d(target, 0) > h + EPS {
                        return;
                    }
                }
                let mut path = label.path.clone();
                path.extend_from_slice(via);
                path.push(target);
                let cand = Label { time: t, battery: y, distance: dist, path };
                if next.iter().any(|l| l.dominates(&cand)) {
                    return;
                }
                next.retain(|l| !cand.dominates(l));
                next.push(cand);
            };
            for label in &labels {
                arrive(label, &[], &mut next);
                // For each final charger, enter the station graph at the
                // cheapest station reachable on the current charge.
                for j in 0..self.stations.len() {
                    let mut best: Option<(f64, usize)> = None;
                    for (i, &s) in self.stations.iter().enumerate() {
                        let d = self.d(prev, s);
                        if s == prev || v.energy_for(d) > label.battery + EPS {
                            continue;
                        }
                        let total = d + self.chain_len[i][j];
                        if total.is_finite() && best.is_none_or(|(b, _)| total < b - EPS) {
                            best = Some((total, i));
                        }
                    }
                    if let Some((_, i)) = best {
                        if let Some(chain) = &self.chains[i][j] {
                            arrive(label, chain, &mut next);
                        }
                    }
                }
            }
            if next.is_empty() {
                return None;
            }
            if next.len() > MAX_LABELS {
                next.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.time.total_cmp(&b.time)));
                next.truncate(MAX_LABELS);
            }
            labels = next;
            prev = target;
        }
        labels
            .into_iter()
            .min_by(|a, b| a.distance.total_cmp(&b.distance))
            .map(|l| (l.path, l.distance))
    }
}

/// Floyd-Warshall over stations joined when one charge covers the hop.
fn station_chains(dist: &DistanceMatrix, stations: &[usize], range: f64) -> (Vec<Vec<Option<Vec<usize>>>>, Vec<Vec<f64>>) {
    let k = stations.len();
    let mut len = vec![vec![f64::INFINITY; k]; k];
    let mut next = vec![vec![usize::MAX; k]; k];
    for i in 0..k {
        for j in 0..k {
            let d = dist.get(stations[i], stations[j]);
            if i == j || d <= range + EPS {
                len[i][j] = if i == j { 0.0 } else { d };
                next[i][j] = j;
            }
        }
    }
    for m in 0..k {
        for i in 0..k {
            for j in 0..k {
                if len[i][m] + len[m][j] < len[i][j] - EPS {
                    len[i][j] = len[i][m] + len[m][j];
                    next[i][j] = next[i][m];
                }
            }
        }
    }
    let chains = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if next[i][j] == usize::MAX {
                        return None;
                    }
                    let mut path = vec![stations[i]];
                    let mut at = i;
                    while at != j {
                        at = next[at][j];
                        path.push(stations[at]);
                    }
                    Some(path)
                })
                .collect()
        })
        .collect();
    (chains, len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Customer, Node, Point, TimeWindow, VehicleConfig};
    use crate::route::check_route;

    fn corridor() -> Instance {
        Instance {
            depot: Node::depot(Point::new(0.1, 0.5)),
            customers: vec![Customer::new(1, Point::new(0.7, 0.5), 0.2, 0.02, TimeWindow::new(0.0, 2.0))],
            stations: vec![Node::station(2, Point::new(0.9, 0.9)), Node::station(3, Point::new(0.5, 0.5))],
            vehicle: VehicleConfig { capacity: 1.5, battery: 0.1125, consumption_rate: 0.25, charge_rate: 1.0 },
            horizon: 2.0,
        }
    }

    #[test]
    fn inserts_stations_where_needed() {
        let inst = corridor();
        let p = Planner::new(&inst);
        let (route, dist) = p.plan(&[1]).unwrap();
        assert_eq!(route, vec![0, 3, 1, 3, 0]);
        assert!((dist - 1.2).abs() < 1e-12);
        check_route(&inst, &route).unwrap();
    }

    #[test]
    fn bare_route_when_possible() {
        let mut inst = corridor();
        inst.vehicle.battery = 1.0;
        let (route, _) = Planner::new(&inst).plan(&[1]).unwrap();
        assert_eq!(route, vec![0, 1, 0]);
    }

    #[test]
    fn time_infeasible_is_rejected_early() {
        let mut inst = corridor();
        inst.customers[0].window = TimeWindow::new(0.0, 0.1);
        assert!(Planner::new(&inst).plan(&[1]).is_none());
    }
}
