//! Domain types shared by every stage: points in the unit square, nodes,
//! customers, vehicle parameters and the assembled [`Instance`].
//!
//! Node ids follow one ordering everywhere: the depot is `0`, customers are
//! `1..=N` and external charging stations are `N+1..=N+|S|`.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Absolute tolerance for floating point comparisons.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        euclidean_distance(*self, *other)
    }

    pub fn in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

pub fn euclidean_distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Vehicles move at unit speed, so travel time equals distance.
#[inline]
pub fn travel_time(distance: f64) -> f64 {
    distance
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Depot,
    Customer,
    Station,
}

impl NodeKind {
    /// Single-letter type code used in the text format.
    pub fn code(self) -> char {
        match self {
            NodeKind::Depot => 'd',
            NodeKind::Customer => 'c',
            NodeKind::Station => 'f',
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "d" => Some(NodeKind::Depot),
            "c" => Some(NodeKind::Customer),
            "f" => Some(NodeKind::Station),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
    pub position: Point,
}

impl Node {
    pub fn depot(position: Point) -> Self {
        Self { id: 0, kind: NodeKind::Depot, position }
    }

    pub fn station(id: usize, position: Point) -> Self {
        Self { id, kind: NodeKind::Station, position }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub earliest: f64,
    pub latest: f64,
}

impl TimeWindow {
    pub fn new(earliest: f64, latest: f64) -> Self {
        Self { earliest, latest }
    }

    pub fn width(&self) -> f64 {
        self.latest - self.earliest
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Customer {
    pub node: Node,
    pub demand: f64,
    pub service: f64,
    pub window: TimeWindow,
}

impl Customer {
    pub fn new(id: usize, position: Point, demand: f64, service: f64, window: TimeWindow) -> Self {
        Self {
            node: Node { id, kind: NodeKind::Customer, position },
            demand,
            service,
            window,
        }
    }

    pub fn id(&self) -> usize {
        self.node.id
    }

    pub fn position(&self) -> Point {
        self.node.position
    }
}

/// Load capacity `Q`, battery capacity `B`, consumption per unit distance `r`
/// and charging rate `g` (energy per unit time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleConfig {
    pub capacity: f64,
    pub battery: f64,
    pub consumption_rate: f64,
    pub charge_rate: f64,
}

impl VehicleConfig {
    /// Maximum distance on a full battery, `B / r`.
    pub fn range(&self) -> f64 {
        self.battery / self.consumption_rate
    }

    pub fn energy_for(&self, distance: f64) -> f64 {
        self.consumption_rate * distance
    }

    /// Dwell needed to refill from `level` to full.
    pub fn recharge_time(&self, level: f64) -> f64 {
        ((self.battery - level) / self.charge_rate).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemporalConfig {
    /// Upper bound `H` of the planning interval `[0, H]`.
    pub horizon: f64,
    /// Window width as a fraction of the horizon.
    pub phi: f64,
    /// Draw window starts uniformly in `[0, H - W]` instead of staggering them.
    pub randomized_window_starts: bool,
}

impl TemporalConfig {
    pub fn window_width(&self) -> f64 {
        self.phi * self.horizon
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("node {id}: expected id {expected}")]
    IdOrder { id: usize, expected: usize },
    #[error("node {id} lies outside the unit square at {position}")]
    OutOfSquare { id: usize, position: Point },
    #[error("customer {id}: window [{earliest}, {latest}] not inside [0, {horizon}]")]
    Window { id: usize, earliest: f64, latest: f64, horizon: f64 },
    #[error("customer {id}: {what} must be {rule}, got {value}")]
    CustomerValue { id: usize, what: &'static str, rule: &'static str, value: f64 },
    #[error("vehicle parameter {name} must be positive, got {value}")]
    Vehicle { name: &'static str, value: f64 },
    #[error("horizon must be positive, got {0}")]
    Horizon(f64),
    #[error("node {0} has the wrong kind")]
    Kind(usize),
}

/// A complete single-depot EVRPTW instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub depot: Node,
    pub customers: Vec<Customer>,
    pub stations: Vec<Node>,
    pub vehicle: VehicleConfig,
    pub horizon: f64,
}

impl Instance {
    pub fn customer_count(&self) -> usize {
        self.customers.len()
    }

    pub fn station_count(&self) -> usize {
        self.stations.len()
    }

    pub fn node_count(&self) -> usize {
        1 + self.customers.len() + self.stations.len()
    }

    pub fn range(&self) -> f64 {
        self.vehicle.range()
    }

    pub fn is_customer(&self, id: usize) -> bool {
        id >= 1 && id <= self.customers.len()
    }

    pub fn is_station(&self, id: usize) -> bool {
        id > self.customers.len() && id < self.node_count()
    }

    pub fn kind(&self, id: usize) -> Option<NodeKind> {
        if id == 0 {
            Some(NodeKind::Depot)
        } else if self.is_customer(id) {
            Some(NodeKind::Customer)
        } else if self.is_station(id) {
            Some(NodeKind::Station)
        } else {
            None
        }
    }

    /// Panics if `id` is not a node of this instance.
    pub fn position(&self, id: usize) -> Point {
        let n = self.customers.len();
        if id == 0 {
            self.depot.position
        } else if id <= n {
            self.customers[id - 1].node.position
        } else {
            self.stations[id - n - 1].position
        }
    }

    /// Panics if `id` is not a customer id.
    pub fn customer(&self, id: usize) -> &Customer {
        &self.customers[id - 1]
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        euclidean_distance(self.position(a), self.position(b))
    }

    pub fn station_ids(&self) -> std::ops::Range<usize> {
        self.customers.len() + 1..self.node_count()
    }

    pub fn total_demand(&self) -> f64 {
        self.customers.iter().map(|c| c.demand).sum()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        std::iter::once(self.depot)
            .chain(self.customers.iter().map(|c| c.node))
            .chain(self.stations.iter().copied())
    }

    /// Checks id ordering, geometry, windows and vehicle parameters.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.horizon > 0.0) {
            return Err(ModelError::Horizon(self.horizon));
        }
        let v = &self.vehicle;
        for (name, value) in [
            ("capacity", v.capacity),
            ("battery", v.battery),
            ("consumption_rate", v.consumption_rate),
            ("charge_rate", v.charge_rate),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ModelError::Vehicle { name, value });
            }
        }
        for (expected, node) in self.nodes().enumerate() {
            if node.id != expected {
                return Err(ModelError::IdOrder { id: node.id, expected });
            }
            if self.kind(node.id) != Some(node.kind) {
                return Err(ModelError::Kind(node.id));
            }
            if !node.position.in_unit_square() {
                return Err(ModelError::OutOfSquare { id: node.id, position: node.position });
            }
        }
        for c in &self.customers {
            let w = c.window;
            if w.earliest < -EPS || w.latest > self.horizon + EPS || w.earliest > w.latest + EPS {
                return Err(ModelError::Window {
                    id: c.id(),
                    earliest: w.earliest,
                    latest: w.latest,
                    horizon: self.horizon,
                });
            }
            if !(c.demand > 0.0) || !c.demand.is_finite() {
                return Err(ModelError::CustomerValue {
                    id: c.id(),
                    what: "demand",
                    rule: "positive",
                    value: c.demand,
                });
            }
            if !(c.service >= 0.0) || !c.service.is_finite() {
                return Err(ModelError::CustomerValue {
                    id: c.id(),
                    what: "service time",
                    rule: "non-negative",
                    value: c.service,
                });
            }
        }
        Ok(())
    }
}

/// Dense symmetric distance table over all nodes of an instance.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    size: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(instance: &Instance) -> Self {
        let positions: Vec<Point> = instance.nodes().map(|n| n.position).collect();
        let size = positions.len();
        let mut data = vec![0.0; size * size];
        for i in 0..size {
            for j in (i + 1)..size {
                let d = euclidean_distance(positions[i], positions[j]);
                data[i * size + j] = d;
                data[j * size + i] = d;
            }
        }
        Self { size, data }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.size + b]
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        assert_eq!(euclidean_distance(Point::new(0.0, 0.0), Point::new(0.0, 0.0)), 0.0);
        let d = euclidean_distance(Point::new(0.0, 0.0), Point::new(1.0, 1.0));
        assert!((d - std::f64::consts::SQRT_2).abs() < 1e-15);
        let d = euclidean_distance(Point::new(0.1, 0.5), Point::new(0.9, 0.5));
        assert!((d - 0.8).abs() < 1e-12);
    }

    #[test]
    fn travel_time_is_unit_speed() {
        assert_eq!(travel_time(0.0), 0.0);
        assert_eq!(travel_time(0.8), 0.8);
        assert_eq!(travel_time(std::f64::consts::SQRT_2), std::f64::consts::SQRT_2);
    }

    #[test]
    fn range_is_battery_over_rate() {
        let v = VehicleConfig { capacity: 1.5, battery: 0.1, consumption_rate: 0.25, charge_rate: 1.0 };
        assert!((v.range() - 0.4).abs() < 1e-15);
        assert!((v.recharge_time(0.04) - 0.06).abs() < 1e-15);
    }

    fn point() -> impl Strategy<Value = Point> {
        (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(x, y)| Point::new(x, y))
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(a in point(), b in point(), c in point()) {
            let ab = euclidean_distance(a, b);
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, euclidean_distance(b, a));
            prop_assert!(ab <= euclidean_distance(a, c) + euclidean_distance(c, b) + EPS);
            prop_assert_eq!(ab == 0.0, a == b);
        }
    }
}
