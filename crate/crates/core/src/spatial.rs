//! Depot and customer placement for the random (R), clustered (C) and
//! mixed (RC) spatial families.

use crate::config::{ConfigError, FieldIssue};
use crate::model::{euclidean_distance, Point};
use crate::rng::uniform;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Draws spent on one random-family customer before it is accepted
/// regardless of separation.
pub const MAX_SEPARATION_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpatialFamily {
    R,
    C,
    RC,
}

impl SpatialFamily {
    pub const ALL: [SpatialFamily; 3] = [SpatialFamily::R, SpatialFamily::C, SpatialFamily::RC];

    pub fn label(self) -> &'static str {
        match self {
            SpatialFamily::R => "R",
            SpatialFamily::C => "C",
            SpatialFamily::RC => "RC",
        }
    }
}

impl fmt::Display for SpatialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SpatialFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "R" => Ok(SpatialFamily::R),
            "C" => Ok(SpatialFamily::C),
            "RC" => Ok(SpatialFamily::RC),
            other => Err(format!("unknown spatial family '{other}' (expected R, C or RC)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DepotMode {
    #[default]
    Center,
    Random,
    User { x: f64, y: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpatialConfig {
    pub family: SpatialFamily,
    pub depot: DepotMode,
    pub customers: usize,
    pub clusters: usize,
    pub sigma: f64,
    pub rho: f64,
    pub min_separation: f64,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        Self {
            family: SpatialFamily::R,
            depot: DepotMode::Center,
            customers: 10,
            clusters: 3,
            sigma: 0.05,
            rho: 0.5,
            min_separation: 0.04,
        }
    }
}

impl SpatialConfig {
    pub(crate) fn collect_issues(&self, issues: &mut Vec<FieldIssue>) {
        if self.customers < 1 {
            issues.push(FieldIssue::new("spatial.customers", "must be at least 1"));
        }
        if matches!(self.family, SpatialFamily::C | SpatialFamily::RC) && self.clusters < 1 {
            issues.push(FieldIssue::new("spatial.clusters", "must be at least 1 for C and RC"));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            issues.push(FieldIssue::new("spatial.sigma", "must be positive"));
        }
        if self.family == SpatialFamily::RC && !(self.rho > 0.0 && self.rho < 1.0) {
            issues.push(FieldIssue::new("spatial.rho", "must lie strictly between 0 and 1"));
        }
        if !(self.min_separation >= 0.0) {
            issues.push(FieldIssue::new("spatial.min_separation", "must be non-negative"));
        }
        if let DepotMode::User { x, y } = self.depot {
            if !Point::new(x, y).in_unit_square() {
                issues.push(FieldIssue::new("spatial.depot", "user depot must lie in [0,1]^2"));
            }
        }
    }
}

/// Customer coordinates plus what the sampler had to compromise on.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomerLayout {
    pub points: Vec<Point>,
    pub cluster_centers: Vec<Point>,
    /// Random-family points accepted after exhausting the separation attempts.
    pub forced_acceptances: usize,
}

pub fn clip_unit_square(p: Point) -> Point {
    Point::new(p.x.clamp(0.0, 1.0), p.y.clamp(0.0, 1.0))
}

fn uniform_point<R: Rng + ?Sized>(rng: &mut R) -> Point {
    let x = uniform(rng, 0.0, 1.0);
    let y = uniform(rng, 0.0, 1.0);
    Point::new(x, y)
}

pub fn place_depot<R: Rng + ?Sized>(mode: DepotMode, rng: &mut R) -> Result<Point, ConfigError> {
    match mode {
        DepotMode::Center => Ok(Point::new(0.5, 0.5)),
        DepotMode::Random => Ok(uniform_point(rng)),
        DepotMode::User { x, y } => {
            let p = Point::new(x, y);
            if p.in_unit_square() {
                Ok(p)
            } else {
                Err(ConfigError::single("spatial.depot", "user depot must lie in [0,1]^2"))
            }
        }
    }
}

/// Uniform points with rejection against `min_separation`.
///
/// Each point is redrawn while it lies closer than `min_separation` to any
/// point already in `placed`; the tenth failing draw is kept anyway and
/// counted as a forced acceptance. New points are appended to `placed`.
pub fn place_separated<R: Rng + ?Sized>(
    placed: &mut Vec<Point>,
    count: usize,
    min_separation: f64,
    rng: &mut R,
) -> usize {
    let mut forced = 0;
    for _ in 0..count {
        let mut attempt = 1;
        loop {
            let candidate = uniform_point(rng);
            let clear = placed
                .iter()
                .all(|p| euclidean_distance(*p, candidate) >= min_separation);
            if clear {
                placed.push(candidate);
                break;
            }
            if attempt == MAX_SEPARATION_ATTEMPTS {
                placed.push(candidate);
                forced += 1;
                break;
            }
            attempt += 1;
        }
    }
    forced
}

pub fn sample_customers_random<R: Rng + ?Sized>(
    n: usize,
    min_separation: f64,
    rng: &mut R,
) -> CustomerLayout {
    let mut points = Vec::with_capacity(n);
    let forced = place_separated(&mut points, n, min_separation, rng);
    CustomerLayout { points, cluster_centers: Vec::new(), forced_acceptances: forced }
}

/// Gaussian clusters: `k` uniform centres, customer `i` (0-based) attached
/// to centre `i mod k`, offsets drawn x then y, clipped to the unit square.
pub fn sample_customers_clustered<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    sigma: f64,
    rng: &mut R,
) -> CustomerLayout {
    let k = k.max(1);
    let centers: Vec<Point> = (0..k).map(|_| uniform_point(rng)).collect();
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
    let points = (0..n)
        .map(|i| {
            let c = centers[i % k];
            let dx = normal.sample(rng);
            let dy = normal.sample(rng);
            clip_unit_square(Point::new(c.x + dx, c.y + dy))
        })
        .collect();
    CustomerLayout { points, cluster_centers: centers, forced_acceptances: 0 }
}

/// Number of clustered customers in a mixed layout: `rho * n` rounded half up.
pub fn clustered_share(n: usize, rho: f64) -> usize {
    ((rho * n as f64 + 0.5).floor() as usize).min(n)
}

/// Clustered block first, then the random block; random points keep
/// `min_separation` from every earlier point of either block.
pub fn sample_customers_mixed<R: Rng + ?Sized>(
    n: usize,
    rho: f64,
    k: usize,
    sigma: f64,
    min_separation: f64,
    rng: &mut R,
) -> CustomerLayout {
    let clustered = clustered_share(n, rho);
    let mut layout = sample_customers_clustered(clustered, k, sigma, rng);
    layout.forced_acceptances =
        place_separated(&mut layout.points, n - clustered, min_separation, rng);
    layout
}

pub fn generate_customers<R: Rng + ?Sized>(config: &SpatialConfig, rng: &mut R) -> CustomerLayout {
    let n = config.customers;
    let layout = match config.family {
        SpatialFamily::R => sample_customers_random(n, config.min_separation, rng),
        SpatialFamily::C => sample_customers_clustered(n, config.clusters, config.sigma, rng),
        SpatialFamily::RC => sample_customers_mixed(
            n,
            config.rho,
            config.clusters,
            config.sigma,
            config.min_separation,
            rng,
        ),
    };
    debug_assert!(layout.points.iter().all(Point::in_unit_square));
    layout
}
