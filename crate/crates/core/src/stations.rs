//! Range-aware charging station placement.
//!
//! Two geometric rules propose candidates: midpoints of customer pairs that
//! are too far apart for one charge, and points on the depot ray towards
//! customers that are far from both the depot and every station. Candidates
//! are thinned by a separation filter, trimmed to the target count when the
//! rules over-produce, and topped up with uniform samples when they
//! under-produce.

use crate::config::FieldIssue;
use crate::model::{euclidean_distance, Node, Point, EPS};
use crate::rng::uniform;
use crate::spatial::clip_unit_square;
use log::debug;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// How rule-generated stations are cut down when they exceed the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Keep the leading stations: depot-ray stations, then midpoints in
    /// generation order.
    Priority,
    /// Greedy: repeatedly keep the station within range of the most
    /// customers not yet within range of a kept station; ties go to the
    /// earlier station in priority order.
    #[default]
    Coverage,
    /// Keep every rule-generated station.
    Keep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StationConfig {
    pub target_count: usize,
    pub truncation: Truncation,
    /// Coverage radius used by [`Truncation::Coverage`], as a fraction of the range.
    pub coverage_fraction: f64,
    /// Half-width of the uniform midpoint perturbation.
    pub perturbation: f64,
    pub midpoint_threshold: f64,
    pub depot_threshold: f64,
    pub nearest_station_threshold: f64,
    pub ray_fraction: f64,
    /// Minimum station-to-station spacing, as a fraction of the range.
    pub station_separation: f64,
    /// Minimum station-to-customer spacing, absolute.
    pub customer_clearance: f64,
    /// Uniform draws per top-up station before the spacing rule is relaxed.
    pub max_topup_attempts: usize,
}

impl Default for StationConfig {
    fn default() -> Self {
        Self {
            target_count: 3,
            truncation: Truncation::Coverage,
            coverage_fraction: 1.0,
            perturbation: 0.02,
            midpoint_threshold: 0.8,
            depot_threshold: 0.7,
            nearest_station_threshold: 0.5,
            ray_fraction: 0.6,
            station_separation: 0.3,
            customer_clearance: 0.04,
            max_topup_attempts: 200,
        }
    }
}

impl StationConfig {
    pub(crate) fn collect_issues(&self, issues: &mut Vec<FieldIssue>) {
        let checks = [
            ("stations.perturbation", self.perturbation, true),
            ("stations.midpoint_threshold", self.midpoint_threshold, false),
            ("stations.depot_threshold", self.depot_threshold, false),
            ("stations.nearest_station_threshold", self.nearest_station_threshold, false),
            ("stations.ray_fraction", self.ray_fraction, false),
            ("stations.station_separation", self.station_separation, true),
            ("stations.customer_clearance", self.customer_clearance, true),
            ("stations.coverage_fraction", self.coverage_fraction, false),
        ];
        for (field, value, zero_ok) in checks {
            let ok = value.is_finite() && if zero_ok { value >= 0.0 } else { value > 0.0 };
            if !ok {
                let rule = if zero_ok { "must be non-negative" } else { "must be positive" };
                issues.push(FieldIssue::new(field, rule));
            }
        }
        if self.max_topup_attempts == 0 {
            issues.push(FieldIssue::new("stations.max_topup_attempts", "must be at least 1"));
        }
    }
}

/// Bookkeeping of how the final station set came about.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfrastructureDiagnostics {
    pub midpoint_candidates: usize,
    pub midpoint_kept: usize,
    pub ray_candidates: usize,
    pub ray_kept: usize,
    /// Rule-generated stations dropped to respect the target count.
    pub truncated: usize,
    pub topped_up: usize,
    /// Top-up stations placed with the station spacing rule relaxed.
    pub relaxed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Infrastructure {
    pub stations: Vec<Node>,
    pub diagnostics: InfrastructureDiagnostics,
}

/// One candidate per customer pair `(i, j)`, `i < j`, with `d_ij > 0.8 R`:
/// the midpoint plus a uniform perturbation in `[-delta, delta]^2`, clipped.
pub fn candidate_midpoint_stations<R: Rng + ?Sized>(
    customers: &[Point],
    range: f64,
    delta: f64,
    config: &StationConfig,
    rng: &mut R,
) -> Vec<Point> {
    let threshold = config.midpoint_threshold * range;
    let mut out = Vec::new();
    for (i, a) in customers.iter().enumerate() {
        for b in &customers[i + 1..] {
            if euclidean_distance(*a, *b) > threshold {
                let ex = uniform(rng, -delta, delta);
                let ey = uniform(rng, -delta, delta);
                let mid = Point::new((a.x + b.x) / 2.0 + ex, (a.y + b.y) / 2.0 + ey);
                out.push(clip_unit_square(mid));
            }
        }
    }
    out
}

fn nearest_distance(p: Point, set: &[Point]) -> Option<f64> {
    set.iter().map(|s| euclidean_distance(p, *s)).min_by(f64::total_cmp)
}

/// Depot-ray candidates for customers with `d_0i > 0.7 R` whose nearest
/// station (among `existing` and earlier insertions) is farther than
/// `0.5 R`, placed at `0.6 R` from the depot towards the customer.
pub fn candidate_depot_ray_stations(
    depot: Point,
    customers: &[Point],
    existing: &[Point],
    range: f64,
    config: &StationConfig,
) -> Vec<Point> {
    let mut known: Vec<Point> = existing.to_vec();
    let mut inserted = Vec::new();
    for c in customers {
        let d0 = euclidean_distance(depot, *c);
        if d0 <= config.depot_threshold * range {
            continue;
        }
        let far = nearest_distance(*c, &known)
            .map_or(true, |d| d > config.nearest_station_threshold * range);
        if far {
            let step = config.ray_fraction * range / d0;
            let p = Point::new(depot.x + step * (c.x - depot.x), depot.y + step * (c.y - depot.y));
            let p = clip_unit_square(p);
            known.push(p);
            inserted.push(p);
        }
    }
    inserted
}

fn passes_filter(
    candidate: Point,
    kept: &[Point],
    customers: &[Point],
    range: f64,
    config: &StationConfig,
    enforce_spacing: bool,
) -> bool {
    let spaced = !enforce_spacing
        || kept
            .iter()
            .all(|s| euclidean_distance(*s, candidate) >= config.station_separation * range);
    spaced
        && customers
            .iter()
            .all(|c| euclidean_distance(*c, candidate) >= config.customer_clearance)
}

/// Greedy pass appending every candidate that keeps the spacing rules
/// against `kept` (including earlier survivors) to `kept`. Returns how many
/// were appended.
pub fn filter_into(
    kept: &mut Vec<Point>,
    candidates: &[Point],
    customers: &[Point],
    range: f64,
    config: &StationConfig,
) -> usize {
    let before = kept.len();
    for c in candidates {
        if passes_filter(*c, kept, customers, range, config, true) {
            kept.push(*c);
        }
    }
    kept.len() - before
}

pub fn filter_stations(
    candidates: &[Point],
    customers: &[Point],
    range: f64,
    config: &StationConfig,
) -> Vec<Point> {
    let mut kept = Vec::new();
    filter_into(&mut kept, candidates, customers, range, config);
    kept
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopUp {
    pub stations: Vec<Point>,
    pub added: usize,
    pub relaxed: usize,
}

/// Uniform rejection sampling until `target` stations exist. After
/// `max_topup_attempts` failed draws for one station only the customer
/// clearance is enforced; after as many again the draw is taken as is.
pub fn top_up_stations<R: Rng + ?Sized>(
    kept: Vec<Point>,
    target: usize,
    customers: &[Point],
    range: f64,
    config: &StationConfig,
    rng: &mut R,
) -> TopUp {
    let mut stations = kept;
    let (mut added, mut relaxed) = (0, 0);
    let cap = config.max_topup_attempts;
    while stations.len() < target {
        let mut attempts = 0;
        loop {
            let x = uniform(rng, 0.0, 1.0);
            let y = uniform(rng, 0.0, 1.0);
            let p = Point::new(x, y);
            attempts += 1;
            let strict = attempts <= cap;
            let accept = attempts > 2 * cap
                || passes_filter(p, &stations, customers, range, config, strict);
            if accept {
                if !strict {
                    relaxed += 1;
                    debug!("top-up station relaxed after {attempts} draws");
                }
                stations.push(p);
                added += 1;
                break;
            }
        }
    }
    TopUp { stations, added, relaxed }
}

/// Cuts `ordered` (priority order) down to `target` stations. The result
/// keeps priority order among the survivors.
pub fn truncate_stations(
    ordered: Vec<Point>,
    target: usize,
    customers: &[Point],
    rule: Truncation,
    radius: f64,
) -> Vec<Point> {
    if ordered.len() <= target {
        return ordered;
    }
    match rule {
        Truncation::Priority => ordered.into_iter().take(target).collect(),
        Truncation::Keep => ordered,
        Truncation::Coverage => {
            let covers: Vec<Vec<bool>> = ordered
                .iter()
                .map(|s| customers.iter().map(|c| euclidean_distance(*s, *c) <= radius + EPS).collect())
                .collect();
            let mut covered = vec![false; customers.len()];
            let mut chosen = vec![false; ordered.len()];
            for _ in 0..target {
                let gain = |i: usize| covers[i].iter().zip(&covered).filter(|(c, done)| **c && !**done).count();
                let best = (0..ordered.len())
                    .filter(|i| !chosen[*i])
                    .fold(None::<(usize, usize)>, |best, i| {
                        let g = gain(i);
                        match best {
                            Some((_, bg)) if bg >= g => best,
                            _ => Some((i, g)),
                        }
                    })
                    .expect("more candidates than target")
                    .0;
                chosen[best] = true;
                for (done, c) in covered.iter_mut().zip(&covers[best]) {
                    *done |= *c;
                }
            }
            ordered.into_iter().zip(chosen).filter_map(|(p, keep)| keep.then_some(p)).collect()
        }
    }
}

/// Full placement pipeline; stations get ids `N+1..` in the returned order
/// (depot-ray survivors, then midpoint survivors, then top-ups).
pub fn build_infrastructure<R: Rng + ?Sized>(
    depot: Point,
    customers: &[Point],
    config: &StationConfig,
    range: f64,
    rng: &mut R,
) -> Infrastructure {
    let mut diag = InfrastructureDiagnostics::default();
    let midpoints = candidate_midpoint_stations(customers, range, config.perturbation, config, rng);
    diag.midpoint_candidates = midpoints.len();
    let mut kept = filter_stations(&midpoints, customers, range, config);
    let midpoint_kept = kept.len();
    diag.midpoint_kept = midpoint_kept;

    let rays = candidate_depot_ray_stations(depot, customers, &kept, range, config);
    diag.ray_candidates = rays.len();
    diag.ray_kept = filter_into(&mut kept, &rays, customers, range, config);

    let (mid_part, ray_part) = kept.split_at(midpoint_kept);
    let mut ordered: Vec<Point> = ray_part.iter().chain(mid_part).copied().collect();
    if ordered.len() > config.target_count && config.truncation != Truncation::Keep {
        diag.truncated = ordered.len() - config.target_count;
        ordered = truncate_stations(
            ordered,
            config.target_count,
            customers,
            config.truncation,
            config.coverage_fraction * range,
        );
    }

    let top = top_up_stations(ordered, config.target_count, customers, range, config, rng);
    diag.topped_up = top.added;
    diag.relaxed = top.relaxed;

    let first_id = customers.len() + 1;
    let stations = top
        .stations
        .into_iter()
        .enumerate()
        .map(|(i, p)| Node::station(first_id + i, p))
        .collect();
    Infrastructure { stations, diagnostics: diag }
}
