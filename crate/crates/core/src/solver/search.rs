use super::plan::Planner;
use super::{Solution, SolverError, SolverParams};
use crate::model::{Instance, EPS};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{HashMap, HashSet};
use std::time::Instant;

const CACHE_LIMIT: usize = 400_000;

type Routes = Vec<Vec<usize>>;

/// Memoised route costs keyed by customer sequence.
struct Costs<'p, 'a> {
    planner: &'p Planner<'a>,
    cache: HashMap<Vec<usize>, Option<f64>>,
}

impl<'p, 'a> Costs<'p, 'a> {
    fn new(planner: &'p Planner<'a>) -> Self {
        Self { planner, cache: HashMap::new() }
    }

    fn get(&mut self, seq: &[usize]) -> Option<f64> {
        if seq.is_empty() {
            return Some(0.0);
        }
        if let Some(&c) = self.cache.get(seq) {
            return c;
        }
        let c = if self.planner.time_feasible(seq) { self.planner.plan(seq).map(|(_, d)| d) } else { None };
        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        self.cache.insert(seq.to_vec(), c);
        c
    }
}

fn insertion_orders(inst: &Instance) -> Vec<Vec<usize>> {
    let ids: Vec<usize> = (1..=inst.customer_count()).collect();
    let mut by_open = ids.clone();
    by_open.sort_by(|&a, &b| inst.customer(a).window.earliest.total_cmp(&inst.customer(b).window.earliest).then(a.cmp(&b)));
    let mut by_close = ids.clone();
    by_close.sort_by(|&a, &b| inst.customer(a).window.latest.total_cmp(&inst.customer(b).window.latest).then(a.cmp(&b)));
    let mut by_far = ids;
    by_far.sort_by(|&a, &b| inst.distance(0, b).total_cmp(&inst.distance(0, a)).then(a.cmp(&b)));
    vec![by_open, by_close, by_far]
}

/// Cheapest insertion; falls back to other orderings when the primary one
/// strands a customer.
pub(super) fn construct(planner: &Planner) -> Result<Routes, SolverError> {
    let mut costs = Costs::new(planner);
    let mut first_failure = None;
    for order in insertion_orders(planner.inst) {
        match construct_in_order(&mut costs, &order) {
            Ok(r) => return Ok(r),
            Err(c) => {
                first_failure.get_or_insert(c);
            }
        }
    }
    Err(SolverError::Construction(first_failure.unwrap_or(0)))
}

fn construct_in_order(costs: &mut Costs, order: &[usize]) -> Result<Routes, usize> {
    let mut routes: Routes = Vec::new();
    let mut route_cost: Vec<f64> = Vec::new();
    for &c in order {
        let mut best: Option<(f64, usize, usize)> = None;
        let mut trial = Vec::new();
        for (r, seq) in routes.iter().enumerate() {
            for pos in 0..=seq.len() {
                trial.clear();
                trial.extend_from_slice(&seq[..pos]);
                trial.push(c);
                trial.extend_from_slice(&seq[pos..]);
                if let Some(cost) = costs.get(&trial) {
                    let delta = cost - route_cost[r];
                    if best.is_none_or(|(d, _, _)| delta < d - EPS) {
                        best = Some((delta, r, pos));
                    }
                }
            }
        }
        match best {
            Some((delta, r, pos)) => {
                routes[r].insert(pos, c);
                route_cost[r] += delta;
            }
            None => {
                let cost = costs.get(&[c]).ok_or(c)?;
                routes.push(vec![c]);
                route_cost.push(cost);
            }
        }
    }
    Ok(routes)
}

pub(super) fn to_solution(planner: &Planner, routes: &Routes) -> Solution {
    let mut out = Vec::new();
    let mut total = 0.0;
    for seq in routes.iter().filter(|s| !s.is_empty()) {
        let (route, d) = planner.plan(seq).expect("accepted routes stay plannable");
        total += d;
        out.push(route);
    }
    Solution { routes: out, total_distance: total }
}

struct Candidate {
    delta: f64,
    /// (route index, new sequence); an index equal to the route count opens a new route.
    changes: Vec<(usize, Vec<usize>)>,
    costs: Vec<f64>,
}

fn arcs(seq: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    let n = seq.len();
    (0..=n).map(move |i| (if i == 0 { 0 } else { seq[i - 1] }, if i == n { 0 } else { seq[i] }))
}

struct State {
    routes: Routes,
    costs: Vec<f64>,
    total: f64,
}

impl State {
    fn locate(&self) -> HashMap<usize, (usize, usize)> {
        let mut at = HashMap::new();
        for (r, seq) in self.routes.iter().enumerate() {
            for (p, &c) in seq.iter().enumerate() {
                at.insert(c, (r, p));
            }
        }
        at
    }

    fn apply(&mut self, cand: &Candidate) {
        for ((r, seq), &cost) in cand.changes.iter().zip(&cand.costs) {
            if *r == self.routes.len() {
                self.routes.push(seq.clone());
                self.costs.push(cost);
            } else {
                self.routes[*r] = seq.clone();
                self.costs[*r] = cost;
            }
        }
        let mut i = 0;
        while i < self.routes.len() {
            if self.routes[i].is_empty() {
                self.routes.remove(i);
                self.costs.remove(i);
            } else {
                i += 1;
            }
        }
        self.total = self.costs.iter().sum();
    }
}

fn neighbour_lists(inst: &Instance, k: usize) -> Vec<Vec<usize>> {
    let n = inst.customer_count();
    let mut out = vec![Vec::new(); n + 1];
    for (c, list) in out.iter_mut().enumerate().skip(1) {
        let mut others: Vec<usize> = (1..=n).filter(|&o| o != c).collect();
        others.sort_by(|&a, &b| inst.distance(c, a).total_cmp(&inst.distance(c, b)).then(a.cmp(&b)));
        others.truncate(k);
        *list = others;
    }
    out
}

fn propose(state: &State, nbrs: &[Vec<usize>], params: &SolverParams, costs: &mut Costs) -> Vec<Candidate> {
    let at = state.locate();
    let mut out = Vec::new();
    let mut push = |costs: &mut Costs, changes: Vec<(usize, Vec<usize>)>| {
        let mut new_costs = Vec::with_capacity(changes.len());
        let mut delta = 0.0;
        for (r, seq) in &changes {
            let Some(c) = costs.get(seq) else { return };
            new_costs.push(c);
            delta += c - state.costs.get(*r).copied().unwrap_or(0.0);
        }
        out.push(Candidate { delta, changes, costs: new_costs });
    };
    let nr = state.routes.len();
    let mut customers: Vec<usize> = at.keys().copied().collect();
    customers.sort_unstable();
    for &c in &customers {
        let (ra, pa) = at[&c];
        let a = &state.routes[ra];
        let mut without = a.clone();
        without.remove(pa);
        if params.relocate {
            if a.len() > 1 {
                push(costs, vec![(ra, without.clone()), (nr, vec![c])]);
            }
            for &n in &nbrs[c] {
                let (rb, pb) = at[&n];
                for after in [false, true] {
                    let pos = pb + after as usize;
                    if rb == ra {
                        let mut seq = without.clone();
                        let p = if pos > pa { pos - 1 } else { pos };
                        seq.insert(p, c);
                        if seq != *a {
                            push(costs, vec![(ra, seq)]);
                        }
                    } else {
                        let mut seq = state.routes[rb].clone();
                        seq.insert(pos, c);
                        push(costs, vec![(ra, without.clone()), (rb, seq)]);
                    }
                }
            }
        }
        for &n in &nbrs[c] {
            let (rb, pb) = at[&n];
            if params.exchange && c < n {
                if rb == ra {
                    let mut seq = a.clone();
                    seq.swap(pa, pb);
                    push(costs, vec![(ra, seq)]);
                } else {
                    let mut sa = a.clone();
                    let mut sb = state.routes[rb].clone();
                    sa[pa] = n;
                    sb[pb] = c;
                    push(costs, vec![(ra, sa), (rb, sb)]);
                }
            }
            if params.two_opt_star && rb != ra {
                let b = &state.routes[rb];
                let mut sa = a[..=pa].to_vec();
                sa.extend_from_slice(&b[pb..]);
                let mut sb = b[..pb].to_vec();
                sb.extend_from_slice(&a[pa + 1..]);
                push(costs, vec![(ra, sa), (rb, sb)]);
            }
        }
    }
    if params.merge {
        let cap = costs.planner.inst.vehicle.capacity;
        let load = |seq: &[usize]| -> f64 { seq.iter().map(|&c| costs.planner.inst.customer(c).demand).sum() };
        let loads: Vec<f64> = state.routes.iter().map(|s| load(s)).collect();
        for a in 0..nr {
            for b in 0..nr {
                if a != b && loads[a] + loads[b] <= cap + EPS {
                    let mut seq = state.routes[a].clone();
                    seq.extend_from_slice(&state.routes[b]);
                    push(costs, vec![(a, seq), (b, Vec::new())]);
                }
            }
        }
    }
    out
}

/// Removes `strength` random customers and reinserts each at a random
/// feasible position. Returns false (state untouched) if any reinsertion fails.
fn shake(state: &mut State, strength: usize, rng: &mut ChaCha8Rng, costs: &mut Costs) -> bool {
    let mut routes = state.routes.clone();
    let all: Vec<usize> = routes.iter().flatten().copied().collect();
    let picked: Vec<usize> = all.choose_multiple(rng, strength.min(all.len())).copied().collect();
    for seq in &mut routes {
        seq.retain(|c| !picked.contains(c));
    }
    routes.retain(|s| !s.is_empty());
    let mut route_costs = Vec::with_capacity(routes.len());
    for seq in &routes {
        match costs.get(seq) {
            Some(c) => route_costs.push(c),
            None => return false,
        }
    }
    for &c in &picked {
        let mut options = Vec::new();
        for (r, seq) in routes.iter().enumerate() {
            for pos in 0..=seq.len() {
                let mut trial = seq.clone();
                trial.insert(pos, c);
                if let Some(cost) = costs.get(&trial) {
                    options.push((r, trial, cost));
                }
            }
        }
        if options.is_empty() {
            let Some(cost) = costs.get(&[c]) else { return false };
            routes.push(vec![c]);
            route_costs.push(cost);
        } else {
            let (r, trial, cost) = options.swap_remove(rng.random_range(0..options.len()));
            routes[r] = trial;
            route_costs[r] = cost;
        }
    }
    state.total = route_costs.iter().sum();
    state.routes = routes;
    state.costs = route_costs;
    true
}

/// Construction followed by tabu search. The returned solution is never
/// longer than the constructed one.
pub fn solve(inst: &Instance, params: &SolverParams) -> Result<Solution, SolverError> {
    params.validate()?;
    let started = Instant::now();
    let planner = Planner::new(inst);
    let initial = construct(&planner)?;
    let mut costs = Costs::new(&planner);
    let route_costs: Vec<f64> = initial.iter().map(|s| costs.get(s).expect("constructed routes are feasible")).collect();
    let mut state = State { total: route_costs.iter().sum(), routes: initial, costs: route_costs };
    let mut best = (state.routes.clone(), state.total);
    let nbrs = neighbour_lists(inst, params.neighbours);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut tabu: HashMap<(usize, usize), u64> = HashMap::new();
    let mut stagnant = 0u64;

    for iter in 0..params.max_iterations {
        if started.elapsed().as_secs_f64() >= params.time_budget_secs {
            log::debug!("solver stopped by time budget after {iter} iterations");
            break;
        }
        let candidates = propose(&state, &nbrs, params, &mut costs);
        let mut chosen: Option<&Candidate> = None;
        for cand in &candidates {
            let aspiring = state.total + cand.delta < best.1 - EPS;
            if !aspiring && is_tabu(&state, cand, &tabu, iter) {
                continue;
            }
            if chosen.is_none_or(|c| cand.delta < c.delta - EPS) {
                chosen = Some(cand);
            }
        }
        match chosen {
            Some(cand) => {
                for (r, _) in &cand.changes {
                    if let Some(old) = state.routes.get(*r) {
                        for arc in arcs(old) {
                            tabu.insert(arc, iter + params.tabu_tenure);
                        }
                    }
                }
                state.apply(cand);
            }
            None => stagnant = params.stagnation_limit,
        }
        if state.total < best.1 - EPS {
            best = (state.routes.clone(), state.total);
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        if stagnant >= params.stagnation_limit {
            let route_costs = best.0.iter().map(|s| costs.get(s).expect("best routes are feasible")).collect();
            state = State { routes: best.0.clone(), costs: route_costs, total: best.1 };
            shake(&mut state, params.shake_strength, &mut rng, &mut costs);
            tabu.clear();
            stagnant = 0;
        }
    }
    Ok(to_solution(&planner, &best.0))
}

fn is_tabu(state: &State, cand: &Candidate, tabu: &HashMap<(usize, usize), u64>, iter: u64) -> bool {
    let mut old: HashSet<(usize, usize)> = HashSet::new();
    for (r, _) in &cand.changes {
        if let Some(seq) = state.routes.get(*r) {
            old.extend(arcs(seq));
        }
    }
    cand.changes
        .iter()
        .filter(|(_, seq)| !seq.is_empty())
        .flat_map(|(_, seq)| arcs(seq).collect::<Vec<_>>())
        .any(|arc| !old.contains(&arc) && tabu.get(&arc).is_some_and(|&until| until > iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{GeneratorConfig, Regime};
    use crate::pipeline::generate_one;
    use crate::solver::{construct_initial, evaluate_solution};
    use crate::spatial::SpatialFamily;

    #[test]
    fn solve_improves_and_stays_feasible() {
        let cfg = GeneratorConfig::cell(SpatialFamily::C, Regime::Wide, 30, 4);
        let mut checked = 0;
        for seed in 0..40 {
            let o = generate_one(&cfg, seed).unwrap();
            if !o.accepted() {
                continue;
            }
            let Ok(init) = construct_initial(&o.instance) else { continue };
            let params = SolverParams { max_iterations: 30, ..Default::default() };
            let s = solve(&o.instance, &params).unwrap();
            let m = evaluate_solution(&o.instance, &s).unwrap();
            assert!(m.total_distance <= init.total_distance + 1e-9);
            assert!((m.total_distance - s.total_distance).abs() < 1e-9);
            checked += 1;
            if checked == 3 {
                break;
            }
        }
        assert!(checked > 0);
    }
}
