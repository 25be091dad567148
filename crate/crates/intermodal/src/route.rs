//! Exact single-service delivery routing: one open route from a satellite
//! through every assigned order, minimizing traversed distance plus weighted
//! tardiness (linear or squared in whole days late). The vehicle's return to
//! the satellite closes the tour physically but is never costed.
//!
//! Distances double as travel times, so the clock at the last visited order
//! is the release time plus the distance traveled so far. The solver runs a
//! bitmask dynamic program over (visited set, last order) keeping a Pareto
//! frontier of (distance, penalty) pairs, then reconstructs the
//! lexicographically smallest optimal visiting sequence by bounded
//! depth-first search against the proven optimum.

use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::tol;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RouteError {
    #[error("route task has no orders")]
    Empty,
    #[error("route task has {n} orders, above the exact-solve cap {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("route task is malformed: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    /// Cost w * T per order, T in whole days late.
    Linear,
    /// Cost w * T^2 per order.
    Quadratic,
}

impl PenaltyKind {
    pub fn cost(self, weight: u32, days: u64) -> f64 {
        match self {
            PenaltyKind::Linear => weight as f64 * days as f64,
            PenaltyKind::Quadratic => weight as f64 * (days * days) as f64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteOrder {
    pub id: String,
    pub due: i64,
    pub weight: u32,
}

/// A priced routing task: orders are kept sorted by id, and the distance
/// tables are indexed by that order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteTask {
    pub satellite: String,
    /// Hour the goods become available at the satellite (service arrival).
    pub release: f64,
    pub orders: Vec<RouteOrder>,
    /// start_legs[i]: satellite -> order i.
    pub start_legs: Vec<f64>,
    /// legs[i][j]: order i -> order j.
    pub legs: Vec<Vec<f64>>,
    pub penalty: PenaltyKind,
}

impl RouteTask {
    pub fn new(
        satellite: impl Into<String>,
        release: f64,
        mut orders: Vec<RouteOrder>,
        penalty: PenaltyKind,
        start_leg: impl Fn(&str) -> f64,
        leg: impl Fn(&str, &str) -> f64,
    ) -> RouteTask {
        orders.sort_by(|a, b| a.id.cmp(&b.id));
        let start_legs = orders.iter().map(|o| start_leg(&o.id)).collect();
        let legs = orders
            .iter()
            .map(|a| orders.iter().map(|b| leg(&a.id, &b.id)).collect())
            .collect();
        RouteTask {
            satellite: satellite.into(),
            release,
            orders,
            start_legs,
            legs,
            penalty,
        }
    }

    /// Build the task priced by an instance's distance matrix for the orders
    /// assigned to one satellite-bound service.
    pub fn from_instance(
        inst: &Instance,
        service_id: &str,
        order_ids: &[String],
        penalty: PenaltyKind,
    ) -> Result<RouteTask, RouteError> {
        let service = inst
            .service(service_id)
            .ok_or_else(|| RouteError::Malformed(format!("unknown service {service_id}")))?;
        let satellite = service.dest.clone();
        let mut orders = Vec::new();
        for id in order_ids {
            let o = inst
                .order(id)
                .ok_or_else(|| RouteError::Malformed(format!("unknown order {id}")))?;
            orders.push(RouteOrder { id: o.id.clone(), due: o.due, weight: o.weight });
        }
        let dist = &inst.distances;
        let sat = satellite.clone();
        Ok(RouteTask::new(
            satellite,
            service.arrival as f64,
            orders,
            penalty,
            |n| dist.satellite_leg(&sat, n).unwrap_or(f64::NAN),
            |a, b| dist.order_leg(a, b).unwrap_or(f64::NAN),
        ))
    }

    pub(crate) fn check(&self, cap: usize) -> Result<(), RouteError> {
        let n = self.orders.len();
        if n == 0 {
            return Err(RouteError::Empty);
        }
        if n > cap {
            return Err(RouteError::TooLarge { n, cap });
        }
        if self.start_legs.len() != n || self.legs.len() != n {
            return Err(RouteError::Malformed("distance table shape mismatch".into()));
        }
        for (i, row) in self.legs.iter().enumerate() {
            if row.len() != n {
                return Err(RouteError::Malformed("distance table shape mismatch".into()));
            }
            for (j, d) in row.iter().enumerate() {
                if i != j && !(d.is_finite() && *d >= 0.0) {
                    return Err(RouteError::Malformed(format!(
                        "leg {} -> {} unpriced",
                        self.orders[i].id, self.orders[j].id
                    )));
                }
            }
        }
        if self.start_legs.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(RouteError::Malformed("start leg unpriced".into()));
        }
        Ok(())
    }

    /// Distance and penalty of a visiting sequence given as indices into
    /// `orders`.
    fn eval(&self, seq: &[usize]) -> (f64, f64) {
        let mut dist = 0.0;
        let mut pen = 0.0;
        let mut prev: Option<usize> = None;
        for &i in seq {
            dist += match prev {
                None => self.start_legs[i],
                Some(p) => self.legs[p][i],
            };
            let o = &self.orders[i];
            let days = tol::tardiness_days(self.release + dist, o.due);
            pen += self.penalty.cost(o.weight, days);
            prev = Some(i);
        }
        (dist, pen)
    }

    pub(crate) fn solution_from(&self, seq: Vec<usize>) -> RouteSolution {
        let mut dist = 0.0;
        let mut completion = Vec::new();
        let mut tardiness = Vec::new();
        let mut penalty_cost = 0.0;
        let mut prev: Option<usize> = None;
        for &i in &seq {
            dist += match prev {
                None => self.start_legs[i],
                Some(p) => self.legs[p][i],
            };
            let c = self.release + dist;
            let o = &self.orders[i];
            let days = tol::tardiness_days(c, o.due);
            penalty_cost += self.penalty.cost(o.weight, days);
            completion.push(c);
            tardiness.push(days);
            prev = Some(i);
        }
        RouteSolution {
            sequence: seq.iter().map(|&i| self.orders[i].id.clone()).collect(),
            completion,
            tardiness,
            route_cost: dist,
            penalty_cost,
            objective: dist + penalty_cost,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteSolution {
    /// Order ids in visiting sequence.
    pub sequence: Vec<String>,
    /// Delivery hour per visited order, aligned with `sequence`.
    pub completion: Vec<f64>,
    /// Whole days late per visited order, aligned with `sequence`.
    pub tardiness: Vec<u64>,
    /// Distance traversed from the satellite through the last order.
    pub route_cost: f64,
    pub penalty_cost: f64,
    /// route_cost + penalty_cost.
    pub objective: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RouteLimits {
    /// Largest order count the dynamic program accepts.
    pub exact_cap: usize,
}

impl Default for RouteLimits {
    fn default() -> Self {
        RouteLimits { exact_cap: 18 }
    }
}

/// Exact solve. Returns the optimal objective together with the
/// lexicographically smallest optimal visiting sequence.
pub fn solve_route(task: &RouteTask, limits: &RouteLimits) -> Result<RouteSolution, RouteError> {
    task.check(limits.exact_cap)?;
    let n = task.orders.len();

    // Pareto frontiers of (distance, penalty) per (visited set, last order),
    // layered by set size so only two layers live at a time. Lower distance
    // means an earlier clock, so neither component can be sacrificed safely;
    // only dominated pairs are dropped.
    type Layer = std::collections::HashMap<u32, Vec<Vec<(f64, f64)>>>;
    let push = |layer: &mut Layer, mask: u32, last: usize, dist: f64, pen: f64| {
        let list = &mut layer.entry(mask).or_insert_with(|| vec![Vec::new(); n])[last];
        if list.iter().any(|&(d, p)| d <= dist && p <= pen) {
            return;
        }
        list.retain(|&(d, p)| !(dist <= d && pen <= p));
        list.push((dist, pen));
    };

    let mut layer: Layer = Layer::new();
    for i in 0..n {
        let dist = task.start_legs[i];
        let o = &task.orders[i];
        let days = tol::tardiness_days(task.release + dist, o.due);
        push(&mut layer, 1 << i, i, dist, task.penalty.cost(o.weight, days));
    }
    for _size in 1..n {
        let mut next_layer: Layer = Layer::new();
        for (&mask, per_last) in &layer {
            for (last, entries) in per_last.iter().enumerate() {
                for next in 0..n {
                    if mask & (1 << next) != 0 {
                        continue;
                    }
                    let leg = task.legs[last][next];
                    let o = &task.orders[next];
                    for &(dist, pen) in entries {
                        let nd = dist + leg;
                        let days = tol::tardiness_days(task.release + nd, o.due);
                        let np = pen + task.penalty.cost(o.weight, days);
                        push(&mut next_layer, mask | (1 << next), next, nd, np);
                    }
                }
            }
        }
        layer = next_layer;
    }

    let mut best = f64::INFINITY;
    for per_last in layer.values() {
        for entries in per_last {
            for &(d, p) in entries {
                best = best.min(d + p);
            }
        }
    }

    // Reconstruct the lexicographically smallest sequence achieving `best`:
    // depth-first over candidates in id order, pruning branches whose
    // cheapest completion exceeds the optimum. The first full sequence
    // matching `best` is the lexicographic minimum.
    let mut rank: Vec<usize> = (0..n).collect();
    rank.sort_by(|&a, &b| task.orders[a].id.cmp(&task.orders[b].id));
    let min_in: Vec<f64> = (0..n)
        .map(|j| {
            let mut m = task.start_legs[j];
            for i in 0..n {
                if i != j {
                    m = m.min(task.legs[i][j]);
                }
            }
            m
        })
        .collect();
    let mut seq = Vec::with_capacity(n);
    let found = reconstruct(task, best, &min_in, &rank, 0, None, 0.0, 0.0, &mut seq);
    assert!(found, "reconstruction must reach the DP optimum");
    Ok(task.solution_from(seq))
}

#[allow(clippy::too_many_arguments)]
fn reconstruct(
    task: &RouteTask,
    best: f64,
    min_in: &[f64],
    rank: &[usize],
    mask: u32,
    last: Option<usize>,
    dist: f64,
    pen: f64,
    seq: &mut Vec<usize>,
) -> bool {
    let n = task.orders.len();
    if seq.len() == n {
        return dist + pen <= best + tol::CEIL_EPS;
    }
    // Remaining work can never cost less than each unvisited order's cheapest
    // incoming leg plus its penalty at the earliest conceivable delivery.
    let mut bound = dist + pen;
    for j in 0..n {
        if mask & (1 << j) == 0 {
            let o = &task.orders[j];
            let days = tol::tardiness_days(task.release + dist + min_in[j], o.due);
            bound += min_in[j] + task.penalty.cost(o.weight, days);
        }
    }
    if bound > best + tol::CEIL_EPS {
        return false;
    }
    for &next in rank {
        if mask & (1 << next) != 0 {
            continue;
        }
        let leg = match last {
            None => task.start_legs[next],
            Some(p) => task.legs[p][next],
        };
        let o = &task.orders[next];
        let nd = dist + leg;
        let days = tol::tardiness_days(task.release + nd, o.due);
        let np = pen + task.penalty.cost(o.weight, days);
        seq.push(next);
        if reconstruct(task, best, min_in, rank, mask | (1 << next), Some(next), nd, np, seq) {
            return true;
        }
        seq.pop();
    }
    false
}

/// Reference oracle: full permutation scan, first-found minimum under
/// lexicographic enumeration by order id. Refuses more than 9 orders.
pub fn brute_force_route(task: &RouteTask) -> Result<RouteSolution, RouteError> {
    task.check(9)?;
    let n = task.orders.len();
    let mut best_seq: Option<Vec<usize>> = None;
    let mut best = f64::INFINITY;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| task.orders[a].id.cmp(&task.orders[b].id));
    permute(&mut perm, 0, &mut |seq| {
        let (d, p) = task.eval(seq);
        if d + p < best {
            best = d + p;
            best_seq = Some(seq.to_vec());
        }
    });
    Ok(task.solution_from(best_seq.expect("nonempty task")))
}

/// Visit permutations of `items[k..]` in lexicographic order relative to the
/// arrangement passed in.
fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    // Take each remaining candidate in ascending order while keeping the
    // tail sorted, so full sequences appear lexicographically.
    let tail: Vec<usize> = items[k..].to_vec();
    for (offset, &candidate) in tail.iter().enumerate() {
        items[k..].copy_from_slice(&tail);
        items.remove(k + offset);
        items.insert(k, candidate);
        permute(items, k + 1, visit);
    }
    items[k..].copy_from_slice(&tail);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn task(
        release: f64,
        orders: Vec<(&str, i64, u32)>,
        start: Vec<f64>,
        legs: Vec<Vec<f64>>,
        penalty: PenaltyKind,
    ) -> RouteTask {
        let orders: Vec<RouteOrder> = orders
            .into_iter()
            .map(|(id, due, weight)| RouteOrder { id: id.into(), due, weight })
            .collect();
        RouteTask {
            satellite: "L1".into(),
            release,
            orders,
            start_legs: start,
            legs,
            penalty,
        }
    }

    #[test]
    fn single_order_closed_form() {
        // zeta = c_l1 + w * ceil((release + c_l1 - due)/24)+.
        let t = task(100.0, vec![("N1", 110, 3)], vec![14.0], vec![vec![0.0]], PenaltyKind::Linear);
        let sol = solve_route(&t, &RouteLimits::default()).unwrap();
        // Delivery at 114, 4h late -> 1 day, penalty 3.
        assert_eq!(sol.sequence, vec!["N1"]);
        assert_eq!(sol.objective, 14.0 + 3.0);
        assert_eq!(sol.tardiness, vec![1]);
    }

    #[test]
    fn zero_weights_reduce_to_shortest_path() {
        let t = task(
            0.0,
            vec![("N1", 1000, 1), ("N2", 1000, 1)],
            vec![5.0, 2.0],
            vec![vec![0.0, 4.0], vec![4.0, 0.0]],
            PenaltyKind::Linear,
        );
        let sol = solve_route(&t, &RouteLimits::default()).unwrap();
        // min(5+4, 2+4) = 6 via N2 first.
        assert_eq!(sol.objective, 6.0);
        assert_eq!(sol.sequence, vec!["N2", "N1"]);
    }

    #[test]
    fn tie_breaks_to_lexicographically_smallest() {
        // Fully symmetric: every sequence costs the same, so N1-first wins.
        let t = task(
            0.0,
            vec![("N2", 1000, 1), ("N1", 1000, 1)],
            vec![3.0, 3.0],
            vec![vec![0.0, 3.0], vec![3.0, 0.0]],
            PenaltyKind::Linear,
        );
        let dp = solve_route(&t, &RouteLimits::default()).unwrap();
        let bf = brute_force_route(&t).unwrap();
        assert_eq!(dp.sequence, vec!["N1", "N2"]);
        assert_eq!(bf.sequence, vec!["N1", "N2"]);
    }

    #[test]
    fn cap_is_enforced() {
        let orders: Vec<(String, i64, u32)> =
            (0..20).map(|i| (format!("N{i:02}"), 100, 1)).collect();
        let n = orders.len();
        let t = RouteTask {
            satellite: "L1".into(),
            release: 0.0,
            orders: orders
                .iter()
                .map(|(id, due, w)| RouteOrder { id: id.clone(), due: *due, weight: *w })
                .collect(),
            start_legs: vec![1.0; n],
            legs: vec![vec![1.0; n]; n],
            penalty: PenaltyKind::Linear,
        };
        assert!(matches!(
            solve_route(&t, &RouteLimits::default()),
            Err(RouteError::TooLarge { n: 20, cap: 18 })
        ));
        assert!(matches!(brute_force_route(&t), Err(RouteError::TooLarge { n: 20, cap: 9 })));
    }

    #[test]
    fn quadratic_penalty_squares_days() {
        let t = task(100.0, vec![("N1", 50, 2)], vec![10.0], vec![vec![0.0]], PenaltyKind::Quadratic);
        let sol = solve_route(&t, &RouteLimits::default()).unwrap();
        // Delivery at 110, 60h late -> 3 days, penalty 2*9 = 18.
        assert_eq!(sol.tardiness, vec![3]);
        assert_eq!(sol.objective, 10.0 + 18.0);
    }

    fn random_task(rng: &mut impl rand::Rng, n: usize, penalty: PenaltyKind) -> RouteTask {
        let orders: Vec<RouteOrder> = (0..n)
            .map(|i| RouteOrder {
                id: format!("N{i}"),
                due: rng.random_range(0..200),
                weight: rng.random_range(1..=10),
            })
            .collect();
        let start = (0..n).map(|_| rng.random_range(0.0..30.0)).collect();
        let legs = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { 0.0 } else { rng.random_range(0.0..30.0) })
                    .collect()
            })
            .collect();
        RouteTask {
            satellite: "L1".into(),
            release: rng.random_range(0.0..150.0),
            orders,
            start_legs: start,
            legs,
            penalty,
        }
    }

    #[test]
    fn dp_matches_brute_force_on_random_tasks() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..400 {
            let n = rng.random_range(1..=8);
            let penalty =
                if trial % 2 == 0 { PenaltyKind::Linear } else { PenaltyKind::Quadratic };
            let t = random_task(&mut rng, n, penalty);
            let dp = solve_route(&t, &RouteLimits::default()).unwrap();
            let bf = brute_force_route(&t).unwrap();
            assert_eq!(dp.objective, bf.objective, "trial {trial}");
            assert_eq!(dp.sequence, bf.sequence, "trial {trial}");
        }
    }

    #[test]
    fn later_release_never_cheapens_the_route() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let n = rng.random_range(1..=6);
            let mut t = random_task(&mut rng, n, PenaltyKind::Linear);
            let a = solve_route(&t, &RouteLimits::default()).unwrap().objective;
            t.release += rng.random_range(0.0..48.0);
            let b = solve_route(&t, &RouteLimits::default()).unwrap().objective;
            assert!(b >= a - 1e-9);
        }
    }
}
