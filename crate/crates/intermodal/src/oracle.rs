//! Reference optima by literal enumeration: every compartment packing, every
//! service chain, every delivery permutation. Exponential on purpose; callers
//! pass a step budget and keep instances tiny.
//!
//! Nothing here touches the MILP machinery or the dynamic-programming route
//! solver's search tricks, so agreement with the real solvers is a meaningful
//! check rather than the same code run twice.

use std::collections::{BTreeMap, BTreeSet};

use crate::instance::{DeliveryMode, Instance};
use crate::plan::{Plan, ScheduledFirstMile, ScheduledTemplate};
use crate::route::{brute_force_route, PenaltyKind, RouteTask};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("enumeration budget of {0} steps exhausted")]
    Budget(u64),
    #[error("route: {0}")]
    Route(#[from] crate::route::RouteError),
}

#[derive(Debug, Clone)]
pub struct ExhaustiveResult {
    pub objective: f64,
    pub plan: Plan,
}

/// Optimal plan for the two-stage problem, or None when no feasible plan
/// exists. `step_cap` bounds total search nodes.
pub fn exhaustive_base_optimum(
    inst: &Instance,
    step_cap: u64,
) -> Result<Option<ExhaustiveResult>, OracleError> {
    Search::new(inst, step_cap, false).run()
}

/// Optimal plan for the three-stage variant: first-mile pickups, intermodal
/// chains, and a mix of per-service routes and pooled template deliveries,
/// with quadratic daily tardiness. None when infeasible.
pub fn exhaustive_extended_optimum(
    inst: &Instance,
    step_cap: u64,
) -> Result<Option<ExhaustiveResult>, OracleError> {
    Search::new(inst, step_cap, true).run()
}

/// Copy of the instance keeping only services that depart before `horizon`.
/// Shrinks the chain space so exhaustive search and brute-force routing stay
/// tractable on generated instances.
pub fn keep_early_services(inst: &Instance, horizon: i64) -> Instance {
    let mut out = inst.clone();
    out.services.retain(|s| s.departure < horizon);
    out
}

struct Search<'a> {
    inst: &'a Instance,
    extended: bool,
    cap_units: u32,
    /// DC hub ids in instance order, with their order and compartment
    /// indices and every chain (service index sequence) to any satellite.
    dcs: Vec<String>,
    dc_orders: Vec<Vec<usize>>,
    dc_comps: Vec<Vec<usize>>,
    dc_chains: Vec<Vec<Vec<usize>>>,
    steps: u64,
    step_cap: u64,
    best: Option<ExhaustiveResult>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance, step_cap: u64, extended: bool) -> Search<'a> {
        let dcs: Vec<String> = inst.dc_hubs().map(|h| h.id.clone()).collect();
        let dc_orders = dcs
            .iter()
            .map(|j| {
                inst.orders
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| &o.dc == j)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let dc_comps = dcs
            .iter()
            .map(|j| {
                inst.compartments
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| &c.dc == j)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let dc_chains = dcs.iter().map(|j| enumerate_chains(inst, j)).collect();
        Search {
            inst,
            extended,
            cap_units: inst.compartment_capacity(),
            dcs,
            dc_orders,
            dc_comps,
            dc_chains,
            steps: 0,
            step_cap,
            best: None,
        }
    }

    fn tick(&mut self) -> Result<(), OracleError> {
        self.steps += 1;
        if self.steps > self.step_cap {
            return Err(OracleError::Budget(self.step_cap));
        }
        Ok(())
    }

    fn run(mut self) -> Result<Option<ExhaustiveResult>, OracleError> {
        let mut groups = Vec::new();
        self.split_dc(0, &mut groups)?;
        Ok(self.best.take())
    }

    /// Partition each DC's orders into capacity-respecting blocks. Blocks are
    /// opened in first-member order, which enumerates each set partition once.
    fn split_dc(
        &mut self,
        dc_i: usize,
        groups: &mut Vec<(usize, Vec<usize>)>,
    ) -> Result<(), OracleError> {
        if dc_i == self.dcs.len() {
            let mut counts = BTreeMap::new();
            let mut picked = Vec::new();
            return self.pick_chains(0, groups, &mut counts, &mut picked);
        }
        let base = groups.len();
        self.grow(dc_i, 0, base, groups)
    }

    fn grow(
        &mut self,
        dc_i: usize,
        item: usize,
        base: usize,
        groups: &mut Vec<(usize, Vec<usize>)>,
    ) -> Result<(), OracleError> {
        self.tick()?;
        if item == self.dc_orders[dc_i].len() {
            return self.split_dc(dc_i + 1, groups);
        }
        let n = self.dc_orders[dc_i][item];
        let qty = self.inst.orders[n].quantity;
        for b in base..groups.len() {
            let used: u32 = groups[b].1.iter().map(|&k| self.inst.orders[k].quantity).sum();
            if used + qty <= self.cap_units {
                groups[b].1.push(n);
                self.grow(dc_i, item + 1, base, groups)?;
                groups[b].1.pop();
            }
        }
        if qty <= self.cap_units && groups.len() - base < self.dc_comps[dc_i].len() {
            groups.push((dc_i, vec![n]));
            self.grow(dc_i, item + 1, base, groups)?;
            groups.pop();
        }
        Ok(())
    }

    /// Give every block a chain, respecting per-service compartment capacity
    /// jointly across blocks.
    fn pick_chains(
        &mut self,
        gi: usize,
        groups: &[(usize, Vec<usize>)],
        counts: &mut BTreeMap<usize, u32>,
        picked: &mut Vec<usize>,
    ) -> Result<(), OracleError> {
        self.tick()?;
        if gi == groups.len() {
            return self.finalize(groups, picked);
        }
        let dc_i = groups[gi].0;
        for ci in 0..self.dc_chains[dc_i].len() {
            let chain = self.dc_chains[dc_i][ci].clone();
            let overloaded = chain
                .iter()
                .any(|&s| counts.get(&s).copied().unwrap_or(0) + 1 > self.inst.services[s].capacity);
            if overloaded {
                continue;
            }
            for &s in &chain {
                *counts.entry(s).or_insert(0) += 1;
            }
            picked.push(ci);
            self.pick_chains(gi + 1, groups, counts, picked)?;
            picked.pop();
            for &s in &chain {
                let c = counts.get_mut(&s).unwrap();
                *c -= 1;
                if *c == 0 {
                    counts.remove(&s);
                }
            }
        }
        Ok(())
    }

    fn finalize(
        &mut self,
        groups: &[(usize, Vec<usize>)],
        picked: &[usize],
    ) -> Result<(), OracleError> {
        self.tick()?;
        let inst = self.inst;
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        let mut terminal: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (gi, (dc_i, block)) in groups.iter().enumerate() {
            let chain = &self.dc_chains[*dc_i][picked[gi]];
            for &s in chain {
                *counts.entry(s).or_insert(0) += 1;
            }
            terminal.entry(*chain.last().unwrap()).or_default().extend(block.iter().copied());
        }
        let mut total = 0.0;
        for (&s, &c) in &counts {
            total += inst.services[s].fixed_cost + inst.services[s].travel_cost * c as f64;
        }
        if let Some(best) = &self.best {
            if total >= best.objective {
                return Ok(());
            }
        }

        let penalty = if self.extended { PenaltyKind::Quadratic } else { PenaltyKind::Linear };
        let mut routes: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut pooled: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
        for (&si, members) in &terminal {
            let service = &inst.services[si];
            if self.extended && service.delivery == DeliveryMode::ConnectedHubs {
                let arrival = service.arrival as f64;
                pooled
                    .entry(service.dest.clone())
                    .or_default()
                    .extend(members.iter().map(|&n| (n, arrival)));
                continue;
            }
            let ids: Vec<String> = members.iter().map(|&n| inst.orders[n].id.clone()).collect();
            let task = RouteTask::from_instance(inst, &service.id, &ids, penalty)?;
            let sol = brute_force_route(&task)?;
            total += sol.objective;
            routes.insert(service.id.clone(), sol.sequence);
            if let Some(best) = &self.best {
                if total >= best.objective {
                    return Ok(());
                }
            }
        }

        let mut templates = Vec::new();
        for (sat, arrivals) in &pooled {
            match self.pooled_best(sat, arrivals)? {
                Some((cost, sched)) => {
                    total += cost;
                    templates.extend(sched);
                }
                None => return Ok(()),
            }
            if let Some(best) = &self.best {
                if total >= best.objective {
                    return Ok(());
                }
            }
        }

        let mut firstmile = Vec::new();
        if self.extended {
            let mut shipments: BTreeMap<usize, f64> = BTreeMap::new();
            for (gi, (dc_i, block)) in groups.iter().enumerate() {
                let chain = &self.dc_chains[*dc_i][picked[gi]];
                let dep = inst.services[chain[0]].departure as f64;
                for &n in block {
                    shipments.insert(n, dep);
                }
            }
            match self.pickups_best(&shipments)? {
                Some((cost, sched)) => {
                    total += cost;
                    firstmile = sched;
                }
                None => return Ok(()),
            }
        }

        if let Some(best) = &self.best {
            if total >= best.objective {
                return Ok(());
            }
        }

        let mut plan = Plan::default();
        let mut used_per_dc: BTreeMap<usize, usize> = BTreeMap::new();
        for (gi, (dc_i, block)) in groups.iter().enumerate() {
            let slot = used_per_dc.entry(*dc_i).or_insert(0);
            let comp = &inst.compartments[self.dc_comps[*dc_i][*slot]];
            *slot += 1;
            for &n in block {
                plan.order_to_compartment.insert(inst.orders[n].id.clone(), comp.id.clone());
            }
            let chain = self.dc_chains[*dc_i][picked[gi]]
                .iter()
                .map(|&s| inst.services[s].id.clone())
                .collect();
            plan.compartment_chains.insert(comp.id.clone(), chain);
        }
        plan.routes = routes;
        if self.extended {
            plan.firstmile = Some(firstmile);
            plan.templates = Some(templates);
        }
        self.best = Some(ExhaustiveResult { objective: total, plan });
        Ok(())
    }

    /// Cheapest template cover and dispatch schedule for the orders pooled at
    /// one satellite, or None when no exact cover exists. Tries every cover,
    /// every dispatch order, and every vehicle choice.
    fn pooled_best(
        &mut self,
        sat: &str,
        arrivals: &[(usize, f64)],
    ) -> Result<Option<(f64, Vec<ScheduledTemplate>)>, OracleError> {
        let inst = self.inst;
        let vehicles = inst
            .resources
            .as_ref()
            .and_then(|r| r.vehicles.get(sat).copied())
            .unwrap_or(0) as usize;
        if vehicles == 0 {
            return Ok(None);
        }
        let release: BTreeMap<&str, f64> = arrivals
            .iter()
            .map(|&(n, at)| (inst.orders[n].id.as_str(), at))
            .collect();
        let need: BTreeSet<&str> = release.keys().copied().collect();
        let templates: Vec<_> = inst
            .lastmile_templates
            .as_deref()
            .unwrap_or(&[])
            .iter()
            .filter(|t| t.satellite == sat && t.sequence.iter().all(|o| need.contains(o.as_str())))
            .collect();

        let mut jobs = Vec::new();
        for t in &templates {
            let mut at = inst
                .distances
                .satellite_leg(sat, &t.sequence[0])
                .expect("validated instance");
            let mut stops = Vec::new();
            let mut rel = f64::NEG_INFINITY;
            for (i, oid) in t.sequence.iter().enumerate() {
                if i > 0 {
                    at += inst
                        .distances
                        .order_leg(&t.sequence[i - 1], oid)
                        .expect("validated instance");
                }
                let o = inst.order(oid).unwrap();
                stops.push((o.weight, o.due, at));
                rel = rel.max(release[oid.as_str()]);
            }
            jobs.push(PooledJob { template: t.id.clone(), release: rel, length: at, stops });
        }

        let mut covers: Vec<Vec<usize>> = Vec::new();
        let mut chosen = Vec::new();
        find_covers(
            &need,
            &templates.iter().map(|t| &t.sequence).collect::<Vec<_>>(),
            &BTreeSet::new(),
            &mut chosen,
            &mut covers,
        );
        if covers.is_empty() {
            return Ok(None);
        }

        let mut best: Option<(f64, Vec<ScheduledTemplate>)> = None;
        for cover in &covers {
            self.tick()?;
            let picked: Vec<&PooledJob> = cover.iter().map(|&i| &jobs[i]).collect();
            let k = vehicles.min(picked.len());
            let mut remaining: Vec<usize> = (0..picked.len()).collect();
            let mut free = vec![0.0f64; k];
            let mut starts = vec![0.0f64; picked.len()];
            let mut found: Option<(f64, Vec<f64>)> = None;
            self.dispatch_rec(&picked, &mut remaining, &mut free, &mut starts, 0.0, &mut found)?;
            if let Some((cost, starts)) = found {
                let better = best.as_ref().is_none_or(|(b, _)| cost < *b);
                if better {
                    let witness = picked
                        .iter()
                        .zip(starts)
                        .map(|(j, start)| ScheduledTemplate { template: j.template.clone(), start })
                        .collect();
                    best = Some((cost, witness));
                }
            }
        }
        // A cover always schedules: vehicles can wait, so scarcity delays but
        // never blocks. Only an uncoverable order set yields None.
        Ok(best)
    }

    /// Minimum total cost over every dispatch order and vehicle choice for
    /// one fixed cover. A vehicle runs one job at a time, starting no earlier
    /// than the job's release.
    fn dispatch_rec(
        &mut self,
        jobs: &[&PooledJob],
        remaining: &mut Vec<usize>,
        free: &mut [f64],
        starts: &mut [f64],
        acc: f64,
        best: &mut Option<(f64, Vec<f64>)>,
    ) -> Result<(), OracleError> {
        self.tick()?;
        if remaining.is_empty() {
            if best.as_ref().is_none_or(|(b, _)| acc < *b) {
                *best = Some((acc, starts.to_vec()));
            }
            return Ok(());
        }
        if let Some((b, _)) = best {
            if acc >= *b {
                return Ok(());
            }
        }
        for idx in 0..remaining.len() {
            let j = remaining[idx];
            let mut seen: Vec<f64> = Vec::new();
            for m in 0..free.len() {
                if seen.iter().any(|&t| t == free[m]) {
                    continue;
                }
                seen.push(free[m]);
                let start = free[m].max(jobs[j].release);
                let was = free[m];
                free[m] = start + jobs[j].length;
                starts[j] = start;
                let cost = jobs[j].cost_at(start);
                remaining.remove(idx);
                self.dispatch_rec(jobs, remaining, free, starts, acc + cost, best)?;
                remaining.insert(idx, j);
                free[m] = was;
            }
        }
        Ok(())
    }

    /// Cheapest first-mile cover with a deadline-feasible truck schedule, per
    /// DC independently, or None when some DC cannot be covered in time.
    fn pickups_best(
        &mut self,
        shipments: &BTreeMap<usize, f64>,
    ) -> Result<Option<(f64, Vec<ScheduledFirstMile>)>, OracleError> {
        let inst = self.inst;
        let routes = inst.firstmile_routes.as_deref().unwrap_or(&[]);
        let mut total = 0.0;
        let mut sched = Vec::new();
        for (dc_i, dc) in self.dcs.clone().iter().enumerate() {
            let need: BTreeSet<&str> = self.dc_orders[dc_i]
                .iter()
                .map(|&n| inst.orders[n].id.as_str())
                .collect();
            if need.is_empty() {
                continue;
            }
            let trucks = inst
                .resources
                .as_ref()
                .and_then(|r| r.trucks.get(dc).copied())
                .unwrap_or(0) as usize;
            if trucks == 0 {
                return Ok(None);
            }
            let candidates: Vec<_> = routes
                .iter()
                .filter(|r| &r.dc == dc && r.orders.iter().all(|o| need.contains(o.as_str())))
                .collect();
            let seqs: Vec<&Vec<String>> = candidates.iter().map(|r| &r.orders).collect();
            let mut covers = Vec::new();
            let mut chosen = Vec::new();
            find_covers(&need, &seqs, &BTreeSet::new(), &mut chosen, &mut covers);

            let mut best: Option<(f64, Vec<ScheduledFirstMile>)> = None;
            for cover in &covers {
                self.tick()?;
                let cost: f64 = cover.iter().map(|&i| candidates[i].cost).sum();
                if best.as_ref().is_some_and(|(b, _)| cost >= *b) {
                    continue;
                }
                // Deadline per chosen route: every covered order must be at
                // the hub before its chain departs.
                let mut items: Vec<(usize, f64, f64)> = cover
                    .iter()
                    .map(|&i| {
                        let r = candidates[i];
                        let deadline = r
                            .orders
                            .iter()
                            .map(|o| {
                                let n = inst.orders.iter().position(|x| &x.id == o).unwrap();
                                shipments[&n]
                            })
                            .fold(f64::INFINITY, f64::min);
                        (i, r.duration() as f64, deadline)
                    })
                    .collect();
                items.sort_by(|a, b| a.2.total_cmp(&b.2));
                let mut free = vec![0.0f64; trucks.min(items.len())];
                let mut starts = vec![0.0f64; items.len()];
                if self.deadline_rec(&items, 0, &mut free, &mut starts)? {
                    let witness = items
                        .iter()
                        .zip(&starts)
                        .map(|((i, _, _), &start)| ScheduledFirstMile {
                            route: candidates[*i].id.clone(),
                            start,
                        })
                        .collect();
                    best = Some((cost, witness));
                }
            }
            match best {
                Some((cost, witness)) => {
                    total += cost;
                    sched.extend(witness);
                }
                None => return Ok(None),
            }
        }
        Ok(Some((total, sched)))
    }

    /// Exact deadline feasibility on identical trucks: jobs in deadline order,
    /// branch over trucks, start as soon as the truck frees. Starting later
    /// than necessary never helps feasibility.
    fn deadline_rec(
        &mut self,
        items: &[(usize, f64, f64)],
        at: usize,
        free: &mut [f64],
        starts: &mut [f64],
    ) -> Result<bool, OracleError> {
        self.tick()?;
        if at == items.len() {
            return Ok(true);
        }
        let (_, duration, deadline) = items[at];
        let mut seen = Vec::new();
        for m in 0..free.len() {
            if seen.iter().any(|&t: &f64| t == free[m]) {
                continue;
            }
            seen.push(free[m]);
            let end = free[m] + duration;
            if end > deadline {
                continue;
            }
            let was = free[m];
            free[m] = end;
            starts[at] = was;
            if self.deadline_rec(items, at + 1, free, starts)? {
                return Ok(true);
            }
            free[m] = was;
        }
        Ok(false)
    }
}

/// All exact covers of `need` from candidate sequences, by index. Recursion
/// anchors on the smallest uncovered id so each cover appears once.
fn find_covers<'a>(
    need: &BTreeSet<&str>,
    candidates: &[&'a Vec<String>],
    covered: &BTreeSet<&'a str>,
    chosen: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let Some(anchor) = need.iter().find(|o| !covered.contains(*o)) else {
        out.push(chosen.clone());
        return;
    };
    for (i, seq) in candidates.iter().enumerate() {
        if !seq.iter().any(|o| o.as_str() == *anchor) {
            continue;
        }
        if seq.iter().any(|o| covered.contains(o.as_str())) {
            continue;
        }
        let mut next = covered.clone();
        for o in seq.iter() {
            next.insert(o.as_str());
        }
        chosen.push(i);
        find_covers(need, candidates, &next, chosen, out);
        chosen.pop();
    }
}

/// Simple service chains from a DC to any satellite: time-respecting, and
/// every pair checked against the forbidden co-assignment rules directly.
fn enumerate_chains(inst: &Instance, dc: &str) -> Vec<Vec<usize>> {
    let forbidden = crate::instance::compute_forbidden_coassignments(&inst.services);
    let sat: BTreeSet<&str> = inst.satellites().map(|h| h.id.as_str()).collect();
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    extend_chain(inst, &forbidden, &sat, dc, &mut prefix, &mut out);
    out
}

fn extend_chain(
    inst: &Instance,
    forbidden: &BTreeMap<String, BTreeSet<String>>,
    sat: &BTreeSet<&str>,
    here: &str,
    prefix: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    for (si, s) in inst.services.iter().enumerate() {
        if s.origin != here {
            continue;
        }
        if let Some(&last) = prefix.last() {
            if s.departure < inst.services[last].arrival {
                continue;
            }
        }
        let clash = prefix.iter().any(|&p| {
            let pid = &inst.services[p].id;
            forbidden.get(pid).is_some_and(|set| set.contains(&s.id))
                || forbidden.get(&s.id).is_some_and(|set| set.contains(pid))
        });
        if clash {
            continue;
        }
        prefix.push(si);
        if sat.contains(s.dest.as_str()) {
            out.push(prefix.clone());
        } else {
            extend_chain(inst, forbidden, sat, &s.dest, prefix, out);
        }
        prefix.pop();
    }
}

/// One priced template: fixed length and handoff offsets, released when the
/// last covered order reaches the satellite.
struct PooledJob {
    template: String,
    release: f64,
    length: f64,
    /// (weight, due, hours into the route at handoff)
    stops: Vec<(u32, i64, f64)>,
}

impl PooledJob {
    fn cost_at(&self, start: f64) -> f64 {
        let mut cost = self.length;
        for &(weight, due, offset) in &self.stops {
            let days = crate::tol::tardiness_days(start + offset, due);
            cost += PenaltyKind::Quadratic.cost(weight, days);
        }
        cost
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorConfig};
    use crate::plan::verify_plan;

    #[test]
    fn oracle_plan_verifies_and_prices_consistently() {
        let inst = generate(&GeneratorConfig::new(1, 1, 3, 7));
        let thin = keep_early_services(&inst, 72);
        let got = exhaustive_base_optimum(&thin, 50_000_000).unwrap().unwrap();
        let eval = verify_plan(&thin, &got.plan);
        assert!(eval.is_feasible(), "{:?}", eval.violations);
        assert!((eval.total - got.objective).abs() < 1e-6);
    }

    #[test]
    fn no_services_means_infeasible() {
        let mut inst = generate(&GeneratorConfig::new(1, 1, 2, 7));
        inst.services.clear();
        let got = exhaustive_base_optimum(&inst, 1_000_000).unwrap();
        assert!(got.is_none());
    }

    #[test]
    fn budget_is_enforced() {
        let inst = generate(&GeneratorConfig::new(1, 1, 4, 7));
        match exhaustive_base_optimum(&inst, 10) {
            Err(OracleError::Budget(10)) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn exact_covers_anchor_on_smallest() {
        let need: BTreeSet<&str> = ["a", "b", "c"].into_iter().collect();
        let s1 = vec!["a".to_string()];
        let s2 = vec!["b".to_string(), "c".to_string()];
        let s3 = vec!["a".to_string(), "b".to_string()];
        let s4 = vec!["c".to_string()];
        let s5 = vec!["b".to_string()];
        let cands = [&s1, &s2, &s3, &s4, &s5];
        let mut covers = Vec::new();
        find_covers(&need, &cands, &BTreeSet::new(), &mut Vec::new(), &mut covers);
        // {a}{b,c}, {a}{c}{b}, {a,b}{c}
        assert_eq!(covers.len(), 3);
        for c in &covers {
            let mut seen = BTreeSet::new();
            for &i in c {
                for o in cands[i] {
                    assert!(seen.insert(o.as_str()));
                }
            }
            assert_eq!(seen, need);
        }
    }

    #[test]
    fn chains_are_time_respecting() {
        let inst = generate(&GeneratorConfig::new(2, 2, 4, 11));
        for dc in ["J1", "J2"] {
            let chains = enumerate_chains(&inst, dc);
            assert!(!chains.is_empty());
            for chain in &chains {
                assert_eq!(inst.services[chain[0]].origin, dc);
                for w in chain.windows(2) {
                    let a = &inst.services[w[0]];
                    let b = &inst.services[w[1]];
                    assert_eq!(a.dest, b.origin);
                    assert!(b.departure >= a.arrival);
                }
            }
        }
    }
}
