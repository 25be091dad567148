//! Three-stage variant. Pickup routes feed orders from their pickup points to
//! the DC hubs before any compartment departs, and satellite-bound services
//! marked for consolidated delivery hand their orders to pooled last-mile
//! templates dispatched on a bounded vehicle fleet, paying squared daily
//! tardiness. The decomposition keeps the two-stage master and adds route
//! selection, a succession link between pickup completion and chain
//! departure, pooled-delivery surrogates, and a second subproblem that either
//! schedules the pickup and pooled stages or certifies that the replayed
//! selection can never be scheduled, in which case a feasibility cut removes
//! it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use crate::instance::{
    DeliveryMode, FirstMileRoute, Instance, LastMileTemplate, Order, Resources,
};
use crate::lbbd::{
    add_route_floors, add_service_cut_rows, compute_gap, evaluate_subproblems,
    extract_assignment_from_stage, Assignment, CutRecord, IterationTrace, LbbdConfig, LbbdError,
    LbbdReport, LbbdStatus, SubproblemResult,
};
use crate::plan::{Plan, ScheduledFirstMile, ScheduledTemplate};
use crate::route::PenaltyKind;
use crate::skeleton::{build_stage_one, StageOne};
use crate::solver::{self, Model, RowSense, SolveOutcome, SolverConfig, VarId};
use crate::tol;

#[derive(Debug, thiserror::Error)]
pub enum EnumerationError {
    #[error("{kind} enumeration reached {count} candidates, past the cap of {bound}")]
    TooMany { kind: &'static str, count: usize, bound: usize },
}

/// Bounds on the candidate pools built by [`enumerate_route_templates`].
/// Stop counts shape the pools; the two caps abort enumeration on instances
/// where the pools would explode.
#[derive(Debug, Clone)]
pub struct EnumerationCaps {
    /// Most orders collected by one pickup route.
    pub firstmile_stops: usize,
    /// Most stops in one delivery template.
    pub lastmile_stops: usize,
    pub max_firstmile_routes: usize,
    pub max_lastmile_templates: usize,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        EnumerationCaps {
            firstmile_stops: 3,
            lastmile_stops: 3,
            max_firstmile_routes: 20_000,
            max_lastmile_templates: 20_000,
        }
    }
}

/// Build the three-stage candidate pools from a base instance.
///
/// Pickup routes: per DC, every nonempty subset of its orders up to
/// `firstmile_stops` whose quantities fit one compartment. A route with k
/// stops nominally departs hour 6, takes 2k + 2 hours, and costs 30k + 50;
/// trucks may start it earlier or later, so only the duration binds.
/// Delivery templates: per satellite, every ordered sequence of distinct
/// orders up to `lastmile_stops`. Ids are assigned in enumeration order and
/// are stable for a given instance and caps.
pub fn enumerate_route_templates(
    inst: &Instance,
    caps: &EnumerationCaps,
) -> Result<(Vec<FirstMileRoute>, Vec<LastMileTemplate>), EnumerationError> {
    let capacity = inst.compartment_capacity();
    let mut routes: Vec<FirstMileRoute> = Vec::new();
    for dc in inst.dc_hubs() {
        let pool: Vec<&Order> = inst.orders.iter().filter(|o| o.dc == dc.id).collect();
        let mut picked: Vec<usize> = Vec::new();
        subsets(
            &pool,
            0,
            caps.firstmile_stops,
            capacity,
            &mut picked,
            &mut |chosen: &[usize]| {
                if routes.len() == caps.max_firstmile_routes {
                    return Err(EnumerationError::TooMany {
                        kind: "pickup route",
                        count: routes.len() + 1,
                        bound: caps.max_firstmile_routes,
                    });
                }
                let stops = chosen.len() as i64;
                routes.push(FirstMileRoute {
                    id: format!("F{}", routes.len() + 1),
                    dc: dc.id.clone(),
                    orders: chosen.iter().map(|&i| pool[i].id.clone()).collect(),
                    departure: 6,
                    arrival: 6 + 2 * stops + 2,
                    cost: 30.0 * stops as f64 + 50.0,
                });
                Ok(())
            },
        )?;
    }

    let mut templates: Vec<LastMileTemplate> = Vec::new();
    for sat in inst.satellites() {
        let mut used = vec![false; inst.orders.len()];
        let mut seq: Vec<usize> = Vec::new();
        sequences(inst, caps.lastmile_stops, &mut used, &mut seq, &mut |chosen: &[usize]| {
            if templates.len() == caps.max_lastmile_templates {
                return Err(EnumerationError::TooMany {
                    kind: "delivery template",
                    count: templates.len() + 1,
                    bound: caps.max_lastmile_templates,
                });
            }
            templates.push(LastMileTemplate {
                id: format!("R{}", templates.len() + 1),
                satellite: sat.id.clone(),
                sequence: chosen.iter().map(|&i| inst.orders[i].id.clone()).collect(),
            });
            Ok(())
        })?;
    }
    Ok((routes, templates))
}

fn subsets(
    pool: &[&Order],
    from: usize,
    room: usize,
    capacity: u32,
    picked: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]) -> Result<(), EnumerationError>,
) -> Result<(), EnumerationError> {
    if !picked.is_empty() {
        emit(picked)?;
    }
    if room == 0 {
        return Ok(());
    }
    for i in from..pool.len() {
        if pool[i].quantity > capacity {
            continue;
        }
        picked.push(i);
        subsets(pool, i + 1, room - 1, capacity - pool[i].quantity, picked, emit)?;
        picked.pop();
    }
    Ok(())
}

fn sequences(
    inst: &Instance,
    room: usize,
    used: &mut [bool],
    seq: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]) -> Result<(), EnumerationError>,
) -> Result<(), EnumerationError> {
    if !seq.is_empty() {
        emit(seq)?;
    }
    if room == 0 {
        return Ok(());
    }
    for i in 0..inst.orders.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        seq.push(i);
        sequences(inst, room - 1, used, seq, emit)?;
        seq.pop();
        used[i] = false;
    }
    Ok(())
}

/// How satellite-bound services get their delivery regime when extending a
/// two-stage instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DeliveryLayout {
    /// Clone each satellite-bound service into a consolidated twin, leaving
    /// the original open-route service in place. The solver then picks the
    /// regime per compartment. The twin doubles the physical capacity toward
    /// that satellite at those hours.
    #[default]
    Duplicate,
    /// Flip every satellite-bound service to consolidated delivery in place.
    AllConnected,
}

#[derive(Debug, Clone)]
pub struct ExtendOptions {
    pub caps: EnumerationCaps,
    pub layout: DeliveryLayout,
    pub trucks_per_dc: u32,
    pub vehicles_per_satellite: u32,
}

impl Default for ExtendOptions {
    fn default() -> Self {
        ExtendOptions {
            caps: EnumerationCaps::default(),
            layout: DeliveryLayout::default(),
            trucks_per_dc: 3,
            vehicles_per_satellite: 3,
        }
    }
}

/// Turn a two-stage instance into a three-stage one: mark or duplicate
/// satellite-bound services per `layout`, enumerate the pickup and template
/// pools, and attach uniform fleet counts.
pub fn extend_instance(base: &Instance, opts: &ExtendOptions) -> Result<Instance, EnumerationError> {
    let mut inst = base.clone();
    let sat_ids: BTreeSet<String> = inst.satellites().map(|h| h.id.clone()).collect();
    match opts.layout {
        DeliveryLayout::Duplicate => {
            let twins: Vec<_> = inst
                .services
                .iter()
                .filter(|s| sat_ids.contains(&s.dest) && s.delivery == DeliveryMode::HubSpoke)
                .map(|s| {
                    let mut twin = s.clone();
                    twin.id = format!("{}C", s.id);
                    twin.delivery = DeliveryMode::ConnectedHubs;
                    twin
                })
                .collect();
            inst.services.extend(twins);
        }
        DeliveryLayout::AllConnected => {
            for s in &mut inst.services {
                if sat_ids.contains(&s.dest) {
                    s.delivery = DeliveryMode::ConnectedHubs;
                }
            }
        }
    }
    let (routes, templates) = enumerate_route_templates(&inst, &opts.caps)?;
    inst.firstmile_routes = Some(routes);
    inst.lastmile_templates = Some(templates);
    let trucks = inst.dc_hubs().map(|h| (h.id.clone(), opts.trucks_per_dc)).collect();
    let vehicles =
        inst.satellites().map(|h| (h.id.clone(), opts.vehicles_per_satellite)).collect();
    inst.resources = Some(Resources { trucks, vehicles });
    Ok(inst)
}

/// One pooled-delivery optimality cut: the exact pooled value `zeta` of the
/// `members` (order, shipping service) pairs at `satellite`, tied to an
/// epigraph piece that collapses once any member pair breaks.
#[derive(Debug, Clone)]
pub struct SatelliteCut {
    pub satellite: String,
    pub members: Vec<(String, String)>,
    pub zeta: f64,
    pub z_var: VarId,
    pub iteration: usize,
}

/// One no-good on a succession whose pickup or pooled stage was proven
/// impossible to schedule: at least one of the recorded selections must flip.
#[derive(Debug, Clone)]
pub struct FeasibilityCut {
    /// Selected pickup route ids.
    pub routes: Vec<String>,
    /// Pinned (order, shipping service) pairs.
    pub pins: Vec<(String, String)>,
    pub witness: String,
    pub iteration: usize,
}

/// Master with handles for the three-stage loop. Compared to the two-stage
/// master it adds route-selection binaries and swaps the linear tardiness
/// surrogate for a squared one.
#[derive(Clone)]
pub struct ExtendedMaster {
    pub model: Model,
    pub(crate) stage: StageOne,
    pub z: VarId,
    pub cstar: Vec<VarId>,
    /// Per order, the squared-tardiness-days surrogate.
    pub taustar: Vec<VarId>,
    /// Per pickup route, in instance order, its selection binary.
    pub f: Vec<VarId>,
    pub cuts: Vec<CutRecord>,
    pub sat_cuts: Vec<SatelliteCut>,
    pub feasibility_cuts: Vec<FeasibilityCut>,
}

impl ExtendedMaster {
    pub fn solve(&self, config: &SolverConfig) -> SolveOutcome {
        solver::solve(&self.model, config)
    }
}

/// Floor on squared tardiness days for an order shipped on a service that
/// arrives past the order's due time. Delivery travel only adds delay on top
/// of the arrival, so ceil((arrival - due) / 24) squared is always owed.
/// None when the arrival alone is on time.
pub(crate) fn squared_delay_floor(arrival: i64, due: i64) -> Option<f64> {
    let late = arrival - due;
    if late <= 0 {
        return None;
    }
    let days = (late as u64).div_ceil(24);
    Some((days * days) as f64)
}

pub fn build_extended_master(inst: &Instance) -> ExtendedMaster {
    let routes = inst.firstmile_routes.as_deref().unwrap_or(&[]);
    let mut model = Model::new();
    let stage = build_stage_one(inst, &mut model, false);
    let z = model.add_continuous(0.0, f64::INFINITY, 1.0);
    let cstar: Vec<VarId> = (0..stage.sat_services.len())
        .map(|_| model.add_continuous(0.0, f64::INFINITY, 0.0))
        .collect();
    let taustar: Vec<VarId> = (0..inst.orders.len())
        .map(|_| model.add_continuous(0.0, f64::INFINITY, 0.0))
        .collect();
    let f: Vec<VarId> = routes.iter().map(|_| model.add_binary(0.0)).collect();

    // f(x) here covers service costs plus selected pickup routes.
    let f_terms = |coeffs: &mut Vec<(VarId, f64)>| {
        for (si, s) in inst.services.iter().enumerate() {
            coeffs.push((stage.v[si], -s.fixed_cost));
            coeffs.push((stage.count[si], -s.travel_cost));
        }
        for (ri, r) in routes.iter().enumerate() {
            coeffs.push((f[ri], -r.cost));
        }
    };

    let mut base = vec![(z, 1.0)];
    f_terms(&mut base);
    model.add_row(RowSense::Ge, 0.0, base);

    add_route_floors(inst, &mut model, &stage, &cstar);

    // Squared-tardiness surrogate. Unlike the two-stage floor this one skips
    // the final delivery leg: consolidated orders wait for their whole
    // template pool, so only the service arrival is guaranteed either way.
    for (sl, &si) in stage.sat_services.iter().enumerate() {
        let s = &inst.services[si];
        for (n, o) in inst.orders.iter().enumerate() {
            if let Some(floor) = squared_delay_floor(s.arrival, o.due) {
                model.add_row(
                    RowSense::Ge,
                    0.0,
                    vec![(taustar[n], 1.0), (stage.h[n][sl], -floor)],
                );
            }
        }
    }

    // z covers f(x) plus both surrogates.
    let mut full = vec![(z, 1.0)];
    f_terms(&mut full);
    for (n, o) in inst.orders.iter().enumerate() {
        full.push((taustar[n], -(o.weight as f64)));
    }
    for &cs in &cstar {
        full.push((cs, -1.0));
    }
    model.add_row(RowSense::Ge, 0.0, full);

    // Every order is picked up by exactly one selected route. An order no
    // route reaches leaves this row unsatisfiable, which is the right answer.
    for o in &inst.orders {
        let coeffs: Vec<(VarId, f64)> = routes
            .iter()
            .enumerate()
            .filter(|(_, r)| r.orders.contains(&o.id))
            .map(|(ri, _)| (f[ri], 1.0))
            .collect();
        model.add_row(RowSense::Eq, 1.0, coeffs);
    }

    // Succession: an order's compartment cannot depart its DC before the
    // selected pickup route can possibly complete. Trucks are free from hour
    // 0, so the earliest completion is the route duration, not its nominal
    // arrival; using the nominal slot would forbid successions the delivery
    // subproblem itself schedules. The scheduling side stays with that
    // subproblem; this row only prunes hopeless pairings.
    for (n, o) in inst.orders.iter().enumerate() {
        for (ri, r) in routes.iter().enumerate() {
            if !r.orders.contains(&o.id) {
                continue;
            }
            for (g, comp) in inst.compartments.iter().enumerate() {
                if comp.dc != o.dc {
                    continue;
                }
                let mut coeffs = vec![(f[ri], -1.0), (stage.y[n][g], -1.0)];
                for (si, s) in inst.services.iter().enumerate() {
                    if s.origin == o.dc && s.departure >= r.duration() {
                        coeffs.push((stage.x[g][si], 1.0));
                    }
                }
                model.add_row(RowSense::Ge, -1.0, coeffs);
            }
        }
    }

    ExtendedMaster {
        model,
        stage,
        z,
        cstar,
        taustar,
        f,
        cuts: Vec::new(),
        sat_cuts: Vec::new(),
        feasibility_cuts: Vec::new(),
    }
}

/// A master succession: the two-stage assignment plus selected pickup routes,
/// with the delivery work split by regime.
#[derive(Debug, Clone)]
pub struct ExtendedAssignment {
    pub base: Assignment,
    /// Selected pickup route ids, in instance order.
    pub routes: Vec<String>,
    pub pickup_cost: f64,
    /// Order id to the departure hour of its compartment's first chain leg.
    pub shipments: BTreeMap<String, i64>,
    /// The per-service slice delivered by open routes.
    pub hub_spoke: BTreeMap<String, Vec<String>>,
    /// Satellite id to its pooled (order, shipping service) pairs, sorted.
    pub pools: BTreeMap<String, Vec<(String, String)>>,
}

pub fn extract_extended(
    inst: &Instance,
    master: &ExtendedMaster,
    values: &[f64],
) -> Result<ExtendedAssignment, LbbdError> {
    let base = extract_assignment_from_stage(inst, &master.stage, values)?;
    let route_defs = inst.firstmile_routes.as_deref().unwrap_or(&[]);
    let mut routes = Vec::new();
    let mut pickup_cost = 0.0;
    for (ri, r) in route_defs.iter().enumerate() {
        let x = values[master.f[ri].0];
        if (x - x.round()).abs() > tol::INT_TOL {
            return Err(LbbdError::Assignment(format!("fractional route selection {x}")));
        }
        if x.round() as i64 == 1 {
            routes.push(r.id.clone());
            pickup_cost += r.cost;
        }
    }

    let mut shipments = BTreeMap::new();
    for (oid, comp) in &base.order_to_compartment {
        let chain = base.compartment_chains.get(comp).ok_or_else(|| {
            LbbdError::Assignment(format!("order {oid} sits in unrouted compartment {comp}"))
        })?;
        let first = inst.service(&chain[0]).expect("decoded chains name instance services");
        shipments.insert(oid.clone(), first.departure);
    }

    let mut hub_spoke = BTreeMap::new();
    let mut pools: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    for (sid, orders) in &base.per_service {
        let s = inst.service(sid).expect("per-service keys name instance services");
        match s.delivery {
            DeliveryMode::HubSpoke => {
                hub_spoke.insert(sid.clone(), orders.clone());
            }
            DeliveryMode::ConnectedHubs => {
                let pool = pools.entry(s.dest.clone()).or_default();
                for oid in orders {
                    pool.push((oid.clone(), sid.clone()));
                }
            }
        }
    }
    for pool in pools.values_mut() {
        pool.sort();
    }

    Ok(ExtendedAssignment { base, routes, pickup_cost, shipments, hub_spoke, pools })
}

/// A feasible schedule for the pickup and pooled stages of one succession.
#[derive(Debug, Clone)]
pub struct ChSolution {
    /// Per satellite with a nonempty pool, the pooled delivery value.
    pub zeta: BTreeMap<String, f64>,
    pub templates: Vec<ScheduledTemplate>,
    pub firstmile: Vec<ScheduledFirstMile>,
    /// False when the time budget interrupted a dispatch search. The
    /// schedule is still feasible; its values just carry no optimality proof
    /// and must not become cuts.
    pub proven: bool,
}

#[derive(Debug, Clone)]
pub enum ChOutcome {
    Feasible(ChSolution),
    Infeasible { witness: String },
}

/// Schedule the pickup routes against their chain departures and price
/// pooled delivery at every satellite with consolidated orders.
///
/// The pickup side is pure feasibility. Route costs already sit in f(x), and
/// trucks are interchangeable, so each DC is a deadline-fitting problem:
/// every selected route must finish before the earliest chain departure among
/// its orders. The pooled side decomposes per satellite, since templates,
/// vehicles, and releases never cross satellites; each pool is priced
/// exactly by exhausting exact template covers and dispatch orders.
pub fn solve_connected_hubs(
    inst: &Instance,
    ext: &ExtendedAssignment,
    deadline: Option<Instant>,
) -> Result<ChOutcome, LbbdError> {
    let route_defs = inst.firstmile_routes.as_deref().unwrap_or(&[]);
    let by_id: HashMap<&str, &FirstMileRoute> =
        route_defs.iter().map(|r| (r.id.as_str(), r)).collect();

    let mut per_dc: BTreeMap<&str, Vec<&FirstMileRoute>> = BTreeMap::new();
    for rid in &ext.routes {
        let r = by_id
            .get(rid.as_str())
            .ok_or_else(|| LbbdError::Extension(format!("unknown pickup route {rid}")))?;
        per_dc.entry(r.dc.as_str()).or_default().push(r);
    }

    let mut firstmile = Vec::new();
    for (dc, rs) in &per_dc {
        let trucks = inst
            .resources
            .as_ref()
            .and_then(|res| res.trucks.get(*dc).copied())
            .unwrap_or(0) as usize;
        if trucks == 0 {
            return Ok(ChOutcome::Infeasible {
                witness: format!("selected pickup routes at {dc} but no trucks there"),
            });
        }
        // Cutoff per route: the earliest chain departure among its orders.
        let mut jobs: Vec<(usize, i64, i64)> = rs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let cutoff = r
                    .orders
                    .iter()
                    .map(|o| ext.shipments[o.as_str()])
                    .min()
                    .expect("validated routes carry orders");
                (i, r.duration(), cutoff)
            })
            .collect();
        jobs.sort_by_key(|&(_, _, cutoff)| cutoff);
        let mut free = vec![0i64; trucks.min(jobs.len())];
        let mut starts = vec![0i64; jobs.len()];
        if !fit_deadlines(&jobs, 0, &mut free, &mut starts) {
            return Ok(ChOutcome::Infeasible {
                witness: format!(
                    "pickup routes at {dc} cannot all finish before their chains depart"
                ),
            });
        }
        for ((i, _, _), &start) in jobs.iter().zip(&starts) {
            firstmile.push(ScheduledFirstMile { route: rs[*i].id.clone(), start: start as f64 });
        }
    }

    let all_templates = inst.lastmile_templates.as_deref().unwrap_or(&[]);
    let mut zeta = BTreeMap::new();
    let mut templates = Vec::new();
    let mut proven = true;
    for (sat, pool) in &ext.pools {
        if pool.is_empty() {
            continue;
        }
        let vehicles = inst
            .resources
            .as_ref()
            .and_then(|res| res.vehicles.get(sat).copied())
            .unwrap_or(0) as usize;
        if vehicles == 0 {
            return Ok(ChOutcome::Infeasible {
                witness: format!("orders pooled at {sat} but no delivery vehicles there"),
            });
        }
        // An order is ready once its own shipping service arrives.
        let release: BTreeMap<&str, f64> = pool
            .iter()
            .map(|(oid, sid)| {
                let s = inst.service(sid).expect("pool pairs name instance services");
                (oid.as_str(), s.arrival as f64)
            })
            .collect();
        let jobs: Vec<PricedTemplate> = all_templates
            .iter()
            .filter(|t| {
                t.satellite == *sat
                    && t.sequence.iter().all(|o| release.contains_key(o.as_str()))
            })
            .map(|t| PricedTemplate::price(inst, sat, t, &release))
            .collect();
        let mut search = PoolSearch {
            jobs: &jobs,
            vehicles,
            deadline,
            best: None,
            timed_out: false,
        };
        let need: BTreeSet<&str> = release.keys().copied().collect();
        search.covers(&need, &BTreeSet::new(), &mut Vec::new(), 0.0);
        match (search.best, search.timed_out) {
            (Some((value, sched)), timed) => {
                zeta.insert(sat.clone(), value);
                templates.extend(sched);
                proven &= !timed;
            }
            (None, true) => {
                return Err(LbbdError::Extension(format!(
                    "pooled dispatch at {sat} hit its time budget before any schedule"
                )));
            }
            (None, false) => {
                return Ok(ChOutcome::Infeasible {
                    witness: format!("orders pooled at {sat} admit no exact template cover"),
                });
            }
        }
    }

    Ok(ChOutcome::Feasible(ChSolution { zeta, templates, firstmile, proven }))
}

/// Exact deadline feasibility on identical trucks. Jobs arrive sorted by
/// cutoff; with a fixed truck assignment, running each truck's jobs in cutoff
/// order is optimal, so branching on which truck takes the next job, skipping
/// trucks with equal free times, covers every distinct schedule. Starting a
/// job the moment its truck frees never hurts feasibility.
fn fit_deadlines(jobs: &[(usize, i64, i64)], at: usize, free: &mut [i64], starts: &mut [i64]) -> bool {
    if at == jobs.len() {
        return true;
    }
    let (_, duration, cutoff) = jobs[at];
    let mut tried: Vec<i64> = Vec::new();
    for m in 0..free.len() {
        if tried.contains(&free[m]) {
            continue;
        }
        tried.push(free[m]);
        let end = free[m] + duration;
        if end > cutoff {
            continue;
        }
        let was = free[m];
        free[m] = end;
        starts[at] = was;
        if fit_deadlines(jobs, at + 1, free, starts) {
            return true;
        }
        free[m] = was;
    }
    false
}

/// A usable template with its walk priced out: total length, the earliest
/// hour it may start, and each stop's handoff offset into the walk.
struct PricedTemplate {
    id: String,
    sequence: Vec<String>,
    release: f64,
    length: f64,
    /// (weight, due, hours into the walk at handoff)
    stops: Vec<(u32, i64, f64)>,
}

impl PricedTemplate {
    fn price(
        inst: &Instance,
        sat: &str,
        t: &LastMileTemplate,
        release: &BTreeMap<&str, f64>,
    ) -> PricedTemplate {
        let mut at = inst
            .distances
            .satellite_leg(sat, &t.sequence[0])
            .expect("validated template legs are priced");
        let mut stops = Vec::new();
        let mut rel = f64::NEG_INFINITY;
        for (i, oid) in t.sequence.iter().enumerate() {
            if i > 0 {
                at += inst
                    .distances
                    .order_leg(&t.sequence[i - 1], oid)
                    .expect("validated template legs are priced");
            }
            let o = inst.order(oid).expect("validated templates name instance orders");
            stops.push((o.weight, o.due, at));
            rel = rel.max(release[oid.as_str()]);
        }
        PricedTemplate {
            id: t.id.clone(),
            sequence: t.sequence.clone(),
            release: rel,
            length: at,
            stops,
        }
    }

    fn cost_at(&self, start: f64) -> f64 {
        let mut cost = self.length;
        for &(weight, due, offset) in &self.stops {
            let days = tol::tardiness_days(start + offset, due);
            cost += PenaltyKind::Quadratic.cost(weight, days);
        }
        cost
    }
}

/// Branch-and-bound over exact template covers of one pool and, per cover,
/// over dispatch orders and vehicle choices. One incumbent spans all covers,
/// and every node is bounded below by the accumulated cost plus the bare
/// walk lengths still owed.
struct PoolSearch<'a> {
    jobs: &'a [PricedTemplate],
    vehicles: usize,
    deadline: Option<Instant>,
    best: Option<(f64, Vec<ScheduledTemplate>)>,
    timed_out: bool,
}

impl PoolSearch<'_> {
    fn out_of_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.timed_out = true;
        }
        self.timed_out
    }

    /// Extend a partial cover; recursion anchors on the last uncovered order
    /// so covers are built back to front.
    fn covers(
        &mut self,
        need: &BTreeSet<&str>,
        covered: &BTreeSet<&str>,
        chosen: &mut Vec<usize>,
        length_acc: f64,
    ) {
        if self.out_of_time() {
            return;
        }
        let Some(anchor) = need.iter().rev().find(|o| !covered.contains(*o)) else {
            let picked: Vec<usize> = chosen.clone();
            let mut remaining: Vec<usize> = (0..picked.len()).collect();
            let k = self.vehicles.min(picked.len());
            let mut free = vec![0.0f64; k];
            let mut schedule = vec![0.0f64; picked.len()];
            let owed: f64 = picked.iter().map(|&j| self.jobs[j].length).sum();
            self.dispatch(&picked, &mut remaining, &mut free, &mut schedule, 0.0, owed);
            return;
        };
        if self.best.as_ref().is_some_and(|(b, _)| length_acc >= *b) {
            return;
        }
        for j in 0..self.jobs.len() {
            let t = &self.jobs[j];
            if !t.sequence.iter().any(|o| o.as_str() == *anchor) {
                continue;
            }
            if t.sequence.iter().any(|o| covered.contains(o.as_str())) {
                continue;
            }
            let mut next = covered.clone();
            for o in &t.sequence {
                next.insert(o.as_str());
            }
            chosen.push(j);
            self.covers(need, &next, chosen, length_acc + t.length);
            chosen.pop();
        }
    }

    /// Price one cover: choose which job runs next on which vehicle, starting
    /// it the moment both are ready. Regular costs make waiting useless, so
    /// interleavings of per-vehicle orders cover every candidate schedule.
    /// `owed` is the length sum of jobs not yet dispatched.
    fn dispatch(
        &mut self,
        picked: &[usize],
        remaining: &mut Vec<usize>,
        free: &mut [f64],
        schedule: &mut [f64],
        acc: f64,
        owed: f64,
    ) {
        if self.out_of_time() {
            return;
        }
        if remaining.is_empty() {
            if self.best.as_ref().is_none_or(|(b, _)| acc < *b) {
                let sched = picked
                    .iter()
                    .zip(schedule.iter())
                    .map(|(&j, &start)| ScheduledTemplate {
                        template: self.jobs[j].id.clone(),
                        start,
                    })
                    .collect();
                self.best = Some((acc, sched));
            }
            return;
        }
        if self.best.as_ref().is_some_and(|(b, _)| acc + owed >= *b) {
            return;
        }
        for idx in 0..remaining.len() {
            let slot = remaining[idx];
            let job = &self.jobs[picked[slot]];
            let mut tried: Vec<f64> = Vec::new();
            for m in 0..free.len() {
                if tried.iter().any(|&t| t == free[m]) {
                    continue;
                }
                tried.push(free[m]);
                let start = free[m].max(job.release);
                let was = free[m];
                free[m] = start + job.length;
                schedule[slot] = start;
                remaining.swap_remove(idx);
                self.dispatch(
                    picked,
                    remaining,
                    free,
                    schedule,
                    acc + job.cost_at(start),
                    owed - job.length,
                );
                remaining.push(slot);
                let last = remaining.len() - 1;
                remaining.swap(idx, last);
                free[m] = was;
            }
        }
    }
}

/// Remove the replayed succession: at least one selected route or pinned
/// shipping assignment must flip. Valid because the delivery subproblem was
/// proven unschedulable for exactly these selections, and its input, the
/// selected routes, each order's chain departure, and the pools, repeats
/// whenever all pins repeat, as long as chains are single legs. Multi-leg
/// chains can re-time a shipment without touching any pin; pools and fleet
/// checks never depend on that timing, so only deadline-driven rejections
/// read sharper than proven on such instances.
pub fn add_feasibility_cut(
    master: &mut ExtendedMaster,
    inst: &Instance,
    ext: &ExtendedAssignment,
    witness: String,
    iteration: usize,
) {
    let order_index: HashMap<&str, usize> =
        inst.orders.iter().enumerate().map(|(i, o)| (o.id.as_str(), i)).collect();
    let service_index: HashMap<&str, usize> =
        inst.services.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let route_defs = inst.firstmile_routes.as_deref().unwrap_or(&[]);

    let mut coeffs = Vec::new();
    let mut routes = Vec::new();
    for (ri, r) in route_defs.iter().enumerate() {
        if ext.routes.contains(&r.id) {
            coeffs.push((master.f[ri], 1.0));
            routes.push(r.id.clone());
        }
    }
    let mut pins = Vec::new();
    for (sid, orders) in &ext.base.per_service {
        let si = service_index[sid.as_str()];
        let sl = master
            .stage
            .sat_services
            .iter()
            .position(|&i| i == si)
            .expect("shipping services are satellite-bound");
        for oid in orders {
            coeffs.push((master.stage.h[order_index[oid.as_str()]][sl], 1.0));
            pins.push((oid.clone(), sid.clone()));
        }
    }
    let rhs = coeffs.len() as f64 - 1.0;
    master.model.add_row(RowSense::Le, rhs, coeffs);
    master.feasibility_cuts.push(FeasibilityCut { routes, pins, witness, iteration });
}

/// Append this round's optimality cuts: one piece per proven open-route
/// subproblem, one piece per satellite pool when the pooled pricing ran to
/// proof, and a fresh epigraph row binding z to the round's pieces. Returns
/// the number of pieces added.
pub fn add_extended_optimality_cuts(
    master: &mut ExtendedMaster,
    inst: &Instance,
    subs: &[SubproblemResult],
    ch: &ChSolution,
    ext: &ExtendedAssignment,
    iteration: usize,
) -> usize {
    let added = add_service_cut_rows(&mut master.model, &master.stage, inst, subs, iteration);
    let mut round: Vec<VarId> = added.iter().map(|c| c.z_var).collect();
    master.cuts.extend(added);

    if ch.proven {
        let order_index: HashMap<&str, usize> =
            inst.orders.iter().enumerate().map(|(i, o)| (o.id.as_str(), i)).collect();
        let service_index: HashMap<&str, usize> =
            inst.services.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
        for (sat, &value) in &ch.zeta {
            let members = ext.pools.get(sat).cloned().unwrap_or_default();
            if members.is_empty() {
                continue;
            }
            let z_var = master.model.add_continuous(0.0, f64::INFINITY, 0.0);
            // z_l >= zeta - zeta * (|pool| - sum h): worth zeta while the
            // whole pool ships as replayed, free once any pair breaks.
            let mut coeffs = vec![(z_var, 1.0)];
            for (oid, sid) in &members {
                let si = service_index[sid.as_str()];
                let sl = master
                    .stage
                    .sat_services
                    .iter()
                    .position(|&i| i == si)
                    .expect("pool services are satellite-bound");
                coeffs.push((master.stage.h[order_index[oid.as_str()]][sl], -value));
            }
            master.model.add_row(
                RowSense::Ge,
                value * (1.0 - members.len() as f64),
                coeffs,
            );
            round.push(z_var);
            master.sat_cuts.push(SatelliteCut {
                satellite: sat.clone(),
                members,
                zeta: value,
                z_var,
                iteration,
            });
        }
    }

    let pieces = round.len();
    if pieces > 0 {
        let route_defs = inst.firstmile_routes.as_deref().unwrap_or(&[]);
        // z >= f(x) + this round's pieces.
        let mut coeffs = vec![(master.z, 1.0)];
        for (si, s) in inst.services.iter().enumerate() {
            coeffs.push((master.stage.v[si], -s.fixed_cost));
            coeffs.push((master.stage.count[si], -s.travel_cost));
        }
        for (ri, r) in route_defs.iter().enumerate() {
            coeffs.push((master.f[ri], -r.cost));
        }
        for v in &round {
            coeffs.push((*v, -1.0));
        }
        master.model.add_row(RowSense::Ge, 0.0, coeffs);
    }
    pieces
}

/// Add binaries picking how many whole days past `due` the `completion`
/// variable lands, charging `weight` times the squared count. Exact while
/// the true delay stays within `max_days` days; the caller must size that.
/// Returns the day binaries, index d paying weight times d squared.
pub fn linearized_squared_days(
    model: &mut Model,
    completion: VarId,
    due: f64,
    max_days: usize,
    weight: f64,
) -> Vec<VarId> {
    let slots: Vec<VarId> =
        (0..=max_days).map(|d| model.add_binary(weight * (d * d) as f64)).collect();
    model.add_row(RowSense::Eq, 1.0, slots.iter().map(|&v| (v, 1.0)).collect());
    // The chosen count covers the delay: sum of 24 d tau_d >= completion - due.
    let mut coeffs: Vec<(VarId, f64)> =
        slots.iter().enumerate().map(|(d, &v)| (v, 24.0 * d as f64)).collect();
    coeffs.push((completion, -1.0));
    model.add_row(RowSense::Ge, -due, coeffs);
    slots
}

#[derive(Debug, Clone)]
pub struct ExtendedLbbdConfig {
    pub base: LbbdConfig,
    /// Budget for one round of pickup scheduling and pooled pricing.
    pub subproblem_time: Option<Duration>,
}

impl Default for ExtendedLbbdConfig {
    fn default() -> Self {
        ExtendedLbbdConfig {
            base: LbbdConfig::default(),
            subproblem_time: Some(Duration::from_secs(900)),
        }
    }
}

/// Three-stage decomposition loop. Each round solves the master, then gates
/// the succession through the pickup and pooled stage: an unschedulable
/// succession yields a feasibility cut and no bounds, a schedulable one is
/// priced exactly like the two-stage loop with the pooled values joining the
/// open-route values. A master that runs out of successions is a proof of
/// global infeasibility.
pub fn run_extended_lbbd(
    inst: &Instance,
    cfg: &ExtendedLbbdConfig,
) -> Result<LbbdReport, LbbdError> {
    if inst.firstmile_routes.as_deref().is_none_or(|r| r.is_empty()) {
        return Err(LbbdError::Extension(
            "instance carries no pickup routes; extend it first".into(),
        ));
    }
    let t0 = Instant::now();
    let mut master = build_extended_master(inst);
    let mut lower = f64::NEG_INFINITY;
    let mut best: Option<(f64, Plan)> = None;
    let mut iterations: Vec<IterationTrace> = Vec::new();
    let mut status = LbbdStatus::IterationLimit;

    for r in 1..=cfg.base.max_iterations {
        let remaining = cfg.base.wall_limit.map(|w| w.saturating_sub(t0.elapsed()));
        if remaining.is_some_and(|rem| rem.is_zero()) {
            status = LbbdStatus::TimeLimit;
            break;
        }
        let budget = match (cfg.base.master_time, remaining) {
            (Some(m), Some(rem)) => Some(m.min(rem)),
            (Some(m), None) => Some(m),
            (None, rem) => rem,
        };
        let out = master.solve(&SolverConfig { time_limit: budget, rel_gap: cfg.base.rel_gap });
        match out.status {
            solver::SolveStatus::Optimal | solver::SolveStatus::FeasibleTimeLimit => {}
            solver::SolveStatus::Infeasible => {
                status = LbbdStatus::Infeasible;
                break;
            }
            solver::SolveStatus::Unbounded => {
                return Err(LbbdError::Solver("master unbounded".into()));
            }
            solver::SolveStatus::Error(e) => return Err(LbbdError::Solver(e)),
        }
        let master_optimal = out.status == solver::SolveStatus::Optimal;
        if let Some(b) = out.bound {
            lower = lower.max(b);
        }
        if !out.has_solution() {
            status = LbbdStatus::TimeLimit;
            break;
        }
        let z_hat = out.objective.expect("solution implies objective");

        let ext = extract_extended(inst, &master, &out.values)?;
        let sub_start = Instant::now();
        let ch_deadline = cfg.subproblem_time.map(|d| Instant::now() + d);
        let ch = match solve_connected_hubs(inst, &ext, ch_deadline)? {
            ChOutcome::Infeasible { witness } => {
                add_feasibility_cut(&mut master, inst, &ext, witness, r);
                iterations.push(IterationTrace {
                    iteration: r,
                    lower,
                    upper: best.as_ref().map(|(ub, _)| *ub),
                    gap: best.as_ref().map(|(ub, _)| compute_gap(lower, *ub)),
                    f_hat: ext.base.f_hat + ext.pickup_cost,
                    epsilon: 0.0,
                    cuts_added: 0,
                    master_seconds: out.wall.as_secs_f64(),
                    subproblem_seconds: sub_start.elapsed().as_secs_f64(),
                    subproblem_infeasible: true,
                });
                continue;
            }
            ChOutcome::Feasible(ch) => ch,
        };
        let subs = evaluate_subproblems(
            inst,
            &ext.hub_spoke,
            &cfg.base.route,
            PenaltyKind::Quadratic,
            cfg.base.route_milp_fallback,
        )?;
        let subproblem_seconds = sub_start.elapsed().as_secs_f64();
        let epsilon: f64 =
            subs.iter().map(|s| s.zeta).sum::<f64>() + ch.zeta.values().sum::<f64>();
        let f_hat = ext.base.f_hat + ext.pickup_cost;
        let candidate = f_hat + epsilon;
        if best.as_ref().is_none_or(|(ub, _)| candidate < *ub) {
            let mut plan = Plan {
                order_to_compartment: ext.base.order_to_compartment.clone(),
                compartment_chains: ext.base.compartment_chains.clone(),
                ..Plan::default()
            };
            for sub in &subs {
                plan.routes.insert(sub.service.clone(), sub.solution.sequence.clone());
            }
            plan.firstmile = Some(ch.firstmile.clone());
            plan.templates = Some(ch.templates.clone());
            best = Some((candidate, plan));
        }
        let upper = best.as_ref().map(|(ub, _)| *ub);
        let gap = upper.map(|ub| compute_gap(lower, ub));
        iterations.push(IterationTrace {
            iteration: r,
            lower,
            upper,
            gap,
            f_hat,
            epsilon,
            cuts_added: 0,
            master_seconds: out.wall.as_secs_f64(),
            subproblem_seconds,
            subproblem_infeasible: false,
        });

        let all_proven = subs.iter().all(|s| s.proven);
        if master_optimal && ch.proven && all_proven && candidate <= z_hat + tol::OBJ_TOL {
            status = LbbdStatus::Converged;
            lower = lower.max(candidate.min(z_hat));
            break;
        }
        if gap.is_some_and(|g| g <= cfg.base.gap_target) {
            status = LbbdStatus::GapReached;
            break;
        }
        if r == cfg.base.max_iterations {
            status = LbbdStatus::IterationLimit;
            break;
        }
        if cfg.base.wall_limit.is_some_and(|w| t0.elapsed() >= w) {
            status = LbbdStatus::TimeLimit;
            break;
        }

        let pieces = add_extended_optimality_cuts(&mut master, inst, &subs, &ch, &ext, r);
        if let Some(trace) = iterations.last_mut() {
            trace.cuts_added = pieces;
        }
    }

    let total_cuts = master.cuts.len() + master.sat_cuts.len();
    let feasibility_cuts = master.feasibility_cuts.len();
    if status == LbbdStatus::Infeasible {
        return Ok(LbbdReport {
            status,
            lower: f64::INFINITY,
            upper: None,
            gap: None,
            iterations,
            total_cuts,
            feasibility_cuts,
            wall_seconds: t0.elapsed().as_secs_f64(),
            plan: None,
        });
    }
    let upper = best.as_ref().map(|(ub, _)| *ub);
    Ok(LbbdReport {
        status,
        lower,
        upper,
        gap: upper.map(|ub| compute_gap(lower, ub)),
        iterations,
        total_cuts,
        feasibility_cuts,
        wall_seconds: t0.elapsed().as_secs_f64(),
        plan: best.map(|(_, plan)| plan),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorConfig};
    use crate::instance::{
        validate_instance, Compartment, DistanceMatrix, Hub, HubKind, Mode, Service,
    };
    use crate::oracle::{exhaustive_extended_optimum, keep_early_services};
    use crate::plan::verify_plan;
    use crate::solver::SolveStatus;

    fn exact_config() -> ExtendedLbbdConfig {
        ExtendedLbbdConfig {
            base: LbbdConfig {
                gap_target: 0.0,
                rel_gap: 0.0,
                ..LbbdConfig::default()
            },
            subproblem_time: None,
        }
    }

    /// One DC, one satellite, one consolidated service, one order.
    fn micro_ch_instance() -> Instance {
        let order = Order {
            id: "N1".into(),
            dc: "J1".into(),
            quantity: 1,
            due: 48,
            weight: 5,
            x: 0.0,
            y: 0.0,
            pickup_point: None,
            customs_office: None,
        };
        let service = Service {
            id: "S1".into(),
            origin: "J1".into(),
            dest: "L1".into(),
            mode: Mode::Roadway,
            departure: 2,
            arrival: 10,
            capacity: 3,
            travel_cost: 7.0,
            fixed_cost: 11.0,
            delivery: DeliveryMode::ConnectedHubs,
        };
        let mut satellites = BTreeMap::new();
        satellites.insert("L1".to_string(), BTreeMap::from([("N1".to_string(), 4.0)]));
        Instance {
            hubs: vec![
                Hub { id: "J1".into(), kind: HubKind::Dc, x: None, y: None },
                Hub { id: "L1".into(), kind: HubKind::Satellite, x: Some(1.0), y: Some(1.0) },
            ],
            orders: vec![order],
            compartments: vec![Compartment { id: "G1".into(), dc: "J1".into(), capacity: 10 }],
            services: vec![service],
            distances: DistanceMatrix { orders: BTreeMap::new(), satellites },
            firstmile_routes: Some(vec![FirstMileRoute {
                id: "F1".into(),
                dc: "J1".into(),
                orders: vec!["N1".into()],
                departure: 6,
                arrival: 8,
                cost: 10.0,
            }]),
            lastmile_templates: Some(vec![LastMileTemplate {
                id: "R1".into(),
                satellite: "L1".into(),
                sequence: vec!["N1".into()],
            }]),
            resources: Some(Resources {
                trucks: BTreeMap::from([("J1".to_string(), 1)]),
                vehicles: BTreeMap::from([("L1".to_string(), 1)]),
            }),
        }
    }

    fn micro_assignment() -> ExtendedAssignment {
        ExtendedAssignment {
            base: Assignment {
                order_to_compartment: BTreeMap::from([("N1".to_string(), "G1".to_string())]),
                compartment_chains: BTreeMap::from([(
                    "G1".to_string(),
                    vec!["S1".to_string()],
                )]),
                per_service: BTreeMap::from([(
                    "S1".to_string(),
                    vec!["N1".to_string()],
                )]),
                f_hat: 18.0,
                values: Vec::new(),
            },
            routes: vec!["F1".to_string()],
            pickup_cost: 10.0,
            shipments: BTreeMap::from([("N1".to_string(), 2)]),
            hub_spoke: BTreeMap::new(),
            pools: BTreeMap::from([(
                "L1".to_string(),
                vec![("N1".to_string(), "S1".to_string())],
            )]),
        }
    }

    #[test]
    fn enumeration_counts_on_a_micro() {
        let mut inst = keep_early_services(&generate(&GeneratorConfig::new(1, 1, 3, 7)), 96);
        for o in &mut inst.orders {
            // Shrink demand so every subset fits and only the stop cap binds.
            o.quantity = 1;
        }
        let (routes, templates) =
            enumerate_route_templates(&inst, &EnumerationCaps::default()).unwrap();
        // Three orders: every nonempty subset fits a 5000-unit compartment.
        assert_eq!(routes.len(), 7);
        // Per satellite: 3 singles, 6 pairs, 6 triples.
        let sats = inst.satellites().count();
        assert_eq!(templates.len(), 15 * sats);
        let single = routes.iter().find(|r| r.orders.len() == 1).unwrap();
        assert_eq!(single.duration(), 4);
        assert_eq!(single.cost, 80.0);
        let triple = routes.iter().find(|r| r.orders.len() == 3).unwrap();
        assert_eq!(triple.duration(), 8);
        assert_eq!(triple.cost, 140.0);
    }

    #[test]
    fn enumeration_guard_trips() {
        let inst = keep_early_services(&generate(&GeneratorConfig::new(1, 1, 3, 7)), 96);
        let caps = EnumerationCaps { max_lastmile_templates: 10, ..EnumerationCaps::default() };
        let err = enumerate_route_templates(&inst, &caps).unwrap_err();
        let EnumerationError::TooMany { kind, bound, .. } = err;
        assert_eq!(kind, "delivery template");
        assert_eq!(bound, 10);
    }

    #[test]
    fn extended_instances_validate() {
        let base = keep_early_services(&generate(&GeneratorConfig::new(1, 2, 3, 7)), 96);
        for layout in [DeliveryLayout::Duplicate, DeliveryLayout::AllConnected] {
            let opts = ExtendOptions { layout, ..ExtendOptions::default() };
            let ext = extend_instance(&base, &opts).unwrap();
            assert_eq!(validate_instance(&ext), Vec::<String>::new());
            let connected = ext
                .satellite_services()
                .filter(|s| s.delivery == DeliveryMode::ConnectedHubs)
                .count();
            let total = ext.satellite_services().count();
            match layout {
                DeliveryLayout::Duplicate => assert_eq!(total, 2 * connected),
                DeliveryLayout::AllConnected => assert_eq!(total, connected),
            }
        }
    }

    #[test]
    fn squared_delay_floor_rounds_days_up() {
        assert_eq!(squared_delay_floor(98, 48), Some(9.0));
        assert_eq!(squared_delay_floor(48, 48), None);
        assert_eq!(squared_delay_floor(30, 48), None);
        assert_eq!(squared_delay_floor(72, 48), Some(1.0));
        assert_eq!(squared_delay_floor(73, 48), Some(4.0));
    }

    #[test]
    fn pooled_stage_prices_a_closed_form_micro() {
        let inst = micro_ch_instance();
        let ext = micro_assignment();
        let out = solve_connected_hubs(&inst, &ext, None).unwrap();
        let ChOutcome::Feasible(ch) = out else { panic!("micro schedules") };
        assert!(ch.proven);
        // Truck runs F1 over [0, 2] and meets the hour-2 departure.
        assert_eq!(ch.firstmile.len(), 1);
        assert_eq!(ch.firstmile[0].start, 0.0);
        // The vehicle leaves at the service arrival; the walk costs its
        // length, and hour 14 is well before the hour 48 due time.
        assert_eq!(ch.templates.len(), 1);
        assert_eq!(ch.templates[0].start, 10.0);
        assert_eq!(ch.zeta.get("L1"), Some(&4.0));
    }

    #[test]
    fn pickup_side_detects_truck_starvation() {
        let mut inst = micro_ch_instance();
        inst.orders.push(Order {
            id: "N2".into(),
            dc: "J1".into(),
            quantity: 1,
            due: 48,
            weight: 5,
            x: 0.0,
            y: 0.5,
            pickup_point: None,
            customs_office: None,
        });
        inst.distances
            .satellites
            .get_mut("L1")
            .unwrap()
            .insert("N2".to_string(), 4.0);
        let routes = inst.firstmile_routes.as_mut().unwrap();
        routes[0].arrival = 14;
        routes.push(FirstMileRoute {
            id: "F2".into(),
            dc: "J1".into(),
            orders: vec!["N2".into()],
            departure: 6,
            arrival: 14,
            cost: 10.0,
        });
        let mut ext = micro_assignment();
        ext.routes = vec!["F1".into(), "F2".into()];
        ext.shipments.insert("N2".to_string(), 9);
        ext.shipments.insert("N1".to_string(), 9);
        // Two 8-hour pickups, one truck, both chains leave at hour 9.
        let out = solve_connected_hubs(&inst, &ext, None).unwrap();
        let ChOutcome::Infeasible { witness } = out else { panic!("one truck cannot run both") };
        assert!(witness.contains("J1"), "witness names the DC: {witness}");
    }

    #[test]
    fn linearized_days_match_closed_form() {
        for (completion, due, want_days) in
            [(100.0, 100.0, 0u64), (101.0, 100.0, 1), (124.0, 100.0, 1), (124.5, 100.0, 2)]
        {
            let mut model = Model::new();
            let c = model.add_continuous(completion, completion, 0.0);
            linearized_squared_days(&mut model, c, due, 8, 3.0);
            let out = solver::solve(
                &model,
                &SolverConfig { time_limit: None, rel_gap: 0.0 },
            );
            assert_eq!(out.status, SolveStatus::Optimal);
            let want = 3.0 * (want_days * want_days) as f64;
            assert!((out.objective.unwrap() - want).abs() < tol::OBJ_TOL);
        }
    }

    #[test]
    fn first_master_bound_stays_under_extended_optimum() {
        let base = keep_early_services(&generate(&GeneratorConfig::new(1, 1, 2, 11)), 96);
        let opts = ExtendOptions { layout: DeliveryLayout::AllConnected, ..Default::default() };
        let inst = extend_instance(&base, &opts).unwrap();
        let master = build_extended_master(&inst);
        let out = master.solve(&SolverConfig { time_limit: None, rel_gap: 0.0 });
        assert_eq!(out.status, SolveStatus::Optimal);
        let want = exhaustive_extended_optimum(&inst, 100_000_000).unwrap().unwrap();
        assert!(
            out.objective.unwrap() <= want.objective + tol::OBJ_TOL,
            "relaxation {} exceeds optimum {}",
            out.objective.unwrap(),
            want.objective
        );
    }

    #[test]
    fn extended_micro_matches_exhaustive_oracle() {
        let base = keep_early_services(&generate(&GeneratorConfig::new(1, 1, 2, 5)), 96);
        let opts = ExtendOptions { layout: DeliveryLayout::AllConnected, ..Default::default() };
        let inst = extend_instance(&base, &opts).unwrap();
        let report = run_extended_lbbd(&inst, &exact_config()).unwrap();
        assert_eq!(report.status, LbbdStatus::Converged);
        let want = exhaustive_extended_optimum(&inst, 100_000_000).unwrap().unwrap();
        let upper = report.upper.unwrap();
        assert!(
            (upper - want.objective).abs() < tol::OBJ_TOL,
            "engine {upper} vs oracle {}",
            want.objective
        );
        let plan = report.plan.unwrap();
        let eval = verify_plan(&inst, &plan);
        assert!(eval.is_feasible(), "violations: {:?}", eval.violations);
        assert!((eval.total - upper).abs() < tol::OBJ_TOL);
    }

    #[test]
    fn starved_fixture_is_globally_infeasible() {
        let mut inst = micro_ch_instance();
        // Second order, one truck, two 8-hour pickups, and a single chain
        // departure at hour 9: one pickup always misses it.
        inst.orders.push(Order {
            id: "N2".into(),
            dc: "J1".into(),
            quantity: 1,
            due: 48,
            weight: 5,
            x: 0.0,
            y: 0.5,
            pickup_point: None,
            customs_office: None,
        });
        inst.distances
            .satellites
            .get_mut("L1")
            .unwrap()
            .insert("N2".to_string(), 4.0);
        inst.distances.orders =
            BTreeMap::from([
                ("N1".to_string(), BTreeMap::from([("N2".to_string(), 1.0)])),
                ("N2".to_string(), BTreeMap::from([("N1".to_string(), 1.0)])),
            ]);
        inst.services[0].departure = 9;
        inst.services[0].arrival = 17;
        inst.firstmile_routes = Some(vec![
            FirstMileRoute {
                id: "F1".into(),
                dc: "J1".into(),
                orders: vec!["N1".into()],
                departure: 6,
                arrival: 14,
                cost: 10.0,
            },
            FirstMileRoute {
                id: "F2".into(),
                dc: "J1".into(),
                orders: vec!["N2".into()],
                departure: 6,
                arrival: 14,
                cost: 10.0,
            },
        ]);
        inst.lastmile_templates = Some(vec![
            LastMileTemplate {
                id: "R1".into(),
                satellite: "L1".into(),
                sequence: vec!["N1".into()],
            },
            LastMileTemplate {
                id: "R2".into(),
                satellite: "L1".into(),
                sequence: vec!["N2".into()],
            },
        ]);
        assert_eq!(validate_instance(&inst), Vec::<String>::new());
        let report = run_extended_lbbd(&inst, &exact_config()).unwrap();
        assert_eq!(report.status, LbbdStatus::Infeasible);
        assert_eq!(report.feasibility_cuts, 1);
        assert!(report.iterations.iter().any(|t| t.subproblem_infeasible));
    }
}
