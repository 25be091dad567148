//! Solution plans and their independent evaluator. A plan names, in raw ids,
//! who carries what: order-to-compartment packing, the service chain each
//! used compartment rides, one delivery sequence per hub-and-spoke service,
//! and, for three-stage plans, the selected first-mile routes and scheduled
//! delivery templates. The evaluator reprices everything from instance data
//! alone and reports violations instead of trusting any solver output.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::instance::{DeliveryMode, HubKind, Instance, Service};
use crate::route::PenaltyKind;
use crate::tol;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduledFirstMile {
    pub route: String,
    /// Scheduled start hour; the nominal timetable slot may be shifted to
    /// fit truck availability.
    pub start: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduledTemplate {
    pub template: String,
    pub start: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Plan {
    /// Order id -> compartment id.
    pub order_to_compartment: BTreeMap<String, String>,
    /// Used compartment id -> service chain from its DC hub to a satellite.
    pub compartment_chains: BTreeMap<String, Vec<String>>,
    /// Hub-and-spoke satellite service id -> delivery sequence of order ids.
    pub routes: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub firstmile: Option<Vec<ScheduledFirstMile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates: Option<Vec<ScheduledTemplate>>,
}

impl Plan {
    pub fn from_json(text: &str) -> Result<Plan, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn is_extended(&self) -> bool {
        self.firstmile.is_some() || self.templates.is_some()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanEvaluation {
    pub intermodal_cost: f64,
    pub firstmile_cost: f64,
    pub lastmile_cost: f64,
    pub penalty_cost: f64,
    pub total: f64,
    /// Whole days late per order.
    pub tardiness: BTreeMap<String, u64>,
    pub violations: Vec<String>,
}

impl PlanEvaluation {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

const TIME_EPS: f64 = 1e-6;

/// Reprice a plan from raw instance data. Two-stage plans pay linear daily
/// tardiness; plans carrying three-stage sections pay squared daily
/// tardiness and are additionally checked against coverage, precedence, and
/// vehicle limits.
pub fn verify_plan(inst: &Instance, plan: &Plan) -> PlanEvaluation {
    let mut v: Vec<String> = Vec::new();
    let penalty_kind =
        if plan.is_extended() { PenaltyKind::Quadratic } else { PenaltyKind::Linear };

    let service_by_id: HashMap<&str, &Service> =
        inst.services.iter().map(|s| (s.id.as_str(), s)).collect();
    let hub_kind: HashMap<&str, HubKind> =
        inst.hubs.iter().map(|h| (h.id.as_str(), h.kind)).collect();

    // Packing: every order in exactly one compartment of its own hub, within
    // capacity.
    let mut load: HashMap<&str, u64> = HashMap::new();
    let mut members: HashMap<&str, Vec<&str>> = HashMap::new();
    for o in &inst.orders {
        match plan.order_to_compartment.get(&o.id) {
            None => v.push(format!("order {} is unassigned", o.id)),
            Some(g) => {
                match inst.compartments.iter().find(|c| &c.id == g) {
                    None => v.push(format!("order {} assigned to unknown compartment {g}", o.id)),
                    Some(c) => {
                        if c.dc != o.dc {
                            v.push(format!(
                                "order {} of {} packed into compartment {} of {}",
                                o.id, o.dc, c.id, c.dc
                            ));
                        }
                        *load.entry(c.id.as_str()).or_default() += o.quantity as u64;
                        members.entry(c.id.as_str()).or_default().push(o.id.as_str());
                    }
                }
            }
        }
    }
    for n in plan.order_to_compartment.keys() {
        if inst.order(n).is_none() {
            v.push(format!("assignment references unknown order {n}"));
        }
    }
    for (g, total) in &load {
        let cap = inst.compartment_capacity() as u64;
        if *total > cap {
            v.push(format!("compartment {g} load {total} exceeds capacity {cap}"));
        }
    }

    // Chains: used compartments ride a connected, time-respecting,
    // conflict-free sequence of services from their hub to a satellite.
    let forbidden = crate::instance::compute_forbidden_coassignments(inst.services.as_slice());
    let mut compartments_on: HashMap<&str, u32> = HashMap::new();
    let mut terminal_of: HashMap<&str, &str> = HashMap::new(); // compartment -> last service
    for (g, chain) in &plan.compartment_chains {
        let Some(comp) = inst.compartments.iter().find(|c| &c.id == g) else {
            v.push(format!("chain for unknown compartment {g}"));
            continue;
        };
        if chain.is_empty() {
            v.push(format!("compartment {g} has an empty chain"));
            continue;
        }
        let mut ok = true;
        let mut legs: Vec<&Service> = Vec::new();
        for sid in chain {
            match service_by_id.get(sid.as_str()) {
                Some(s) => legs.push(s),
                None => {
                    v.push(format!("chain of {g} uses unknown service {sid}"));
                    ok = false;
                }
            }
        }
        if !ok {
            continue;
        }
        if legs[0].origin != comp.dc {
            v.push(format!("chain of {g} starts at {} not {}", legs[0].origin, comp.dc));
        }
        for w in legs.windows(2) {
            if w[0].dest != w[1].origin {
                v.push(format!("chain of {g} breaks at {} -> {}", w[0].id, w[1].id));
            }
            if w[1].departure < w[0].arrival {
                v.push(format!(
                    "chain of {g}: {} departs before {} arrives",
                    w[1].id, w[0].id
                ));
            }
        }
        for a in &legs {
            for b in &legs {
                if a.id != b.id && forbidden.get(&a.id).is_some_and(|f| f.contains(&b.id)) {
                    v.push(format!("chain of {g} combines forbidden pair {} / {}", a.id, b.id));
                }
            }
        }
        let last = legs.last().unwrap();
        if hub_kind.get(last.dest.as_str()) != Some(&HubKind::Satellite) {
            v.push(format!("chain of {g} ends at non-satellite {}", last.dest));
        } else {
            terminal_of.insert(g.as_str(), last.id.as_str());
        }
        for s in &legs {
            *compartments_on.entry(s.id.as_str()).or_default() += 1;
        }
    }
    for (g, orders) in &members {
        if !orders.is_empty() && !plan.compartment_chains.contains_key(*g) {
            v.push(format!("compartment {g} carries orders but has no chain"));
        }
    }
    for (sid, count) in &compartments_on {
        let s = service_by_id[sid];
        if *count > s.capacity {
            v.push(format!("service {sid} carries {count} compartments, capacity {}", s.capacity));
        }
    }

    let intermodal_cost: f64 = compartments_on
        .iter()
        .map(|(sid, count)| {
            let s = service_by_id[sid];
            s.travel_cost * *count as f64 + s.fixed_cost
        })
        .sum();

    // Orders grouped by the service that lands them at a satellite.
    let mut arrivals: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut arrival_service_of: HashMap<&str, &Service> = HashMap::new();
    for o in &inst.orders {
        let Some(g) = plan.order_to_compartment.get(&o.id) else { continue };
        if let Some(sid) = terminal_of.get(g.as_str()) {
            arrivals.entry(sid).or_default().insert(o.id.as_str());
            arrival_service_of.insert(o.id.as_str(), service_by_id[sid]);
        }
    }

    let mut lastmile_cost = 0.0;
    let mut penalty_cost = 0.0;
    let mut tardiness: BTreeMap<String, u64> = BTreeMap::new();

    // Hub-and-spoke deliveries: one open route per arrival service.
    for (sid, expected) in &arrivals {
        let s = service_by_id[sid];
        if s.delivery == DeliveryMode::ConnectedHubs && plan.is_extended() {
            continue; // handled through templates below
        }
        let Some(seq) = plan.routes.get(*sid) else {
            v.push(format!("no delivery route for service {sid}"));
            continue;
        };
        let given: BTreeSet<&str> = seq.iter().map(|x| x.as_str()).collect();
        if given.len() != seq.len() {
            v.push(format!("route of {sid} repeats an order"));
        }
        if &given != expected {
            v.push(format!("route of {sid} does not cover exactly its arrivals"));
        }
        let (cost, pen) =
            walk_route(inst, &s.dest, s.arrival as f64, seq, penalty_kind, &mut tardiness, &mut v);
        lastmile_cost += cost;
        penalty_cost += pen;
    }
    for sid in plan.routes.keys() {
        if !arrivals.contains_key(sid.as_str()) {
            v.push(format!("route given for service {sid} with no arrivals"));
        }
    }

    let mut firstmile_cost = 0.0;
    if plan.is_extended() {
        verify_extension(
            inst,
            plan,
            &arrivals,
            &arrival_service_of,
            &terminal_of,
            penalty_kind,
            &mut tardiness,
            &mut firstmile_cost,
            &mut lastmile_cost,
            &mut penalty_cost,
            &mut v,
        );
    }

    let total = intermodal_cost + firstmile_cost + lastmile_cost + penalty_cost;
    PlanEvaluation {
        intermodal_cost,
        firstmile_cost,
        lastmile_cost,
        penalty_cost,
        total,
        tardiness,
        violations: v,
    }
}

/// Walk one delivery sequence, tallying distance and penalties.
fn walk_route(
    inst: &Instance,
    satellite: &str,
    start_time: f64,
    seq: &[String],
    penalty_kind: PenaltyKind,
    tardiness: &mut BTreeMap<String, u64>,
    v: &mut Vec<String>,
) -> (f64, f64) {
    let mut dist = 0.0;
    let mut pen = 0.0;
    let mut prev: Option<&str> = None;
    for n in seq {
        let Some(order) = inst.order(n) else {
            v.push(format!("route visits unknown order {n}"));
            return (dist, pen);
        };
        let leg = match prev {
            None => inst.distances.satellite_leg(satellite, n),
            Some(p) => inst.distances.order_leg(p, n),
        };
        let Some(leg) = leg else {
            v.push(format!("route leg into {n} unpriced"));
            return (dist, pen);
        };
        dist += leg;
        let days = tol::tardiness_days(start_time + dist, order.due);
        pen += penalty_kind.cost(order.weight, days);
        tardiness.insert(n.clone(), days);
        prev = Some(n);
    }
    (dist, pen)
}

#[allow(clippy::too_many_arguments)]
fn verify_extension(
    inst: &Instance,
    plan: &Plan,
    arrivals: &BTreeMap<&str, BTreeSet<&str>>,
    arrival_service_of: &HashMap<&str, &Service>,
    terminal_of: &HashMap<&str, &str>,
    penalty_kind: PenaltyKind,
    tardiness: &mut BTreeMap<String, u64>,
    firstmile_cost: &mut f64,
    lastmile_cost: &mut f64,
    penalty_cost: &mut f64,
    v: &mut Vec<String>,
) {
    let _ = arrivals;
    // First mile: every order picked up exactly once, trucks respected,
    // pickups complete before the order's compartment leaves its hub.
    let routes_by_id: HashMap<&str, &crate::instance::FirstMileRoute> = inst
        .firstmile_routes
        .as_deref()
        .unwrap_or(&[])
        .iter()
        .map(|r| (r.id.as_str(), r))
        .collect();
    let selected = plan.firstmile.as_deref().unwrap_or(&[]);
    let mut covered: HashMap<&str, u32> = HashMap::new();
    let mut per_dc: HashMap<&str, Vec<(f64, f64)>> = HashMap::new(); // intervals per hub
    for sf in selected {
        let Some(r) = routes_by_id.get(sf.route.as_str()) else {
            v.push(format!("selected unknown first-mile route {}", sf.route));
            continue;
        };
        *firstmile_cost += r.cost;
        let end = sf.start + r.duration() as f64;
        per_dc.entry(r.dc.as_str()).or_default().push((sf.start, end));
        if sf.start < -TIME_EPS {
            v.push(format!("first-mile route {} starts before hour 0", r.id));
        }
        for n in &r.orders {
            *covered.entry(n.as_str()).or_default() += 1;
            // Precedence against the shipment leaving the DC hub.
            if let Some(g) = plan.order_to_compartment.get(n) {
                if let Some(chain) = plan.compartment_chains.get(g) {
                    if let Some(first) = chain.first().and_then(|sid| inst.service(sid)) {
                        if end > first.departure as f64 + TIME_EPS {
                            v.push(format!(
                                "first-mile route {} ends at {end} after shipment {} departs at {}",
                                r.id, first.id, first.departure
                            ));
                        }
                    }
                }
            }
        }
    }
    for o in &inst.orders {
        match covered.get(o.id.as_str()) {
            Some(1) => {}
            Some(k) => v.push(format!("order {} picked up {k} times", o.id)),
            None => v.push(format!("order {} never picked up", o.id)),
        }
    }
    if let Some(res) = &inst.resources {
        for (dc, intervals) in &per_dc {
            let k = res.trucks.get(*dc).copied().unwrap_or(0);
            if max_overlap(intervals) > k {
                v.push(format!("more than {k} first-mile trucks in use at {dc}"));
            }
        }
    }

    // Connected-hubs deliveries: template routes cover each such arrival
    // exactly once, start after their goods are available, and fit the
    // satellite's vehicle pool.
    let templates_by_id: HashMap<&str, &crate::instance::LastMileTemplate> = inst
        .lastmile_templates
        .as_deref()
        .unwrap_or(&[])
        .iter()
        .map(|t| (t.id.as_str(), t))
        .collect();
    let ch_orders: BTreeSet<&str> = inst
        .orders
        .iter()
        .filter_map(|o| {
            let s = arrival_service_of.get(o.id.as_str())?;
            (s.delivery == DeliveryMode::ConnectedHubs).then_some(o.id.as_str())
        })
        .collect();
    let mut delivered: HashMap<&str, u32> = HashMap::new();
    let mut per_sat: HashMap<&str, Vec<(f64, f64)>> = HashMap::new();
    for st in plan.templates.as_deref().unwrap_or(&[]) {
        let Some(t) = templates_by_id.get(st.template.as_str()) else {
            v.push(format!("scheduled unknown template {}", st.template));
            continue;
        };
        // Goods availability: the latest arrival among covered orders.
        let mut release = 0.0f64;
        for n in &t.sequence {
            *delivered.entry(n.as_str()).or_default() += 1;
            match arrival_service_of.get(n.as_str()) {
                Some(s) if s.dest == t.satellite => release = release.max(s.arrival as f64),
                Some(s) => v.push(format!(
                    "template {} at {} delivers order {n} arriving at {}",
                    t.id, t.satellite, s.dest
                )),
                None => v.push(format!("template {} delivers undelivered order {n}", t.id)),
            }
        }
        if st.start + TIME_EPS < release {
            v.push(format!(
                "template {} starts at {} before its goods arrive at {release}",
                t.id, st.start
            ));
        }
        let (cost, pen) =
            walk_route(inst, &t.satellite, st.start, &t.sequence, penalty_kind, tardiness, v);
        *lastmile_cost += cost;
        *penalty_cost += pen;
        per_sat.entry(t.satellite.as_str()).or_default().push((st.start, st.start + cost));
    }
    for n in &ch_orders {
        match delivered.get(n) {
            Some(1) => {}
            Some(k) => v.push(format!("order {n} delivered {k} times by templates")),
            None => v.push(format!("connected-hubs order {n} not covered by any template")),
        }
    }
    for (n, _) in delivered {
        if !ch_orders.contains(n) {
            v.push(format!("template delivers order {n} not arriving in connected-hubs mode"));
        }
    }
    if let Some(res) = &inst.resources {
        for (sat, intervals) in &per_sat {
            let k = res.vehicles.get(*sat).copied().unwrap_or(0);
            if max_overlap(intervals) > k {
                v.push(format!("more than {k} delivery vehicles in use at {sat}"));
            }
        }
    }
    let _ = terminal_of;
}

/// Peak number of simultaneously open half-open intervals.
fn max_overlap(intervals: &[(f64, f64)]) -> u32 {
    let mut events: Vec<(f64, i32)> = Vec::new();
    for &(a, b) in intervals {
        events.push((a, 1));
        events.push((b, -1));
    }
    // Ends sort before starts at the same instant: touching intervals don't
    // overlap.
    events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut cur = 0i32;
    let mut peak = 0i32;
    for (_, d) in events {
        cur += d;
        peak = peak.max(cur);
    }
    peak.max(0) as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{GeneratorConfig, generate};

    #[test]
    fn hand_built_plan_prices_correctly() {
        let inst = generate(&GeneratorConfig::new(1, 1, 2, 3));
        // Pack both orders into one compartment if they fit, else two, and
        // ride the earliest direct service.
        let q: u64 = inst.orders.iter().map(|o| o.quantity as u64).sum();
        let direct = inst
            .satellite_services()
            .filter(|s| s.origin == "J1")
            .min_by_key(|s| s.arrival)
            .expect("direct service exists")
            .clone();
        let mut plan = Plan::default();
        if q <= inst.compartment_capacity() as u64 {
            for o in &inst.orders {
                plan.order_to_compartment.insert(o.id.clone(), "G1".into());
            }
            plan.compartment_chains.insert("G1".into(), vec![direct.id.clone()]);
        } else {
            plan.order_to_compartment.insert("N1".into(), "G1".into());
            plan.order_to_compartment.insert("N2".into(), "G2".into());
            plan.compartment_chains.insert("G1".into(), vec![direct.id.clone()]);
            plan.compartment_chains.insert("G2".into(), vec![direct.id.clone()]);
        }
        plan.routes.insert(direct.id.clone(), vec!["N1".into(), "N2".into()]);
        let eval = verify_plan(&inst, &plan);
        assert!(eval.is_feasible(), "{:?}", eval.violations);
        let compartments = plan.compartment_chains.len() as f64;
        assert!(
            (eval.intermodal_cost - (direct.travel_cost * compartments + direct.fixed_cost)).abs()
                < 1e-9
        );
        let d1 = inst.distances.satellite_leg("L1", "N1").unwrap();
        let d12 = inst.distances.order_leg("N1", "N2").unwrap();
        assert!((eval.lastmile_cost - (d1 + d12)).abs() < 1e-9);
        let t1 = tol::tardiness_days(direct.arrival as f64 + d1, inst.orders[0].due);
        let t2 = tol::tardiness_days(direct.arrival as f64 + d1 + d12, inst.orders[1].due);
        let w1 = inst.orders[0].weight as f64;
        let w2 = inst.orders[1].weight as f64;
        assert!((eval.penalty_cost - (w1 * t1 as f64 + w2 * t2 as f64)).abs() < 1e-9);
        assert_eq!(eval.total, eval.intermodal_cost + eval.lastmile_cost + eval.penalty_cost);
    }

    #[test]
    fn missing_assignment_is_flagged() {
        let inst = generate(&GeneratorConfig::new(1, 1, 2, 3));
        let plan = Plan::default();
        let eval = verify_plan(&inst, &plan);
        assert!(eval.violations.iter().any(|m| m.contains("unassigned")));
    }

    #[test]
    fn capacity_violation_is_flagged() {
        let mut inst = generate(&GeneratorConfig::new(1, 1, 2, 3));
        for o in &mut inst.orders {
            o.quantity = 4000; // together they exceed 5000
        }
        let direct = inst.satellite_services().next().unwrap().id.clone();
        let mut plan = Plan::default();
        plan.order_to_compartment.insert("N1".into(), "G1".into());
        plan.order_to_compartment.insert("N2".into(), "G1".into());
        plan.compartment_chains.insert("G1".into(), vec![direct.clone()]);
        plan.routes.insert(direct, vec!["N1".into(), "N2".into()]);
        let eval = verify_plan(&inst, &plan);
        assert!(eval.violations.iter().any(|m| m.contains("exceeds capacity")));
    }

    #[test]
    fn overlap_counter_handles_touching_intervals() {
        assert_eq!(max_overlap(&[(0.0, 5.0), (5.0, 9.0)]), 1);
        assert_eq!(max_overlap(&[(0.0, 5.0), (4.0, 9.0), (4.5, 6.0)]), 3);
        assert_eq!(max_overlap(&[]), 0);
    }
}
