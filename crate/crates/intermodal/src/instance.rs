//! Instance data model: hubs, orders, compartments, scheduled services,
//! distance matrix, optional three-stage sections, validation, and the
//! forbidden co-assignment relation between services.
//!
//! All times are integer hours on a common clock (hour 0 = midnight starting
//! the planning week); fractional times are rejected at parse. Distance
//! entries are nonnegative reals serving as both travel times and travel
//! costs in the delivery stage.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid instance: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HubKind {
    Dc,
    Intermediate,
    Satellite,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hub {
    pub id: String,
    pub kind: HubKind,
    /// Plane coordinates; carried for satellites (delivery geometry) and
    /// absent for transfer hubs, whose geometry never enters any cost.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Order {
    pub id: String,
    /// Home distribution-center hub.
    pub dc: String,
    /// Demand in payload units; must fit a single compartment.
    pub quantity: u32,
    /// Due time in hours.
    pub due: i64,
    /// Tardiness weight per day of delay (per squared day in the
    /// three-stage variant).
    pub weight: u32,
    pub x: f64,
    pub y: f64,
    /// Three-stage only: pickup location reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pickup_point: Option<String>,
    /// Three-stage only: customs office reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub customs_office: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Compartment {
    pub id: String,
    /// Hub whose order pool this compartment can be packed from.
    pub dc: String,
    /// Payload capacity; identical across compartments of an instance.
    pub capacity: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Roadway,
    Railway,
    Seaway,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Roadway, Mode::Railway, Mode::Seaway];
}

/// How orders arriving at a satellite by this service are delivered.
/// Only meaningful for satellite-bound services; `HubSpoke` is the two-stage
/// default (one open route per service), `ConnectedHubs` re-consolidates
/// arrivals into template routes under vehicle limits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryMode {
    #[default]
    HubSpoke,
    ConnectedHubs,
}

fn is_hub_spoke(d: &DeliveryMode) -> bool {
    *d == DeliveryMode::HubSpoke
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Service {
    pub id: String,
    pub origin: String,
    pub dest: String,
    pub mode: Mode,
    /// Departure hour; strictly before `arrival`.
    pub departure: i64,
    pub arrival: i64,
    /// Maximum number of compartments carried.
    pub capacity: u32,
    /// Cost per compartment carried.
    pub travel_cost: f64,
    /// Cost paid once if the service is used at all.
    pub fixed_cost: f64,
    #[serde(default, skip_serializing_if = "is_hub_spoke")]
    pub delivery: DeliveryMode,
}

/// Distance entries keyed by endpoint ids: `orders[n][m]` is the leg from
/// order n's delivery point to order m's, `satellites[l][n]` the leg from
/// satellite l to order n. Entries double as travel times (hours) and costs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceMatrix {
    pub orders: BTreeMap<String, BTreeMap<String, f64>>,
    pub satellites: BTreeMap<String, BTreeMap<String, f64>>,
}

impl DistanceMatrix {
    pub fn order_leg(&self, from: &str, to: &str) -> Option<f64> {
        self.orders.get(from).and_then(|row| row.get(to)).copied()
    }

    pub fn satellite_leg(&self, satellite: &str, order: &str) -> Option<f64> {
        self.satellites
            .get(satellite)
            .and_then(|row| row.get(order))
            .copied()
    }

    pub fn total(&self) -> f64 {
        let o: f64 = self.orders.values().flat_map(|r| r.values()).sum();
        let s: f64 = self.satellites.values().flat_map(|r| r.values()).sum();
        o + s
    }
}

/// First-mile pickup route (three-stage only): a fixed tour from pickup
/// points into one DC hub covering a set of orders, with a nominal timetable
/// position and a fixed duration that can be re-scheduled against truck
/// availability.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirstMileRoute {
    pub id: String,
    pub dc: String,
    /// Orders collected by this route; all share `dc`.
    pub orders: Vec<String>,
    pub departure: i64,
    pub arrival: i64,
    pub cost: f64,
}

impl FirstMileRoute {
    pub fn duration(&self) -> i64 {
        self.arrival - self.departure
    }
}

/// Last-mile route template (three-stage only): an ordered delivery sequence
/// out of one satellite, at most a few stops long.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LastMileTemplate {
    pub id: String,
    pub satellite: String,
    pub sequence: Vec<String>,
}

/// Vehicle availability for the three-stage variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resources {
    /// First-mile trucks per DC hub.
    pub trucks: BTreeMap<String, u32>,
    /// Delivery vehicles per satellite.
    pub vehicles: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub hubs: Vec<Hub>,
    pub orders: Vec<Order>,
    pub compartments: Vec<Compartment>,
    pub services: Vec<Service>,
    pub distances: DistanceMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub firstmile_routes: Option<Vec<FirstMileRoute>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lastmile_templates: Option<Vec<LastMileTemplate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resources: Option<Resources>,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Instance, InstanceError> {
        let inst: Instance = serde_json::from_str(text)?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    /// Parse and validate in one step; the error carries all violations.
    pub fn load(text: &str) -> Result<Instance, InstanceError> {
        let inst = Instance::from_json(text)?;
        let violations = validate_instance(&inst);
        if violations.is_empty() {
            Ok(inst)
        } else {
            Err(InstanceError::Invalid(violations))
        }
    }

    pub fn hub(&self, id: &str) -> Option<&Hub> {
        self.hubs.iter().find(|h| h.id == id)
    }

    pub fn order(&self, id: &str) -> Option<&Order> {
        self.orders.iter().find(|o| o.id == id)
    }

    pub fn service(&self, id: &str) -> Option<&Service> {
        self.services.iter().find(|s| s.id == id)
    }

    pub fn dc_hubs(&self) -> impl Iterator<Item = &Hub> {
        self.hubs.iter().filter(|h| h.kind == HubKind::Dc)
    }

    pub fn satellites(&self) -> impl Iterator<Item = &Hub> {
        self.hubs.iter().filter(|h| h.kind == HubKind::Satellite)
    }

    fn hub_kind(&self, id: &str) -> Option<HubKind> {
        self.hub(id).map(|h| h.kind)
    }

    /// Services whose destination is a satellite: the carriers that trigger a
    /// delivery route.
    pub fn satellite_services(&self) -> impl Iterator<Item = &Service> {
        self.services
            .iter()
            .filter(|s| self.hub_kind(&s.dest) == Some(HubKind::Satellite))
    }

    /// Shared compartment capacity. Instances are validated to carry at
    /// least one compartment with a uniform capacity.
    pub fn compartment_capacity(&self) -> u32 {
        self.compartments.first().map(|c| c.capacity).unwrap_or(0)
    }

    /// Horizon constant exceeding any time or cumulative-cost expression the
    /// models can produce: latest service arrival plus the sum of every
    /// distance entry, plus one. Derived, never user input.
    pub fn big_m(&self) -> f64 {
        let max_arrival = self.services.iter().map(|s| s.arrival).max().unwrap_or(0);
        max_arrival as f64 + self.distances.total() + 1.0
    }
}

/// Forbidden co-assignments: for each service s, the set F_s of services that
/// no compartment may combine with s. A service p lands in F_s when
/// (a) it moves inside s's transit window
///     (departure_s <= departure_p < arrival_s, or
///      departure_s < arrival_p <= arrival_s),
/// (b) it leaves s's destination before s arrives there
///     (origin_p = dest_s and departure_p < arrival_s), or
/// (c) it reaches s's origin after s departed
///     (dest_p = origin_s and arrival_p > departure_s).
/// Rules apply literally per ordered pair (s, p), p != s; the relation is not
/// symmetrized.
pub fn compute_forbidden_coassignments(
    services: &[Service],
) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for s in services {
        let entry = out.entry(s.id.clone()).or_default();
        for p in services {
            if p.id == s.id {
                continue;
            }
            let overlap = (s.departure <= p.departure && p.departure < s.arrival)
                || (s.departure < p.arrival && p.arrival <= s.arrival);
            let leaves_dest_early = p.origin == s.dest && p.departure < s.arrival;
            let reaches_origin_late = p.dest == s.origin && p.arrival > s.departure;
            if overlap || leaves_dest_early || reaches_origin_late {
                entry.insert(p.id.clone());
            }
        }
    }
    out
}

/// Full structural validation. Returns every violation found (empty = valid).
pub fn validate_instance(inst: &Instance) -> Vec<String> {
    let mut v = Vec::new();

    let mut hub_ids = HashSet::new();
    for h in &inst.hubs {
        if !hub_ids.insert(h.id.as_str()) {
            v.push(format!("duplicate hub id {}", h.id));
        }
    }
    let kind_of: HashMap<&str, HubKind> =
        inst.hubs.iter().map(|h| (h.id.as_str(), h.kind)).collect();

    let mut order_ids = HashSet::new();
    for o in &inst.orders {
        if !order_ids.insert(o.id.as_str()) {
            v.push(format!("duplicate order id {}", o.id));
        }
        match kind_of.get(o.dc.as_str()) {
            Some(HubKind::Dc) => {}
            Some(_) => v.push(format!("order {} dc {} is not a DC hub", o.id, o.dc)),
            None => v.push(format!("order {} references unknown hub {}", o.id, o.dc)),
        }
        if o.quantity == 0 {
            v.push(format!("order {} has zero quantity", o.id));
        }
        if o.weight == 0 {
            v.push(format!("order {} has zero weight", o.id));
        }
        if o.due < 0 {
            v.push(format!("order {} has negative due time", o.id));
        }
    }

    let mut comp_ids = HashSet::new();
    let mut capacity: Option<u32> = None;
    for c in &inst.compartments {
        if !comp_ids.insert(c.id.as_str()) {
            v.push(format!("duplicate compartment id {}", c.id));
        }
        match kind_of.get(c.dc.as_str()) {
            Some(HubKind::Dc) => {}
            Some(_) => v.push(format!("compartment {} dc {} is not a DC hub", c.id, c.dc)),
            None => v.push(format!("compartment {} references unknown hub {}", c.id, c.dc)),
        }
        if c.capacity == 0 {
            v.push(format!("compartment {} has zero capacity", c.id));
        }
        match capacity {
            None => capacity = Some(c.capacity),
            Some(q) if q != c.capacity => {
                v.push(format!(
                    "compartment {} capacity {} differs from {}",
                    c.id, c.capacity, q
                ));
            }
            Some(_) => {}
        }
    }
    if inst.compartments.is_empty() && !inst.orders.is_empty() {
        v.push("no compartments".into());
    }
    if let Some(q) = capacity {
        for o in &inst.orders {
            if o.quantity > q {
                v.push(format!(
                    "order {} quantity {} exceeds compartment capacity {}",
                    o.id, o.quantity, q
                ));
            }
        }
    }

    let mut service_ids = HashSet::new();
    for s in &inst.services {
        if !service_ids.insert(s.id.as_str()) {
            v.push(format!("duplicate service id {}", s.id));
        }
        match kind_of.get(s.origin.as_str()) {
            Some(HubKind::Satellite) => {
                v.push(format!("service {} departs from satellite {}", s.id, s.origin));
            }
            Some(_) => {}
            None => v.push(format!("service {} references unknown hub {}", s.id, s.origin)),
        }
        if !kind_of.contains_key(s.dest.as_str()) {
            v.push(format!("service {} references unknown hub {}", s.id, s.dest));
        }
        if s.origin == s.dest {
            v.push(format!("service {} is a self-loop at {}", s.id, s.origin));
        }
        if s.departure >= s.arrival {
            v.push(format!(
                "service {} departure {} not before arrival {}",
                s.id, s.departure, s.arrival
            ));
        }
        if s.capacity == 0 {
            v.push(format!("service {} has zero capacity", s.id));
        }
        if !(s.travel_cost >= 0.0) || !(s.fixed_cost >= 0.0) {
            v.push(format!("service {} has negative or non-finite cost", s.id));
        }
    }

    // Distance completeness and sanity over declared ids.
    for (a, row) in &inst.distances.orders {
        if !order_ids.contains(a.as_str()) {
            v.push(format!("distance row for unknown order {a}"));
            continue;
        }
        for (b, d) in row {
            if !order_ids.contains(b.as_str()) {
                v.push(format!("distance entry to unknown order {b}"));
            }
            if !(*d >= 0.0) || !d.is_finite() {
                v.push(format!("distance {a}->{b} is negative or non-finite"));
            }
            if a == b && *d != 0.0 {
                v.push(format!("self-distance of {a} is nonzero"));
            }
        }
    }
    for a in &inst.orders {
        for b in &inst.orders {
            if a.id != b.id && inst.distances.order_leg(&a.id, &b.id).is_none() {
                v.push(format!("missing distance {} -> {}", a.id, b.id));
            }
        }
    }
    for (l, row) in &inst.distances.satellites {
        match kind_of.get(l.as_str()) {
            Some(HubKind::Satellite) => {}
            _ => v.push(format!("satellite distance row for non-satellite {l}")),
        }
        for (b, d) in row {
            if !order_ids.contains(b.as_str()) {
                v.push(format!("satellite distance entry to unknown order {b}"));
            }
            if !(*d >= 0.0) || !d.is_finite() {
                v.push(format!("distance {l}->{b} is negative or non-finite"));
            }
        }
    }
    for h in inst.satellites() {
        for o in &inst.orders {
            if inst.distances.satellite_leg(&h.id, &o.id).is_none() {
                v.push(format!("missing distance {} -> {}", h.id, o.id));
            }
        }
    }

    // Every DC hub holding orders must reach some satellite through a
    // time-respecting service chain. Simple time-respecting chains are
    // automatically free of forbidden co-assignments, so earliest-arrival
    // search is exact here.
    let used_dcs: BTreeSet<&str> = inst.orders.iter().map(|o| o.dc.as_str()).collect();
    for dc in used_dcs {
        if kind_of.get(dc) != Some(&HubKind::Dc) {
            continue; // already reported
        }
        if !reaches_satellite(inst, dc, &kind_of) {
            v.push(format!("DC hub {dc} cannot reach any satellite in time order"));
        }
    }

    validate_extension(inst, &kind_of, &order_ids, &mut v);
    v
}

fn reaches_satellite(inst: &Instance, dc: &str, kind_of: &HashMap<&str, HubKind>) -> bool {
    // Earliest arrival per hub; a chain may start with any service from dc.
    let mut earliest: HashMap<&str, i64> = HashMap::new();
    earliest.insert(dc, i64::MIN);
    loop {
        let mut changed = false;
        for s in &inst.services {
            let Some(&t) = earliest.get(s.origin.as_str()) else {
                continue;
            };
            if s.departure >= t {
                let better = earliest
                    .get(s.dest.as_str())
                    .map(|&cur| s.arrival < cur)
                    .unwrap_or(true);
                if better {
                    earliest.insert(s.dest.as_str(), s.arrival);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    earliest
        .keys()
        .any(|h| kind_of.get(h) == Some(&HubKind::Satellite))
}

fn validate_extension(
    inst: &Instance,
    kind_of: &HashMap<&str, HubKind>,
    order_ids: &HashSet<&str>,
    v: &mut Vec<String>,
) {
    let dc_of: HashMap<&str, &str> = inst
        .orders
        .iter()
        .map(|o| (o.id.as_str(), o.dc.as_str()))
        .collect();
    if let Some(routes) = &inst.firstmile_routes {
        let mut ids = HashSet::new();
        for r in routes {
            if !ids.insert(r.id.as_str()) {
                v.push(format!("duplicate first-mile route id {}", r.id));
            }
            if kind_of.get(r.dc.as_str()) != Some(&HubKind::Dc) {
                v.push(format!("first-mile route {} dc {} is not a DC hub", r.id, r.dc));
            }
            if r.orders.is_empty() {
                v.push(format!("first-mile route {} covers no orders", r.id));
            }
            if r.departure >= r.arrival {
                v.push(format!("first-mile route {} has nonpositive duration", r.id));
            }
            if !(r.cost >= 0.0) {
                v.push(format!("first-mile route {} has negative cost", r.id));
            }
            for n in &r.orders {
                if !order_ids.contains(n.as_str()) {
                    v.push(format!("first-mile route {} covers unknown order {n}", r.id));
                } else if dc_of.get(n.as_str()) != Some(&r.dc.as_str()).copied().as_ref() {
                    v.push(format!(
                        "first-mile route {} covers order {n} of another hub",
                        r.id
                    ));
                }
            }
        }
    }
    if let Some(templates) = &inst.lastmile_templates {
        let mut ids = HashSet::new();
        for t in templates {
            if !ids.insert(t.id.as_str()) {
                v.push(format!("duplicate template id {}", t.id));
            }
            if kind_of.get(t.satellite.as_str()) != Some(&HubKind::Satellite) {
                v.push(format!(
                    "template {} satellite {} is not a satellite hub",
                    t.id, t.satellite
                ));
            }
            if t.sequence.is_empty() {
                v.push(format!("template {} has an empty sequence", t.id));
            }
            let mut seen = HashSet::new();
            for n in &t.sequence {
                if !order_ids.contains(n.as_str()) {
                    v.push(format!("template {} visits unknown order {n}", t.id));
                }
                if !seen.insert(n.as_str()) {
                    v.push(format!("template {} visits order {n} twice", t.id));
                }
            }
            // Every leg must be priced.
            if let Some(first) = t.sequence.first() {
                if inst.distances.satellite_leg(&t.satellite, first).is_none() {
                    v.push(format!("template {} first leg unpriced", t.id));
                }
            }
            for pair in t.sequence.windows(2) {
                if inst.distances.order_leg(&pair[0], &pair[1]).is_none() {
                    v.push(format!(
                        "template {} leg {} -> {} unpriced",
                        t.id, pair[0], pair[1]
                    ));
                }
            }
        }
    }
    if let Some(res) = &inst.resources {
        for (j, k) in &res.trucks {
            if kind_of.get(j.as_str()) != Some(&HubKind::Dc) {
                v.push(format!("truck count for non-DC hub {j}"));
            }
            if *k == 0 {
                v.push(format!("zero trucks at {j}"));
            }
        }
        for (l, k) in &res.vehicles {
            if kind_of.get(l.as_str()) != Some(&HubKind::Satellite) {
                v.push(format!("vehicle count for non-satellite hub {l}"));
            }
            if *k == 0 {
                v.push(format!("zero vehicles at {l}"));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn svc(id: &str, origin: &str, dest: &str, dep: i64, arr: i64) -> Service {
        Service {
            id: id.into(),
            origin: origin.into(),
            dest: dest.into(),
            mode: Mode::Roadway,
            departure: dep,
            arrival: arr,
            capacity: 3,
            travel_cost: 10.0,
            fixed_cost: 100.0,
            delivery: DeliveryMode::HubSpoke,
        }
    }

    #[test]
    fn forbidden_overlap_inside_window() {
        // p departs strictly inside s's transit window: rule (a).
        let services = vec![svc("s", "A", "B", 9, 33), svc("p", "C", "D", 10, 20)];
        let f = compute_forbidden_coassignments(&services);
        assert!(f["s"].contains("p"));
    }

    #[test]
    fn connection_exactly_at_arrival_is_allowed() {
        // p leaves s's destination exactly when s arrives: no rule fires.
        let services = vec![svc("s", "A", "B", 9, 33), svc("p", "B", "C", 33, 40)];
        let f = compute_forbidden_coassignments(&services);
        assert!(!f["s"].contains("p"));
    }

    #[test]
    fn late_arrival_into_origin_is_forbidden() {
        // p reaches s's origin after s departed: rule (c).
        let services = vec![svc("s", "A", "B", 50, 60), svc("p", "C", "A", 30, 55)];
        let f = compute_forbidden_coassignments(&services);
        assert!(f["s"].contains("p"));
    }

    #[test]
    fn relation_is_directional() {
        // s1 ends before s2 starts elsewhere: s2 not forbidden for s1, but
        // s1 arrives into s2's origin? No shared endpoints, disjoint windows.
        let services = vec![svc("s1", "A", "B", 0, 10), svc("s2", "C", "D", 20, 30)];
        let f = compute_forbidden_coassignments(&services);
        assert!(f["s1"].is_empty());
        assert!(f["s2"].is_empty());
    }

    fn micro_instance() -> Instance {
        let hubs = vec![
            Hub { id: "J1".into(), kind: HubKind::Dc, x: None, y: None },
            Hub { id: "L1".into(), kind: HubKind::Satellite, x: Some(1.0), y: Some(2.0) },
        ];
        let orders = vec![Order {
            id: "N1".into(),
            dc: "J1".into(),
            quantity: 1000,
            due: 192,
            weight: 3,
            x: 4.0,
            y: 5.0,
            pickup_point: None,
            customs_office: None,
        }];
        let compartments = vec![Compartment { id: "G1".into(), dc: "J1".into(), capacity: 5000 }];
        let services = vec![svc("S1", "J1", "L1", 9, 30)];
        let mut distances = DistanceMatrix::default();
        distances
            .satellites
            .entry("L1".into())
            .or_default()
            .insert("N1".into(), 2.5);
        Instance {
            hubs,
            orders,
            compartments,
            services,
            distances,
            firstmile_routes: None,
            lastmile_templates: None,
            resources: None,
        }
    }

    #[test]
    fn micro_instance_is_valid() {
        assert_eq!(validate_instance(&micro_instance()), Vec::<String>::new());
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let inst = micro_instance();
        let text = inst.to_json();
        let back = Instance::from_json(&text).unwrap();
        assert_eq!(text, back.to_json());
    }

    #[test]
    fn fractional_times_are_rejected() {
        let mut text = micro_instance().to_json();
        text = text.replace("\"departure\": 9", "\"departure\": 9.5");
        assert!(Instance::from_json(&text).is_err());
    }

    #[test]
    fn oversized_order_is_flagged() {
        let mut inst = micro_instance();
        inst.orders[0].quantity = 6000;
        assert!(
            validate_instance(&inst)
                .iter()
                .any(|m| m.contains("exceeds compartment capacity"))
        );
    }

    #[test]
    fn removing_all_services_breaks_reachability() {
        let mut inst = micro_instance();
        inst.services.clear();
        assert!(
            validate_instance(&inst)
                .iter()
                .any(|m| m.contains("cannot reach any satellite"))
        );
    }

    #[test]
    fn satellite_origin_is_flagged() {
        let mut inst = micro_instance();
        inst.services.push(svc("S2", "L1", "J1", 40, 50));
        assert!(
            validate_instance(&inst)
                .iter()
                .any(|m| m.contains("departs from satellite"))
        );
    }

    #[test]
    fn big_m_dominates_times_and_distances() {
        let inst = micro_instance();
        assert_eq!(inst.big_m(), 30.0 + 2.5 + 1.0);
    }
}
