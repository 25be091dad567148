//! Intermodal-stage constraint block shared by the monolithic model and the
//! decomposition master: packing, chain flow, pairwise conflicts, service
//! counts, and the shipping indicators that tie orders to satellite-bound
//! services. Both models must agree on this block exactly, so it lives in
//! one place.

use std::collections::HashMap;

use crate::instance::{HubKind, Instance};
use crate::solver::{Model, RowSense, VarId};

#[derive(Clone)]
pub(crate) struct StageOne {
    /// x[g][s]: compartment g rides service s.
    pub x: Vec<Vec<VarId>>,
    /// y[n][g]: order n packed in compartment g; cross-hub pairs fixed 0.
    pub y: Vec<Vec<VarId>>,
    /// h[n][sl]: order n ships by the sl-th satellite-bound service. Forced
    /// up when the order's compartment rides it and held to exactly one
    /// service per order.
    pub h: Vec<Vec<VarId>>,
    /// e[g]: compartment used.
    pub e: Vec<VarId>,
    /// load[g]: packed units.
    pub load: Vec<VarId>,
    /// v[s]: service used.
    pub v: Vec<VarId>,
    /// count[s]: compartments on service s.
    pub count: Vec<VarId>,
    /// Indices into `instance.services` of satellite-bound services.
    pub sat_services: Vec<usize>,
}

/// Emit variables and constraints for the intermodal stage. With
/// `priced`, service variables carry their fixed and per-compartment
/// travel costs in the objective; the master prices them through its
/// epigraph variable instead and passes false.
pub(crate) fn build_stage_one(inst: &Instance, model: &mut Model, priced: bool) -> StageOne {
    let n_orders = inst.orders.len();
    let n_comps = inst.compartments.len();
    let n_services = inst.services.len();
    let q = inst.compartment_capacity() as f64;

    let kind: HashMap<&str, HubKind> = inst.hubs.iter().map(|h| (h.id.as_str(), h.kind)).collect();
    let sat_services: Vec<usize> = inst
        .services
        .iter()
        .enumerate()
        .filter(|(_, s)| kind.get(s.dest.as_str()) == Some(&HubKind::Satellite))
        .map(|(i, _)| i)
        .collect();
    let n_sat = sat_services.len();

    let x: Vec<Vec<VarId>> = (0..n_comps)
        .map(|_| (0..n_services).map(|_| model.add_binary(0.0)).collect())
        .collect();
    let y: Vec<Vec<VarId>> = inst
        .orders
        .iter()
        .map(|o| {
            inst.compartments
                .iter()
                .map(|c| {
                    let var = model.add_binary(0.0);
                    if c.dc != o.dc {
                        model.fix(var, 0.0);
                    }
                    var
                })
                .collect()
        })
        .collect();
    let h: Vec<Vec<VarId>> = (0..n_orders)
        .map(|_| (0..n_sat).map(|_| model.add_binary(0.0)).collect())
        .collect();
    let e: Vec<VarId> = (0..n_comps).map(|_| model.add_binary(0.0)).collect();
    let load: Vec<VarId> = (0..n_comps).map(|_| model.add_integer(0.0, q, 0.0)).collect();
    let v: Vec<VarId> = inst
        .services
        .iter()
        .map(|s| model.add_binary(if priced { s.fixed_cost } else { 0.0 }))
        .collect();
    let count: Vec<VarId> = inst
        .services
        .iter()
        .map(|s| {
            model.add_integer(0.0, s.capacity as f64, if priced { s.travel_cost } else { 0.0 })
        })
        .collect();

    let same_hub = |n: usize, g: usize| inst.orders[n].dc == inst.compartments[g].dc;

    // Each order packed into exactly one compartment of its hub.
    for n in 0..n_orders {
        let coeffs: Vec<_> =
            (0..n_comps).filter(|&g| same_hub(n, g)).map(|g| (y[n][g], 1.0)).collect();
        model.add_row(RowSense::Eq, 1.0, coeffs);
    }
    // Load definition and the capacity gate that opens the compartment.
    for g in 0..n_comps {
        let mut coeffs = vec![(load[g], -1.0)];
        for n in 0..n_orders {
            if same_hub(n, g) {
                coeffs.push((y[n][g], inst.orders[n].quantity as f64));
            }
        }
        model.add_row(RowSense::Eq, 0.0, coeffs);
        model.add_row(RowSense::Le, 0.0, vec![(load[g], 1.0), (e[g], -q)]);
    }
    // Used compartments leave home once, balance through transfer hubs, and
    // land at exactly one satellite.
    for (g, comp) in inst.compartments.iter().enumerate() {
        let mut depart: Vec<_> = inst
            .services
            .iter()
            .enumerate()
            .filter(|(_, s)| s.origin == comp.dc)
            .map(|(si, _)| (x[g][si], 1.0))
            .collect();
        depart.push((e[g], -1.0));
        model.add_row(RowSense::Eq, 0.0, depart);

        for hub in &inst.hubs {
            if hub.kind == HubKind::Satellite || hub.id == comp.dc {
                continue;
            }
            let mut coeffs = Vec::new();
            for (si, s) in inst.services.iter().enumerate() {
                if s.origin == hub.id {
                    coeffs.push((x[g][si], 1.0));
                }
                if s.dest == hub.id {
                    coeffs.push((x[g][si], -1.0));
                }
            }
            if !coeffs.is_empty() {
                model.add_row(RowSense::Eq, 0.0, coeffs);
            }
        }

        let mut arrive: Vec<_> = sat_services.iter().map(|&si| (x[g][si], 1.0)).collect();
        arrive.push((e[g], -1.0));
        model.add_row(RowSense::Eq, 0.0, arrive);
    }
    // Forbidden co-assignments, one row per ordered pair and compartment.
    let forbidden = crate::instance::compute_forbidden_coassignments(&inst.services);
    let service_index: HashMap<&str, usize> =
        inst.services.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    for (sid, set) in &forbidden {
        let si = service_index[sid.as_str()];
        for tid in set {
            let ti = service_index[tid.as_str()];
            for g in 0..n_comps {
                model.add_row(RowSense::Le, 1.0, vec![(x[g][si], 1.0), (x[g][ti], 1.0)]);
            }
        }
    }
    // Service openness and compartment counts.
    for si in 0..n_services {
        let mut coeffs = vec![(count[si], -1.0)];
        for g in 0..n_comps {
            coeffs.push((x[g][si], 1.0));
            model.add_row(RowSense::Ge, 0.0, vec![(v[si], 1.0), (x[g][si], -1.0)]);
        }
        model.add_row(RowSense::Eq, 0.0, coeffs);
    }
    // Shipping indicator forced up when compartment and packing align.
    for sl in 0..n_sat {
        let si = sat_services[sl];
        for n in 0..n_orders {
            for g in 0..n_comps {
                if same_hub(n, g) {
                    model.add_row(
                        RowSense::Ge,
                        -1.0,
                        vec![(h[n][sl], 1.0), (x[g][si], -1.0), (y[n][g], -1.0)],
                    );
                }
            }
        }
    }
    // ... and held down by exactly-one shipment per order. Cost pressure
    // alone is not enough: legs are not metric, so a route can get cheaper
    // by detouring through an order that ships on another service.
    for n in 0..n_orders {
        let coeffs: Vec<_> = (0..n_sat).map(|sl| (h[n][sl], 1.0)).collect();
        model.add_row(RowSense::Eq, 1.0, coeffs);
    }

    StageOne { x, y, h, e, load, v, count, sat_services }
}
