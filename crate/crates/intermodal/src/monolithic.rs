//! Monolithic MILP over both stages: compartment packing and service
//! assignment for the intermodal stage, successor-variable open routes with
//! big-M time propagation for the delivery stage, all in one model.
//!
//! Time and route-cost expressions share the instance's derived horizon
//! constant as big-M. Daily tardiness is integer-valued and pays the ceiling
//! of (delivery - due)/24 through minimization pressure.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::plan::Plan;
use crate::skeleton::{build_stage_one, StageOne};
use crate::solver::{self, Model, RowSense, SolveStatus, SolverConfig, VarId};
use crate::tol;

/// Variable handles for one built model, indexed like the instance:
/// compartments and services by position, satellite-bound services through
/// `sat_services`.
pub struct MonolithicVars {
    /// x[g][s]: compartment g rides service s.
    pub x: Vec<Vec<VarId>>,
    /// y[n][g]: order n packed in compartment g; cross-hub pairs are fixed 0.
    pub y: Vec<Vec<VarId>>,
    /// h[n][sl]: order n ships to a satellite by sat-service sl.
    pub h: Vec<Vec<VarId>>,
    /// e[g]: compartment used.
    pub e: Vec<VarId>,
    /// load[g]: packed units.
    pub load: Vec<VarId>,
    /// v[s]: service used.
    pub v: Vec<VarId>,
    /// count[s]: compartments on service.
    pub count: Vec<VarId>,
    /// gamma[sl][n][m]: m follows n on sl's route (None on the diagonal).
    pub gamma: Vec<Vec<Vec<Option<VarId>>>>,
    /// gplus[sl][n]: n is first on sl's route.
    pub gplus: Vec<Vec<VarId>>,
    /// gminus[sl][n]: n is last on sl's route.
    pub gminus: Vec<Vec<VarId>>,
    /// c[sl][n]: delivery hour of n on sl's route.
    pub c: Vec<Vec<VarId>>,
    /// cmax[sl]: traversed route distance of sl.
    pub cmax: Vec<VarId>,
    /// t[n]: days late.
    pub t: Vec<VarId>,
}

pub struct MonolithicModel {
    pub model: Model,
    pub vars: MonolithicVars,
    /// Indices into `instance.services` of satellite-bound services, in
    /// service order; `gamma`/`h`/... use positions in this list.
    pub sat_services: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildMetadata {
    pub variables: usize,
    pub integer_variables: usize,
    pub rows: usize,
}

pub fn build_monolithic(inst: &Instance) -> MonolithicModel {
    let n_orders = inst.orders.len();
    let big_m = inst.big_m();
    let t_max = (big_m / 24.0).ceil() + 1.0;

    let mut model = Model::new();
    let StageOne { x, y, h, e, load, v, count, sat_services } =
        build_stage_one(inst, &mut model, true);
    let n_sat = sat_services.len();

    let gamma: Vec<Vec<Vec<Option<VarId>>>> = (0..n_sat)
        .map(|_| {
            (0..n_orders)
                .map(|n| {
                    (0..n_orders)
                        .map(|m| if n == m { None } else { Some(model.add_binary(0.0)) })
                        .collect()
                })
                .collect()
        })
        .collect();
    let gplus: Vec<Vec<VarId>> = (0..n_sat)
        .map(|_| (0..n_orders).map(|_| model.add_binary(0.0)).collect())
        .collect();
    let gminus: Vec<Vec<VarId>> = (0..n_sat)
        .map(|_| (0..n_orders).map(|_| model.add_binary(0.0)).collect())
        .collect();
    let c: Vec<Vec<VarId>> = (0..n_sat)
        .map(|_| (0..n_orders).map(|_| model.add_continuous(0.0, f64::INFINITY, 0.0)).collect())
        .collect();
    let cmax: Vec<VarId> =
        (0..n_sat).map(|_| model.add_continuous(0.0, f64::INFINITY, 1.0)).collect();
    let t: Vec<VarId> = inst
        .orders
        .iter()
        .map(|o| model.add_integer(0.0, t_max, o.weight as f64))
        .collect();

    // Open-route structure per satellite-bound service.
    for (sl, &si) in sat_services.iter().enumerate() {
        let service = &inst.services[si];
        let sat = service.dest.as_str();

        let mut starts: Vec<_> = (0..n_orders).map(|n| (gplus[sl][n], 1.0)).collect();
        starts.push((v[si], -1.0));
        model.add_row(RowSense::Eq, 0.0, starts);
        let mut ends: Vec<_> = (0..n_orders).map(|n| (gminus[sl][n], 1.0)).collect();
        ends.push((v[si], -1.0));
        model.add_row(RowSense::Eq, 0.0, ends);

        for n in 0..n_orders {
            let mut succ = vec![(gminus[sl][n], 1.0), (h[n][sl], -1.0)];
            let mut pred = vec![(gplus[sl][n], 1.0), (h[n][sl], -1.0)];
            for m in 0..n_orders {
                if let Some(var) = gamma[sl][n][m] {
                    succ.push((var, 1.0));
                }
                if let Some(var) = gamma[sl][m][n] {
                    pred.push((var, 1.0));
                }
            }
            model.add_row(RowSense::Eq, 0.0, succ);
            model.add_row(RowSense::Eq, 0.0, pred);
            model.add_row(RowSense::Le, 0.0, vec![(gplus[sl][n], 1.0), (h[n][sl], -1.0)]);
            model.add_row(RowSense::Le, 0.0, vec![(gminus[sl][n], 1.0), (h[n][sl], -1.0)]);
        }

        for n in 0..n_orders {
            for m in 0..n_orders {
                let Some(var) = gamma[sl][n][m] else { continue };
                model.add_row(RowSense::Le, 0.0, vec![(var, 1.0), (h[n][sl], -1.0)]);
                model.add_row(RowSense::Le, 0.0, vec![(var, 1.0), (h[m][sl], -1.0)]);
                // Clock propagation along the successor arc.
                let d = inst
                    .distances
                    .order_leg(&inst.orders[n].id, &inst.orders[m].id)
                    .expect("validated instance");
                model.add_row(
                    RowSense::Le,
                    big_m - d,
                    vec![(c[sl][n], 1.0), (c[sl][m], -1.0), (var, big_m)],
                );
            }
            // Clock at the first stop.
            let d = inst
                .distances
                .satellite_leg(sat, &inst.orders[n].id)
                .expect("validated instance");
            model.add_row(
                RowSense::Le,
                big_m - d,
                vec![
                    (h[n][sl], service.arrival as f64),
                    (c[sl][n], -1.0),
                    (gplus[sl][n], big_m),
                ],
            );
            // Daily tardiness dominates every service's clock for the order.
            model.add_row(
                RowSense::Ge,
                -(inst.orders[n].due as f64),
                vec![(t[n], 24.0), (c[sl][n], -1.0)],
            );
        }

        // Traversed distance: start leg plus successor legs; the return to
        // the satellite is never priced.
        let mut coeffs = vec![(cmax[sl], -1.0)];
        for n in 0..n_orders {
            let d = inst
                .distances
                .satellite_leg(sat, &inst.orders[n].id)
                .expect("validated instance");
            coeffs.push((gplus[sl][n], d));
            for m in 0..n_orders {
                if let Some(var) = gamma[sl][n][m] {
                    let dn = inst
                        .distances
                        .order_leg(&inst.orders[n].id, &inst.orders[m].id)
                        .expect("validated instance");
                    coeffs.push((var, dn));
                }
            }
        }
        model.add_row(RowSense::Eq, 0.0, coeffs);
    }

    let vars = MonolithicVars {
        x,
        y,
        h,
        e,
        load,
        v,
        count,
        gamma,
        gplus,
        gminus,
        c,
        cmax,
        t,
    };
    MonolithicModel { model, vars, sat_services }
}

impl MonolithicModel {
    pub fn metadata(&self) -> BuildMetadata {
        BuildMetadata {
            variables: self.model.num_vars(),
            integer_variables: self.model.num_integer_vars(),
            rows: self.model.num_rows(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonolithicReport {
    pub status: String,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    /// Percentage gap between bound and incumbent, when both exist.
    pub gap: Option<f64>,
    pub wall_seconds: f64,
    pub build: BuildMetadata,
    pub plan: Option<Plan>,
}

#[derive(Debug, thiserror::Error)]
pub enum MonolithicError {
    #[error("solver: {0}")]
    Solver(String),
    #[error("solution decode failed: {0}")]
    Decode(String),
}

pub fn solve_monolithic(
    inst: &Instance,
    config: &SolverConfig,
) -> Result<MonolithicReport, MonolithicError> {
    let built = build_monolithic(inst);
    let out = solver::solve(&built.model, config);
    let build = built.metadata();
    let status = match &out.status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::FeasibleTimeLimit => "feasible_time_limit",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unbounded => "unbounded",
        SolveStatus::Error(e) => return Err(MonolithicError::Solver(e.clone())),
    };
    let plan = if out.has_solution() {
        Some(decode_plan(inst, &built, &out.values).map_err(MonolithicError::Decode)?)
    } else {
        None
    };
    let gap = match (out.bound, out.objective) {
        (Some(lb), Some(ub)) => Some(crate::lbbd::compute_gap(lb, ub)),
        _ => None,
    };
    Ok(MonolithicReport {
        status: status.into(),
        objective: out.objective,
        bound: out.bound,
        gap,
        wall_seconds: out.wall.as_secs_f64(),
        build,
        plan: Some(plan).flatten(),
    })
}

/// Read a combinatorial plan back out of variable values.
pub fn decode_plan(
    inst: &Instance,
    built: &MonolithicModel,
    values: &[f64],
) -> Result<Plan, String> {
    let vars = &built.vars;
    let bin = |var: VarId| -> Result<bool, String> {
        let x = values[var.0];
        if (x - x.round()).abs() > tol::INT_TOL {
            return Err(format!("fractional value {x}"));
        }
        Ok(x.round() as i64 == 1)
    };

    let mut plan = Plan::default();
    for (n, o) in inst.orders.iter().enumerate() {
        let mut packed = None;
        for (g, comp) in inst.compartments.iter().enumerate() {
            if bin(vars.y[n][g])? {
                if packed.is_some() {
                    return Err(format!("order {} packed twice", o.id));
                }
                packed = Some(comp.id.clone());
            }
        }
        let g = packed.ok_or_else(|| format!("order {} unpacked", o.id))?;
        plan.order_to_compartment.insert(o.id.clone(), g);
    }

    for (g, comp) in inst.compartments.iter().enumerate() {
        if !bin(vars.e[g])? {
            continue;
        }
        let mut legs: Vec<usize> = Vec::new();
        for (si, _) in inst.services.iter().enumerate() {
            if bin(vars.x[g][si])? {
                legs.push(si);
            }
        }
        // Walk the chain from the home hub; forbidden-pair rows rule out
        // disconnected cycles, so the walk must consume every leg.
        let mut chain = Vec::new();
        let mut here = comp.dc.clone();
        while !legs.is_empty() {
            let pos = legs
                .iter()
                .position(|&si| inst.services[si].origin == here)
                .ok_or_else(|| format!("chain of {} breaks at {here}", comp.id))?;
            let si = legs.remove(pos);
            here = inst.services[si].dest.clone();
            chain.push(inst.services[si].id.clone());
        }
        if chain.is_empty() {
            return Err(format!("used compartment {} has no services", comp.id));
        }
        plan.compartment_chains.insert(comp.id.clone(), chain);
    }

    // Delivery sequences from successor variables, for services that land
    // at least one chain.
    let mut terminals: HashMap<usize, Vec<usize>> = HashMap::new(); // sl -> orders
    for (n, o) in inst.orders.iter().enumerate() {
        let g = plan.order_to_compartment[&o.id].clone();
        let Some(chain) = plan.compartment_chains.get(&g) else {
            return Err(format!("order {} in unused compartment", o.id));
        };
        let last = chain.last().unwrap();
        let si = inst.services.iter().position(|s| &s.id == last).unwrap();
        let sl = built
            .sat_services
            .iter()
            .position(|&i| i == si)
            .ok_or_else(|| format!("chain of {g} ends off-satellite"))?;
        terminals.entry(sl).or_default().push(n);
    }
    for (sl, members) in terminals {
        let si = built.sat_services[sl];
        let mut start = None;
        for &n in &members {
            if bin(vars.gplus[sl][n])? {
                start = Some(n);
            }
        }
        let mut seq = Vec::new();
        let mut cur = start.ok_or_else(|| "route without a first stop".to_string())?;
        loop {
            seq.push(inst.orders[cur].id.clone());
            let mut next = None;
            for m in 0..inst.orders.len() {
                if let Some(var) = vars.gamma[sl][cur][m] {
                    if bin(var)? {
                        next = Some(m);
                    }
                }
            }
            match next {
                Some(m) => cur = m,
                None => break,
            }
        }
        if seq.len() != members.len() {
            return Err(format!(
                "route of {} visits {} of {} orders",
                inst.services[si].id,
                seq.len(),
                members.len()
            ));
        }
        plan.routes.insert(inst.services[si].id.clone(), seq);
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{
        Compartment, DistanceMatrix, Hub, HubKind, Mode, Order, Service,
    };
    use crate::plan::verify_plan;

    fn one_order_instance() -> Instance {
        let mut distances = DistanceMatrix::default();
        distances.orders.entry("N1".into()).or_default().insert("N1".into(), 0.0);
        distances.satellites.entry("L1".into()).or_default().insert("N1".into(), 10.0);
        Instance {
            hubs: vec![
                Hub { id: "J1".into(), kind: HubKind::Dc, x: None, y: None },
                Hub { id: "L1".into(), kind: HubKind::Satellite, x: Some(0.0), y: Some(0.0) },
            ],
            orders: vec![Order {
                id: "N1".into(),
                dc: "J1".into(),
                quantity: 100,
                due: 120,
                weight: 5,
                x: 1.0,
                y: 1.0,
                pickup_point: None,
                customs_office: None,
            }],
            compartments: vec![Compartment { id: "G1".into(), dc: "J1".into(), capacity: 5000 }],
            services: vec![Service {
                id: "S1".into(),
                origin: "J1".into(),
                dest: "L1".into(),
                mode: Mode::Roadway,
                departure: 9,
                arrival: 140,
                capacity: 3,
                travel_cost: 131.0,
                fixed_cost: 250.0,
                delivery: Default::default(),
            }],
            distances,
            firstmile_routes: None,
            lastmile_templates: None,
            resources: None,
        }
    }

    #[test]
    fn single_order_single_service_closed_form() {
        let inst = one_order_instance();
        let report = solve_monolithic(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(report.status, "optimal");
        // Delivery at 140 + 10 = 150, 30h past due 120 -> 2 days, weight 5.
        let expect = 131.0 + 250.0 + 10.0 + 5.0 * 2.0;
        assert!((report.objective.unwrap() - expect).abs() < tol::OBJ_TOL);
        let plan = report.plan.unwrap();
        let eval = verify_plan(&inst, &plan);
        assert!(eval.is_feasible(), "{:?}", eval.violations);
        assert!((eval.total - expect).abs() < tol::OBJ_TOL);
    }

    #[test]
    fn capacity_forces_second_compartment() {
        let mut inst = one_order_instance();
        inst.orders.push(Order {
            id: "N2".into(),
            dc: "J1".into(),
            quantity: 3000,
            due: 120,
            weight: 5,
            x: 2.0,
            y: 2.0,
            pickup_point: None,
            customs_office: None,
        });
        inst.orders[0].quantity = 3000;
        inst.compartments.push(Compartment { id: "G2".into(), dc: "J1".into(), capacity: 5000 });
        let d = &mut inst.distances;
        d.orders.get_mut("N1").unwrap().insert("N2".into(), 4.0);
        d.orders.entry("N2".into()).or_default().insert("N1".into(), 4.0);
        d.orders.get_mut("N2").unwrap().insert("N2".into(), 0.0);
        d.satellites.get_mut("L1").unwrap().insert("N2".into(), 11.0);

        let report = solve_monolithic(&inst, &SolverConfig::default()).unwrap();
        let plan = report.plan.unwrap();
        // 3000 + 3000 > 5000: two compartments on the only service.
        assert_eq!(plan.compartment_chains.len(), 2);
        let eval = verify_plan(&inst, &plan);
        assert!(eval.is_feasible(), "{:?}", eval.violations);
        assert!((eval.total - report.objective.unwrap()).abs() < tol::OBJ_TOL);
        assert!((eval.intermodal_cost - (2.0 * 131.0 + 250.0)).abs() < 1e-9);
    }

    #[test]
    fn unreachable_satellite_is_infeasible() {
        let mut inst = one_order_instance();
        inst.services[0].dest = "J1".into();
        inst.services[0].origin = "L1".into();
        // Make the service structurally absurd but keep the build total: no
        // path from J1 to L1 exists for the compartment.
        inst.services.clear();
        let report = solve_monolithic(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(report.status, "infeasible");
        assert!(report.plan.is_none());
    }
}
