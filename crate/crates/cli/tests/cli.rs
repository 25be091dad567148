//! End-to-end runs of the binary: generate, solve by every method, verify,
//! and the exit-code contract.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use intermodal::instance::{
    Compartment, DeliveryMode, DistanceMatrix, FirstMileRoute, Hub, HubKind, Instance,
    LastMileTemplate, Mode, Order, Resources, Service,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_intermodal"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn gen_solve_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = dir.path().join("inst.json");
    let report_path = dir.path().join("lbbd.json");
    let trace_path = dir.path().join("trace.csv");
    let milp_path = dir.path().join("milp.json");
    let plan_path = dir.path().join("plan.json");

    run_ok(bin().args([
        "gen",
        "--dc=1",
        "--sat=1",
        "--orders=3",
        "--seed=5",
        "--out",
        inst_path.to_str().unwrap(),
    ]));
    // Trim the service horizon so the micro solves fast everywhere.
    let mut inst =
        Instance::from_json(&std::fs::read_to_string(&inst_path).unwrap()).unwrap();
    inst.services.retain(|s| s.departure < 96);
    std::fs::write(&inst_path, inst.to_json()).unwrap();

    run_ok(bin().args([
        "solve",
        "--method=lbbd",
        "--instance",
        inst_path.to_str().unwrap(),
        "--gap=0.0",
        "--out",
        report_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]));
    run_ok(bin().args([
        "solve",
        "--method=milp",
        "--instance",
        inst_path.to_str().unwrap(),
        "--out",
        milp_path.to_str().unwrap(),
    ]));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["status"], "converged");
    let milp: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&milp_path).unwrap()).unwrap();
    let (lbbd_ub, milp_obj) =
        (report["upper"].as_f64().unwrap(), milp["objective"].as_f64().unwrap());
    assert!(
        (lbbd_ub - milp_obj).abs() < 1e-4,
        "methods disagree: {lbbd_ub} vs {milp_obj}"
    );

    let trace = std::fs::read_to_string(&trace_path).unwrap();
    assert!(trace.starts_with("iteration,lower,upper,gap,cuts"));
    assert!(trace.lines().count() >= 2, "trace has at least one iteration");

    // The verifier reprices the report's plan to the same total.
    std::fs::write(&plan_path, serde_json::to_string(&report["plan"]).unwrap()).unwrap();
    let out = run_ok(bin().args([
        "verify",
        "--instance",
        inst_path.to_str().unwrap(),
        "--plan",
        plan_path.to_str().unwrap(),
    ]));
    let line = String::from_utf8_lossy(&out.stdout);
    let total: f64 = line
        .split_whitespace()
        .nth(1)
        .and_then(|t| t.parse().ok())
        .expect("verify prints the total first");
    assert!((total - lbbd_ub).abs() < 1e-3, "verify total {total} vs upper {lbbd_ub}");
}

#[test]
fn extended_generation_and_solve() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = dir.path().join("ext.json");
    run_ok(bin().args([
        "gen",
        "--dc=1",
        "--sat=1",
        "--orders=2",
        "--seed=5",
        "--extend",
        "--layout=all-connected",
        "--out",
        inst_path.to_str().unwrap(),
    ]));
    let mut inst =
        Instance::from_json(&std::fs::read_to_string(&inst_path).unwrap()).unwrap();
    inst.services.retain(|s| s.departure < 96);
    std::fs::write(&inst_path, inst.to_json()).unwrap();

    let report_path = dir.path().join("ext-report.json");
    run_ok(bin().args([
        "solve",
        "--method=lbbd-ext",
        "--instance",
        inst_path.to_str().unwrap(),
        "--gap=0.0",
        "--out",
        report_path.to_str().unwrap(),
    ]));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["status"], "converged");
    assert!(report["plan"]["firstmile"].is_array());
}

/// Two 8-hour pickups, one truck, one chain departing hour 9: provably no
/// schedule, so the solve must exit 2 after one feasibility cut.
fn starved_instance() -> Instance {
    let order = |id: &str, y: f64| Order {
        id: id.into(),
        dc: "J1".into(),
        quantity: 1,
        due: 48,
        weight: 5,
        x: 0.0,
        y,
        pickup_point: None,
        customs_office: None,
    };
    let pickup = |id: &str, oid: &str| FirstMileRoute {
        id: id.into(),
        dc: "J1".into(),
        orders: vec![oid.into()],
        departure: 6,
        arrival: 14,
        cost: 10.0,
    };
    Instance {
        hubs: vec![
            Hub { id: "J1".into(), kind: HubKind::Dc, x: None, y: None },
            Hub { id: "L1".into(), kind: HubKind::Satellite, x: Some(1.0), y: Some(1.0) },
        ],
        orders: vec![order("N1", 0.0), order("N2", 0.5)],
        compartments: vec![Compartment { id: "G1".into(), dc: "J1".into(), capacity: 10 }],
        services: vec![Service {
            id: "S1".into(),
            origin: "J1".into(),
            dest: "L1".into(),
            mode: Mode::Roadway,
            departure: 9,
            arrival: 17,
            capacity: 3,
            travel_cost: 7.0,
            fixed_cost: 11.0,
            delivery: DeliveryMode::ConnectedHubs,
        }],
        distances: DistanceMatrix {
            orders: BTreeMap::from([
                ("N1".to_string(), BTreeMap::from([("N2".to_string(), 1.0)])),
                ("N2".to_string(), BTreeMap::from([("N1".to_string(), 1.0)])),
            ]),
            satellites: BTreeMap::from([(
                "L1".to_string(),
                BTreeMap::from([("N1".to_string(), 4.0), ("N2".to_string(), 4.0)]),
            )]),
        },
        firstmile_routes: Some(vec![pickup("F1", "N1"), pickup("F2", "N2")]),
        lastmile_templates: Some(vec![
            LastMileTemplate { id: "R1".into(), satellite: "L1".into(), sequence: vec!["N1".into()] },
            LastMileTemplate { id: "R2".into(), satellite: "L1".into(), sequence: vec!["N2".into()] },
        ]),
        resources: Some(Resources {
            trucks: BTreeMap::from([("J1".to_string(), 1)]),
            vehicles: BTreeMap::from([("L1".to_string(), 1)]),
        }),
    }
}

#[test]
fn infeasible_instance_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = dir.path().join("starved.json");
    std::fs::write(&inst_path, starved_instance().to_json()).unwrap();
    let out = bin()
        .args([
            "solve",
            "--method=lbbd-ext",
            "--instance",
            inst_path.to_str().unwrap(),
            "--gap=0.0",
        ])
        .output()
        .expect("binary runs");
    assert_eq!(
        out.status.code(),
        Some(2),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_file_exits_one() {
    let out = bin()
        .args(["solve", "--method=milp", "--instance", "/nonexistent/inst.json"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(1));
    assert!(!Path::new("/nonexistent/inst.json").exists());
}
