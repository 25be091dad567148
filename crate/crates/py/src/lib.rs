//! Python bindings. Structured data crosses the boundary as JSON strings so
//! the Python side works with plain dicts and no generated classes; scalar
//! knobs cross as keyword arguments.
//!
//! Every function raises `ValueError` on malformed input and `RuntimeError`
//! when a solve itself fails.

use std::time::Duration;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use intermodal::extension::{self, DeliveryLayout, ExtendOptions, ExtendedLbbdConfig};
use intermodal::generate::{generate, GeneratorConfig};
use intermodal::instance;
use intermodal::lbbd::{self, LbbdConfig};
use intermodal::monolithic::solve_monolithic;
use intermodal::plan::{self, Plan};
use intermodal::route::{self, PenaltyKind, RouteLimits, RouteTask};
use intermodal::solver::SolverConfig;
use intermodal::Instance;

fn parse_instance(text: &str) -> PyResult<Instance> {
    let inst = Instance::from_json(text)
        .map_err(|e| PyValueError::new_err(format!("instance: {e}")))?;
    let problems = instance::validate_instance(&inst);
    if problems.is_empty() {
        Ok(inst)
    } else {
        Err(PyValueError::new_err(format!("invalid instance: {}", problems.join("; "))))
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(format!("serialize: {e}")))
}

fn secs(value: Option<f64>) -> Option<Duration> {
    value.map(Duration::from_secs_f64)
}

/// Generate a random instance; same arguments, same JSON, on every platform.
#[pyfunction]
#[pyo3(signature = (dcs=2, satellites=2, orders=60, seed=42))]
fn generate_instance(dcs: usize, satellites: usize, orders: usize, seed: u64) -> String {
    generate(&GeneratorConfig::new(dcs, satellites, orders, seed)).to_json()
}

/// List validation problems; an empty list means the instance is usable.
#[pyfunction]
fn validate_instance(instance_json: &str) -> PyResult<Vec<String>> {
    let inst = Instance::from_json(instance_json)
        .map_err(|e| PyValueError::new_err(format!("instance: {e}")))?;
    Ok(instance::validate_instance(&inst))
}

/// Attach the three-stage sections: enumerated pickup routes, delivery
/// templates, and fleet counts. `layout` is "duplicate" or "all_connected".
#[pyfunction]
#[pyo3(signature = (instance_json, layout="duplicate", trucks_per_dc=3, vehicles_per_satellite=3))]
fn extend_instance(
    instance_json: &str,
    layout: &str,
    trucks_per_dc: u32,
    vehicles_per_satellite: u32,
) -> PyResult<String> {
    let inst = parse_instance(instance_json)?;
    let layout = match layout {
        "duplicate" => DeliveryLayout::Duplicate,
        "all_connected" => DeliveryLayout::AllConnected,
        other => {
            return Err(PyValueError::new_err(format!(
                "layout must be \"duplicate\" or \"all_connected\", got {other:?}"
            )))
        }
    };
    let opts = ExtendOptions {
        layout,
        trucks_per_dc,
        vehicles_per_satellite,
        ..ExtendOptions::default()
    };
    let extended = extension::extend_instance(&inst, &opts)
        .map_err(|e| PyValueError::new_err(format!("extend: {e}")))?;
    Ok(extended.to_json())
}

/// Solve the monolithic two-stage model; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (instance_json, time_limit=None, rel_gap=None))]
fn solve_milp(
    instance_json: &str,
    time_limit: Option<f64>,
    rel_gap: Option<f64>,
) -> PyResult<String> {
    let inst = parse_instance(instance_json)?;
    let cfg = SolverConfig {
        time_limit: secs(time_limit),
        rel_gap: rel_gap.unwrap_or(SolverConfig::default().rel_gap),
    };
    let report =
        solve_monolithic(&inst, &cfg).map_err(|e| PyRuntimeError::new_err(format!("{e}")))?;
    to_json(&report)
}

/// Run the two-stage decomposition; returns the report as JSON. Times are
/// seconds, `gap_target` a percentage.
#[pyfunction]
#[pyo3(signature = (instance_json, master_time=None, max_iterations=20, gap_target=1.0, wall_limit=None))]
fn run_lbbd(
    instance_json: &str,
    master_time: Option<f64>,
    max_iterations: usize,
    gap_target: f64,
    wall_limit: Option<f64>,
) -> PyResult<String> {
    let inst = parse_instance(instance_json)?;
    let cfg = LbbdConfig {
        master_time: secs(master_time).or(LbbdConfig::default().master_time),
        max_iterations,
        gap_target,
        wall_limit: secs(wall_limit),
        ..LbbdConfig::default()
    };
    let report =
        lbbd::run_lbbd(&inst, &cfg).map_err(|e| PyRuntimeError::new_err(format!("{e}")))?;
    to_json(&report)
}

/// Run the three-stage decomposition on an extended instance.
#[pyfunction]
#[pyo3(signature = (instance_json, master_time=None, max_iterations=20, gap_target=1.0, wall_limit=None, subproblem_time=None))]
fn run_extended_lbbd(
    instance_json: &str,
    master_time: Option<f64>,
    max_iterations: usize,
    gap_target: f64,
    wall_limit: Option<f64>,
    subproblem_time: Option<f64>,
) -> PyResult<String> {
    let inst = parse_instance(instance_json)?;
    let cfg = ExtendedLbbdConfig {
        base: LbbdConfig {
            master_time: secs(master_time).or(LbbdConfig::default().master_time),
            max_iterations,
            gap_target,
            wall_limit: secs(wall_limit),
            ..LbbdConfig::default()
        },
        subproblem_time: secs(subproblem_time)
            .or(ExtendedLbbdConfig::default().subproblem_time),
    };
    let report = extension::run_extended_lbbd(&inst, &cfg)
        .map_err(|e| PyRuntimeError::new_err(format!("{e}")))?;
    to_json(&report)
}

/// Price one delivery route exactly: the open tour for `order_ids` out of
/// the satellite served by `service_id`. `penalty` is "linear" or
/// "quadratic" days-late weighting.
#[pyfunction]
#[pyo3(signature = (instance_json, service_id, order_ids, penalty="linear"))]
fn solve_route(
    instance_json: &str,
    service_id: &str,
    order_ids: Vec<String>,
    penalty: &str,
) -> PyResult<String> {
    let inst = parse_instance(instance_json)?;
    let penalty = match penalty {
        "linear" => PenaltyKind::Linear,
        "quadratic" => PenaltyKind::Quadratic,
        other => {
            return Err(PyValueError::new_err(format!(
                "penalty must be \"linear\" or \"quadratic\", got {other:?}"
            )))
        }
    };
    let task = RouteTask::from_instance(&inst, service_id, &order_ids, penalty)
        .map_err(|e| PyValueError::new_err(format!("{e}")))?;
    let solution = route::solve_route(&task, &RouteLimits::default())
        .map_err(|e| PyRuntimeError::new_err(format!("{e}")))?;
    to_json(&solution)
}

/// Reprice a plan against raw instance data; returns the evaluation (cost
/// split plus violation list) as JSON.
#[pyfunction]
fn verify_plan(instance_json: &str, plan_json: &str) -> PyResult<String> {
    let inst = parse_instance(instance_json)?;
    let plan =
        Plan::from_json(plan_json).map_err(|e| PyValueError::new_err(format!("plan: {e}")))?;
    to_json(&plan::verify_plan(&inst, &plan))
}

/// Percentage optimality gap, 100 * (upper - lower) / upper.
#[pyfunction]
fn compute_gap(lower: f64, upper: f64) -> f64 {
    lbbd::compute_gap(lower, upper)
}

#[pymodule]
fn intermodal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(generate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(validate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(extend_instance, m)?)?;
    m.add_function(wrap_pyfunction!(solve_milp, m)?)?;
    m.add_function(wrap_pyfunction!(run_lbbd, m)?)?;
    m.add_function(wrap_pyfunction!(run_extended_lbbd, m)?)?;
    m.add_function(wrap_pyfunction!(solve_route, m)?)?;
    m.add_function(wrap_pyfunction!(verify_plan, m)?)?;
    m.add_function(wrap_pyfunction!(compute_gap, m)?)?;
    Ok(())
}
