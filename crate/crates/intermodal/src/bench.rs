//! Benchmark harness: the monolithic model against the decomposition on the
//! generated suite, equal wall budgets per run, one row per instance with one
//! column block per method. Rows run in parallel across instances; a method
//! failing on one instance is recorded in its row and the run continues.

use std::collections::BTreeMap;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generate::{generate_suite, GeneratorConfig};
use crate::instance::Instance;
use crate::lbbd::{compute_gap, run_lbbd, LbbdConfig};
use crate::monolithic::solve_monolithic;
use crate::solver::SolverConfig;
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Milp,
    Lbbd,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Milp => "milp",
            Method::Lbbd => "lbbd",
        }
    }
}

/// One method's outcome on one instance. The gap is always recomputed from
/// the stored bounds; no upper bound means no gap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub status: String,
    pub time_seconds: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MethodResult {
    fn new(
        method: Method,
        status: String,
        time_seconds: f64,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> MethodResult {
        let lower = lower.filter(|l| l.is_finite());
        let upper = upper.filter(|u| u.is_finite());
        let gap = match (lower, upper) {
            (Some(lb), Some(ub)) => Some(compute_gap(lb, ub)),
            _ => None,
        };
        MethodResult { method, status, time_seconds, lower, upper, gap, error: None }
    }

    fn failed(method: Method, time_seconds: f64, error: String) -> MethodResult {
        MethodResult {
            method,
            status: "error".into(),
            time_seconds,
            lower: None,
            upper: None,
            gap: None,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub instance: String,
    pub dcs: usize,
    pub satellites: usize,
    pub orders: usize,
    pub services: usize,
    pub results: Vec<MethodResult>,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Base seed for the generated suite.
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Wall budget per (instance, method) run, identical across methods.
    pub time_limit: Duration,
    /// Iteration cap for the decomposition.
    pub max_iterations: usize,
    /// Stop target in percent; the monolithic run receives it as its
    /// relative MIP gap so both methods chase the same precision.
    pub gap_target: f64,
    /// Run only the first so many suite instances. None runs all 24.
    pub limit: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 42,
            methods: vec![Method::Milp, Method::Lbbd],
            time_limit: Duration::from_secs(900),
            max_iterations: 20,
            gap_target: 1.0,
            limit: None,
        }
    }
}

/// The full run: every row plus per-method aggregates, stamped with enough
/// to reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchSummary {
    pub seed: u64,
    pub backend: String,
    pub time_limit_seconds: f64,
    pub gap_target: f64,
    pub rows: Vec<BenchmarkRow>,
    /// Mean gap per method over the rows where that method has a gap.
    pub mean_gap: BTreeMap<String, Option<f64>>,
    /// Rows where the method held the strictly smallest gap.
    pub wins: BTreeMap<String, usize>,
}

/// Sortable instance label: zero-padded order count so lexicographic order
/// equals numeric order.
fn instance_label(config: &GeneratorConfig) -> String {
    format!(
        "J{}_L{}_N{:03}_s{}",
        config.n_dc, config.n_satellite, config.n_orders, config.seed
    )
}

fn run_method(inst: &Instance, method: Method, cfg: &BenchConfig) -> MethodResult {
    match method {
        Method::Milp => {
            let solver_cfg = SolverConfig {
                time_limit: Some(cfg.time_limit),
                rel_gap: cfg.gap_target / 100.0,
            };
            match solve_monolithic(inst, &solver_cfg) {
                Ok(report) => MethodResult::new(
                    method,
                    report.status,
                    report.wall_seconds,
                    report.bound,
                    report.objective,
                ),
                Err(e) => MethodResult::failed(method, 0.0, e.to_string()),
            }
        }
        Method::Lbbd => {
            let lbbd_cfg = LbbdConfig {
                master_time: Some(cfg.time_limit),
                max_iterations: cfg.max_iterations,
                gap_target: cfg.gap_target,
                rel_gap: tol::DEFAULT_REL_GAP,
                wall_limit: Some(cfg.time_limit),
                ..LbbdConfig::default()
            };
            match run_lbbd(inst, &lbbd_cfg) {
                Ok(report) => MethodResult::new(
                    method,
                    format!("{:?}", report.status).to_lowercase(),
                    report.wall_seconds,
                    Some(report.lower),
                    report.upper,
                ),
                Err(e) => MethodResult::failed(method, 0.0, e.to_string()),
            }
        }
    }
}

/// Run the configured methods over an explicit instance list.
pub fn run_benchmark_on(
    instances: &[(String, Instance)],
    cfg: &BenchConfig,
) -> BenchSummary {
    let mut rows: Vec<BenchmarkRow> = instances
        .par_iter()
        .map(|(label, inst)| {
            let results =
                cfg.methods.iter().map(|&m| run_method(inst, m, cfg)).collect();
            BenchmarkRow {
                instance: label.clone(),
                dcs: inst.dc_hubs().count(),
                satellites: inst.satellites().count(),
                orders: inst.orders.len(),
                services: inst.services.len(),
                results,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.instance.cmp(&b.instance));

    let mut mean_gap = BTreeMap::new();
    let mut wins: BTreeMap<String, usize> = BTreeMap::new();
    for &m in &cfg.methods {
        let gaps: Vec<f64> = rows
            .iter()
            .flat_map(|r| &r.results)
            .filter(|res| res.method == m)
            .filter_map(|res| res.gap)
            .collect();
        let mean = if gaps.is_empty() {
            None
        } else {
            Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
        };
        mean_gap.insert(m.label().to_string(), mean);
        wins.insert(m.label().to_string(), 0);
    }
    for row in &rows {
        let best = row
            .results
            .iter()
            .filter_map(|res| res.gap.map(|g| (res.method, g)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((winner, best_gap)) = best {
            let unique = row
                .results
                .iter()
                .filter(|res| res.gap.is_some_and(|g| g <= best_gap + tol::OBJ_TOL))
                .count()
                == 1;
            if unique {
                *wins.get_mut(winner.label()).expect("method registered") += 1;
            }
        }
    }

    BenchSummary {
        seed: cfg.seed,
        backend: "highs".into(),
        time_limit_seconds: cfg.time_limit.as_secs_f64(),
        gap_target: cfg.gap_target,
        rows,
        mean_gap,
        wins,
    }
}

/// Generate the suite for `cfg.seed` and benchmark it.
pub fn run_benchmark(cfg: &BenchConfig) -> BenchSummary {
    let suite = generate_suite(cfg.seed);
    let take = cfg.limit.unwrap_or(suite.len());
    let instances: Vec<(String, Instance)> = suite
        .into_iter()
        .take(take)
        .map(|(config, inst)| (instance_label(&config), inst))
        .collect();
    run_benchmark_on(&instances, cfg)
}

fn cell(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.2}"),
        None => "-".into(),
    }
}

/// Render the rows as CSV: instance shape columns, then a time/LB/UB/gap
/// block per method. Absent values print as dashes.
pub fn summary_csv(summary: &BenchSummary) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let methods: Vec<&str> = summary
        .rows
        .first()
        .map(|r| r.results.iter().map(|res| res.method.label()).collect())
        .unwrap_or_default();
    let mut header =
        vec!["instance".to_string(), "dcs".into(), "satellites".into(), "orders".into(), "services".into()];
    for m in &methods {
        header.push(format!("{m}_time_s"));
        header.push(format!("{m}_lb"));
        header.push(format!("{m}_ub"));
        header.push(format!("{m}_gap"));
    }
    w.write_record(&header).expect("csv writes to memory");
    for row in &summary.rows {
        let mut record = vec![
            row.instance.clone(),
            row.dcs.to_string(),
            row.satellites.to_string(),
            row.orders.to_string(),
            row.services.to_string(),
        ];
        for res in &row.results {
            record.push(format!("{:.1}", res.time_seconds));
            record.push(cell(res.lower));
            record.push(cell(res.upper));
            record.push(cell(res.gap));
        }
        w.write_record(&record).expect("csv writes to memory");
    }
    String::from_utf8(w.into_inner().expect("csv flushes")).expect("csv is utf8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::generate;
    use crate::oracle::keep_early_services;

    #[test]
    fn micro_suite_produces_full_rows() {
        let instances: Vec<(String, Instance)> = [5u64, 6]
            .iter()
            .map(|&seed| {
                let config = GeneratorConfig::new(1, 1, 3, seed);
                (instance_label(&config), keep_early_services(&generate(&config), 96))
            })
            .collect();
        let cfg = BenchConfig {
            time_limit: Duration::from_secs(60),
            gap_target: 0.0,
            ..BenchConfig::default()
        };
        let summary = run_benchmark_on(&instances, &cfg);
        assert_eq!(summary.rows.len(), 2);
        for row in &summary.rows {
            assert_eq!(row.orders, 3);
            assert_eq!(row.results.len(), 2);
            for res in &row.results {
                assert!(res.error.is_none(), "{:?}", res.error);
                let (lb, ub) = (res.lower.unwrap(), res.upper.unwrap());
                // Stored gap is the recomputed one.
                assert!((res.gap.unwrap() - compute_gap(lb, ub)).abs() < 1e-9);
                assert!(res.gap.unwrap() <= 0.01);
            }
            // Both methods land on the same optimum.
            let objectives: Vec<f64> = row.results.iter().map(|r| r.upper.unwrap()).collect();
            assert!((objectives[0] - objectives[1]).abs() < tol::OBJ_TOL);
        }
        let csv = summary_csv(&summary);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("instance,dcs,satellites,orders,services,milp_time_s"));
        assert_eq!(lines.count(), 2);
        // Aggregates cover both methods.
        assert_eq!(summary.mean_gap.len(), 2);
        assert_eq!(summary.wins.len(), 2);
    }

    #[test]
    fn missing_upper_bound_renders_as_dash_without_gap() {
        let res = MethodResult::new(Method::Milp, "time_limit".into(), 1.0, Some(10.0), None);
        assert_eq!(res.gap, None);
        let summary = BenchSummary {
            seed: 1,
            backend: "highs".into(),
            time_limit_seconds: 1.0,
            gap_target: 1.0,
            rows: vec![BenchmarkRow {
                instance: "J1_L1_N003_s1".into(),
                dcs: 1,
                satellites: 1,
                orders: 3,
                services: 4,
                results: vec![res],
            }],
            mean_gap: BTreeMap::new(),
            wins: BTreeMap::new(),
        };
        let csv = summary_csv(&summary);
        let row = csv.lines().nth(1).unwrap();
        assert!(row.ends_with("1.0,10.00,-,-"), "row: {row}");
    }

    #[test]
    fn suite_labels_sort_numerically() {
        let a = instance_label(&GeneratorConfig::new(2, 2, 60, 1));
        let b = instance_label(&GeneratorConfig::new(2, 2, 100, 1));
        assert!(a < b, "{a} should sort before {b}");
    }
}
