//! Command-line driver: generate instances, solve them by any method, run
//! the benchmark suite, and verify plans against raw instance data.
//!
//! Exit codes: 0 on success, 2 when the mathematics says infeasible (an
//! unsolvable instance or a plan with violations), 1 on any operational
//! error (bad paths, malformed files, solver failures).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use intermodal::bench::{run_benchmark, summary_csv, BenchConfig, Method};
use intermodal::extension::{
    extend_instance, run_extended_lbbd, DeliveryLayout, ExtendOptions, ExtendedLbbdConfig,
};
use intermodal::generate::{generate, GeneratorConfig};
use intermodal::instance::validate_instance;
use intermodal::lbbd::{run_lbbd, LbbdConfig, LbbdReport, LbbdStatus};
use intermodal::monolithic::solve_monolithic;
use intermodal::plan::verify_plan;
use intermodal::solver::SolverConfig;
use intermodal::{Instance, Plan};

#[derive(Parser)]
#[command(name = "intermodal", version, about = "Exact intermodal logistics planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveMethod {
    /// Monolithic model over both stages.
    Milp,
    /// Logic-based Benders decomposition.
    Lbbd,
    /// Three-stage decomposition with pickups and pooled delivery.
    LbbdExt,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LayoutArg {
    /// Keep open-route services and add consolidated twins.
    Duplicate,
    /// Flip every satellite-bound service to consolidated delivery.
    AllConnected,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and write it as JSON.
    Gen {
        #[arg(long, default_value_t = 2)]
        dc: usize,
        #[arg(long, default_value_t = 2)]
        sat: usize,
        #[arg(long, default_value_t = 60)]
        orders: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Attach three-stage sections: pickup routes, delivery templates,
        /// fleet counts.
        #[arg(long, default_value_t = false)]
        extend: bool,
        #[arg(long, value_enum, default_value_t = LayoutArg::Duplicate)]
        layout: LayoutArg,
        #[arg(long, default_value_t = 3)]
        trucks: u32,
        #[arg(long, default_value_t = 3)]
        vehicles: u32,
    },
    /// Solve an instance and write a report.
    Solve {
        #[arg(long, value_enum)]
        method: SolveMethod,
        #[arg(long)]
        instance: PathBuf,
        /// Overall wall budget in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Per-iteration master budget in seconds (decomposition methods).
        #[arg(long)]
        master_time: Option<f64>,
        #[arg(long, default_value_t = 20)]
        max_iters: usize,
        /// Stop once the percentage gap reaches this value.
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        /// Time budget in seconds for one round of three-stage pricing.
        #[arg(long)]
        subproblem_time: Option<f64>,
        /// Report JSON path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Iteration trace CSV path (decomposition methods).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Benchmark the generated suite, all methods under equal budgets.
    Bench {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 900.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        #[arg(long, default_value_t = 20)]
        max_iters: usize,
        /// Run only the first so many suite instances.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Reprice a plan from raw instance data and list violations.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading instance {}", path.display()))?;
    let inst = Instance::from_json(&text)
        .with_context(|| format!("parsing instance {}", path.display()))?;
    let problems = validate_instance(&inst);
    if !problems.is_empty() {
        bail!("invalid instance {}: {}", path.display(), problems.join("; "));
    }
    Ok(inst)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("serializing output")?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn secs(value: Option<f64>) -> Option<Duration> {
    value.map(Duration::from_secs_f64)
}

fn write_trace(path: &Path, report: &LbbdReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("writing trace {}", path.display()))?;
    w.write_record([
        "iteration",
        "lower",
        "upper",
        "gap",
        "cuts",
        "master_seconds",
        "subproblem_seconds",
        "subproblem_infeasible",
    ])?;
    let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for t in &report.iterations {
        w.write_record([
            t.iteration.to_string(),
            format!("{:.4}", t.lower),
            cell(t.upper),
            cell(t.gap),
            t.cuts_added.to_string(),
            format!("{:.3}", t.master_seconds),
            format!("{:.3}", t.subproblem_seconds),
            t.subproblem_infeasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn report_exit(report: &LbbdReport) -> ExitCode {
    if report.status == LbbdStatus::Infeasible {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen { dc, sat, orders, seed, out, extend, layout, trucks, vehicles } => {
            let inst = generate(&GeneratorConfig::new(dc, sat, orders, seed));
            let inst = if extend {
                let opts = ExtendOptions {
                    layout: match layout {
                        LayoutArg::Duplicate => DeliveryLayout::Duplicate,
                        LayoutArg::AllConnected => DeliveryLayout::AllConnected,
                    },
                    trucks_per_dc: trucks,
                    vehicles_per_satellite: vehicles,
                    ..ExtendOptions::default()
                };
                extend_instance(&inst, &opts).context("extending instance")?
            } else {
                inst
            };
            let problems = validate_instance(&inst);
            if !problems.is_empty() {
                bail!("generated instance failed validation: {}", problems.join("; "));
            }
            fs::write(&out, inst.to_json())
                .with_context(|| format!("writing {}", out.display()))?;
            println!(
                "wrote {} ({} hubs, {} orders, {} services)",
                out.display(),
                inst.hubs.len(),
                inst.orders.len(),
                inst.services.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            method,
            instance,
            time_limit,
            master_time,
            max_iters,
            gap,
            subproblem_time,
            out,
            trace,
        } => {
            let inst = load_instance(&instance)?;
            match method {
                SolveMethod::Milp => {
                    let cfg = SolverConfig {
                        time_limit: secs(time_limit),
                        rel_gap: gap / 100.0,
                    };
                    let report = solve_monolithic(&inst, &cfg)?;
                    println!(
                        "milp: status {} objective {} bound {} in {:.1}s",
                        report.status,
                        report.objective.map_or("-".into(), |v| format!("{v:.2}")),
                        report.bound.map_or("-".into(), |v| format!("{v:.2}")),
                        report.wall_seconds
                    );
                    if let Some(path) = out {
                        write_json(&path, &report)?;
                    }
                    if report.status == "infeasible" {
                        return Ok(ExitCode::from(2));
                    }
                    Ok(ExitCode::SUCCESS)
                }
                SolveMethod::Lbbd => {
                    let cfg = LbbdConfig {
                        master_time: secs(master_time).or(secs(time_limit)),
                        max_iterations: max_iters,
                        gap_target: gap,
                        wall_limit: secs(time_limit),
                        ..LbbdConfig::default()
                    };
                    let report = run_lbbd(&inst, &cfg)?;
                    print_lbbd("lbbd", &report);
                    if let Some(path) = out {
                        write_json(&path, &report)?;
                    }
                    if let Some(path) = trace {
                        write_trace(&path, &report)?;
                    }
                    Ok(report_exit(&report))
                }
                SolveMethod::LbbdExt => {
                    let cfg = ExtendedLbbdConfig {
                        base: LbbdConfig {
                            master_time: secs(master_time).or(secs(time_limit)),
                            max_iterations: max_iters,
                            gap_target: gap,
                            wall_limit: secs(time_limit),
                            ..LbbdConfig::default()
                        },
                        subproblem_time: secs(subproblem_time)
                            .or(ExtendedLbbdConfig::default().subproblem_time),
                    };
                    let report = run_extended_lbbd(&inst, &cfg)?;
                    print_lbbd("lbbd-ext", &report);
                    if let Some(path) = out {
                        write_json(&path, &report)?;
                    }
                    if let Some(path) = trace {
                        write_trace(&path, &report)?;
                    }
                    Ok(report_exit(&report))
                }
            }
        }
        Command::Bench { seed, time_limit, gap, max_iters, limit, csv, json } => {
            let cfg = BenchConfig {
                seed,
                methods: vec![Method::Milp, Method::Lbbd],
                time_limit: Duration::from_secs_f64(time_limit),
                max_iterations: max_iters,
                gap_target: gap,
                limit,
            };
            let summary = run_benchmark(&cfg);
            for (method, mean) in &summary.mean_gap {
                let wins = summary.wins.get(method).copied().unwrap_or(0);
                println!(
                    "{method}: mean gap {} over {} rows, {wins} wins",
                    mean.map_or("-".into(), |g| format!("{g:.2}%")),
                    summary.rows.len()
                );
            }
            if let Some(path) = csv {
                fs::write(&path, summary_csv(&summary))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = json {
                write_json(&path, &summary)?;
            }
            let any_infeasible = summary
                .rows
                .iter()
                .flat_map(|r| &r.results)
                .any(|res| res.status == "infeasible");
            Ok(if any_infeasible { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
        Command::Verify { instance, plan, out } => {
            let inst = load_instance(&instance)?;
            let text = fs::read_to_string(&plan)
                .with_context(|| format!("reading plan {}", plan.display()))?;
            let plan = Plan::from_json(&text)
                .with_context(|| format!("parsing plan {}", plan.display()))?;
            let eval = verify_plan(&inst, &plan);
            println!(
                "total {:.4} (intermodal {:.4}, first-mile {:.4}, last-mile {:.4}, penalty {:.4})",
                eval.total,
                eval.intermodal_cost,
                eval.firstmile_cost,
                eval.lastmile_cost,
                eval.penalty_cost
            );
            for v in &eval.violations {
                println!("violation: {v}");
            }
            if let Some(path) = out {
                write_json(&path, &eval)?;
            }
            Ok(if eval.is_feasible() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

fn print_lbbd(label: &str, report: &LbbdReport) {
    println!(
        "{label}: status {:?} lower {:.2} upper {} gap {} cuts {} in {:.1}s",
        report.status,
        report.lower,
        report.upper.map_or("-".into(), |v| format!("{v:.2}")),
        report.gap.map_or("-".into(), |v| format!("{v:.2}%")),
        report.total_cuts,
        report.wall_seconds
    );
}
