//! Backend-agnostic MILP layer: a plain `Model` description (variables,
//! linear rows, minimization objective) solved through HiGHS. Models are
//! value types; cut loops mutate them between solves and each solve rebuilds
//! the backend problem, so appending rows is always safe. Solves are pinned
//! to one thread for reproducibility.

use std::ops::Bound;
use std::time::{Duration, Instant};

use highs::{HighsModelStatus, RowProblem, Sense};

use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarKind {
    Continuous,
    Integer,
}

#[derive(Debug, Clone)]
struct VarDef {
    kind: VarKind,
    lo: f64,
    hi: f64,
    obj: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A linear minimization model under construction.
#[derive(Debug, Clone, Default)]
pub struct Model {
    vars: Vec<VarDef>,
    rows: Vec<Row>,
}

impl Model {
    pub fn new() -> Model {
        Model::default()
    }

    pub fn add_continuous(&mut self, lo: f64, hi: f64, obj: f64) -> VarId {
        self.push(VarDef { kind: VarKind::Continuous, lo, hi, obj })
    }

    pub fn add_integer(&mut self, lo: f64, hi: f64, obj: f64) -> VarId {
        self.push(VarDef { kind: VarKind::Integer, lo, hi, obj })
    }

    pub fn add_binary(&mut self, obj: f64) -> VarId {
        self.add_integer(0.0, 1.0, obj)
    }

    fn push(&mut self, def: VarDef) -> VarId {
        assert!(def.lo <= def.hi, "empty variable domain");
        self.vars.push(def);
        VarId(self.vars.len() - 1)
    }

    /// Append a row; duplicate variable mentions are accumulated.
    pub fn add_row(&mut self, sense: RowSense, rhs: f64, coeffs: Vec<(VarId, f64)>) {
        for (v, _) in &coeffs {
            assert!(v.0 < self.vars.len(), "row references unknown variable");
        }
        self.rows.push(Row { coeffs, sense, rhs });
    }

    /// Clamp a variable to a fixed value (used to replay solutions).
    pub fn fix(&mut self, var: VarId, value: f64) {
        let def = &mut self.vars[var.0];
        def.lo = value;
        def.hi = value;
    }

    pub fn objective_coefficient(&self, var: VarId) -> f64 {
        self.vars[var.0].obj
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_integer_vars(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Integer).count()
    }

    /// Objective value of a full assignment (no feasibility checking).
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.vars.iter().zip(values).map(|(v, x)| v.obj * x).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Optimal,
    /// Stopped at the time limit with an incumbent; `bound` still holds.
    FeasibleTimeLimit,
    Infeasible,
    Unbounded,
    Error(String),
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Incumbent objective, when an incumbent exists.
    pub objective: Option<f64>,
    /// Best proven lower bound on the optimum.
    pub bound: Option<f64>,
    /// Incumbent variable values, aligned with `VarId` indices.
    pub values: Vec<f64>,
    pub wall: Duration,
}

impl SolveOutcome {
    pub fn has_solution(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::FeasibleTimeLimit)
    }

    /// Read a variable as a rounded binary/integer, erroring beyond the
    /// integrality tolerance.
    pub fn integer_value(&self, var: VarId) -> Result<i64, SolverError> {
        let x = self.values[var.0];
        let r = x.round();
        if (x - r).abs() > tol::INT_TOL {
            return Err(SolverError::Fractional { var: var.0, value: x });
        }
        Ok(r as i64)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("variable {var} is fractional ({value}) beyond tolerance")]
    Fractional { var: usize, value: f64 },
    #[error("solver failure: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub time_limit: Option<Duration>,
    /// Relative MIP gap the backend may stop at.
    pub rel_gap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { time_limit: None, rel_gap: tol::DEFAULT_REL_GAP }
    }
}

/// Solve through HiGHS. Deterministic for a fixed model and config.
pub fn solve(model: &Model, config: &SolverConfig) -> SolveOutcome {
    let start = Instant::now();
    let mut pb = RowProblem::default();
    let mut cols = Vec::with_capacity(model.vars.len());
    for def in &model.vars {
        let bounds = (Bound::Included(def.lo), finite_upper(def.hi));
        let col = match def.kind {
            VarKind::Continuous => pb.add_column(def.obj, bounds),
            VarKind::Integer => pb.add_integer_column(def.obj, bounds),
        };
        cols.push(col);
    }
    for row in &model.rows {
        let factors: Vec<_> = row.coeffs.iter().map(|&(v, c)| (cols[v.0], c)).collect();
        let bounds = match row.sense {
            RowSense::Le => (Bound::Unbounded, Bound::Included(row.rhs)),
            RowSense::Ge => (Bound::Included(row.rhs), Bound::Unbounded),
            RowSense::Eq => (Bound::Included(row.rhs), Bound::Included(row.rhs)),
        };
        pb.add_row(bounds, &factors);
    }

    let mut m = pb.optimise(Sense::Minimise);
    m.make_quiet();
    m.set_option("threads", 1);
    m.set_option("mip_rel_gap", config.rel_gap);
    if let Some(limit) = config.time_limit {
        m.set_option("time_limit", limit.as_secs_f64());
    }
    let solved = match m.try_solve() {
        Ok(s) => s,
        Err(e) => {
            return SolveOutcome {
                status: SolveStatus::Error(format!("{e:?}")),
                objective: None,
                bound: None,
                values: Vec::new(),
                wall: start.elapsed(),
            };
        }
    };

    let raw_status = solved.status();
    let has_incumbent = solved.primal_solution_status() == highs::HighsSolutionStatus::Feasible;
    let bound = solved
        .double_info_value(c"mip_dual_bound")
        .ok()
        .filter(|b| b.is_finite());
    let (status, objective, values) = match raw_status {
        HighsModelStatus::Optimal => {
            let sol = solved.get_solution();
            (SolveStatus::Optimal, Some(solved.objective_value()), sol.columns().to_vec())
        }
        HighsModelStatus::Infeasible => (SolveStatus::Infeasible, None, Vec::new()),
        HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
            (SolveStatus::Unbounded, None, Vec::new())
        }
        HighsModelStatus::ReachedTimeLimit if has_incumbent => {
            let sol = solved.get_solution();
            (
                SolveStatus::FeasibleTimeLimit,
                Some(solved.objective_value()),
                sol.columns().to_vec(),
            )
        }
        other => (
            SolveStatus::Error(format!("backend stopped with {other:?}")),
            None,
            Vec::new(),
        ),
    };
    // A proven optimum is its own bound regardless of what the gap-based
    // dual bound reports.
    let bound = if status == SolveStatus::Optimal { objective } else { bound };
    SolveOutcome { status, objective, bound, values, wall: start.elapsed() }
}

fn finite_upper(hi: f64) -> Bound<f64> {
    if hi.is_finite() { Bound::Included(hi) } else { Bound::Unbounded }
}
