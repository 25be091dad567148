//! Exact optimization for multi-stage intermodal logistics planning.
//!
//! An instance couples an intermodal stage (compartments of orders moving from
//! distribution-center hubs over scheduled services to satellite hubs) with a
//! last-mile stage (one open delivery route per satellite-bound service, paying
//! travel cost plus weighted tardiness). Two exact solution paths are provided:
//! a monolithic MILP over both stages, and a logic-based Benders decomposition
//! whose master handles the intermodal stage against relaxed last-mile
//! surrogates and whose subproblems price exact delivery routes, feeding
//! optimality cuts back until the bounds meet. A three-stage variant adds
//! first-mile pickup routes, template-based consolidated delivery, vehicle
//! resource limits, and quadratic tardiness penalties.

pub mod bench;
pub mod extension;
pub mod generate;
pub mod instance;
pub mod lbbd;
pub mod monolithic;
pub mod oracle;
pub mod plan;
pub mod route;
mod skeleton;
pub mod solver;
pub mod tol;

pub use instance::Instance;
pub use plan::{Plan, PlanEvaluation};
