//! Binary integer linear programs.
//!
//! [`MilpModel`] holds a maximization problem over binary variables. It can
//! be solved exactly with [`solve_exact`] (best-first branch and bound over a
//! built-in simplex relaxation, or a combinatorial bound for coverage
//! models), approximately with [`solve_heuristic`], or handed to an external
//! solver through [`export_mps`] and read back with [`read_solution`].
//!
//! ```
//! use binprog::{MilpModel, RowSense, SolveLimits, solve_exact};
//!
//! let mut m = MilpModel::new("pick-one");
//! let a = m.add_binary("a");
//! let b = m.add_binary("b");
//! m.set_objective(a, 1.0);
//! m.set_objective(b, 2.0);
//! m.add_constraint("one", [(a, 1.0), (b, 1.0)], RowSense::Le, 1.0);
//! let sol = solve_exact(&m, &SolveLimits::default()).unwrap();
//! assert_eq!(sol.objective_value, 2.0);
//! assert!(sol.value(b));
//! ```

mod bnb;
mod coverage;
mod error;
mod heuristic;
mod model;
mod mps;
mod simplex;
mod solution;

pub use bnb::{solve_exact, solve_exact_with, BoundMode, SolveLimits};
pub use coverage::{CoverageItem, CoverageStructure};
pub use error::MilpError;
pub use heuristic::{solve_heuristic, StructureHint};
pub use model::{Constraint, MilpModel, RowSense, VarId, VarKind, Variable};
pub use mps::{export_mps, parse_mps, parse_solution, read_solution, write_mps_string, write_solution_string};
pub use simplex::{solve_relaxation, Fix, LpOutcome};
pub use solution::{relative_gap, MilpSolution, SolveStatus};
