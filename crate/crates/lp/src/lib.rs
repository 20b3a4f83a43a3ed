//! Sparse revised simplex for equality-form linear programs.
//!
//! ```
//! use svcrb_lp::{solve, LpBuilder, Sense, SolverOptions};
//!
//! // max 3x + 2y  s.t.  x + y + s = 4,  x + 3y + t = 6
//! let mut b = LpBuilder::new(Sense::Maximize);
//! let x = b.add_var("x", 3.0);
//! let y = b.add_var("y", 2.0);
//! let s = b.add_var("s", 0.0);
//! let t = b.add_var("t", 0.0);
//! let r0 = b.add_row("cap", 4.0);
//! let r1 = b.add_row("mix", 6.0);
//! for (r, c, v) in [(r0, x, 1.0), (r0, y, 1.0), (r0, s, 1.0), (r1, x, 1.0), (r1, y, 3.0), (r1, t, 1.0)] {
//!     b.add_coefficient(r, c, v);
//! }
//! let sol = solve(&b.build(), &SolverOptions::default()).unwrap();
//! assert!((sol.objective - 12.0).abs() < 1e-9);
//! ```

mod error;
mod lu;
mod problem;
mod simplex;
mod solution;

pub use error::LpError;
pub use problem::{check_schema, LpBuilder, LpProblem, LpProblemJson, Sense, SparseColumn, PROBLEM_SCHEMA};
pub use simplex::{solve, SolverOptions};
pub use solution::{LpSolution, SolveStatus};
