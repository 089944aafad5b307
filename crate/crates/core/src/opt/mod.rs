//! Self-contained optimisation stack: model builder, LP (dual simplex),
//! strictly convex QP (active set) and MILP (branch and bound).

pub mod lp;
pub mod lpfile;
pub mod milp;
pub mod model;
pub mod qp;

pub use lp::LpConfig;
pub use milp::{solve_lp, solve_milp, BuiltinBackend, MilpBackend, MilpConfig, Solution, Status};
pub use model::{BigM, Cmp, ConstraintId, LinExpr, Model, Sense, Var, VarKind};
pub use qp::{solve_qp, Qp, QpConfig, QpSolution};
