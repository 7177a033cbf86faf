//! Paths in the plane, adaptive quadrature along them, linear ODE
//! integration and branch-continuous square roots.

mod branch;
mod ode;
mod path;
mod quad;

pub use branch::{branch_sqrt, BranchSample, BranchSqrt, Sign, ZERO_THRESHOLD};
pub use ode::{
    dopri5, solve_linear_ode, solve_linear_ode_multi, solve_pair, wronskian, wronskian_drift, OdeNode,
    OdeOptions, OdeStats, OdeTrajectory, Record, StepEvent, DEFAULT_ODE_TOL,
};
pub use path::{PathSpec, Piece};
pub use quad::{
    adaptive, integrate_along_path, integrate_along_path_detailed, integrate_path_with, Quadrature,
    DEFAULT_QUAD_TOL,
};
