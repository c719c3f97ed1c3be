//! Deterministic convex solvers for the two relaxation families:
//! box-constrained max-min linear programs and box-constrained least
//! squares.

pub mod certify;

mod boxls;
mod maxmin;

pub use boxls::{box_ls_kkt_residual, solve_box_ls, BOX_LS_KKT_TOL};
pub use maxmin::{
    kkt_residuals, solve_maxmin_box, Duals, KktReport, LpSolution, LpStatus, MaxMinLp, LP_TOL,
};
