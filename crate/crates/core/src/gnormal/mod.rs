//! G-normal expectations.
//!
//! `Ẽ[φ(ξ)]` for `ξ ~ N(0, [σ̲², σ̄²])` is `u(1, 0)` where `u` solves the
//! nonlinear heat equation `∂_t u - G(∂²_xx u) = 0`, `u(0, x) = φ(x)` with
//! `G(α) = ½(σ̄² α⁺ - σ̲² α⁻)`. [`solve_g_heat`] integrates it with an explicit
//! monotone scheme; [`control_tree_value`] computes the same quantity as the
//! value of a volatility-control problem on a recombining lattice.

mod maximal;
mod params;
mod pde;
mod tree;

pub use maximal::maximal_expect;
pub use params::{g_function, g_mean_function, GParams};
pub use pde::{
    gnormal_expect, gnormal_expect_with_growth, solve_g_heat, solve_g_heat_with, symmetric_grid,
    PdeGrid, PdeSolution, SolveOptions, CFL_MARGIN,
};
pub use tree::{control_tree_value, ControlTree};
