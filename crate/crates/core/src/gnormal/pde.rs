use serde::{Deserialize, Serialize};

use super::params::GParams;
use crate::error::{config, Error, Result};
use crate::test_function::TestFunction;

/// Relative safety margin in the explicit time-step bound
/// `Δt ≤ Δx² / (σ̄² (1 + CFL_MARGIN))`.
pub const CFL_MARGIN: f64 = 0.1;

/// Uniform space-time grid for the explicit scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_horizon: f64,
    pub nt: usize,
}

impl PdeGrid {
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_horizon / self.nt as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    /// Smallest `nt` satisfying the stability bound for `sigma_upper_sq`.
    pub fn stable_steps(
        x_min: f64,
        x_max: f64,
        nx: usize,
        t_horizon: f64,
        sigma_upper_sq: f64,
    ) -> usize {
        let dx = (x_max - x_min) / (nx - 1) as f64;
        let dt_max = dx * dx / (sigma_upper_sq * (1.0 + CFL_MARGIN));
        ((t_horizon / dt_max).ceil() as usize).max(1)
    }

    pub fn validate(&self, params: &GParams) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return config(format!(
                "need x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            ));
        }
        if self.nx < 3 {
            return config(format!("need nx ≥ 3, got {}", self.nx));
        }
        if self.nt < 1 {
            return config("need nt ≥ 1");
        }
        if !(self.t_horizon > 0.0 && self.t_horizon.is_finite()) {
            return config(format!("horizon must be positive, got {}", self.t_horizon));
        }
        let dx = self.dx();
        let bound = dx * dx / (params.sigma_upper_sq * (1.0 + CFL_MARGIN));
        if params.sigma_upper_sq > 0.0 && self.dt() > bound {
            return config(format!(
                "unstable grid: Δt = {:.3e} exceeds Δx²/(σ̄²·{}) = {:.3e}; use nt ≥ {}",
                self.dt(),
                1.0 + CFL_MARGIN,
                bound,
                Self::stable_steps(
                    self.x_min,
                    self.x_max,
                    self.nx,
                    self.t_horizon,
                    params.sigma_upper_sq
                )
            ));
        }
        Ok(())
    }
}

/// Grid centred on the origin wide enough for `phi` under `params` up to
/// `t_horizon`: half-width `max(8σ̄√T, support + 6σ̄)`. `nx` is forced odd so
/// that `x = 0` is a node.
pub fn symmetric_grid(phi: &TestFunction, params: &GParams, t_horizon: f64, nx: usize) -> PdeGrid {
    let s = params.sigma_upper();
    let support = phi.support_radius().unwrap_or(0.0);
    let mut half = (8.0 * s * t_horizon.sqrt()).max(support + 6.0 * s);
    if half <= 0.0 {
        half = support.max(1.0);
    }
    let nx = if nx % 2 == 0 { nx + 1 } else { nx.max(3) };
    let nt = if params.sigma_upper_sq > 0.0 {
        PdeGrid::stable_steps(-half, half, nx, t_horizon, params.sigma_upper_sq)
    } else {
        1
    };
    PdeGrid {
        x_min: -half,
        x_max: half,
        nx,
        t_horizon,
        nt,
    }
}

/// Retained output of a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Number of evenly spaced time slices kept, including `t = 0` and `t = T`.
    pub snapshots: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { snapshots: 101 }
    }
}

/// Solution surface `u(t, x)` on the saved time slices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeSolution {
    pub grid: PdeGrid,
    pub params: GParams,
    /// Times of the saved slices, ascending; the first is 0 and the last is `T`.
    pub times: Vec<f64>,
    /// `values[k][i] = u(times[k], x_i)`.
    pub values: Vec<Vec<f64>>,
}

impl PdeSolution {
    pub fn final_slice(&self) -> &[f64] {
        self.values
            .last()
            .expect("solution keeps at least two slices")
    }

    /// Linear interpolation of slice `k` at `x`, clamped to the grid.
    pub fn slice_at(&self, k: usize, x: f64) -> f64 {
        interpolate(&self.grid, &self.values[k], x)
    }

    /// `u(T, x)`.
    pub fn terminal_value(&self, x: f64) -> f64 {
        interpolate(&self.grid, self.final_slice(), x)
    }

    /// `u(T, 0)`.
    pub fn value_at_origin(&self) -> f64 {
        self.terminal_value(0.0)
    }

    /// Index of the saved slice nearest to time `t`.
    pub fn nearest_slice(&self, t: f64) -> usize {
        let last = self.times.len() - 1;
        let frac = (t / self.grid.t_horizon).clamp(0.0, 1.0);
        ((frac * last as f64).round() as usize).min(last)
    }
}

fn interpolate(grid: &PdeGrid, slice: &[f64], x: f64) -> f64 {
    let dx = grid.dx();
    let pos = ((x - grid.x_min) / dx).clamp(0.0, (grid.nx - 1) as f64);
    let i = (pos.floor() as usize).min(grid.nx - 2);
    let w = pos - i as f64;
    slice[i] * (1.0 - w) + slice[i + 1] * w
}

/// Integrates `∂_t u = G(∂²_xx u)` from `u(0, ·) = φ` with default output options.
pub fn solve_g_heat(phi: &TestFunction, params: &GParams, grid: &PdeGrid) -> Result<PdeSolution> {
    solve_g_heat_with(phi, params, grid, SolveOptions::default())
}

/// Explicit monotone scheme: central second difference `D_i`, diffusion
/// coefficient `σ̄²` where `D_i ≥ 0` and `σ̲²` where `D_i < 0`. The two
/// boundary nodes carry a zero second difference, so they keep their initial
/// values.
pub fn solve_g_heat_with(
    phi: &TestFunction,
    params: &GParams,
    grid: &PdeGrid,
    options: SolveOptions,
) -> Result<PdeSolution> {
    params.validate()?;
    grid.validate(params)?;
    let snapshots = options.snapshots.max(2);
    let nx = grid.nx;
    let mut u = Vec::with_capacity(nx);
    for i in 0..nx {
        u.push(phi.eval_checked(grid.x(i))?);
    }
    let dx = grid.dx();
    let dt = grid.dt();
    let up = 0.5 * params.sigma_upper_sq * dt / (dx * dx);
    let lo = 0.5 * params.sigma_lower_sq * dt / (dx * dx);

    // slice k is taken after step round(k * nt / (snapshots - 1))
    let save_step =
        |k: usize| ((k as f64) * grid.nt as f64 / (snapshots - 1) as f64).round() as usize;
    let mut times = vec![0.0];
    let mut values = vec![u.clone()];
    let mut next_save = 1;
    let mut next = u.clone();
    for step in 1..=grid.nt {
        for i in 1..nx - 1 {
            let d2 = u[i + 1] - 2.0 * u[i] + u[i - 1];
            let c = if d2 >= 0.0 { up } else { lo };
            next[i] = u[i] + c * d2;
        }
        std::mem::swap(&mut u, &mut next);
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite value after time step {step}"
            )));
        }
        while next_save < snapshots && save_step(next_save) == step {
            times.push(step as f64 * dt);
            values.push(u.clone());
            next_save += 1;
        }
    }
    // nt < snapshots - 1 leaves some slices unsaved; pin the final one
    if *times.last().unwrap() != grid.t_horizon {
        times.push(grid.t_horizon);
        values.push(u);
    } else if let Some(t) = times.last_mut() {
        *t = grid.t_horizon;
    }
    Ok(PdeSolution {
        grid: *grid,
        params: *params,
        times,
        values,
    })
}

/// Maximum growth order accepted by [`gnormal_expect`].
const DEFAULT_GROWTH_LIMIT: u32 = 2;

/// `Ẽ[φ(ξ)]` read as `u(1, 0)` from a solve on [`symmetric_grid`] with `nx` nodes.
pub fn gnormal_expect(phi: &TestFunction, params: &GParams, nx: usize) -> Result<f64> {
    gnormal_expect_with_growth(phi, params, nx, DEFAULT_GROWTH_LIMIT)
}

/// As [`gnormal_expect`] but accepting growth orders up to `growth_limit`.
pub fn gnormal_expect_with_growth(
    phi: &TestFunction,
    params: &GParams,
    nx: usize,
    growth_limit: u32,
) -> Result<f64> {
    params.validate()?;
    if phi.growth_order() > growth_limit {
        return Err(Error::Rejected(format!(
            "`{}` has growth order {} > {growth_limit}",
            phi.tag(),
            phi.growth_order()
        )));
    }
    if params.sigma_upper_sq == 0.0 {
        return phi.eval_checked(0.0);
    }
    let grid = symmetric_grid(phi, params, 1.0, nx);
    let sol = solve_g_heat_with(phi, params, &grid, SolveOptions { snapshots: 2 })?;
    Ok(sol.value_at_origin())
}
