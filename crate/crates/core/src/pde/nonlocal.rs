use rayon::prelude::*;

use super::{evolve, upwind_abs, GridFunction, Scheme};
use crate::error::{Error, Result};
use crate::potentials::{ExternalField, Potential};
use crate::quad::tanh_sinh;

const MAX_STEPS: usize = 50_000_000;
const PARALLEL_NODES: usize = 256;

/// `∫_a^b (p + q z) V_α''(z) dz` through the antiderivatives `V_α'` and `z V_α' - V_α`.
pub(crate) fn linear_moment(pot: &Potential, alpha: f64, a: f64, b: f64, p: f64, q: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let d1 = |z: f64| pot.scaled_d(alpha, 1, z);
    let g = |z: f64| z * pot.scaled_d(alpha, 1, z) - pot.scaled_d(alpha, 0, z);
    p * (d1(b) - d1(a)) + q * (g(b) - g(a))
}

/// `∫ hat(z) V_α''(z) dz` over `z ≥ ρ`, for the hat of width `dx` centered at
/// `center > 0`; `left`/`right` select its rising and falling halves.
pub(crate) fn hat_weight(pot: &Potential, alpha: f64, rho: f64, center: f64, dx: f64, left: bool, right: bool) -> f64 {
    let mut w = 0.0;
    if left {
        let (a, b) = ((center - dx).max(rho), center);
        w += linear_moment(pot, alpha, a, b, -(center - dx) / dx, 1.0 / dx);
    }
    if right {
        let (a, b) = (center.max(rho), center + dx);
        w += linear_moment(pot, alpha, a, b, (center + dx) / dx, -1.0 / dx);
    }
    w
}

/// `∫_0^ρ z² V_α''(z) dz`.
pub(crate) fn near_coefficient(pot: &Potential, alpha: f64, rho: f64, tol: f64) -> Result<f64> {
    Ok(tanh_sinh(|z| if z > 0.0 { z * z * pot.scaled_d(alpha, 2, z) } else { 0.0 }, 0.0, rho, tol)?.value)
}

/// `u_t = (M[u] + U')|u_x|` where `M[u](x_i)` is the compensated integral with
/// the local quadratic interpolant of `u` inside `B_ρ` and the piecewise-linear
/// grid function (constant beyond the grid) outside.
///
/// The velocity is `A_ρ D²u_i + Σ_j W_ij (u_j - u_i) + U'(x_i)` with
/// nonnegative precomputed weights, so it is nondecreasing in every neighbor.
pub struct NonlocalScheme {
    field: ExternalField,
    cfl: f64,
    dx: f64,
    nodes: usize,
    near: f64,
    /// Full-hat weights by offset `k ≥ 1`.
    full: Vec<f64>,
    /// Weight of an end node at offset `k`: its inner half-hat plus the tail beyond the grid.
    end: Vec<f64>,
}

impl NonlocalScheme {
    #[allow(clippy::too_many_arguments)]
    pub fn new(pot: &Potential, alpha: f64, field: &ExternalField, dx: f64, nodes: usize, rho: f64, cfl_safety: f64, quad_tol: f64) -> Result<Self> {
        if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
            return Err(Error::Config(format!("cfl_safety must lie in (0, 1], got {cfl_safety}")));
        }
        if !(rho > 0.0 && dx > 0.0 && alpha > 0.0) || nodes < 3 {
            return Err(Error::Domain("nonlocal scheme needs rho, dx, alpha > 0 and three nodes".into()));
        }
        let near = near_coefficient(pot, alpha, rho, quad_tol)?;
        if !near.is_finite() {
            return Err(Error::Convergence("z²V'' is not integrable at the origin".into()));
        }
        let full: Vec<f64> = (0..nodes)
            .map(|k| if k == 0 { 0.0 } else { hat_weight(pot, alpha, rho, k as f64 * dx, dx, true, true) })
            .collect();
        let end: Vec<f64> = (0..nodes)
            .map(|k| {
                if k == 0 {
                    return 0.0;
                }
                let c = k as f64 * dx;
                hat_weight(pot, alpha, rho, c, dx, true, false) - pot.scaled_d(alpha, 1, c.max(rho))
            })
            .collect();
        Ok(NonlocalScheme {
            field: *field,
            cfl: cfl_safety,
            dx,
            nodes,
            near,
            full,
            end,
        })
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if u.len() != self.nodes || (u.dx - self.dx).abs() > 1e-12 * self.dx {
            return Err(Error::Domain("grid does not match the precomputed stencil".into()));
        }
        Ok(())
    }

    /// `(velocity, Σ_j W_ij)` at node `i`.
    fn velocity(&self, u: &GridFunction, i: usize) -> (f64, f64) {
        let n = u.len();
        let v = &u.values;
        let ui = v[i];
        let l = if i == 0 { u.far_left } else { v[i - 1] };
        let r = if i + 1 == n { u.far_right } else { v[i + 1] };
        let mut acc = self.near * (r - 2.0 * ui + l) / (self.dx * self.dx);
        let mut wsum = 0.0;
        for (j, &uj) in v.iter().enumerate() {
            if j == i {
                continue;
            }
            let k = i.abs_diff(j);
            let w = if j == 0 || j == n - 1 { self.end[k] } else { self.full[k] };
            acc += w * (uj - ui);
            wsum += w;
        }
        (acc + self.field.du(u.node(i)), wsum)
    }

    /// Velocities `M[u] + U'` at every node.
    pub fn velocities(&self, u: &GridFunction) -> Result<Vec<f64>> {
        self.check(u)?;
        Ok(self.map_nodes(u, |i| self.velocity(u, i).0))
    }

    fn map_nodes(&self, u: &GridFunction, f: impl Fn(usize) -> f64 + Sync + Send) -> Vec<f64> {
        if u.len() >= PARALLEL_NODES {
            (0..u.len()).into_par_iter().map(f).collect()
        } else {
            (0..u.len()).map(f).collect()
        }
    }

    fn gradients(u: &GridFunction, i: usize) -> (f64, f64) {
        let n = u.len();
        let l = if i == 0 { u.far_left } else { u.values[i - 1] };
        let r = if i + 1 == n { u.far_right } else { u.values[i + 1] };
        ((u.values[i] - l) / u.dx, (r - u.values[i]) / u.dx)
    }
}

impl Scheme for NonlocalScheme {
    /// `cfl / max_i (S_i G_i + |c_i| / dx)`, where `S_i = 2A_ρ/dx² + Σ_j W_ij`
    /// bounds the sensitivity of the velocity and `G_i` is the upwinded gradient.
    fn stable_dt(&self, u: &GridFunction) -> Result<f64> {
        self.check(u)?;
        let rates = self.map_nodes(u, |i| {
            let (c, wsum) = self.velocity(u, i);
            let (dm, dp) = Self::gradients(u, i);
            let s = 2.0 * self.near / (self.dx * self.dx) + wsum;
            s * dm.abs().max(dp.abs()) + c.abs() / self.dx
        });
        let rate = rates.into_iter().fold(0.0, f64::max);
        if !rate.is_finite() {
            return Err(Error::Convergence("velocity overflow; refine the grid".into()));
        }
        Ok(if rate > 0.0 { self.cfl / rate } else { f64::INFINITY })
    }

    fn step(&self, u: &GridFunction, dt: f64) -> Result<GridFunction> {
        self.check(u)?;
        let values = self.map_nodes(u, |i| {
            let (c, _) = self.velocity(u, i);
            let (dm, dp) = Self::gradients(u, i);
            u.values[i] + dt * c * upwind_abs(c, dm, dp)
        });
        let mut next = GridFunction { values, ..u.clone() };
        next.sync_far_field();
        Ok(next)
    }
}

/// Solves the nonlocal equation up to `t_end`.
#[allow(clippy::too_many_arguments)]
pub fn solve_hj_nonlocal(u0: &GridFunction, pot: &Potential, alpha: f64, field: &ExternalField, t_end: f64, rho: f64, cfl_safety: f64, quad_tol: f64) -> Result<GridFunction> {
    let scheme = NonlocalScheme::new(pot, alpha, field, u0.dx, u0.len(), rho, cfl_safety, quad_tol)?;
    Ok(evolve(&scheme, u0, t_end, MAX_STEPS, |_, _| {})?.0)
}
