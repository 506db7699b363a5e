use rayon::prelude::*;

use super::{evolve, upwind_abs, GridFunction, Scheme};
use crate::error::{Error, Result};
use crate::potentials::{ExternalField, LocalMobility, Order, Potential, ScalingRegime};

const MOBILITY_GUARD: f64 = 1e12;
const MAX_STEPS: usize = 50_000_000;
/// Grids of at least this many nodes update in parallel.
const PARALLEL_NODES: usize = 4096;

/// `u_t = f_m(u_x) u_xx + U'|u_x|` with `f_m` at the central gradient, the
/// three-point Laplacian and `U'|u_x|` upwinded on the sign of `U'`.
///
/// With `Δt = cfl / (2 max f_m / dx² + max|U'| / dx)` and `cfl ≤ 1` each new
/// value is a convex combination of old ones, so the maximum principle holds.
pub struct LocalScheme {
    mobility: LocalMobility,
    field: ExternalField,
    cfl: f64,
}

impl LocalScheme {
    pub fn new(pot: &Potential, m: Order, beta: f64, field: &ExternalField, cfl_safety: f64, tol: f64) -> Result<Self> {
        if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
            return Err(Error::Config(format!("cfl_safety must lie in (0, 1], got {cfl_safety}")));
        }
        let regime = match m {
            Order::Two => ScalingRegime::intermediate(),
            Order::Three => ScalingRegime::lattice(beta),
            Order::One => return Err(Error::Unsupported("the nonlocal regime uses NonlocalScheme".into())),
        };
        let mobility = LocalMobility::new(pot, &regime, tol)?;
        Ok(LocalScheme {
            mobility,
            field: *field,
            cfl: cfl_safety,
        })
    }

    /// Tabulates `f₃` on `[0, y_max]` for speed (no effect for `m = 2`).
    pub fn with_table(mut self, y_max: f64, points: usize) -> Result<Self> {
        self.mobility = self.mobility.tabulate(y_max, points)?;
        Ok(self)
    }

    fn mobility_at(&self, p: f64) -> Result<f64> {
        let f = self.mobility.eval(p)?;
        if !(f <= MOBILITY_GUARD) {
            return Err(Error::Convergence(format!("mobility {f:e} at gradient {p} exceeds the overflow guard")));
        }
        Ok(f)
    }

    fn neighbors(u: &GridFunction, i: usize) -> (f64, f64, f64) {
        let n = u.len();
        let left = if i == 0 { u.far_left } else { u.values[i - 1] };
        let right = if i + 1 == n { u.far_right } else { u.values[i + 1] };
        (left, u.values[i], right)
    }
}

impl Scheme for LocalScheme {
    fn stable_dt(&self, u: &GridFunction) -> Result<f64> {
        let dx = u.dx;
        let mut f_max = 0.0_f64;
        let mut c_max = 0.0_f64;
        for i in 0..u.len() {
            let (l, _, r) = Self::neighbors(u, i);
            f_max = f_max.max(self.mobility_at((r - l) / (2.0 * dx))?);
            c_max = c_max.max(self.field.du(u.node(i)).abs());
        }
        let rate = 2.0 * f_max / (dx * dx) + c_max / dx;
        Ok(if rate > 0.0 { self.cfl / rate } else { f64::INFINITY })
    }

    fn step(&self, u: &GridFunction, dt: f64) -> Result<GridFunction> {
        let dx = u.dx;
        let node = |i: usize| -> Result<f64> {
            let (l, c, r) = Self::neighbors(u, i);
            let f = self.mobility_at((r - l) / (2.0 * dx))?;
            let lap = (r - 2.0 * c + l) / (dx * dx);
            let du = self.field.du(u.node(i));
            let transport = if du == 0.0 { 0.0 } else { du * upwind_abs(du, (c - l) / dx, (r - c) / dx) };
            Ok(c + dt * (f * lap + transport))
        };
        let values: Vec<f64> = if u.len() >= PARALLEL_NODES {
            (0..u.len()).into_par_iter().map(node).collect::<Result<_>>()?
        } else {
            (0..u.len()).map(node).collect::<Result<_>>()?
        };
        let mut next = GridFunction { values, ..u.clone() };
        next.sync_far_field();
        Ok(next)
    }
}

/// Solves the local equation up to `t_end`.
#[allow(clippy::too_many_arguments)]
pub fn solve_hj_local(u0: &GridFunction, m: Order, pot: &Potential, beta: f64, field: &ExternalField, t_end: f64, cfl_safety: f64) -> Result<GridFunction> {
    let mut scheme = LocalScheme::new(pot, m, beta, field, cfl_safety, 1e-10)?;
    if m == Order::Three {
        let g = super::kappa_from_u(u0).sup_norm();
        scheme = scheme.with_table(4.0 * g.max(1.0), 4001)?;
    }
    Ok(evolve(&scheme, u0, t_end, MAX_STEPS, |_, _| {})?.0)
}
