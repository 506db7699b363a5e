//! Numerical checks of the two limits of the quantized operator: convergence
//! of `M_ε` to the limit operator and the uniform bound on quartic wells.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{i_rho, limit_rhs, m_eps_parts, near_integral, FarField, HamiltonianParams, TestFunction};
use crate::error::{Error, Result};
use crate::potentials::{Order, Potential, ScalingRegime};
use crate::staircase::Envelope;

/// Half-width of the window on which the test function serves as far field.
const FAR_WINDOW: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhsRow {
    pub eps: f64,
    pub value: f64,
    pub abs_err: f64,
    /// Rounding floor of `value`: `4ε V_α''(ρ₀) u(φ(x)) / |φ'(x)|`, with `u` the
    /// unit roundoff of the increments `φ(x+z) - φ(x)`.
    #[serde(default)]
    pub noise: f64,
}

/// `M_ε[φ](x)` against its limit for a list of `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhsTable {
    pub limit: f64,
    pub rows: Vec<RhsRow>,
}

impl RhsTable {
    /// Errors decrease strictly along the rows, except that an error already
    /// below its rounding floor counts as converged.
    pub fn errors_decrease(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].abs_err < w[0].abs_err || w[1].abs_err <= w[1].noise)
    }

    /// Error of the last row relative to `|limit|`.
    pub fn final_relative_error(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.abs_err / self.limit.abs())
    }

    /// CSV with header `eps,value,abs_err`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["eps", "value", "abs_err"])?;
        for r in &self.rows {
            out.write_record([format!("{:e}", r.eps), format!("{:e}", r.value), format!("{:e}", r.abs_err)])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Evaluates `M_ε[φ, φ](x)` with `ρ = 1` for each `ε`, with `φ` clamped outside
/// `[x - 4, x + 4]` as far field, and compares with the limit.
///
/// For `m = 1` the limit is `I_1[φ, φ](x)` at `α`, which includes the far field;
/// for `m = 2, 3` the far-field part vanishes as `α_ε → ∞` and the limit is
/// [`limit_rhs`].
pub fn verify_rhs_convergence(pot: &Potential, phi: &TestFunction, x: f64, regime: &ScalingRegime, eps_list: &[f64], quad_tol: f64) -> Result<RhsTable> {
    let far = FarField::smooth(phi.clone(), x - FAR_WINDOW, x + FAR_WINDOW);
    let limit = match regime.m {
        Order::One => {
            if phi.d1(x) == 0.0 {
                return Err(Error::DegenerateGradient(x));
            }
            i_rho(pot, phi, &far, x, 1.0, regime.alpha, quad_tol)?
        }
        Order::Two => limit_rhs(pot, phi, x, Order::Two, 1.0, quad_tol)?,
        Order::Three => limit_rhs(pot, phi, x, Order::Three, regime.beta, quad_tol)?,
    };
    let rows = eps_list
        .par_iter()
        .map(|&eps| {
            let params = HamiltonianParams {
                rho: 1.0,
                eps,
                alpha_eps: regime.alpha_eps(eps),
                quad_tol,
            };
            let parts = m_eps_parts(pot, phi, &far, x, &params, Envelope::Upper)?;
            let value = parts.total();
            let unit = f64::EPSILON * phi.value(x).abs().max(1.0);
            let noise = 4.0 * eps * pot.rescale(params.alpha_eps, parts.rho0, 2)?.abs() * unit / phi.d1(x).abs();
            Ok(RhsRow {
                eps,
                value,
                abs_err: (value - limit).abs(),
                noise,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RhsTable { limit, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolaRow {
    pub eps: f64,
    pub gamma: f64,
    pub value: f64,
}

/// Values of `γ² pv ∫_{B₁} E_ε[K((z+γ)⁴ - γ⁴)] V_{α_ε}''(z) dz` over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolaTable {
    pub rows: Vec<ParabolaRow>,
    pub max: f64,
    pub min: f64,
}

impl ParabolaTable {
    /// Largest value at a given `ε`.
    pub fn max_at(&self, eps: f64) -> f64 {
        self.rows.iter().filter(|r| r.eps == eps).map(|r| r.value).fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with header `eps,gamma,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["eps", "gamma", "value"])?;
        for r in &self.rows {
            out.write_record([format!("{:e}", r.eps), format!("{:e}", r.gamma), format!("{:e}", r.value)])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Sweeps the quartic-well integral over `eps_grid × gamma_grid` (rows in that order).
#[allow(clippy::too_many_arguments)]
pub fn parabola_bound_sweep(pot: &Potential, regime: &ScalingRegime, k: f64, l: f64, eps_grid: &[f64], gamma_grid: &[f64], quad_tol: f64, env: Envelope) -> Result<ParabolaTable> {
    if !(k > 1.0 && l > 1.0) {
        return Err(Error::Config(format!("K and L must exceed 1, got K = {k}, L = {l}")));
    }
    if let Some(g) = gamma_grid.iter().find(|g| !(g.abs() <= l) || **g == 0.0) {
        return Err(Error::Config(format!("gamma = {g} must satisfy 0 < |gamma| <= L")));
    }
    let cases: Vec<(f64, f64)> = eps_grid.iter().flat_map(|&e| gamma_grid.iter().map(move |&g| (e, g))).collect();
    let rows = cases
        .par_iter()
        .map(|&(eps, gamma)| {
            let params = HamiltonianParams {
                rho: 1.0,
                eps,
                alpha_eps: regime.alpha_eps(eps),
                quad_tol,
            };
            let phi = TestFunction::quartic(k, gamma);
            let (v, _) = near_integral(pot, &phi, 0.0, &params, env)?;
            Ok(ParabolaRow {
                eps,
                gamma,
                value: gamma * gamma * v,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max = rows.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    Ok(ParabolaTable { rows, max, min })
}
