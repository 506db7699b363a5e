//! Fourth-order wells: the lowest majorant of grid data by translated quartics.
//!
//! `φ` has a well with constant `K` at `x̄` when
//! `φ(x̄ + x) - φ(x̄) ≤ K((x - x₀)⁴ - x₀⁴)` for all `x`, with `x₀³ = -φ'(x̄)/(4K)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::GridFunction;

/// Upper end of the search for a feasible constant.
const K_SEARCH_MAX: f64 = 1e12;
const K_BISECTIONS: usize = 60;
/// Violations below this multiple of `max|φ|` are rounding.
const WELL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellEnvelope {
    pub k: f64,
    pub x0: f64,
    pub dx: f64,
    /// Input samples `φ`.
    pub base: Vec<f64>,
    /// `ψ = inf { q : q ≥ φ on the grid, q(y) = K(y - y₀)⁴ + c }`.
    pub values: Vec<f64>,
    /// Center `y₀` of the quartic attaining `ψ` at each node.
    pub centers: Vec<f64>,
    /// Nodes where `φ` itself has no well with constant `K`.
    pub infeasible: Vec<usize>,
    /// Smallest constant for which `φ` has wells at every interior node, if below
    /// the search limit (`None` when even the limit fails).
    pub minimal_k: Option<f64>,
}

impl WellEnvelope {
    pub fn node(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    /// Largest violation of the well inequality by `ψ`, using at each node the
    /// quartic that attains it.
    pub fn max_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.values.len() {
            let xi = self.node(i);
            let s = self.centers[i] - xi;
            for (j, &vj) in self.values.iter().enumerate() {
                let y = self.node(j) - xi;
                worst = worst.max(vj - self.values[i] - self.k * ((y - s).powi(4) - s.powi(4)));
            }
        }
        worst
    }

    pub fn feasible(&self) -> bool {
        self.infeasible.is_empty()
    }
}

/// Well violation `max_j φ_j - φ_i - K((x_j - x_i - s)⁴ - s⁴)` at each interior
/// node, with `s³ = -φ'(x_i)/(4K)` and `φ'` the central difference. End nodes get 0.
pub fn well_violation(phi: &GridFunction, k: f64) -> Vec<f64> {
    let v = &phi.values;
    let n = v.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                return 0.0;
            }
            let slope = (v[i + 1] - v[i - 1]) / (2.0 * phi.dx);
            let s = (-slope / (4.0 * k)).cbrt();
            (0..n)
                .map(|j| {
                    let y = (j as f64 - i as f64) * phi.dx;
                    v[j] - v[i] - k * ((y - s).powi(4) - s.powi(4))
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

fn tolerance(phi: &GridFunction) -> f64 {
    WELL_TOL * phi.sup_norm().max(1.0)
}

/// Smallest `K ≤ k_max` (to a relative `10⁻⁶` after geometric bisection) for
/// which `φ` has wells at every interior node.
pub fn minimal_well_constant(phi: &GridFunction, k_max: f64) -> Option<f64> {
    let tol = tolerance(phi);
    let ok = |k: f64| well_violation(phi, k).iter().all(|&w| w <= tol);
    if !ok(k_max) {
        return None;
    }
    let (mut lo, mut hi) = (k_max * 1e-24, k_max);
    if ok(lo) {
        return Some(lo);
    }
    for _ in 0..K_BISECTIONS {
        if hi / lo < 1.0 + 1e-6 {
            break;
        }
        let m = (lo * hi).sqrt();
        if ok(m) {
            hi = m;
        } else {
            lo = m;
        }
    }
    Some(hi)
}

/// Pointwise infimum of the quartics `K(y - y₀)⁴ + c(y₀)` lying above `φ` on the
/// grid, over centers `y₀` on the grid extended by the reach of the steepest slope.
pub fn quartic_envelope(phi: &GridFunction, k: f64) -> Result<WellEnvelope> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Config(format!("well constant must be positive, got {k}")));
    }
    let v = &phi.values;
    let n = v.len();
    if n < 3 || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("quartic envelope needs at least three finite samples".into()));
    }
    let dx = phi.dx;
    let slope = v.windows(2).map(|w| ((w[1] - w[0]) / dx).abs()).fold(0.0, f64::max);
    let reach = (slope / (4.0 * k)).cbrt() + dx;
    let extra = (reach / dx).ceil() as i64;
    let node = |j: i64| phi.x0 + j as f64 * dx;

    // Lowest admissible offset for each center, then the infimum at each node.
    let centers: Vec<(f64, f64)> = (-extra..n as i64 + extra)
        .map(|c| {
            let y0 = node(c);
            let lift = (0..n).map(|j| v[j] - k * (node(j as i64) - y0).powi(4)).fold(f64::NEG_INFINITY, f64::max);
            (y0, lift)
        })
        .collect();
    let mut values = Vec::with_capacity(n);
    let mut argmin = Vec::with_capacity(n);
    for i in 0..n {
        let xi = node(i as i64);
        let (y0, val) = centers
            .iter()
            .map(|&(y0, c)| (y0, c + k * (xi - y0).powi(4)))
            .fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        values.push(val.max(v[i]));
        argmin.push(y0);
    }
    let tol = tolerance(phi);
    let infeasible = well_violation(phi, k).iter().enumerate().filter(|(_, &w)| w > tol).map(|(i, _)| i).collect::<Vec<_>>();
    let minimal_k = if infeasible.is_empty() {
        minimal_well_constant(phi, k)
    } else {
        minimal_well_constant(phi, K_SEARCH_MAX)
    };
    Ok(WellEnvelope {
        k,
        x0: phi.x0,
        dx,
        base: v.clone(),
        values,
        centers: argmin,
        infeasible,
        minimal_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_is_its_own_envelope() {
        let phi = GridFunction::from_fn(-1.0, 1.0, 41, |_| 0.0);
        let env = quartic_envelope(&phi, 1.0).unwrap();
        assert!(env.values.iter().all(|&v| v == 0.0));
        assert!(env.feasible());
    }

    #[test]
    fn negative_abs_has_wells() {
        // A concave kink is touched from above by the quartic centered on it.
        let phi = GridFunction::from_fn(-3.0, 3.0, 241, |x| -x.abs());
        let env = quartic_envelope(&phi, 1.0).unwrap();
        assert!(env.feasible());
        for i in 0..phi.len() {
            assert!((env.values[i] - phi.values[i]).abs() < 1e-12, "x = {}", phi.node(i));
        }
        assert!(env.max_violation() <= 1e-12, "{}", env.max_violation());
    }

    #[test]
    fn negative_mollifier_lacks_wells_for_small_k() {
        let bump = |x: f64| if x.abs() < 1.0 { -(-1.0 / (1.0 - x * x)).exp() } else { 0.0 };
        let phi = GridFunction::from_fn(-2.0, 2.0, 161, bump);
        let env = quartic_envelope(&phi, 1.0).unwrap();
        assert!(env.infeasible.contains(&80), "{:?}", env.infeasible);
        assert!(env.values[80] > phi.values[80]);
        assert!(env.values.iter().zip(&phi.values).all(|(a, b)| a >= b));
        assert!((env.values[0] - phi.values[0]).abs() < 1e-12);
        let k_min = env.minimal_k.unwrap();
        assert!(k_min > 1.0);
        let feasible = quartic_envelope(&phi, 1.01 * k_min).unwrap();
        assert!(feasible.feasible());
        assert!(env.max_violation() <= 1e-12);
    }

    #[test]
    fn rejects_bad_constants() {
        let phi = GridFunction::from_fn(-1.0, 1.0, 11, |x| x);
        assert!(quartic_envelope(&phi, 0.0).is_err());
    }
}
