//! `‖V‖_{L¹}`, the lattice series `Ψ(x) = Σ_{k≥1} k² V''(kx)` and the local
//! mobilities `f₂(y) = ‖V‖_{L¹}|y|`, `f₃(y) = (β³/y²) Ψ(β/y)`.

use super::{Order, Potential, ScalingRegime};
use crate::error::{Error, Result};
use crate::quad::{exp_sinh, neumaier, tanh_sinh};

const PSI_K_START: u64 = 8;
const PSI_K_MAX: u64 = 1 << 26;

/// `∫_ℝ |V|` by tanh-sinh on `(0, 1]` and exp-sinh on `[1, ∞)`.
pub fn l1_norm(pot: &Potential, tol: f64) -> Result<f64> {
    if let Some(end) = pot.l1_failure() {
        return Err(Error::NonIntegrable(end));
    }
    let g = |x: f64| pot.d(0, x).abs();
    let near = tanh_sinh(g, 0.0, 1.0, 0.1 * tol)?;
    let far = exp_sinh(|x| pot.d(0, x).abs(), 1.0, 0.1 * tol)?;
    Ok(2.0 * (near.value + far.value))
}

/// Upper bound `(1/x) ∫_{Kx}^∞ (z + x)² 𝕍₂(z) dz` on the tail `Σ_{k>K} k² V''(kx)`.
pub fn psi_tail_bound(pot: &Potential, x: f64, k: u64, tol: f64) -> Result<f64> {
    let x = x.abs();
    let q = exp_sinh(|z| (z + x) * (z + x) * pot.v2_sup(z), k as f64 * x, tol)?;
    Ok(q.value / x)
}

/// Partial sum `Σ_{k=1}^{K} k² V''(k|x|)`, accumulated from the small terms up.
pub fn psi_series_terms(pot: &Potential, x: f64, terms: u64) -> f64 {
    let x = x.abs();
    neumaier((1..=terms).rev().map(|k| {
        let kf = k as f64;
        kf * kf * pot.d(2, kf * x)
    }))
}

/// `Ψ(x)` truncated where the tail bound drops below `tol`.
pub fn psi_series(pot: &Potential, x: f64, tol: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("lattice series evaluated at x = {x}")));
    }
    if pot.max_order() < 2 {
        return Err(Error::UnsupportedOrder { order: 2, max: pot.max_order() });
    }
    let mut k = PSI_K_START;
    loop {
        match psi_tail_bound(pot, x, k, 0.1 * tol) {
            Ok(b) if b < tol => break,
            _ => {}
        }
        k *= 2;
        if k > PSI_K_MAX {
            return Err(Error::Convergence(format!(
                "lattice series at x = {x}: tail bound stays above {tol:e} up to {PSI_K_MAX} terms"
            )));
        }
    }
    Ok(psi_series_terms(pot, x, k))
}

/// `f_m(y)` for `m ∈ {2, 3}`.
pub fn mobility(pot: &Potential, regime: &ScalingRegime, y: f64, tol: f64) -> Result<f64> {
    match regime.m {
        Order::One => Err(Error::Unsupported("the nonlocal regime has no local mobility".into())),
        Order::Two => Ok(l1_norm(pot, tol)? * y.abs()),
        Order::Three => {
            if y == 0.0 {
                return Ok(0.0);
            }
            let b = regime.beta;
            Ok(b * b * b / (y * y) * psi_series(pot, b / y, tol)?)
        }
    }
}

/// Mobility evaluator with cached constants, used inside PDE time loops.
#[derive(Debug, Clone)]
pub struct LocalMobility {
    m: Order,
    beta: f64,
    norm: f64,
    table: Option<Table>,
    pot: Potential,
    tol: f64,
}

#[derive(Debug, Clone)]
struct Table {
    dy: f64,
    values: Vec<f64>,
}

impl LocalMobility {
    pub fn new(pot: &Potential, regime: &ScalingRegime, tol: f64) -> Result<Self> {
        let norm = match regime.m {
            Order::One => return Err(Error::Unsupported("the nonlocal regime has no local mobility".into())),
            Order::Two => l1_norm(pot, tol)?,
            Order::Three => 0.0,
        };
        Ok(LocalMobility {
            m: regime.m,
            beta: regime.beta,
            norm,
            table: None,
            pot: pot.clone(),
            tol,
        })
    }

    /// Tabulates `f₃` on `[0, y_max]` for linear interpolation; beyond the table
    /// the series is evaluated directly.
    pub fn tabulate(mut self, y_max: f64, points: usize) -> Result<Self> {
        if self.m != Order::Three {
            return Ok(self);
        }
        let points = points.max(2);
        let dy = y_max / (points - 1) as f64;
        let values = (0..points).map(|i| self.direct(i as f64 * dy)).collect::<Result<Vec<_>>>()?;
        self.table = Some(Table { dy, values });
        Ok(self)
    }

    fn direct(&self, y: f64) -> Result<f64> {
        if y == 0.0 {
            return Ok(0.0);
        }
        let b = self.beta;
        Ok(b * b * b / (y * y) * psi_series(&self.pot, b / y, self.tol)?)
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        let y = y.abs();
        match self.m {
            Order::Two => Ok(self.norm * y),
            _ => {
                if let Some(t) = &self.table {
                    let s = y / t.dy;
                    let i = s.floor() as usize;
                    if i + 1 < t.values.len() {
                        let w = s - i as f64;
                        return Ok((1.0 - w) * t.values[i] + w * t.values[i + 1]);
                    }
                }
                self.direct(y)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::error::End;
    use crate::potentials::CustomPotential;

    #[test]
    fn wall_norm_is_pi_squared_over_three() {
        let v = l1_norm(&Potential::wall(), 1e-10).unwrap();
        assert!((v - PI * PI / 3.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn non_integrable_ends() {
        assert!(matches!(l1_norm(&Potential::riesz(0.0).unwrap(), 1e-8), Err(Error::NonIntegrable(End::Tail))));
        assert!(matches!(l1_norm(&Potential::riesz(1.5).unwrap(), 1e-8), Err(Error::NonIntegrable(End::Origin))));
    }

    fn bump() -> Potential {
        // Smooth even bump exp(-1/(1-x²)) on (-1, 1), normalized to unit mass.
        const MASS: f64 = 0.443_993_816_168_079_4;
        Potential::custom(CustomPotential {
            name: "bump".into(),
            eval: Arc::new(|k, x| if k == 0 && x < 1.0 { (-1.0 / (1.0 - x * x)).exp() / MASS } else { 0.0 }),
            max_order: 0,
            singularity_exponent: None,
            l1_integrable: true,
            v2_monotone: true,
        })
    }

    #[test]
    fn custom_bump_has_unit_mass() {
        let v = l1_norm(&bump(), 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn psi_wall_large_argument_is_first_term() {
        let p = Potential::wall();
        let s = psi_series(&p, 10.0, 1e-10).unwrap();
        let direct: f64 = (1..=50).map(|k| (k * k) as f64 * p.d(2, 10.0 * k as f64)).sum();
        assert!((s - direct).abs() < 1e-10);
        assert!((s - p.d(2, 10.0)).abs() < 1e-10);
        assert_eq!(psi_series(&p, -0.7, 1e-10).unwrap(), psi_series(&p, 0.7, 1e-10).unwrap());
    }

    #[test]
    fn psi_compact_support_vanishes() {
        let p = Potential::custom(CustomPotential {
            name: "compact".into(),
            eval: Arc::new(|k, x| {
                let s = if x < 2.0 { (2.0 - x).powi(4) } else { 0.0 };
                match k {
                    2 => 12.0 * s.powf(0.5),
                    _ => 0.0,
                }
            }),
            max_order: 2,
            singularity_exponent: None,
            l1_integrable: true,
            v2_monotone: true,
        });
        assert_eq!(psi_series(&p, 3.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn psi_log_diverges() {
        assert!(matches!(psi_series(&Potential::log(), 1.0, 1e-8), Err(Error::Convergence(_))));
    }

    #[test]
    fn mobility_examples() {
        let p = Potential::wall();
        let f2 = mobility(&p, &ScalingRegime::intermediate(), -2.0, 1e-10).unwrap();
        assert!((f2 - 2.0 * PI * PI / 3.0).abs() < 1e-8);
        assert_eq!(mobility(&p, &ScalingRegime::lattice(1.0), 0.0, 1e-10).unwrap(), 0.0);
        assert!(mobility(&p, &ScalingRegime::nonlocal(1.0), 1.0, 1e-10).is_err());
    }

    #[test]
    fn f3_linear_bound_near_zero() {
        let p = Potential::wall();
        let regime = ScalingRegime::lattice(1.0);
        for &y in &[0.05, 0.1, 0.3, 0.6, 0.9] {
            let f3 = mobility(&p, &regime, y, 1e-12).unwrap();
            let bound = p.d(2, 1.0 / y) / (y * y) + y * exp_sinh(|z| (z + 1.0 / y).powi(2) * p.v2_sup(z), 1.0 / y, 1e-14).unwrap().value;
            assert!(f3 >= 0.0 && f3 <= bound * (1.0 + 1e-9), "y={y}: {f3} > {bound}");
        }
    }

    #[test]
    fn f3_approaches_f2_for_steep_gradients() {
        let p = Potential::wall();
        let norm = PI * PI / 3.0;
        let y = 200.0;
        let f3 = mobility(&p, &ScalingRegime::lattice(1.0), y, 1e-9).unwrap();
        // Riemann-sum correction: f3(y) = ‖V‖|y| - β/2 + O(1/y).
        assert!((f3 - (norm * y - 0.5)).abs() < 0.05, "{f3}");
    }

    #[test]
    fn table_matches_direct() {
        let p = Potential::wall();
        let m = LocalMobility::new(&p, &ScalingRegime::lattice(1.0), 1e-10).unwrap();
        let t = m.clone().tabulate(4.0, 4001).unwrap();
        for &y in &[0.0, 0.37, 1.2, 3.99, 5.0] {
            let a = m.eval(y).unwrap();
            let b = t.eval(-y).unwrap();
            assert!((a - b).abs() < 1e-5 * (1.0 + a), "{y}: {a} vs {b}");
        }
    }
}
