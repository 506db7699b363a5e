//! The quantized nonlocal operator
//! `M_ε[φ, v](x) = pv ∫_{B_ρ} E_ε[φ(x+z) - φ(x)] V_α'' dz + ∫_{B_ρᶜ} E_ε[v(x+z) - v(x)] V_α'' dz`,
//! its compensated limit `I_ρ`, and the limits of `M_ε` as `ε → 0` in the three
//! scaling regimes.
//!
//! `M_ε` is evaluated exactly up to root finding: between two solutions of
//! `φ(x+z) - φ(x) ∈ εℤ` the integrand is a constant times `V_α''`, whose
//! primitive is known. Near `z = 0` the integrand is `±ε/2` with opposite signs
//! on the two sides, so the principal value over `B_{ρ₀}` is dropped exactly.

mod levels;
mod sweep;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{l1_norm, psi_series, Order, Potential};
use crate::quad::{gauss_kronrod, tanh_sinh, Accumulator};
use crate::staircase::{Envelope, Staircase};

use levels::{cutoff, dv, level_pieces, quantize};

pub use sweep::{parabola_bound_sweep, verify_rhs_convergence, ParabolaRow, ParabolaTable, RhsRow, RhsTable};

/// Real function of one variable, shareable across threads.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Smooth test function with its first two (optionally three) derivatives.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    f: RealFn,
    d1: RealFn,
    d2: RealFn,
    d3: Option<RealFn>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({})", self.name)
    }
}

impl TestFunction {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction {
            name: name.into(),
            f: Arc::new(f),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            d3: None,
        }
    }

    pub fn with_third(mut self, d3: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.d3 = Some(Arc::new(d3));
        self
    }

    pub fn sin() -> Self {
        TestFunction::new("sin", f64::sin, f64::cos, |x: f64| -x.sin()).with_third(|x: f64| -x.cos())
    }

    /// `y³/3 + y`, whose slope never drops below 1.
    pub fn cubic() -> Self {
        TestFunction::new("cubic", |y: f64| y * y * y / 3.0 + y, |y: f64| y * y + 1.0, |y: f64| 2.0 * y).with_third(|_| 2.0)
    }

    pub fn linear(slope: f64) -> Self {
        TestFunction::new("linear", move |y| slope * y, move |_| slope, |_| 0.0).with_third(|_| 0.0)
    }

    /// `K((y + γ)⁴ - γ⁴)`.
    pub fn quartic(k: f64, gamma: f64) -> Self {
        let g4 = gamma.powi(4);
        TestFunction::new(
            "quartic",
            move |y: f64| k * ((y + gamma).powi(4) - g4),
            move |y: f64| 4.0 * k * (y + gamma).powi(3),
            move |y: f64| 12.0 * k * (y + gamma).powi(2),
        )
        .with_third(move |y: f64| 24.0 * k * (y + gamma))
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }

    #[inline]
    pub fn d2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }

    pub fn d3(&self, x: f64) -> Option<f64> {
        self.d3.as_ref().map(|d| d(x))
    }

    /// Highest derivative provided.
    pub fn order(&self) -> usize {
        if self.d3.is_some() {
            3
        } else {
            2
        }
    }

    /// Compares each derivative with a central difference of the one below it
    /// at the given points; relative (or absolute below 1) error must be `≤ tol`.
    pub fn check_derivatives(&self, points: &[f64], tol: f64) -> Result<()> {
        let fd = |g: &RealFn, x: f64| {
            let h = 1e-5 * x.abs().max(1.0);
            (g(x + h) - g(x - h)) / (2.0 * h)
        };
        for &x in points {
            let mut pairs = vec![(&self.f, self.d1(x), 1), (&self.d1, self.d2(x), 2)];
            if let Some(d3) = &self.d3 {
                pairs.push((&self.d2, d3(x), 3));
            }
            for (lower, exact, k) in pairs {
                if !exact.is_finite() {
                    return Err(Error::Domain(format!("{}: derivative {k} is not finite at {x}", self.name)));
                }
                let approx = fd(lower, x);
                if (approx - exact).abs() > tol * exact.abs().max(1.0) {
                    return Err(Error::Tolerance(format!(
                        "{}: derivative {k} at {x} is {exact}, finite difference gives {approx}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The function used outside `B_ρ`.
#[derive(Debug, Clone)]
pub enum FarField {
    /// `v ≡ 0`.
    Zero,
    Staircase(Staircase),
    /// `v(y) = f(clamp(y, lo, hi))`.
    Smooth {
        f: TestFunction,
        window: (f64, f64),
    },
}

impl FarField {
    pub fn smooth(f: TestFunction, lo: f64, hi: f64) -> Self {
        FarField::Smooth { f, window: (lo, hi) }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            FarField::Zero => 0.0,
            FarField::Staircase(s) => s.eval(y),
            FarField::Smooth { f, window } => f.value(y.clamp(window.0, window.1)),
        }
    }

    /// `‖v‖_∞` (sampled for smooth fields).
    pub fn sup_norm(&self) -> f64 {
        match self {
            FarField::Zero => 0.0,
            FarField::Staircase(s) => s.sup_norm(),
            FarField::Smooth { f, window } => {
                let (lo, hi) = *window;
                (0..=4000).map(|i| f.value(lo + (hi - lo) * i as f64 / 4000.0).abs()).fold(0.0, f64::max)
            }
        }
    }
}

/// Parameters of `M_ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianParams {
    pub rho: f64,
    pub eps: f64,
    pub alpha_eps: f64,
    pub quad_tol: f64,
}

impl HamiltonianParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho", self.rho), ("eps", self.eps), ("alpha_eps", self.alpha_eps), ("quad_tol", self.quad_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// `M_ε` split into its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizedValue {
    /// Principal value over `B_ρ`.
    pub near: f64,
    /// Integral over `B_ρᶜ`.
    pub far: f64,
    /// Radius of the ball around `x` on which the near integrand is `±ε/2`.
    pub rho0: f64,
}

impl QuantizedValue {
    pub fn total(&self) -> f64 {
        self.near + self.far
    }
}

/// Contributions below this fraction of `quad_tol` are skipped.
const SKIP_FRACTION: f64 = 1e-2;

fn weight(pot: &Potential, alpha: f64, a: f64, b: f64) -> f64 {
    dv(pot, alpha, b) - dv(pot, alpha, a)
}

/// `pv ∫_{B_ρ} E_ε[φ(x+z) - φ(x)] V_α''(z) dz` and the radius `ρ₀`.
pub fn near_integral(pot: &Potential, phi: &TestFunction, x: f64, params: &HamiltonianParams, env: Envelope) -> Result<(f64, f64)> {
    params.validate()?;
    let slope = phi.d1(x);
    if slope == 0.0 || !slope.is_finite() {
        return Err(Error::DegenerateGradient(x));
    }
    let HamiltonianParams {
        rho,
        eps,
        alpha_eps: alpha,
        quad_tol,
    } = *params;
    let phi_x = phi.value(x);
    let bound = (0..=200).map(|i| (phi.value(x - rho + 2.0 * rho * i as f64 / 200.0) - phi_x).abs()).fold(0.0, f64::max);
    let end = cutoff(pot, alpha, 2.0 * bound + eps, SKIP_FRACTION * quad_tol, 0.0, rho);
    let mut sides = Vec::with_capacity(2);
    for s in [1.0, -1.0] {
        let g = |r: f64| phi.value(x + s * r) - phi_x;
        let dg = |r: f64| s * phi.d1(x + s * r);
        sides.push(level_pieces(&g, &dg, 0.0, end, eps, env)?);
    }
    let (first_p, first_m) = (sides[0][0], sides[1][0]);
    if first_p.level != -first_m.level {
        return Err(Error::DegenerateGradient(x));
    }
    let rho0 = first_p.b.min(first_m.b);
    let mut acc = Accumulator::default();
    for pieces in &sides {
        for (i, p) in pieces.iter().enumerate() {
            let a = if i == 0 { rho0 } else { p.a };
            if p.b > a {
                acc.add(p.level * weight(pot, alpha, a, p.b));
            }
        }
    }
    Ok((acc.value(), rho0))
}

/// `∫_{B_ρᶜ} E_ε[v(x+z) - v(x)] V_α''(z) dz`.
pub fn far_integral(pot: &Potential, far: &FarField, x: f64, params: &HamiltonianParams, env: Envelope) -> Result<f64> {
    params.validate()?;
    let HamiltonianParams {
        rho,
        eps,
        alpha_eps: alpha,
        quad_tol,
    } = *params;
    let bound = 2.0 * far.sup_norm() + eps;
    let budget = SKIP_FRACTION * quad_tol;
    if bound * dv(pot, alpha, rho).abs() <= budget {
        return Ok(0.0);
    }
    let vx = far.eval(x);
    let end = cutoff(pot, alpha, bound, budget, rho, f64::MAX);
    let mut acc = Accumulator::default();
    match far {
        FarField::Zero => acc.add(2.0 * quantize(0.0, eps, env) * weight(pot, alpha, rho, f64::INFINITY)),
        FarField::Staircase(st) => {
            for s in [1.0, -1.0] {
                let mut cuts: Vec<f64> = st.jumps.iter().map(|&j| s * (j - x)).filter(|&r| r > rho).collect();
                cuts.sort_by(f64::total_cmp);
                let mut a = rho;
                for b in cuts.into_iter().chain([f64::INFINITY]) {
                    let mid = if b.is_finite() { 0.5 * (a + b) } else { a + 1.0 };
                    let level = quantize(st.eval(x + s * mid) - vx, eps, env);
                    acc.add(level * weight(pot, alpha, a, b));
                    a = b;
                }
            }
        }
        FarField::Smooth { f, window } => {
            for s in [1.0, -1.0] {
                let edge = if s > 0.0 { window.1 } else { window.0 };
                let reach = (s * (edge - x)).max(rho);
                let g = |r: f64| f.value((x + s * r).clamp(window.0, window.1)) - vx;
                let dg = |r: f64| {
                    let y = x + s * r;
                    if y < window.0 || y > window.1 {
                        0.0
                    } else {
                        s * f.d1(y)
                    }
                };
                for p in level_pieces(&g, &dg, rho, reach.min(end), eps, env)? {
                    acc.add(p.level * weight(pot, alpha, p.a, p.b));
                }
                if reach < end {
                    acc.add(quantize(f.value(edge) - vx, eps, env) * weight(pot, alpha, reach, f64::INFINITY));
                }
            }
        }
    }
    Ok(acc.value())
}

/// `M_ε` with its parts; fails with a degenerate-gradient error when `φ'(x) = 0`.
pub fn m_eps_parts(pot: &Potential, phi: &TestFunction, far: &FarField, x: f64, params: &HamiltonianParams, env: Envelope) -> Result<QuantizedValue> {
    let (near, rho0) = near_integral(pot, phi, x, params, env)?;
    let far = far_integral(pot, far, x, params, env)?;
    Ok(QuantizedValue { near, far, rho0 })
}

pub fn m_eps(pot: &Potential, phi: &TestFunction, far: &FarField, x: f64, params: &HamiltonianParams, env: Envelope) -> Result<f64> {
    m_eps_parts(pot, phi, far, x, params, env).map(|v| v.total())
}

/// Below `ρ · TAYLOR_RATIO` the compensated integrand is replaced by `ψ''(x) z² V_α''/2` per side.
const TAYLOR_RATIO: f64 = 1e-4;
const GK_SEGMENTS: usize = 200;

/// `I_ρ[ψ, v](x) = ∫_{B_ρ} (ψ(x+z) - ψ(x) - ψ'(x)z) V_α'' dz + ∫_{B_ρᶜ} (v(x+z) - v(x)) V_α'' dz`.
///
/// The near part pairs `z` with `-z`, so the integrand is the symmetric second
/// difference; it is integrated on dyadic shells of `[ρ·10⁻⁴, ρ]`, and the
/// innermost ball uses the Taylor term.
pub fn i_rho(pot: &Potential, psi: &TestFunction, far: &FarField, x: f64, rho: f64, alpha: f64, quad_tol: f64) -> Result<f64> {
    if !(rho > 0.0 && alpha > 0.0 && quad_tol > 0.0) {
        return Err(Error::Config("rho, alpha and quad_tol must be positive".into()));
    }
    let psi_x = psi.value(x);
    let v2 = |z: f64| pot.scaled_d(alpha, 2, z);
    let second = |z: f64| (psi.value(x + z) + psi.value(x - z) - 2.0 * psi_x) * v2(z);
    let z_c = rho * TAYLOR_RATIO;
    let mut acc = Accumulator::default();
    let inner = tanh_sinh(|z| if z > 0.0 { z * z * v2(z) } else { 0.0 }, 0.0, z_c, 1e-3 * quad_tol)
        .map_err(|e| Error::Convergence(format!("z²V'' is not integrable at the origin: {e}")))?;
    if !inner.value.is_finite() {
        return Err(Error::Convergence("z²V'' is not integrable at the origin".into()));
    }
    acc.add(psi.d2(x) * inner.value);
    let shells = (1.0 / TAYLOR_RATIO).log2().ceil() as usize;
    let mut b = rho;
    for _ in 0..shells {
        let a = (0.5 * b).max(z_c);
        acc.add(gauss_kronrod(second, a, b, quad_tol / (4.0 * shells as f64), 1e-13, GK_SEGMENTS)?.value);
        b = a;
    }
    let vx = far.eval(x);
    match far {
        FarField::Zero => {}
        FarField::Staircase(st) => {
            for s in [1.0, -1.0] {
                let mut cuts: Vec<f64> = st.jumps.iter().map(|&j| s * (j - x)).filter(|&r| r > rho).collect();
                cuts.sort_by(f64::total_cmp);
                let mut a = rho;
                for b in cuts.into_iter().chain([f64::INFINITY]) {
                    let mid = if b.is_finite() { 0.5 * (a + b) } else { a + 1.0 };
                    acc.add((st.eval(x + s * mid) - vx) * weight(pot, alpha, a, b));
                    a = b;
                }
            }
        }
        FarField::Smooth { f, window } => {
            for s in [1.0, -1.0] {
                let edge = if s > 0.0 { window.1 } else { window.0 };
                let reach = (s * (edge - x)).max(rho);
                let mut a = rho;
                while a < reach {
                    let b = (2.0 * a).min(reach);
                    let q = gauss_kronrod(|z| (f.value((x + s * z).clamp(window.0, window.1)) - vx) * v2(z), a, b, 1e-3 * quad_tol, 1e-13, GK_SEGMENTS)?;
                    acc.add(q.value);
                    a = b;
                }
                acc.add((f.value(edge) - vx) * weight(pot, alpha, reach, f64::INFINITY));
            }
        }
    }
    Ok(acc.value())
}

/// `lim_{ε→0} pv ∫_{B₁} E_ε[φ(x+z) - φ(x)] V_{α_ε}''(z) dz`.
///
/// `m = 1`: the compensated integral over `B₁` at `α`; `m = 2`: `‖V‖_{L¹} φ''(x)`;
/// `m = 3`: `(β³/|φ'|³) Ψ(β/φ') φ''(x)`. `alpha_or_beta` is `α` for `m = 1` and
/// `β` for `m = 3`.
pub fn limit_rhs(pot: &Potential, phi: &TestFunction, x: f64, m: Order, alpha_or_beta: f64, tol: f64) -> Result<f64> {
    let slope = phi.d1(x);
    if slope == 0.0 || !slope.is_finite() {
        return Err(Error::DegenerateGradient(x));
    }
    match m {
        Order::One => i_rho(pot, phi, &FarField::Zero, x, 1.0, alpha_or_beta, tol),
        Order::Two => Ok(l1_norm(pot, tol)? * phi.d2(x)),
        Order::Three => {
            let b = alpha_or_beta;
            let p = slope.abs();
            Ok(b * b * b / (p * p * p) * psi_series(pot, b / slope, tol)? * phi.d2(x))
        }
    }
}
