//! Interaction potentials, scaling regimes and external fields.
//!
//! A [`Potential`] is an even function `V` on `ℝ \ {0}` that is convex on
//! `(0, ∞)`. Derivatives up to order four are available in closed form for the
//! built-in families; custom potentials supply their own evaluators.
//! The rescaled potential is `V_α(x) = α V(αx)`.

mod audit;
mod field;
mod mobility;
mod regime;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{End, Error, Result};

pub use audit::{audit_assumptions, audit_with, AuditConfig, ComplianceEntry, ComplianceReport, Profile, Status};
pub use field::ExternalField;
pub use mobility::{l1_norm, mobility, psi_series, psi_series_terms, psi_tail_bound, LocalMobility};
pub use regime::{AlphaRule, Order, ScalingRegime};

/// Derivative evaluator of a custom potential: `(order, x)` with `x > 0`.
pub type Evaluator = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// User-supplied potential given by its derivative evaluators on `(0, ∞)`.
#[derive(Clone)]
pub struct CustomPotential {
    pub name: String,
    pub eval: Evaluator,
    pub max_order: usize,
    pub singularity_exponent: Option<f64>,
    pub l1_integrable: bool,
    /// Set when `|V''|` is nonincreasing on `(0, ∞)`, which makes its running
    /// supremum equal to itself.
    pub v2_monotone: bool,
}

/// Potential family.
#[derive(Clone)]
pub enum PotentialKind {
    /// `V(x) = -log|x|`.
    Log,
    /// Extended Riesz potential with exponent `a > -1`:
    /// `-|x|^{-a}` for `a < 0`, `-log|x|` for `a = 0`, `|x|^{-a}` for `a > 0`.
    Riesz(f64),
    /// Dislocation-wall potential `x coth x - log|2 sinh x|`.
    Wall,
    Custom(CustomPotential),
}

/// Interaction potential, possibly multiplied by a positive constant.
#[derive(Clone)]
pub struct Potential {
    kind: PotentialKind,
    scale: f64,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Potential({}, scale={})", self.name(), self.scale)
    }
}

/// Serializable description of a built-in potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Log,
    Riesz {
        a: f64,
    },
    Wall,
    /// Riesz potential scaled so that two opposite charges at distance `d`
    /// close the gap as `d^{2+a}` decreases at unit rate.
    PowerLaw {
        a: f64,
    },
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential> {
        match *self {
            PotentialSpec::Log => Ok(Potential::log()),
            PotentialSpec::Riesz { a } => Potential::riesz(a),
            PotentialSpec::Wall => Ok(Potential::wall()),
            PotentialSpec::PowerLaw { a } => Potential::power_law(a),
        }
    }

    /// Parses `log`, `wall`, `riesz:A` or `power:A`.
    pub fn parse(s: &str) -> Result<Self> {
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        let exponent = || -> Result<f64> {
            tail.ok_or_else(|| Error::Config(format!("potential '{s}' needs an exponent, e.g. riesz:0.5")))?
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad exponent in '{s}': {e}")))
        };
        match head.to_ascii_lowercase().as_str() {
            "log" => Ok(PotentialSpec::Log),
            "wall" => Ok(PotentialSpec::Wall),
            "riesz" => Ok(PotentialSpec::Riesz { a: exponent()? }),
            "power" | "power_law" => Ok(PotentialSpec::PowerLaw { a: exponent()? }),
            _ => Err(Error::Config(format!("unknown potential '{s}'"))),
        }
    }
}

fn falling(a: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (a - j as f64))
}

fn log_derivative(order: usize, x: f64) -> f64 {
    match order {
        0 => -x.ln(),
        k => {
            let fact = (1..k).fold(1.0, |acc, j| acc * j as f64);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * fact / x.powi(k as i32)
        }
    }
}

fn riesz_derivative(a: f64, order: usize, x: f64) -> f64 {
    if a == 0.0 {
        return log_derivative(order, x);
    }
    a.signum() * falling(-a, order) * x.powf(-a - order as f64)
}

/// Derivatives of the wall potential written in `q = e^{-2x}` and
/// `w = 1 - q`, which stay accurate for small and large `x` alike.
fn wall_derivative(order: usize, x: f64) -> f64 {
    let q = (-2.0 * x).exp();
    let w = -(-2.0 * x).exp_m1();
    match order {
        0 => 2.0 * x * q / w - if q < 0.5 { (-q).ln_1p() } else { w.ln() },
        1 => -4.0 * x * q / (w * w),
        2 => 4.0 * q * (2.0 * x * (1.0 + q) - w) / (w * w * w),
        3 => {
            let num = x * (1.0 + 4.0 * q + q * q) - w * (1.0 + q);
            -16.0 * q * num / (w * w * w * w)
        }
        4 => {
            let num = 2.0 * x * (1.0 + q * (11.0 + q * (11.0 + q))) - 3.0 * w * (1.0 + 4.0 * q + q * q);
            16.0 * q * num / (w * w * w * w * w)
        }
        _ => f64::NAN,
    }
}

impl Potential {
    pub fn log() -> Self {
        Potential {
            kind: PotentialKind::Log,
            scale: 1.0,
        }
    }

    pub fn riesz(a: f64) -> Result<Self> {
        if !(a > -1.0) || !a.is_finite() {
            return Err(Error::Domain(format!("Riesz exponent must lie in (-1, inf), got {a}")));
        }
        Ok(Potential {
            kind: PotentialKind::Riesz(a),
            scale: 1.0,
        })
    }

    pub fn wall() -> Self {
        Potential {
            kind: PotentialKind::Wall,
            scale: 1.0,
        }
    }

    /// Riesz potential normalized so that `-V'(x) = x^{-1-a}/(2+a)` on `(0, ∞)`.
    pub fn power_law(a: f64) -> Result<Self> {
        let base = Potential::riesz(a)?;
        let scale = if a == 0.0 { 0.5 } else { 1.0 / ((2.0 + a) * a.abs()) };
        Ok(base.scaled(scale))
    }

    pub fn custom(custom: CustomPotential) -> Self {
        Potential {
            kind: PotentialKind::Custom(custom),
            scale: 1.0,
        }
    }

    /// Multiplies the potential by `c > 0`.
    pub fn scaled(mut self, c: f64) -> Self {
        self.scale *= c;
        self
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn name(&self) -> String {
        let base = match &self.kind {
            PotentialKind::Log => "log".to_string(),
            PotentialKind::Riesz(a) => format!("riesz:{a}"),
            PotentialKind::Wall => "wall".to_string(),
            PotentialKind::Custom(c) => c.name.clone(),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{}*{base}", self.scale)
        }
    }

    pub fn max_order(&self) -> usize {
        match &self.kind {
            PotentialKind::Custom(c) => c.max_order,
            _ => 4,
        }
    }

    /// Exponent `a` with `-V'(x) ~ x^{-1-a}` as `x → 0`, when known.
    pub fn singularity_exponent(&self) -> Option<f64> {
        match &self.kind {
            PotentialKind::Log | PotentialKind::Wall => Some(0.0),
            PotentialKind::Riesz(a) => Some(*a),
            PotentialKind::Custom(c) => c.singularity_exponent,
        }
    }

    /// `None` when `V ∈ L¹(ℝ)`, otherwise the end where integrability fails.
    pub fn l1_failure(&self) -> Option<End> {
        match &self.kind {
            PotentialKind::Wall => None,
            PotentialKind::Log => Some(End::Tail),
            PotentialKind::Riesz(a) => Some(if *a >= 1.0 { End::Origin } else { End::Tail }),
            PotentialKind::Custom(c) => {
                if c.singularity_exponent.is_some_and(|a| a >= 1.0) {
                    Some(End::Origin)
                } else if c.l1_integrable {
                    None
                } else {
                    Some(End::Tail)
                }
            }
        }
    }

    pub fn l1_integrable(&self) -> bool {
        self.l1_failure().is_none()
    }

    /// `V^{(order)}(x)` for `x > 0` without argument checks.
    #[inline]
    pub(crate) fn d(&self, order: usize, x: f64) -> f64 {
        let v = match &self.kind {
            PotentialKind::Log => log_derivative(order, x),
            PotentialKind::Riesz(a) => riesz_derivative(*a, order, x),
            PotentialKind::Wall => wall_derivative(order, x),
            PotentialKind::Custom(c) => (c.eval)(order, x),
        };
        self.scale * v
    }

    /// `sup_{y ≥ x} |V''(y)|` for `x > 0`.
    pub(crate) fn v2_sup(&self, x: f64) -> f64 {
        let monotone = match &self.kind {
            PotentialKind::Custom(c) => c.v2_monotone,
            _ => true,
        };
        if monotone {
            return self.d(2, x).abs();
        }
        let mut best = 0.0_f64;
        let mut y = x;
        for _ in 0..400 {
            best = best.max(self.d(2, y).abs());
            y *= 1.05;
        }
        best
    }

    fn check(&self, x: f64, order: usize) -> Result<()> {
        if order > self.max_order() {
            return Err(Error::UnsupportedOrder { order, max: self.max_order() });
        }
        if x == 0.0 || !x.is_finite() {
            return Err(Error::Domain(format!("potential evaluated at x = {x}")));
        }
        Ok(())
    }

    /// `V^{(order)}(x)` for any `x ≠ 0`, extended by evenness of `V`.
    pub fn derivative(&self, order: usize, x: f64) -> Result<f64> {
        self.check(x, order)?;
        let v = self.d(order, x.abs());
        Ok(if x < 0.0 && order % 2 == 1 { -v } else { v })
    }

    /// `d^order/dx^order [α V(αx)] = α^{order+1} V^{(order)}(αx)`.
    pub fn rescale(&self, alpha: f64, x: f64, order: usize) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("scaling factor must be positive, got {alpha}")));
        }
        self.check(x, order)?;
        Ok(alpha.powi(order as i32 + 1) * self.derivative(order, alpha * x)?)
    }

    /// `α^{order+1} V^{(order)}(α x)` for `x > 0`, unchecked.
    #[inline]
    pub(crate) fn scaled_d(&self, alpha: f64, order: usize, x: f64) -> f64 {
        alpha.powi(order as i32 + 1) * self.d(order, alpha * x)
    }

    /// Interaction force `f = -V_α'`, odd in `x`.
    #[inline]
    pub fn force(&self, alpha: f64, x: f64) -> f64 {
        let v = -alpha * alpha * self.d(1, alpha * x.abs());
        if x < 0.0 {
            -v
        } else {
            v
        }
    }
}
