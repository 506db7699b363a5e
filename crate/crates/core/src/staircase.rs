//! Piecewise-constant functions: the empirical primitive `u_n` of the signed
//! particle measure, the quantizer `E_ε`, and sup-norm comparison with grid
//! functions.

use serde::{Deserialize, Serialize};

use crate::dynamics::ParticleState;
use crate::error::{Error, Result};
use crate::pde::GridFunction;

/// Right-continuous step function: `values[k]` holds on `[jumps[k-1], jumps[k])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Staircase {
    pub left_value: f64,
    pub jumps: Vec<f64>,
    pub values: Vec<f64>,
}

impl Staircase {
    pub fn new(left_value: f64, jumps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let s = Staircase { left_value, jumps, values };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(c: f64) -> Self {
        Staircase {
            left_value: c,
            jumps: Vec::new(),
            values: vec![c],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.jumps.len() + 1 {
            return Err(Error::Data(format!("{} plateaus for {} jumps", self.values.len(), self.jumps.len())));
        }
        if self.values[0] != self.left_value {
            return Err(Error::Data("first plateau differs from the value at -inf".into()));
        }
        if self.jumps.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Data("jump locations must increase strictly".into()));
        }
        Ok(())
    }

    /// Value at `x` (right-continuous).
    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.jumps.partition_point(|&j| j <= x)]
    }

    pub fn left_limit(&self, x: f64) -> f64 {
        self.values[self.jumps.partition_point(|&j| j < x)]
    }

    pub fn right_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Jump sizes `u(x_k) - u(x_k-)`.
    pub fn jump_sizes(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Positions and charges of the particles behind a staircase built by [`u_n`].
    pub fn charges(&self, n: usize) -> Vec<(f64, i8)> {
        self.jumps.iter().zip(self.jump_sizes()).map(|(&x, j)| (x, (j * n as f64).round() as i8)).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `u_n(x) = (1/n) Σ b_i H(x - x_i)` with `H(0) = 1`.
pub fn u_n(state: &ParticleState) -> Staircase {
    let n = state.n();
    let mut jumps = Vec::new();
    let mut values = vec![0.0];
    let mut k: i64 = 0;
    for i in state.charged() {
        k += state.b[i] as i64;
        jumps.push(state.x[i]);
        values.push(k as f64 / n as f64);
    }
    Staircase { left_value: 0.0, jumps, values }
}

/// Semicontinuous envelope of `E_ε` at the lattice `εℤ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Envelope {
    Upper,
    Lower,
}

/// `E_ε(γ) = ε(⌊γ/ε⌋ + ½)`; at `γ = kε` the upper envelope gives `ε(k + ½)`
/// and the lower one `ε(k - ½)`.
///
/// `γ` lies on the lattice when `γ == k·ε` in floating point for `k = round(γ/ε)`;
/// off the lattice the level is the floor consistent with that test.
pub fn e_eps(gamma: f64, eps: f64, envelope: Envelope) -> f64 {
    let k = (gamma / eps).round();
    let level = if k * eps == gamma {
        match envelope {
            Envelope::Upper => k,
            Envelope::Lower => k - 1.0,
        }
    } else if k * eps > gamma {
        k - 1.0
    } else {
        k
    };
    eps * (level + 0.5)
}

/// Anything with one-sided limits and finitely many candidate extremal points
/// for the distance to a piecewise-linear or piecewise-constant function.
pub trait Piecewise {
    /// Points in `[lo, hi]` between which the function is affine.
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64>;
    fn left_limit_at(&self, x: f64) -> f64;
    fn right_limit_at(&self, x: f64) -> f64;
}

impl Piecewise for Staircase {
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let a = self.jumps.partition_point(|&j| j < lo);
        let b = self.jumps.partition_point(|&j| j <= hi);
        self.jumps[a..b].to_vec()
    }

    fn left_limit_at(&self, x: f64) -> f64 {
        self.left_limit(x)
    }

    fn right_limit_at(&self, x: f64) -> f64 {
        self.eval(x)
    }
}

impl Piecewise for GridFunction {
    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).filter(|&x| x >= lo && x <= hi).collect()
    }

    fn left_limit_at(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn right_limit_at(&self, x: f64) -> f64 {
        self.eval(x)
    }
}

/// Sup of `|u - v|` over `[lo, hi]`, with the point where it is attained.
///
/// Between consecutive candidate points (jumps, nodes and the window ends)
/// both functions are affine, so the sup is one of the one-sided differences there.
pub fn sup_distance_at<U: Piecewise + ?Sized, V: Piecewise + ?Sized>(u: &U, v: &V, window: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = window;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("empty window [{lo}, {hi}]")));
    }
    let mut pts = u.breakpoints(lo, hi);
    pts.extend(v.breakpoints(lo, hi));
    pts.push(lo);
    pts.push(hi);
    let mut best = (0.0, lo);
    for &x in &pts {
        let mut d = (u.right_limit_at(x) - v.right_limit_at(x)).abs();
        if x > lo {
            d = d.max((u.left_limit_at(x) - v.left_limit_at(x)).abs());
        }
        if d > best.0 || (d == best.0 && x < best.1) {
            best = (d, x);
        }
    }
    Ok(best)
}

pub fn sup_distance<U: Piecewise + ?Sized, V: Piecewise + ?Sized>(u: &U, v: &V, window: (f64, f64)) -> Result<f64> {
    sup_distance_at(u, v, window).map(|r| r.0)
}
