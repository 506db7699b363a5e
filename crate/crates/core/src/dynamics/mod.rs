//! Signed particle dynamics with annihilation.
//!
//! Charged particles move with velocity
//! `v_i = (1/n) Σ_{j≠i} b_i b_j f(x_i - x_j) + b_i g(x_i)` where `f = -V_α'`
//! and `g = -U'`. Opposite charges that meet annihilate and stay pinned at the
//! collision point as neutral particles.

mod events;
mod integrate;
mod stability;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{ExternalField, Potential};

pub use events::{annihilate, Cluster, Event, EventLog};
pub use integrate::{detect_collision, integrate, Collision, IntegrateOptions, Outcome, Trajectory};
pub use stability::{stability_experiment, stability_sweep, StabilityReport, StabilityRun};

/// Below this many charged particles the force sum runs on one thread.
const PARALLEL_THRESHOLD: usize = 256;

/// Configuration `(x, b)` at time `t`. Neutral particles stay in the arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub t: f64,
    pub x: Vec<f64>,
    pub b: Vec<i8>,
}

impl ParticleState {
    pub fn new(x: Vec<f64>, b: Vec<i8>) -> Result<Self> {
        let s = ParticleState { t: 0.0, x, b };
        s.validate()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Indices of charged particles, in index order (which is also spatial order).
    pub fn charged(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.b[i] != 0).collect()
    }

    pub fn net_charge(&self) -> i64 {
        self.b.iter().map(|&b| b as i64).sum()
    }

    /// Checks array shapes, charge values, finiteness and membership in `Z_n`.
    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.b.len() {
            return Err(Error::Config(format!("{} positions but {} charges", self.x.len(), self.b.len())));
        }
        if let Some(i) = self.b.iter().position(|b| !(-1..=1).contains(b)) {
            return Err(Error::Config(format!("charge b_{i} = {} not in {{-1, 0, 1}}", self.b[i])));
        }
        if let Some(i) = self.x.iter().position(|x| !x.is_finite()) {
            return Err(Error::Config(format!("position x_{i} is not finite")));
        }
        let c = self.charged();
        for w in c.windows(2) {
            let (i, j) = (w[0], w[1]);
            if !(self.x[i] < self.x[j]) {
                return Err(Error::SingularConfiguration { i, j, x: self.x[j] });
            }
        }
        Ok(())
    }
}

/// Velocities of all particles; neutral particles get zero.
///
/// The sum for each `i` runs over `j` in increasing index order, so the result
/// does not depend on the thread count.
pub fn rhs(state: &ParticleState, pot: &Potential, alpha_n: f64, field: &ExternalField) -> Result<Vec<f64>> {
    let charged = state.charged();
    let v = charged_velocities(&state.x, &state.b, &charged, pot, alpha_n, field, state.n())?;
    let mut out = vec![0.0; state.n()];
    for (k, &i) in charged.iter().enumerate() {
        out[i] = v[k];
    }
    Ok(out)
}

/// Velocities of the particles listed in `charged`, at positions `x`.
pub(crate) fn charged_velocities(x: &[f64], b: &[i8], charged: &[usize], pot: &Potential, alpha: f64, field: &ExternalField, n: usize) -> Result<Vec<f64>> {
    let inv_n = 1.0 / n as f64;
    let one = |&i: &usize| -> Result<f64> {
        let xi = x[i];
        let bi = b[i] as f64;
        let mut s = 0.0;
        for &j in charged {
            if j == i {
                continue;
            }
            let r = xi - x[j];
            if r == 0.0 {
                return Err(Error::SingularConfiguration { i: i.min(j), j: i.max(j), x: xi });
            }
            s += bi * b[j] as f64 * pot.force(alpha, r);
        }
        Ok(s * inv_n + bi * field.force(xi))
    };
    if charged.len() >= PARALLEL_THRESHOLD {
        charged.par_iter().map(one).collect()
    } else {
        charged.iter().map(one).collect()
    }
}

/// `E = (1/n²) Σ_{i>j} b_i b_j V_α(x_i - x_j) + (1/n) Σ b_i U(x_i)`.
pub fn energy(state: &ParticleState, pot: &Potential, alpha_n: f64, field: &ExternalField) -> f64 {
    let c = state.charged();
    let n = state.n() as f64;
    let mut pair = 0.0;
    for (k, &i) in c.iter().enumerate() {
        for &j in &c[..k] {
            let r = (state.x[i] - state.x[j]).abs();
            pair += (state.b[i] * state.b[j]) as f64 * alpha_n * pot.d(0, alpha_n * r);
        }
    }
    let ext: f64 = c.iter().map(|&i| state.b[i] as f64 * field.u(state.x[i])).sum();
    pair / (n * n) + ext / n
}

/// Neighbor gaps of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaps {
    /// Smallest gap between adjacent charged particles that are both positive
    /// (infinite when there are none).
    pub d_plus: f64,
    pub d_minus: f64,
    /// Smallest gap between neighboring charged particles of opposite sign.
    pub min_opposite: f64,
}

pub fn gaps(state: &ParticleState) -> Gaps {
    let mut d = [f64::INFINITY; 2];
    let mut min_opposite = f64::INFINITY;
    let mut prev: Option<usize> = None;
    for i in state.charged() {
        if let Some(p) = prev {
            let gap = state.x[i] - state.x[p];
            if state.b[p] == state.b[i] {
                let s = usize::from(state.b[i] < 0);
                d[s] = d[s].min(gap);
            } else {
                min_opposite = min_opposite.min(gap);
            }
        }
        prev = Some(i);
    }
    Gaps {
        d_plus: d[0],
        d_minus: d[1],
        min_opposite,
    }
}

/// `M₁ = Σ x_i` over all particles.
pub fn first_moment(state: &ParticleState) -> f64 {
    state.x.iter().sum()
}

/// One accepted step of the monitors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub h: f64,
    pub d_plus: f64,
    pub d_minus: f64,
    pub m1: f64,
    pub min_opposite_gap: f64,
    pub energy: f64,
    /// Set on the record written right after an annihilation event.
    pub after_event: bool,
}

/// Invariant monitors collected during integration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: Vec<StepRecord>,
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl Diagnostics {
    /// Largest decrease of `d⁺` or `d⁻` between consecutive records (0 if none).
    pub fn max_gap_decrease(&self) -> f64 {
        self.steps
            .windows(2)
            .map(|w| {
                let dec = |a: f64, b: f64| if a.is_finite() && b.is_finite() { a - b } else { 0.0 };
                dec(w[0].d_plus, w[1].d_plus).max(dec(w[0].d_minus, w[1].d_minus))
            })
            .fold(0.0, f64::max)
    }

    /// `|M₁(end) - M₁(start)|` divided by the elapsed time.
    pub fn m1_drift_rate(&self) -> f64 {
        match (self.steps.first(), self.steps.last()) {
            (Some(a), Some(b)) if b.t > a.t => (b.m1 - a.m1).abs() / (b.t - a.t),
            _ => 0.0,
        }
    }

    /// Largest energy increase between consecutive records not separated by an event.
    pub fn max_energy_increase(&self) -> f64 {
        self.steps.windows(2).filter(|w| !w[1].after_event).map(|w| w[1].energy - w[0].energy).fold(0.0, f64::max)
    }
}
