//! Bogacki–Shampine 3(2) integration with collision events.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::events::{annihilate, Cluster, Event, EventLog};
use super::{charged_velocities, energy, first_moment, gaps, Diagnostics, ParticleState, StepRecord};
use crate::error::{Error, Result};
use crate::potentials::{ExternalField, Potential, ScalingRegime};

/// Integrator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrateOptions {
    /// Local error tolerance, applied as `rk_tol · (1 + |x_i|)` per particle.
    pub rk_tol: f64,
    /// Smallest step, relative to `max(1, |t|)`, before a stiffness error.
    pub h_min: f64,
    pub h_max: Option<f64>,
    /// Step ceiling factor: `h ≤ gap_factor · d / ((2+a)|ḋ|)` over closing opposite pairs.
    pub gap_factor: f64,
    /// Opposite neighbors closer than this collide.
    pub collision_radius: f64,
    /// Chain radius for grouping particles into one cluster; defaults to
    /// four times the collision radius.
    pub cluster_radius: Option<f64>,
    /// A closing pair whose extrapolated remaining time drops below
    /// `event_time_tol · max(1, |t|)` collides even if its gap is above the radius.
    pub event_time_tol: f64,
    /// Overrides the singularity exponent used by the step ceiling and the extrapolation.
    pub exponent: Option<f64>,
    pub record_trajectory: bool,
    /// Record gaps, `M₁` and energy after every accepted step.
    pub monitor: bool,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rk_tol: 1e-10,
            h_min: 1e-15,
            h_max: None,
            gap_factor: 0.1,
            collision_radius: 1e-6,
            cluster_radius: None,
            event_time_tol: 1e-12,
            exponent: None,
            record_trajectory: false,
            monitor: true,
            max_steps: 20_000_000,
        }
    }
}

impl IntegrateOptions {
    pub fn cluster_radius(&self) -> f64 {
        self.cluster_radius.unwrap_or(4.0 * self.collision_radius)
    }

    fn exponent(&self, pot: &Potential) -> f64 {
        self.exponent.or_else(|| pot.singularity_exponent()).unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.rk_tol, self.h_min, self.gap_factor, self.collision_radius, self.event_time_tol, self.cluster_radius()];
        if pos.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("integrator tolerances must be positive".into()));
        }
        if self.cluster_radius() < self.collision_radius {
            return Err(Error::Config("cluster radius must be at least the collision radius".into()));
        }
        Ok(())
    }
}

/// Recorded configurations, one per accepted step and one after each event.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<ParticleState>,
}

impl Trajectory {
    /// CSV with header `t,x_0..x_{n-1},b_0..b_{n-1}`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let n = self.states.first().map_or(0, |s| s.n());
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("x_{i}")));
        header.extend((0..n).map(|i| format!("b_{i}")));
        out.write_record(&header)?;
        for s in &self.states {
            let mut row = vec![format!("{:e}", s.t)];
            row.extend(s.x.iter().map(|x| format!("{x:e}")));
            row.extend(s.b.iter().map(|b| b.to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Positions at time `t`, linear in time between records. At an event time
    /// the post-event record is used.
    pub fn positions_at(&self, t: f64) -> Option<Vec<f64>> {
        let s = &self.states;
        let first = s.first()?;
        if t <= first.t {
            return Some(first.x.clone());
        }
        let k = s.partition_point(|r| r.t <= t);
        if k == s.len() {
            return Some(s[k - 1].x.clone());
        }
        let (a, b) = (&s[k - 1], &s[k]);
        if b.t == a.t {
            return Some(b.x.clone());
        }
        let w = (t - a.t) / (b.t - a.t);
        Some(a.x.iter().zip(&b.x).map(|(p, q)| p + w * (q - p)).collect())
    }

    /// Charges in force at time `t` (post-event at event times).
    pub fn charges_at(&self, t: f64) -> Option<&[i8]> {
        let k = self.states.partition_point(|r| r.t <= t);
        self.states.get(k.saturating_sub(1)).map(|s| s.b.as_slice())
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }
}

/// Result of [`integrate`].
#[derive(Debug, Clone)]
pub struct Outcome {
    pub state: ParticleState,
    pub log: EventLog,
    pub diagnostics: Diagnostics,
    pub trajectory: Option<Trajectory>,
}

/// Clusters about to collide, found from two consecutive samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Collision {
    /// Latest extrapolated time among the clusters; the state jumps to it.
    pub tau: f64,
    pub clusters: Vec<Cluster>,
}

/// Looks for opposite neighbors that have come closer than the collision
/// radius (or will meet within the event time tolerance), extrapolating
/// `d^{2+a}` affinely through the samples `prev` and `cur` to locate `τ`.
/// Pairs whose gap is not shrinking are ignored.
pub fn detect_collision(prev: &ParticleState, cur: &ParticleState, pot: &Potential, opts: &IntegrateOptions) -> Option<Collision> {
    let a = opts.exponent(pot);
    let charged = cur.charged();
    let dt = cur.t - prev.t;
    if !(dt > 0.0) {
        return None;
    }
    let window = opts.event_time_tol * cur.t.abs().max(1.0);
    // (position in `charged` of the left particle, τ)
    let mut triggers: Vec<(usize, f64)> = Vec::new();
    for k in 0..charged.len().saturating_sub(1) {
        let (p, q) = (charged[k], charged[k + 1]);
        if cur.b[p] != -cur.b[q] || prev.b[p] != cur.b[p] || prev.b[q] != cur.b[q] {
            continue;
        }
        let d1 = cur.x[q] - cur.x[p];
        let d0 = prev.x[q] - prev.x[p];
        let (s0, s1) = (d0.powf(2.0 + a), d1.powf(2.0 + a));
        if !(s1 < s0) {
            continue;
        }
        let tau = cur.t + s1 * dt / (s0 - s1);
        if d1 < opts.collision_radius || tau - cur.t < window {
            triggers.push((k, tau));
        }
    }
    if triggers.is_empty() {
        return None;
    }
    let r = opts.cluster_radius();
    // Chains of charged neighbors closer than the cluster radius, as ranges in `charged`.
    let mut spans: Vec<(usize, usize, f64)> = Vec::new();
    for &(k, tau) in &triggers {
        let mut lo = k;
        while lo > 0 && cur.x[charged[lo]] - cur.x[charged[lo - 1]] < r {
            lo -= 1;
        }
        let mut hi = k + 1;
        while hi + 1 < charged.len() && cur.x[charged[hi + 1]] - cur.x[charged[hi]] < r {
            hi += 1;
        }
        match spans.last_mut() {
            Some(last) if lo <= last.1 => {
                last.1 = last.1.max(hi);
                last.2 = last.2.min(tau);
            }
            _ => spans.push((lo, hi, tau)),
        }
    }
    let mut clusters: Vec<Cluster> = spans
        .into_iter()
        .map(|(lo, hi, tau)| Cluster {
            indices: charged[lo..=hi].to_vec(),
            y: 0.0,
            tau,
        })
        .collect();
    for c in &mut clusters {
        c.y = c.indices.iter().map(|&i| cur.x[i]).sum::<f64>() / c.indices.len() as f64;
    }
    let tau = clusters.iter().map(|c| c.tau).fold(f64::NEG_INFINITY, f64::max);
    Some(Collision { tau, clusters })
}

/// Largest step allowed by the collision ceiling.
fn step_ceiling(x: &[f64], v: &[f64], b: &[i8], a: f64, gap_factor: f64) -> f64 {
    let mut h = f64::INFINITY;
    for k in 0..x.len().saturating_sub(1) {
        let closing = v[k] - v[k + 1];
        if b[k] == -b[k + 1] && closing > 0.0 {
            h = h.min(gap_factor * (x[k + 1] - x[k]) / ((2.0 + a) * closing));
        }
    }
    h
}

struct System<'a> {
    pot: &'a Potential,
    alpha: f64,
    field: &'a ExternalField,
    n: usize,
    /// Charges of the moving particles, compacted.
    b: Vec<i8>,
    ids: Vec<usize>,
    evals: usize,
}

impl System<'_> {
    fn velocity(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.evals += 1;
        let ids: Vec<usize> = (0..x.len()).collect();
        charged_velocities(x, &self.b, &ids, self.pot, self.alpha, self.field, self.n)
    }
}

fn record(s: &ParticleState, h: f64, pot: &Potential, alpha: f64, field: &ExternalField, after_event: bool) -> StepRecord {
    let g = gaps(s);
    StepRecord {
        t: s.t,
        h,
        d_plus: g.d_plus,
        d_minus: g.d_minus,
        m1: first_moment(s),
        min_opposite_gap: g.min_opposite,
        energy: energy(s, pot, alpha, field),
        after_event,
    }
}

/// Advances `state` to `t_end`, resolving collisions as they occur.
pub fn integrate(state: &ParticleState, pot: &Potential, regime: &ScalingRegime, field: &ExternalField, t_end: f64, opts: &IntegrateOptions) -> Result<Outcome> {
    opts.validate()?;
    state.validate()?;
    let alpha = regime.alpha_n(state.n());
    let a = opts.exponent(pot);
    let mut s = state.clone();
    let mut log = EventLog::default();
    let mut diag = Diagnostics::default();
    let mut traj = opts.record_trajectory.then(|| Trajectory { states: vec![s.clone()] });
    if opts.monitor {
        diag.steps.push(record(&s, 0.0, pot, alpha, field, false));
    }
    let span = t_end - s.t;
    let mut h = match opts.h_max {
        Some(m) => m.min(1e-2 * span),
        None => 1e-2 * span,
    };
    let mut err_prev = 1.0_f64;

    'events: while s.t < t_end {
        let ids = s.charged();
        let mut sys = System {
            pot,
            alpha,
            field,
            n: s.n(),
            b: ids.iter().map(|&i| s.b[i]).collect(),
            ids,
            evals: 0,
        };
        let mut x: Vec<f64> = sys.ids.iter().map(|&i| s.x[i]).collect();
        if x.is_empty() {
            s.t = t_end;
            break;
        }
        let mut k1 = sys.velocity(&x)?;

        while s.t < t_end {
            if diag.accepted + diag.rejected >= opts.max_steps {
                return Err(Error::Convergence(format!("step budget {} exhausted at t = {}", opts.max_steps, s.t)));
            }
            let ceiling = step_ceiling(&x, &k1, &sys.b, a, opts.gap_factor);
            let remaining = t_end - s.t;
            h = h.min(ceiling).min(opts.h_max.unwrap_or(f64::INFINITY));
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h < opts.h_min * s.t.abs().max(1.0) && !last {
                return Err(Error::Stiffness {
                    t: s.t,
                    h,
                    dump: serde_json::to_string(&s).unwrap_or_default(),
                });
            }

            let (y, k4, err) = match bs3_step(&mut sys, &x, &k1, h) {
                Some(v) => v,
                None => {
                    diag.rejected += 1;
                    h *= 0.25;
                    continue;
                }
            };
            let e = y.iter().zip(&err).map(|(yi, ei)| ei.abs() / (opts.rk_tol * (1.0 + yi.abs()))).fold(0.0, f64::max);
            if !(e <= 1.0) {
                diag.rejected += 1;
                let f = if e.is_finite() { (0.9 * e.powf(-1.0 / 3.0)).max(0.2) } else { 0.2 };
                h *= f;
                continue;
            }

            let before = s.clone();
            s.t = if last { t_end } else { s.t + h };
            x = y;
            k1 = k4;
            for (k, &i) in sys.ids.iter().enumerate() {
                s.x[i] = x[k];
            }
            diag.accepted += 1;
            if opts.monitor {
                diag.steps.push(record(&s, h, pot, alpha, field, false));
            }
            if let Some(tr) = traj.as_mut() {
                tr.states.push(s.clone());
            }
            let e = e.max(1e-10);
            let factor = (0.9 * e.powf(-0.7 / 3.0) * err_prev.powf(0.4 / 3.0)).clamp(0.2, 5.0);
            err_prev = e;
            h *= factor;

            if let Some(c) = detect_collision(&before, &s, pot, opts) {
                apply_collision(&mut s, &c, &sys, &k1, opts, &mut log)?;
                if opts.monitor {
                    diag.steps.push(record(&s, 0.0, pot, alpha, field, true));
                }
                if let Some(tr) = traj.as_mut() {
                    tr.states.push(s.clone());
                }
                diag.rhs_evals += sys.evals;
                continue 'events;
            }
        }
        diag.rhs_evals += sys.evals;
    }
    Ok(Outcome {
        state: s,
        log,
        diagnostics: diag,
        trajectory: traj,
    })
}

/// Moves the state to the collision time and annihilates every cluster.
fn apply_collision(s: &mut ParticleState, c: &Collision, sys: &System<'_>, v: &[f64], opts: &IntegrateOptions, log: &mut EventLog) -> Result<()> {
    let dt = (c.tau - s.t).max(0.0);
    let mut vel = vec![0.0; s.n()];
    for (k, &i) in sys.ids.iter().enumerate() {
        vel[i] = v[k];
    }
    let mut in_cluster = vec![false; s.n()];
    let mut points = Vec::with_capacity(c.clusters.len());
    for cl in &c.clusters {
        // The cluster's mean velocity is finite: singular pair terms cancel.
        let mean = cl.indices.iter().map(|&i| vel[i]).sum::<f64>() / cl.indices.len() as f64;
        points.push(cl.y + mean * dt);
        for &i in &cl.indices {
            in_cluster[i] = true;
        }
    }
    for (k, &i) in sys.ids.iter().enumerate() {
        if !in_cluster[i] {
            s.x[i] += v[k] * dt;
        }
    }
    s.t += dt;
    let tie = c.clusters.len() > 1;
    for (cl, &y) in c.clusters.iter().zip(&points) {
        let spread = cl.indices.iter().map(|&i| (s.x[i] - y).abs()).fold(0.0, f64::max);
        let radius = spread.max(opts.cluster_radius() * cl.indices.len() as f64);
        let b_before: Vec<i8> = cl.indices.iter().map(|&i| s.b[i]).collect();
        let next = annihilate(s, &cl.indices, y, radius)?;
        *s = ParticleState { t: s.t, ..next };
        let b_after = cl.indices.iter().map(|&i| s.b[i]).collect();
        log.events.push(Event {
            tau: cl.tau,
            y,
            indices: cl.indices.clone(),
            b_before,
            b_after,
            tie,
        });
    }
    s.validate()
        .map_err(|e| Error::InvariantViolation(format!("state left Z_n after collision at t = {}: {e}", s.t)))
}

/// One Bogacki–Shampine step; `None` if a stage hits a singular configuration
/// or the new positions are out of order.
fn bs3_step(sys: &mut System<'_>, x: &[f64], k1: &[f64], h: f64) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let stage = |c: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(xi, ki)| xi + c * h * ki).collect() };
    let ordered = |y: &[f64]| y.windows(2).all(|w| w[0] < w[1]);
    let x2 = stage(0.5, k1);
    if !ordered(&x2) {
        return None;
    }
    let k2 = sys.velocity(&x2).ok()?;
    let x3 = stage(0.75, &k2);
    if !ordered(&x3) {
        return None;
    }
    let k3 = sys.velocity(&x3).ok()?;
    let y: Vec<f64> = (0..x.len()).map(|i| x[i] + h * (2.0 / 9.0 * k1[i] + 1.0 / 3.0 * k2[i] + 4.0 / 9.0 * k3[i])).collect();
    if !ordered(&y) || y.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let k4 = sys.velocity(&y).ok()?;
    let err = (0..x.len())
        .map(|i| h * (-5.0 / 72.0 * k1[i] + 1.0 / 12.0 * k2[i] + 1.0 / 9.0 * k3[i] - 1.0 / 8.0 * k4[i]))
        .collect();
    Some((y, k4, err))
}
