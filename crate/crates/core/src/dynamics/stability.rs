//! Sensitivity of trajectories to perturbed initial positions and forcing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::integrate::{integrate, IntegrateOptions, Outcome};
use super::ParticleState;
use crate::error::{Error, Result};
use crate::potentials::{ExternalField, Potential, ScalingRegime};

/// Comparison of one perturbed run against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRun {
    pub sigma: f64,
    /// Sup over time of the distance to the baseline, minimized over
    /// relabelings inside collision clusters.
    pub distance: f64,
    /// Time at which the sup is attained.
    pub t_max: f64,
    /// Final charges agree with the baseline up to the same relabelings.
    pub charges_agree: bool,
    pub baseline_events: usize,
    pub perturbed_events: usize,
    /// Largest shift between corresponding collision times (events in log order).
    pub tau_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub runs: Vec<StabilityRun>,
}

impl StabilityReport {
    /// The distance shrinks strictly as σ decreases through the runs (sorted by σ).
    pub fn distance_decreases(&self) -> bool {
        let mut r: Vec<&StabilityRun> = self.runs.iter().collect();
        r.sort_by(|a, b| b.sigma.total_cmp(&a.sigma));
        r.windows(2).all(|w| w[1].distance < w[0].distance || w[1].distance == 0.0)
    }
}

/// Disjoint-set forest over particle indices.
struct Groups(Vec<usize>);

impl Groups {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let next = self.0[j];
            self.0[j] = r;
            j = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Member lists of groups with more than one element.
    fn members(&mut self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let r = self.find(i);
            by_root[r].push(i);
        }
        by_root.into_iter().filter(|g| g.len() > 1).collect()
    }
}

/// Distance between two configurations allowing any permutation inside each
/// group; in one dimension sorted matching minimizes the largest displacement.
fn matched_distance(x: &[f64], y: &[f64], groups: &[Vec<usize>], grouped: &[bool]) -> f64 {
    let mut d = x.iter().zip(y).zip(grouped).filter(|(_, &g)| !g).map(|((a, b), _)| (a - b).abs()).fold(0.0, f64::max);
    for g in groups {
        let mut a: Vec<f64> = g.iter().map(|&i| x[i]).collect();
        let mut b: Vec<f64> = g.iter().map(|&i| y[i]).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        d = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(d, f64::max);
    }
    d
}

fn compare(base: &Outcome, pert: &Outcome, sigma: f64) -> Result<StabilityRun> {
    let (Some(tb), Some(tp)) = (&base.trajectory, &pert.trajectory) else {
        return Err(Error::Data("stability comparison needs recorded trajectories".into()));
    };
    let n = base.state.n();
    let mut uf = Groups((0..n).collect());
    for e in base.log.events.iter().chain(&pert.log.events) {
        for w in e.indices.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    let groups = uf.members();
    let mut grouped = vec![false; n];
    for g in &groups {
        for &i in g {
            grouped[i] = true;
        }
    }
    let mut times = tb.times();
    times.extend(tp.times());
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut distance = 0.0;
    let mut t_max = 0.0;
    for &t in &times {
        let (Some(a), Some(b)) = (tb.positions_at(t), tp.positions_at(t)) else { continue };
        let d = matched_distance(&a, &b, &groups, &grouped);
        if d > distance {
            distance = d;
            t_max = t;
        }
    }
    let (ba, bb) = (&base.state.b, &pert.state.b);
    let mut charges_agree = (0..n).all(|i| grouped[i] || ba[i] == bb[i]);
    for g in &groups {
        let mut p: Vec<i8> = g.iter().map(|&i| ba[i]).collect();
        let mut q: Vec<i8> = g.iter().map(|&i| bb[i]).collect();
        p.sort_unstable();
        q.sort_unstable();
        charges_agree &= p == q;
    }
    let tau_shift = base.log.events.iter().zip(&pert.log.events).map(|(a, b)| (a.tau - b.tau).abs()).fold(0.0, f64::max);
    Ok(StabilityRun {
        sigma,
        distance,
        t_max,
        charges_agree,
        baseline_events: base.log.len(),
        perturbed_events: pert.log.len(),
        tau_shift,
    })
}

fn perturbed(state0: &ParticleState, sigma: f64, seed: u64) -> Result<ParticleState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = state0.clone();
    if sigma > 0.0 {
        for x in &mut s.x {
            *x += sigma * rng.gen_range(-1.0..=1.0);
        }
    }
    s.validate().map_err(|e| Error::Config(format!("perturbation of size {sigma} leaves Z_n: {e}")))?;
    Ok(s)
}

/// Runs the baseline and a copy with positions shifted by uniform noise of
/// amplitude `sigma` and the force `g` replaced by `g + sigma`, then compares them.
#[allow(clippy::too_many_arguments)]
pub fn stability_experiment(
    state0: &ParticleState,
    sigma: f64,
    pot: &Potential,
    regime: &ScalingRegime,
    field: &ExternalField,
    t_end: f64,
    opts: &IntegrateOptions,
    seed: u64,
) -> Result<StabilityRun> {
    let opts = IntegrateOptions {
        record_trajectory: true,
        ..opts.clone()
    };
    let base = integrate(state0, pot, regime, field, t_end, &opts)?;
    run_against(&base, state0, sigma, pot, regime, field, t_end, &opts, seed)
}

/// Baseline once, then one perturbed run per `sigma`.
#[allow(clippy::too_many_arguments)]
pub fn stability_sweep(
    state0: &ParticleState,
    sigmas: &[f64],
    pot: &Potential,
    regime: &ScalingRegime,
    field: &ExternalField,
    t_end: f64,
    opts: &IntegrateOptions,
    seed: u64,
) -> Result<StabilityReport> {
    let opts = IntegrateOptions {
        record_trajectory: true,
        ..opts.clone()
    };
    let base = integrate(state0, pot, regime, field, t_end, &opts)?;
    let runs = sigmas
        .iter()
        .map(|&s| run_against(&base, state0, s, pot, regime, field, t_end, &opts, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport { runs })
}

#[allow(clippy::too_many_arguments)]
fn run_against(
    base: &Outcome,
    state0: &ParticleState,
    sigma: f64,
    pot: &Potential,
    regime: &ScalingRegime,
    field: &ExternalField,
    t_end: f64,
    opts: &IntegrateOptions,
    seed: u64,
) -> Result<StabilityRun> {
    let start = perturbed(state0, sigma, seed)?;
    let forcing = if sigma == 0.0 { *field } else { field.with_force_shift(sigma) };
    let pert = integrate(&start, pot, regime, &forcing, t_end, opts)?;
    compare(base, &pert, sigma)
}
