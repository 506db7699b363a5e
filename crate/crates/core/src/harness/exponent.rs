//! Power-law fits of the gap of a colliding cluster against the remaining time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ReportHeader};
use crate::dynamics::{integrate, Trajectory};
use crate::error::{Error, Result};
use crate::potentials::Profile;

/// Smallest number of decades of `τ - t` a fit window must span.
const MIN_DECADES: f64 = 2.0;
const MIN_POINTS: usize = 8;

/// Least-squares line through `(log(τ - t), log gap)` with a bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci: (f64, f64),
    pub points: usize,
    /// Decades of `τ - t` covered by the points used.
    pub decades: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub header: ReportHeader,
    pub tau: f64,
    pub cluster: Vec<usize>,
    pub fit: ExponentFit,
    /// `1 / (2 + a)`.
    pub expected: f64,
    pub relative_error: f64,
    pub passed: bool,
}

/// `(τ - t, smallest neighbor gap inside the cluster)` for every record strictly before `τ`.
pub fn cluster_gaps(traj: &Trajectory, cluster: &[usize], tau: f64) -> Vec<(f64, f64)> {
    traj.states
        .iter()
        .filter(|s| s.t < tau)
        .map(|s| {
            let gap = cluster.windows(2).map(|w| s.x[w[1]] - s.x[w[0]]).fold(f64::INFINITY, f64::min);
            (tau - s.t, gap)
        })
        .filter(|&(dt, gap)| dt > 0.0 && gap > 0.0)
        .collect()
}

fn ols(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fits `log gap = slope · log(τ - t) + c` over the samples with
/// `(τ - t)/span ∈ [window.0, window.1]`.
///
/// Errors with a data error unless the window spans two decades, the samples
/// reach below its lower end, and at least eight samples fall inside.
pub fn fit_gap_exponent(samples: &[(f64, f64)], span: f64, window: (f64, f64), bootstrap: usize, confidence: f64, seed: u64) -> Result<ExponentFit> {
    let (lo, hi) = window;
    if (hi / lo).log10() < MIN_DECADES - 1e-12 {
        return Err(Error::Data(format!("fit window [{lo:e}, {hi:e}] spans fewer than {MIN_DECADES} decades")));
    }
    let closest = samples.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    if !(closest <= lo * span) {
        return Err(Error::Data(format!(
            "gap data stop at τ - t = {closest:e}, before the fit window starts at {:e}",
            lo * span
        )));
    }
    let pts: Vec<(f64, f64)> = samples.iter().filter(|p| p.0 >= lo * span && p.0 <= hi * span).map(|p| (p.0.ln(), p.1.ln())).collect();
    if pts.len() < MIN_POINTS {
        return Err(Error::Data(format!("{} samples in the fit window, need {MIN_POINTS}", pts.len())));
    }
    let (first, last) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (slope, intercept) = ols(&pts);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes: Vec<f64> = Vec::with_capacity(bootstrap);
    let mut resample = vec![(0.0, 0.0); pts.len()];
    while slopes.len() < bootstrap {
        for r in resample.iter_mut() {
            *r = pts[rng.gen_range(0..pts.len())];
        }
        let s = ols(&resample).0;
        if s.is_finite() {
            slopes.push(s);
        }
    }
    slopes.sort_by(f64::total_cmp);
    let ci = if slopes.is_empty() {
        (slope, slope)
    } else {
        let q = |p: f64| slopes[((p * (slopes.len() - 1) as f64).round() as usize).min(slopes.len() - 1)];
        let tail = 0.5 * (1.0 - confidence);
        (q(tail), q(1.0 - tail))
    };
    Ok(ExponentFit {
        slope,
        intercept,
        ci,
        points: pts.len(),
        decades: (last - first) / std::f64::consts::LN_10,
    })
}

/// Simulates the configured initial data, takes the first collision and fits
/// its gap exponent; passes when the slope is within `fit.tolerance` of `1/(2+a)`.
pub fn fit_collision_exponent(cfg: &ExperimentConfig) -> Result<FitReport> {
    cfg.validate()?;
    let pot = cfg.build_potential()?;
    let n = cfg.n_list.first().copied().unwrap_or(1);
    let state = cfg.initial.sample(n, cfg.seed)?;
    let mut opts = cfg.integrate.clone();
    opts.record_trajectory = true;
    opts.monitor = false;
    let out = integrate(&state, &pot, &cfg.regime, &cfg.field, cfg.t_end, &opts)?;
    let event = out.log.events.first().ok_or_else(|| Error::Data(format!("no collision before t = {}", cfg.t_end)))?;
    let traj = out.trajectory.expect("trajectory was requested");
    let samples = cluster_gaps(&traj, &event.indices, event.tau);
    let span = event.tau - state.t;
    let fit = fit_gap_exponent(&samples, span, cfg.fit.window, cfg.fit.bootstrap, cfg.fit.confidence, cfg.seed)?;
    let a = cfg.integrate.exponent.or_else(|| pot.singularity_exponent()).unwrap_or(0.0);
    let expected = 1.0 / (2.0 + a);
    let relative_error = (fit.slope - expected).abs() / expected;
    Ok(FitReport {
        header: cfg.header(Profile::WellPosedness)?,
        tau: event.tau,
        cluster: event.indices.clone(),
        fit,
        expected,
        relative_error,
        passed: relative_error <= cfg.fit.tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let samples: Vec<(f64, f64)> = (0..200).map(|k| 10f64.powf(-6.0 + 0.03 * k as f64)).map(|s| (s, 2.0 * s.powf(0.4))).collect();
        let fit = fit_gap_exponent(&samples, 1.0, (1e-4, 1e-2), 200, 0.95, 1).unwrap();
        assert!((fit.slope - 0.4).abs() < 1e-12);
        assert!((fit.intercept - 2f64.ln()).abs() < 1e-10);
        assert!(fit.ci.0 <= fit.slope + 1e-12 && fit.ci.1 >= fit.slope - 1e-12);
        assert!(fit.decades > 1.9);
    }

    #[test]
    fn short_data_is_rejected() {
        let samples: Vec<(f64, f64)> = (0..50).map(|k| 10f64.powf(-3.0 + 0.05 * k as f64)).map(|s| (s, s.sqrt())).collect();
        assert!(matches!(fit_gap_exponent(&samples, 1.0, (1e-4, 1e-2), 10, 0.95, 1), Err(Error::Data(_))));
        assert!(matches!(fit_gap_exponent(&samples, 1.0, (1e-3, 1e-2), 10, 0.95, 1), Err(Error::Data(_))));
    }

    #[test]
    fn two_particle_log_slope() {
        let cfg = ExperimentConfig::from_json(
            r#"{"potential": {"kind": "log"}, "regime": {"m": 1},
                "initial": {"kind": "particles", "x": [-0.5, 0.5], "b": [1, -1]},
                "t_end": 1.0, "fit": {"bootstrap": 200}}"#,
        )
        .unwrap();
        let r = fit_collision_exponent(&cfg).unwrap();
        assert!((r.tau - 0.5).abs() < 1e-5, "{}", r.tau);
        assert!(r.passed, "{r:?}");
        assert!((r.fit.slope - 0.5).abs() < 0.01);
    }
}
