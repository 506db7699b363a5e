//! Particle staircases against the limit equation at increasing `n`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Check, ExperimentConfig, ReportHeader};
use crate::dynamics::integrate;
use crate::error::{Error, Result};
use crate::pde::{evolve_snapshots, kappa_from_u, GridFunction, LocalScheme, NonlocalScheme};
use crate::potentials::Order;
use crate::staircase::{sup_distance, u_n};

const MAX_PDE_STEPS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub t: f64,
    pub distance: f64,
    /// Annihilation events up to `t`.
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub header: ReportHeader,
    /// Rows ordered by `n` (as in the configuration), then by `t`.
    pub rows: Vec<ConvergenceRow>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ConvergenceReport {
    /// CSV with header `n,t,distance`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "t", "distance"])?;
        for r in &self.rows {
            out.write_record([r.n.to_string(), format!("{:e}", r.t), format!("{:e}", r.distance)])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Distances at time `t`, in `n_list` order.
    pub fn column(&self, t: f64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.t == t).map(|r| r.distance).collect()
    }
}

/// Solution of the limit equation from `u°` at each snapshot time.
pub fn pde_snapshots(cfg: &ExperimentConfig) -> Result<Vec<GridFunction>> {
    let pot = cfg.build_potential()?;
    let p = &cfg.pde;
    let u0 = GridFunction::from_fn(p.x_min, p.x_max, p.nodes, |x| cfg.initial.u0(x));
    match cfg.regime.m {
        Order::One => {
            let scheme = NonlocalScheme::new(&pot, cfg.regime.alpha, &cfg.field, p.dx(), p.nodes, p.rho(), p.cfl, p.quad_tol)?;
            evolve_snapshots(&scheme, &u0, &cfg.snapshot_times, MAX_PDE_STEPS)
        }
        m => {
            let mut scheme = LocalScheme::new(&pot, m, cfg.regime.beta, &cfg.field, p.cfl, p.quad_tol)?;
            if m == Order::Three {
                let slope = kappa_from_u(&u0).sup_norm();
                scheme = scheme.with_table(4.0 * slope.max(1.0), p.mobility_table)?;
            }
            evolve_snapshots(&scheme, &u0, &cfg.snapshot_times, MAX_PDE_STEPS)
        }
    }
}

/// Runs the particle system for every `n` in `n_list` and measures the sup
/// distance of `u_n` to the limit solution on the grid minus a margin.
///
/// Passes when, at every snapshot time, each distance is at most `1 + slack`
/// times the previous one and the distance at the largest `n` is at most `conv_tol`.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    if cfg.n_list.is_empty() || cfg.snapshot_times.is_empty() {
        return Err(Error::Config("convergence runs need n_list and snapshot_times".into()));
    }
    let header = cfg.header(cfg.profile())?;
    let pot = cfg.build_potential()?;
    let grids = pde_snapshots(cfg)?;
    let p = &cfg.pde;
    let margin = cfg.convergence.margin_cells as f64 * p.dx();
    let window = (p.x_min + margin, p.x_max - margin);
    let mut opts = cfg.integrate.clone();
    opts.monitor = false;
    opts.record_trajectory = false;

    let per_n: Vec<Vec<ConvergenceRow>> = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            let run = || -> Result<Vec<ConvergenceRow>> {
                let mut state = cfg.initial.sample(n, cfg.seed)?;
                let mut events = 0;
                let mut rows = Vec::with_capacity(grids.len());
                for (&t, grid) in cfg.snapshot_times.iter().zip(&grids) {
                    if t > state.t {
                        let out = integrate(&state, &pot, &cfg.regime, &cfg.field, t, &opts)?;
                        events += out.log.len();
                        state = out.state;
                    }
                    let distance = sup_distance(&u_n(&state), grid, window)?;
                    rows.push(ConvergenceRow { n, t, distance, events });
                }
                Ok(rows)
            };
            run().map_err(|e| Error::Run { n, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let rows: Vec<ConvergenceRow> = per_n.into_iter().flatten().collect();

    let slack = 1.0 + cfg.convergence.slack;
    let mut checks = Vec::new();
    for &t in &cfg.snapshot_times {
        let col: Vec<f64> = rows.iter().filter(|r| r.t == t).map(|r| r.distance).collect();
        let monotone = col.windows(2).all(|w| w[1] <= slack * w[0]);
        checks.push(Check::new(format!("nonincreasing at t = {t}"), monotone, format!("{col:?}")));
        let last = *col.last().expect("n_list is nonempty");
        checks.push(Check::new(
            format!("final distance at t = {t}"),
            last <= cfg.convergence.conv_tol,
            format!("{last:e} vs {:e}", cfg.convergence.conv_tol),
        ));
    }
    let passed = super::all_pass(&checks);
    Ok(ConvergenceReport { header, rows, checks, passed })
}
