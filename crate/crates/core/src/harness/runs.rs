//! Single simulations, limit-equation solves, and the two operator checks, each
//! returning a report with its pass/fail checks.

use serde::{Deserialize, Serialize};

use super::{all_pass, pde_snapshots, Check, ExperimentConfig, ReportHeader};
use crate::dynamics::{integrate, Outcome};
use crate::error::Result;
use crate::hamiltonians::{parabola_bound_sweep, verify_rhs_convergence, ParabolaTable, RhsTable};
use crate::pde::GridFunction;
use crate::potentials::Profile;
use crate::staircase::Envelope;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub header: ReportHeader,
    pub n: usize,
    pub t_end: f64,
    pub events: usize,
    pub net_charge_before: i64,
    pub net_charge_after: i64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Samples `n` particles (the first of `n_list` when `None`) and integrates to `t_end`.
pub fn simulate(cfg: &ExperimentConfig, n: Option<usize>) -> Result<(SimulationReport, Outcome)> {
    cfg.validate()?;
    let pot = cfg.build_potential()?;
    let n = n.or_else(|| cfg.n_list.first().copied()).unwrap_or(1);
    let state = cfg.initial.sample(n, cfg.seed)?;
    let out = integrate(&state, &pot, &cfg.regime, &cfg.field, cfg.t_end, &cfg.integrate)?;
    let mut checks = vec![
        Check::new(
            "net charge conserved",
            out.state.net_charge() == state.net_charge(),
            format!("{} -> {}", state.net_charge(), out.state.net_charge()),
        ),
        Check::new(
            "event log consistent",
            out.log.check().is_ok(),
            out.log.check().err().map_or_else(String::new, |e| e.to_string()),
        ),
    ];
    if cfg.integrate.monitor && cfg.field.is_zero() {
        let drop = out.diagnostics.max_gap_decrease();
        checks.push(Check::new("same-sign gaps nondecreasing", drop <= 1e-8, format!("largest decrease {drop:e}")));
    }
    let report = SimulationReport {
        header: cfg.header(Profile::WellPosedness)?,
        n: state.n(),
        t_end: cfg.t_end,
        events: out.log.len(),
        net_charge_before: state.net_charge(),
        net_charge_after: out.state.net_charge(),
        accepted_steps: out.diagnostics.accepted,
        rejected_steps: out.diagnostics.rejected,
        passed: all_pass(&checks),
        checks,
    };
    Ok((report, out))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdeReport {
    pub header: ReportHeader,
    pub times: Vec<f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Solves the limit equation from `u°` to each snapshot time (`t_end` if none)
/// and checks the maximum principle on the snapshots.
pub fn solve_pde(cfg: &ExperimentConfig) -> Result<(PdeReport, Vec<GridFunction>)> {
    // The header hashes the configuration as given, before defaults are filled in.
    let header = cfg.header(cfg.profile())?;
    let mut cfg = cfg.clone();
    if cfg.snapshot_times.is_empty() {
        cfg.snapshot_times = vec![cfg.t_end];
    }
    cfg.validate()?;
    let grids = pde_snapshots(&cfg)?;
    let p = &cfg.pde;
    let u0 = GridFunction::from_fn(p.x_min, p.x_max, p.nodes, |x| cfg.initial.u0(x));
    let (lo, hi) = u0.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let slack = 1e-12 * (hi - lo).abs().max(1.0);
    let within = grids.iter().all(|g| g.values.iter().all(|&v| v >= lo - slack && v <= hi + slack));
    let checks = vec![Check::new("maximum principle", within, format!("initial range [{lo:e}, {hi:e}]"))];
    let report = PdeReport {
        header,
        times: cfg.snapshot_times.clone(),
        passed: all_pass(&checks),
        checks,
    };
    Ok((report, grids))
}

/// One row of the right-hand-side check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhsCase {
    pub function: String,
    pub x: f64,
    pub table: RhsTable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhsReport {
    pub header: ReportHeader,
    pub cases: Vec<RhsCase>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// `M_ε[φ]` against its limit at every configured point: errors must decrease
/// along `eps_list` and the finest one must be within `rel_tol` of the limit.
pub fn rhs_check(cfg: &ExperimentConfig) -> Result<RhsReport> {
    cfg.validate()?;
    let pot = cfg.build_potential()?;
    let h = &cfg.hamiltonian;
    let phi = h.function.build();
    let mut cases = Vec::new();
    let mut checks = Vec::new();
    for &x in &h.points {
        let table = verify_rhs_convergence(&pot, &phi, x, &cfg.regime, &h.eps_list, h.quad_tol)?;
        let rel = table.final_relative_error();
        checks.push(Check::new(
            format!("{} at x = {x}: errors decrease", phi.name),
            table.errors_decrease(),
            format!("{:?}", table.rows.iter().map(|r| r.abs_err).collect::<Vec<_>>()),
        ));
        checks.push(Check::new(
            format!("{} at x = {x}: finest relative error", phi.name),
            rel <= h.rel_tol,
            format!("{rel:e} vs {:e}", h.rel_tol),
        ));
        cases.push(RhsCase {
            function: phi.name.clone(),
            x,
            table,
        });
    }
    Ok(RhsReport {
        header: cfg.header(cfg.profile())?,
        cases,
        passed: all_pass(&checks),
        checks,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParabolaReport {
    pub header: ReportHeader,
    pub table: ParabolaTable,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Quartic-well sweep over `parabola_eps × ±logspace(10⁻³, L)`: every value is
/// at least `-quad_tol`, and the maxima at the two finest `ε` agree within `stability`.
pub fn parabola_check(cfg: &ExperimentConfig) -> Result<ParabolaReport> {
    cfg.validate()?;
    let pot = cfg.build_potential()?;
    let h = &cfg.hamiltonian;
    let table = parabola_bound_sweep(&pot, &cfg.regime, h.k, h.l, &h.parabola_eps, &h.gammas(), h.quad_tol, Envelope::Upper)?;
    let mut checks = vec![Check::new("values nonnegative", table.min >= -h.quad_tol, format!("min {:e}", table.min))];
    let mut eps: Vec<f64> = h.parabola_eps.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    if let [.., coarse, fine] = eps[..] {
        let (a, b) = (table.max_at(coarse), table.max_at(fine));
        let change = (b - a).abs() / a.abs().max(f64::MIN_POSITIVE);
        checks.push(Check::new(
            "maximum stable",
            change <= h.stability,
            format!("{a:e} at eps = {coarse:e}, {b:e} at eps = {fine:e}"),
        ));
    }
    Ok(ParabolaReport {
        header: cfg.header(cfg.profile())?,
        table,
        passed: all_pass(&checks),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_particle_simulation() {
        let cfg = ExperimentConfig::from_json(
            r#"{"potential": {"kind": "log"}, "regime": {"m": 1},
                "initial": {"kind": "particles", "x": [-0.5, 0.5], "b": [1, -1]}, "t_end": 1.0}"#,
        )
        .unwrap();
        let (r, out) = simulate(&cfg, None).unwrap();
        assert!(r.passed, "{:?}", r.checks);
        assert_eq!(r.events, 1);
        assert_eq!(r.net_charge_after, 0);
        assert!((out.log.events[0].tau - 0.5).abs() < 1e-5);
    }

    #[test]
    fn pde_run_keeps_the_range() {
        let cfg = ExperimentConfig::from_json(
            r#"{"potential": {"kind": "wall"}, "regime": {"m": 2},
                "initial": {"kind": "density", "components": [
                    {"sign": 1, "mass": 1.0, "shape": {"kind": "bump", "center": 0.0, "width": 0.5}}]},
                "t_end": 0.05, "pde": {"nodes": 101}}"#,
        )
        .unwrap();
        let (r, grids) = solve_pde(&cfg).unwrap();
        assert!(r.passed);
        assert_eq!(grids.len(), 1);
    }

    #[test]
    fn parabola_report_for_log() {
        let cfg = ExperimentConfig::from_json(
            r#"{"potential": {"kind": "log"}, "regime": {"m": 1}, "t_end": 1.0,
                "initial": {"kind": "density", "components": []},
                "hamiltonian": {"parabola_eps": [1.0, 0.1], "gamma_points": 4}}"#,
        )
        .unwrap();
        let r = parabola_check(&cfg).unwrap();
        assert_eq!(r.table.rows.len(), 16);
        assert!(r.checks[0].passed);
    }
}
