//! Acceptance suite: one test per criterion, each printing a single
//! `PASS`/`FAIL` line before asserting. Run with `--nocapture` to see the lines.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signed_particles::dynamics::{integrate, stability_sweep, IntegrateOptions, ParticleState};
use signed_particles::harness::{self, ExperimentConfig, Shape, TestFunctionKind};
use signed_particles::pde::{evolve, kappa_from_u, GridFunction, LocalScheme, NonlocalScheme, Scheme};
use signed_particles::potentials::{audit_assumptions, l1_norm, ExternalField, Order, Potential, Profile, ScalingRegime};
use signed_particles::staircase::{e_eps, Envelope};

fn verdict(id: u32, title: &str, passed: bool, detail: &str) {
    println!("{} criterion {id:>2} ({title}): {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "criterion {id} ({title}) failed: {detail}");
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn sci(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|d| format!("{d:.2e}")).collect();
    format!("[{}]", items.join(", "))
}

fn pair(d0: f64) -> ParticleState {
    ParticleState::new(vec![-0.5 * d0, 0.5 * d0], vec![1, -1]).unwrap()
}

#[test]
fn criterion_01_two_particle_oracles() {
    let mut ok = true;
    let mut worst_tau = 0.0_f64;
    let mut slowest = Duration::ZERO;
    for a in [0.0, 0.5, 1.5] {
        for d0 in [0.5, 1.0] {
            let start = Instant::now();
            let pot = Potential::power_law(a).unwrap();
            let out = integrate(&pair(d0), &pot, &ScalingRegime::nonlocal(1.0), &ExternalField::Zero, 2.0, &IntegrateOptions::default()).unwrap();
            slowest = slowest.max(start.elapsed());
            let tau = d0.powf(2.0 + a);
            let rel = out.log.events.first().map_or(f64::INFINITY, |e| (e.tau - tau).abs() / tau);
            worst_tau = worst_tau.max(rel);
            ok &= out.log.len() == 1 && rel <= 1e-5;
        }
    }
    let start = Instant::now();
    let opts = IntegrateOptions {
        record_trajectory: true,
        ..Default::default()
    };
    let out = integrate(&pair(1.0), &Potential::log(), &ScalingRegime::nonlocal(1.0), &ExternalField::Zero, 1.0, &opts).unwrap();
    slowest = slowest.max(start.elapsed());
    let tau = out.log.events[0].tau;
    let traj = out.trajectory.unwrap();
    let sup = traj
        .states
        .iter()
        .filter(|s| s.t < tau)
        .map(|s| {
            let r = 0.5 * (1.0 - 2.0 * s.t).max(0.0).sqrt();
            (s.x[0] + r).abs().max((s.x[1] - r).abs())
        })
        .fold(0.0, f64::max);
    ok &= sup <= 1e-4 && (tau - 0.5).abs() <= 1e-5 && slowest < Duration::from_secs(1);
    verdict(
        1,
        "two-particle oracles",
        ok,
        &format!(
            "worst power-law tau error {worst_tau:.2e}, log sup error {sup:.2e}, log tau {tau:.8}, slowest run {}",
            secs(slowest)
        ),
    );
}

#[test]
fn criterion_02_invariant_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_gap = 0.0_f64;
    let mut worst_m1 = 0.0_f64;
    let mut events = 0;
    let mut failures = Vec::new();
    for k in 0..50 {
        let n = rng.gen_range(2..=64);
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        x.sort_by(f64::total_cmp);
        x.dedup();
        let b: Vec<i8> = x.iter().map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        let pot = if k % 2 == 0 { Potential::log() } else { Potential::wall() };
        let state = ParticleState::new(x, b).unwrap();
        let out = integrate(&state, &pot, &ScalingRegime::nonlocal(1.0), &ExternalField::Zero, 0.25, &IntegrateOptions::default()).unwrap();
        let gap = out.diagnostics.max_gap_decrease();
        let m1 = out.diagnostics.m1_drift_rate();
        worst_gap = worst_gap.max(gap);
        worst_m1 = worst_m1.max(m1);
        events += out.log.len();
        if gap > 1e-8 || m1 > 1e-8 || out.state.net_charge() != state.net_charge() || out.log.check().is_err() {
            failures.push(k);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        2,
        "invariant suite",
        failures.is_empty() && elapsed < Duration::from_secs(120),
        &format!(
            "50 runs, {events} events, worst gap decrease {worst_gap:.1e}, worst M1 drift {worst_m1:.1e}, failing runs {failures:?}, {}",
            secs(elapsed)
        ),
    );
}

fn exponent_config(a: f64, x: &[f64], b: &[i8]) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"potential": {{"kind": "power_law", "a": {a}}}, "regime": {{"m": 1}},
            "initial": {{"kind": "particles", "x": {x:?}, "b": {b:?}}}, "t_end": 10.0}}"#
    ))
    .unwrap()
}

#[test]
fn criterion_03_collision_exponents() {
    let mut ok = true;
    let mut lines = Vec::new();
    for a in [0.0, 0.5, 1.5] {
        for (label, x, b) in [("pair", vec![-0.5, 0.5], vec![1i8, -1]), ("triple", vec![-1.0, 0.0, 1.0], vec![1, -1, 1])] {
            let r = harness::fit_collision_exponent(&exponent_config(a, &x, &b)).unwrap();
            ok &= r.relative_error <= 0.1;
            lines.push(format!("a={a} {label}: {:.4} vs {:.4}", r.fit.slope, r.expected));
        }
    }
    verdict(3, "collision exponents", ok, &lines.join("; "));
}

#[test]
fn criterion_04_stability() {
    let pot = Potential::log();
    let regime = ScalingRegime::nonlocal(1.0);
    let sigmas = [1e-3, 1e-4];
    let scenarios = [("pair", pair(1.0)), ("triple", ParticleState::new(vec![-0.5, 0.0, 0.5], vec![1, -1, 1]).unwrap())];
    let mut ok = true;
    let mut lines = Vec::new();
    for (label, state) in scenarios {
        let rep = stability_sweep(&state, &sigmas, &pot, &regime, &ExternalField::Zero, 1.0, &IntegrateOptions::default(), 7).unwrap();
        for run in &rep.runs {
            ok &= run.distance <= 10.0 * run.sigma;
            if run.sigma <= 1e-4 {
                ok &= run.charges_agree;
            }
            lines.push(format!(
                "{label} sigma={:.0e}: distance {:.3e} (bound {:.0e}), charges agree {}",
                run.sigma,
                run.distance,
                10.0 * run.sigma,
                run.charges_agree
            ));
        }
    }
    verdict(4, "stability", ok, &lines.join("; "));
}

#[test]
fn criterion_05_wall_potential() {
    let wall = Potential::wall();
    let mut worst = 0.0_f64;
    for i in 0..=250 {
        let x = 1e-3 * 10f64.powf(5.0 * i as f64 / 250.0);
        let h = 1e-4 * x.min(1.0);
        for k in 1..=4 {
            let fd = (wall.derivative(k - 1, x + h).unwrap() - wall.derivative(k - 1, x - h).unwrap()) / (2.0 * h);
            let exact = wall.derivative(k, x).unwrap();
            worst = worst.max((fd - exact).abs() / exact.abs());
        }
    }
    let norm = l1_norm(&wall, 1e-12).unwrap();
    let norm_err = (norm - PI * PI / 3.0).abs();
    let audit = audit_assumptions(&wall, Profile::Hj3);
    let failing: Vec<&str> = audit.failures().map(|e| e.item.as_str()).collect();
    verdict(
        5,
        "wall potential",
        worst <= 1e-6 && norm_err <= 1e-6 && audit.passes(),
        &format!("worst derivative mismatch {worst:.2e}, L1 norm error {norm_err:.2e}, failing audit items {failing:?}"),
    );
}

fn operator_config(pot: &str, m: u8, function: TestFunctionKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json(&format!(
        r#"{{"potential": {{"kind": "{pot}"}}, "regime": {{"m": {m}}}, "t_end": 1.0,
            "initial": {{"kind": "density", "components": []}}}}"#
    ))
    .unwrap();
    cfg.hamiltonian.function = function;
    cfg
}

#[test]
fn criterion_06_rhs_convergence() {
    let start = Instant::now();
    let mut ok = true;
    let mut lines = Vec::new();
    for (pot, m) in [("wall", 1u8), ("wall", 2), ("wall", 3)] {
        for f in [TestFunctionKind::Sin, TestFunctionKind::Cubic] {
            let rep = harness::rhs_check(&operator_config(pot, m, f)).unwrap();
            ok &= rep.passed;
            let worst = rep.cases.iter().map(|c| c.table.final_relative_error()).fold(0.0, f64::max);
            lines.push(format!("m={m} {f:?}: finest relative error {worst:.1e}{}", if rep.passed { "" } else { " (check failed)" }));
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(60);
    verdict(6, "rhs convergence", ok, &format!("{}; {}", lines.join("; "), secs(elapsed)));
}

#[test]
fn criterion_07_parabola_bound() {
    let mut ok = true;
    let mut lines = Vec::new();
    for (pot, m) in [("log", 1u8), ("wall", 2), ("wall", 3)] {
        let rep = harness::parabola_check(&operator_config(pot, m, TestFunctionKind::Sin)).unwrap();
        ok &= rep.passed;
        let (a, b) = (rep.table.max_at(1e-3), rep.table.max_at(1e-4));
        lines.push(format!("{pot} m={m}: min {:.1e}, max {a:.2} -> {b:.2}", rep.table.min));
    }
    verdict(7, "parabola bound", ok, &lines.join("; "));
}

/// Runs a scheme and reports whether every step stays within the initial range.
fn stays_in_range<S: Scheme>(scheme: &S, u0: &GridFunction, t: f64) -> bool {
    let (lo, hi) = u0.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mut ok = true;
    evolve(scheme, u0, t, 10_000_000, |_, u| ok &= u.values.iter().all(|&v| v >= lo - 1e-14 && v <= hi + 1e-14)).unwrap();
    ok
}

#[test]
fn criterion_08_pde_solvers() {
    let start = Instant::now();
    let wall = Potential::wall();
    let f = ExternalField::Cosine { amplitude: 0.3, length: 0.4 };
    let local2 = LocalScheme::new(&wall, Order::Two, 1.0, &f, 0.9, 1e-10).unwrap();
    let local3 = LocalScheme::new(&wall, Order::Three, 1.0, &f, 0.9, 1e-10).unwrap().with_table(20.0, 4001).unwrap();
    let nonlocal = NonlocalScheme::new(&Potential::log(), 1.0, &f, 0.02, 201, 0.04, 0.9, 1e-10).unwrap();

    let constant = GridFunction::from_fn(-2.0, 2.0, 201, |_| 0.37);
    let mut constants = true;
    for s in [&local2 as &dyn Scheme, &local3, &nonlocal] {
        let (u, _) = evolve(s, &constant, 0.1, 10_000_000, |_, _| {}).unwrap();
        constants &= u.values.iter().all(|&v| v == 0.37);
    }

    let bumps = |x: f64| {
        let p = Shape::Bump { center: -0.4, width: 0.5 };
        let q = Shape::Bump { center: 0.5, width: 0.6 };
        0.5 * p.cdf(x) - 0.4 * q.cdf(x)
    };
    let u0 = GridFunction::from_fn(-2.0, 2.0, 201, bumps);
    let max_principle = stays_in_range(&local2, &u0, 0.1) && stays_in_range(&local3, &u0, 0.1) && stays_in_range(&nonlocal, &u0, 0.1);

    // κ_t = (‖V‖/2)(κ²)_xx is solved by the Barenblatt profile at s = s0 + ‖V‖ t / 2.
    let s0 = 0.05;
    let initial = Shape::Barenblatt { s: s0, center: 0.0 };
    let u0 = GridFunction::from_fn(-3.0, 3.0, 2048, |x| initial.cdf(x));
    let plain = LocalScheme::new(&wall, Order::Two, 1.0, &ExternalField::Zero, 0.9, 1e-10).unwrap();
    let (u, _) = evolve(&plain, &u0, 0.5, 10_000_000, |_, _| {}).unwrap();
    let exact = Shape::Barenblatt {
        s: s0 + PI * PI / 6.0 * 0.5,
        center: 0.0,
    };
    let k = kappa_from_u(&u);
    let l1: f64 = (0..k.len()).map(|i| (k.values[i] - exact.density(k.node(i))).abs()).sum::<f64>() * k.dx;
    let elapsed = start.elapsed();
    verdict(
        8,
        "pde solvers",
        constants && max_principle && l1 <= 0.02 && elapsed < Duration::from_secs(30),
        &format!(
            "constants preserved {constants}, maximum principle {max_principle}, Barenblatt L1 error {l1:.2e}, {}",
            secs(elapsed)
        ),
    );
}

#[test]
fn criterion_09_discrete_to_continuum() {
    let start = Instant::now();
    let wall = ExperimentConfig::from_json(
        r#"{"potential": {"kind": "wall"}, "regime": {"m": 2},
            "initial": {"kind": "density", "components": [
                {"sign": 1, "mass": 1.0, "shape": {"kind": "bump", "center": 0.0, "width": 0.5}}]},
            "n_list": [25, 50, 100, 200], "t_end": 0.2, "snapshot_times": [0.1, 0.2]}"#,
    )
    .unwrap();
    let log = ExperimentConfig::from_json(
        r#"{"potential": {"kind": "log"}, "regime": {"m": 1, "alpha": 1.0},
            "initial": {"kind": "density", "components": [
                {"sign": 1, "mass": 0.5, "shape": {"kind": "bump", "center": -0.3, "width": 0.3}},
                {"sign": -1, "mass": 0.5, "shape": {"kind": "bump", "center": 0.3, "width": 0.3}}]},
            "n_list": [25, 50, 100, 200], "t_end": 0.2, "snapshot_times": [0.1, 0.2]}"#,
    )
    .unwrap();
    let mut ok = true;
    let mut lines = Vec::new();
    for (label, cfg) in [("wall m=2", &wall), ("log m=1", &log)] {
        let rep = harness::run_convergence(cfg).unwrap();
        ok &= rep.passed;
        let events = rep.rows.iter().map(|r| r.events).max().unwrap_or(0);
        if label == "log m=1" {
            ok &= events > 0;
        }
        lines.push(format!("{label}: t=0.1 {}, t=0.2 {}, events {events}", sci(&rep.column(0.1)), sci(&rep.column(0.2))));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(600);
    verdict(9, "discrete to continuum", ok, &format!("{}; {}", lines.join("; "), secs(elapsed)));
}

#[test]
fn criterion_10_quantizer_properties() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let eps_choices = [1.0, 0.1, 1.0 / 3.0, 1e-3, 7.5];
    let mut bad = 0usize;
    for i in 0..100_000 {
        let eps = eps_choices[i % eps_choices.len()];
        let on_lattice = i % 10 == 0;
        let gamma = if on_lattice {
            rng.gen_range(-1000i64..=1000) as f64 * eps
        } else {
            rng.gen_range(-50.0..50.0)
        };
        let k = (gamma / eps).round();
        let lattice = gamma == k * eps;
        let up = e_eps(gamma, eps, Envelope::Upper);
        let lo = e_eps(gamma, eps, Envelope::Lower);
        let saw = up - gamma > -eps / 2.0 && up - gamma <= eps / 2.0 && lo - gamma >= -eps / 2.0 && lo - gamma < eps / 2.0;
        let bound = up.abs() <= gamma.abs() + eps / 2.0 && lo.abs() <= gamma.abs() + eps / 2.0;
        let disagree = (up != lo) == lattice;
        let odd = lattice || (e_eps(-gamma, eps, Envelope::Upper) == -up && e_eps(-gamma, eps, Envelope::Lower) == -lo);
        if !(saw && bound && disagree && odd) {
            bad += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        10,
        "quantizer properties",
        bad == 0 && elapsed < Duration::from_secs(1),
        &format!("{bad} violations in 100000 samples, {}", secs(elapsed)),
    );
}
