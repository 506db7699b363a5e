//! Reproducibility, report headers and fourth-order well envelopes.

use proptest::prelude::*;
use signed_particles::harness::{quartic_envelope, simulate, solve_pde, ExperimentConfig};
use signed_particles::pde::GridFunction;

fn config(seed: u64) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"potential": {{"kind": "log"}}, "regime": {{"m": 1, "alpha": 1.0}},
            "initial": {{"kind": "density", "jitter": 0.3, "components": [
                {{"sign": 1, "mass": 0.5, "shape": {{"kind": "bump", "center": -0.3, "width": 0.3}}}},
                {{"sign": -1, "mass": 0.4, "shape": {{"kind": "uniform", "lo": 0.0, "hi": 0.6}}}}]}},
            "n_list": [40], "t_end": 0.1, "seed": {seed}, "pde": {{"nodes": 121}},
            "integrate": {{"record_trajectory": true}}}}"#
    ))
    .unwrap()
}

fn trajectory_csv(cfg: &ExperimentConfig) -> Vec<u8> {
    let (_, out) = simulate(cfg, None).unwrap();
    let mut buf = Vec::new();
    out.trajectory.unwrap().write_csv(&mut buf).unwrap();
    buf
}

#[test]
fn same_seed_gives_identical_output() {
    let cfg = config(11);
    assert_eq!(trajectory_csv(&cfg), trajectory_csv(&cfg));
    assert_ne!(trajectory_csv(&cfg), trajectory_csv(&config(12)));
}

#[test]
fn reports_carry_hash_and_compliance() {
    let cfg = config(3);
    let (sim, _) = simulate(&cfg, None).unwrap();
    let (pde, _) = solve_pde(&cfg).unwrap();
    for header in [&sim.header, &pde.header] {
        assert_eq!(header.config_hash, cfg.hash());
        assert_eq!(header.config_hash.len(), 64);
        assert!(!header.compliance.entries.is_empty());
    }
    assert!(sim.passed && pde.passed);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn envelope_dominates_its_data(coefs in prop::collection::vec(-1.0f64..1.0, 4), k in 0.5f64..20.0) {
        let phi = GridFunction::from_fn(-2.0, 2.0, 81, |x| {
            coefs.iter().enumerate().map(|(j, c)| c * ((j + 1) as f64 * x).sin()).sum()
        });
        let env = quartic_envelope(&phi, k).unwrap();
        prop_assert!(env.values.iter().zip(&phi.values).all(|(e, p)| e >= p));
        prop_assert!(env.max_violation() <= 1e-10, "violation {}", env.max_violation());
        if env.feasible() {
            prop_assert!(env.values.iter().zip(&phi.values).all(|(e, p)| (e - p).abs() <= 1e-10));
        }
    }
}
