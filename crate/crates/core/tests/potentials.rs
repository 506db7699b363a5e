//! Properties of the built-in potentials, the lattice series and the local mobility.

use proptest::prelude::*;
use signed_particles::potentials::{mobility, psi_series, psi_series_terms, Potential, ScalingRegime};

fn builtins() -> Vec<Potential> {
    vec![
        Potential::log(),
        Potential::wall(),
        Potential::riesz(0.5).unwrap(),
        Potential::riesz(1.5).unwrap(),
        Potential::power_law(0.5).unwrap(),
    ]
}

/// Log-uniform point of `[10^lo, 10^hi]`.
fn log_point(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivatives_match_central_differences(x in log_point(-3.0, 2.0)) {
        let h = 1e-4 * x.min(1.0);
        for pot in builtins() {
            for k in 1..=3 {
                let fd = (pot.derivative(k - 1, x + h).unwrap() - pot.derivative(k - 1, x - h).unwrap()) / (2.0 * h);
                let exact = pot.derivative(k, x).unwrap();
                prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "{} order {k} at {x}: {fd} vs {exact}", pot.name());
            }
        }
    }

    #[test]
    fn force_signs(x in log_point(-3.0, 2.0)) {
        for pot in builtins() {
            for alpha in [0.5, 1.0, 10.0] {
                // f = -V_α' ≥ 0, f' = -V_α'' ≤ 0, f'' = -V_α''' ≥ 0.
                prop_assert!(pot.force(alpha, x) >= 0.0, "{} f at {x}", pot.name());
                prop_assert!(pot.rescale(alpha, x, 2).unwrap() >= 0.0, "{} f' at {x}", pot.name());
                prop_assert!(pot.rescale(alpha, x, 3).unwrap() <= 0.0, "{} f'' at {x}", pot.name());
            }
        }
    }

    #[test]
    fn shifted_force_difference_is_nondecreasing(a in log_point(-3.0, 1.5), b in log_point(-3.0, 1.5)) {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        for pot in builtins() {
            for gamma in [0.1, 1.0] {
                let g = |z: f64| pot.force(1.0, z + gamma) - pot.force(1.0, z);
                let (gx, gy) = (g(x), g(y));
                prop_assert!(gx <= gy + 1e-12 * gx.abs().max(gy.abs()), "{} gamma {gamma}: g({x}) = {gx} > g({y}) = {gy}", pot.name());
            }
        }
    }

    #[test]
    fn lattice_series_is_converged(x in 0.05f64..5.0) {
        let tol = 1e-10;
        let wall = Potential::wall();
        let psi = psi_series(&wall, x, tol).unwrap();
        let reference = psi_series_terms(&wall, x, 1 << 20);
        prop_assert!((psi - reference).abs() < tol * reference.abs().max(1.0), "{psi} vs {reference}");
    }
}

#[test]
fn lattice_mobility_is_nonnegative_and_locally_lipschitz() {
    let wall = Potential::wall();
    let regime = ScalingRegime::lattice(1.0);
    let f3 = |y: f64| mobility(&wall, &regime, y, 1e-10).unwrap();
    assert_eq!(f3(0.0), 0.0);
    let r = 4.0;
    let ys: Vec<f64> = (0..=400).map(|i| -r + 2.0 * r * i as f64 / 400.0).collect();
    let vals: Vec<f64> = ys.iter().map(|&y| f3(y)).collect();
    assert!(vals.iter().all(|&v| v >= 0.0));
    let fitted = ys.windows(2).zip(vals.windows(2)).map(|(y, v)| (v[1] - v[0]).abs() / (y[1] - y[0])).fold(0.0, f64::max);
    let bound = 1.5 * fitted;
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(200));
    runner
        .run(&(-r..r, -r..r), |(y, z)| {
            prop_assume!(y != z);
            let q = (f3(y) - f3(z)).abs() / (y - z).abs();
            prop_assert!(q <= bound, "quotient {q} above {bound} for ({y}, {z})");
            Ok(())
        })
        .unwrap();
}
