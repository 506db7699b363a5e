//! Properties of the quantized operator `M_ε` and its parts.

use proptest::prelude::*;
use signed_particles::hamiltonians::{far_integral, m_eps, near_integral, FarField, HamiltonianParams, TestFunction};
use signed_particles::potentials::Potential;
use signed_particles::staircase::Envelope;

const QUAD_TOL: f64 = 1e-10;

fn params(rho: f64, eps: f64) -> HamiltonianParams {
    HamiltonianParams {
        rho,
        eps,
        alpha_eps: 1.0,
        quad_tol: QUAD_TOL,
    }
}

/// `x` away from the critical points of `sin`.
fn regular_point() -> impl Strategy<Value = f64> {
    (-1.2f64..1.2).prop_union(1.9f64..4.3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn independent_of_the_splitting_radius(x in regular_point(), eps in prop::sample::select(vec![0.1, 0.01]), env in prop::sample::select(vec![Envelope::Upper, Envelope::Lower])) {
        let phi = TestFunction::sin();
        let far = FarField::smooth(phi.clone(), -40.0, 40.0);
        let pot = Potential::wall();
        let a = m_eps(&pot, &phi, &far, x, &params(0.5, eps), env).unwrap();
        let b = m_eps(&pot, &phi, &far, x, &params(1.5, eps), env).unwrap();
        prop_assert!((a - b).abs() <= 2.0 * QUAD_TOL * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn monotone_in_the_test_function(x in regular_point(), c in 0.1f64..5.0, eps in prop::sample::select(vec![0.1, 0.01])) {
        // φ = ψ + c(y - x)² touches ψ at x to first order and lies above it.
        let psi = TestFunction::sin();
        let phi = TestFunction::new("raised", move |y: f64| y.sin() + c * (y - x).powi(2), move |y: f64| y.cos() + 2.0 * c * (y - x), move |y: f64| -y.sin() + 2.0 * c);
        for pot in [Potential::wall(), Potential::log()] {
            let (up, _) = near_integral(&pot, &phi, x, &params(1.0, eps), Envelope::Upper).unwrap();
            let (down, _) = near_integral(&pot, &psi, x, &params(1.0, eps), Envelope::Upper).unwrap();
            prop_assert!(up >= down - QUAD_TOL, "{}: {up} < {down}", pot.name());
        }
    }

    #[test]
    fn far_part_is_bounded(x in -3.0f64..3.0, rho in 0.05f64..2.0, eps in prop::sample::select(vec![0.1, 0.01])) {
        let far = FarField::smooth(TestFunction::sin(), -20.0, 20.0);
        for pot in [Potential::wall(), Potential::log(), Potential::riesz(0.5).unwrap()] {
            let value = far_integral(&pot, &far, x, &params(rho, eps), Envelope::Upper).unwrap();
            let bound = (4.0 * far.sup_norm() + eps) * pot.rescale(1.0, rho, 1).unwrap().abs();
            prop_assert!(value.abs() <= bound + QUAD_TOL, "{}: {value} above {bound}", pot.name());
        }
    }

    #[test]
    fn vanishes_inside_the_first_level(x in regular_point(), eps in prop::sample::select(vec![0.1, 0.01, 1e-3])) {
        let phi = TestFunction::sin();
        let pot = Potential::wall();
        let (_, rho0) = near_integral(&pot, &phi, x, &params(1.0, eps), Envelope::Upper).unwrap();
        prop_assert!(rho0 > 0.0);
        let (inner, _) = near_integral(&pot, &phi, x, &params(0.999 * rho0, eps), Envelope::Upper).unwrap();
        prop_assert_eq!(inner, 0.0);
    }
}
