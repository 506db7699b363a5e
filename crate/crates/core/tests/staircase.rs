//! Properties of particle staircases and the quantizer `E_ε`.

use proptest::prelude::*;
use signed_particles::dynamics::ParticleState;
use signed_particles::staircase::{e_eps, u_n, Envelope};

/// Distinct sorted positions with charges in `{-1, 0, 1}`.
fn configuration() -> impl Strategy<Value = ParticleState> {
    prop::collection::vec((-10.0f64..10.0, -1i8..=1), 1..80).prop_filter_map("coincident charged positions", |mut pts| {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return None;
        }
        let (x, b) = pts.into_iter().unzip();
        ParticleState::new(x, b).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn staircase_is_bounded_by_one(state in configuration()) {
        prop_assert!(u_n(&state).sup_norm() <= 1.0);
    }

    #[test]
    fn charges_are_recovered_from_jumps(state in configuration()) {
        let read = u_n(&state).charges(state.n());
        let expected: Vec<(f64, i8)> = state.charged().into_iter().map(|i| (state.x[i], state.b[i])).collect();
        prop_assert_eq!(read, expected);
    }

    #[test]
    fn quantizer_sawtooth(gamma in -1e3f64..1e3, eps in prop::sample::select(vec![1e-3, 0.1, 1.0 / 3.0, 1.0, 7.5])) {
        let up = e_eps(gamma, eps, Envelope::Upper);
        let lo = e_eps(gamma, eps, Envelope::Lower);
        prop_assert!(up - gamma > -eps / 2.0 && up - gamma <= eps / 2.0);
        prop_assert!(lo - gamma >= -eps / 2.0 && lo - gamma < eps / 2.0);
        prop_assert!(up.abs() <= gamma.abs() + eps / 2.0);
        prop_assert!(lo.abs() <= gamma.abs() + eps / 2.0);
    }

    #[test]
    fn quantizer_is_odd_off_the_lattice(gamma in -1e3f64..1e3, eps in prop::sample::select(vec![1e-3, 0.1, 1.0, 7.5])) {
        prop_assume!((gamma / eps).round() * eps != gamma);
        for env in [Envelope::Upper, Envelope::Lower] {
            prop_assert_eq!(e_eps(-gamma, eps, env), -e_eps(gamma, eps, env));
        }
        prop_assert_eq!(e_eps(gamma, eps, Envelope::Upper), e_eps(gamma, eps, Envelope::Lower));
    }

    #[test]
    fn envelopes_split_on_the_lattice(k in -1000i64..1000, eps in prop::sample::select(vec![1e-3, 0.1, 1.0, 7.5])) {
        let gamma = k as f64 * eps;
        let up = e_eps(gamma, eps, Envelope::Upper);
        let lo = e_eps(gamma, eps, Envelope::Lower);
        prop_assert!((up - lo - eps).abs() <= 1e-9 * eps.max(gamma.abs()));
    }
}
