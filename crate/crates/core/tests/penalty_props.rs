use proptest::prelude::*;
use spdnn_core::penalty::{
    clipped_norm, effective_l0, l0_norm, penalty_subgradient, penalty_value, PenaltyParams,
};

fn theta_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![Just(0.0), -5.0..5.0f64, -1e-3..1e-3f64],
        0..32,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn sandwich_bounds(theta in theta_strategy(), tau in 1e-3..10.0f64) {
        let c = clipped_norm(&theta, tau).unwrap();
        let l1: f64 = theta.iter().map(|t| t.abs()).sum();
        prop_assert!(c >= 0.0);
        prop_assert!(c <= l1 / tau + 1e-12);
        prop_assert!(c <= l0_norm(&theta) as f64 + 1e-12);
    }

    #[test]
    fn scale_invariance(theta in theta_strategy(), tau in 1e-2..10.0f64, c in 1e-2..100.0f64) {
        let scaled: Vec<f64> = theta.iter().map(|t| c * t).collect();
        let a = clipped_norm(&theta, tau).unwrap();
        let b = clipped_norm(&scaled, c * tau).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn monotone_in_magnitude(theta in theta_strategy(), tau in 1e-2..5.0f64, k in any::<prop::sample::Index>(), bump in 0.0..3.0f64) {
        prop_assume!(!theta.is_empty());
        let k = k.index(theta.len());
        let mut bigger = theta.clone();
        bigger[k] = theta[k].signum() * (theta[k].abs() + bump);
        prop_assert!(clipped_norm(&bigger, tau).unwrap() >= clipped_norm(&theta, tau).unwrap());
    }

    #[test]
    fn subgradient_matches_differences_off_kinks(theta in theta_strategy(), lambda in 0.0..2.0f64, tau in 1e-2..5.0f64) {
        let params = PenaltyParams::new(lambda, tau).unwrap();
        let g = penalty_subgradient(&theta, &params);
        let h = 1e-6;
        for k in 0..theta.len() {
            let a = theta[k].abs();
            if a < 2.0 * h || (a - tau).abs() < 2.0 * h {
                continue;
            }
            // the penalty is separable, so differencing the single-coordinate term keeps
            // the rounding error of the difference quotient small
            let up = penalty_value(&[theta[k] + h], &params);
            let down = penalty_value(&[theta[k] - h], &params);
            let fd = (up - down) / (2.0 * h);
            prop_assert!((g[k] - fd).abs() <= 1e-8 * g[k].abs().max(1.0),
                "coordinate {k}: {} vs {}", g[k], fd);
        }
    }

    #[test]
    fn saturated_vectors_count_support(theta in prop::collection::vec(1.0..5.0f64, 0..16), tau in 1e-3..1.0f64) {
        prop_assert_eq!(clipped_norm(&theta, tau).unwrap(), l0_norm(&theta) as f64);
    }

    #[test]
    fn effective_support_never_exceeds_exact(theta in theta_strategy()) {
        prop_assert!(effective_l0(&theta, 1e-6) <= l0_norm(&theta));
    }
}

#[test]
fn nonpositive_tau_is_rejected() {
    assert!(clipped_norm(&[1.0], 0.0).is_err());
    assert!(clipped_norm(&[1.0], -1.0).is_err());
    assert!(PenaltyParams::new(0.1, 0.0).is_err());
    assert!(PenaltyParams::new(-0.1, 1.0).is_err());
}
