mod common;

use combfisher::qfi::{family_derivative, qfi_state, sld, ParametrizedFamily, DEFAULT_CUTOFF};
use combfisher::tensor::{random_density, random_hermitian, LabeledOperator};
use proptest::prelude::*;
use rand::Rng;

use common::{convexity_excess, isometry_gap, monotonicity_excess, rng, space};

const SLACK: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn channels_do_not_increase_qfi(seed in any::<u64>()) {
        let excess = monotonicity_excess(seed);
        prop_assert!(excess <= SLACK, "excess {excess:e}");
    }

    #[test]
    fn qfi_is_convex(seed in any::<u64>()) {
        let excess = convexity_excess(seed);
        prop_assert!(excess <= SLACK, "excess {excess:e}");
    }

    #[test]
    fn isometries_preserve_qfi(seed in any::<u64>()) {
        let gap = isometry_gap(seed);
        prop_assert!(gap <= SLACK, "gap {gap:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn qfi_is_nonnegative_and_stationary(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let rank = r.random_range(1..=d);
        let rho0 = random_density(space("s", d), rank, &mut r);
        let h = LabeledOperator::new(space("s", d), random_hermitian(d, &mut r)).unwrap();
        let f = ParametrizedFamily::unitary(&rho0, &h).unwrap();
        let base = qfi_state(&f, 0.0, DEFAULT_CUTOFF).unwrap().value;
        prop_assert!(base >= 0.0);
        for _ in 0..3 {
            let theta = r.random_range(-3.0..3.0);
            let q = qfi_state(&f, theta, DEFAULT_CUTOFF).unwrap().value;
            prop_assert!((q - base).abs() <= 1e-8 * base.max(1.0), "{q} vs {base}");
        }
    }

    #[test]
    fn sld_solves_lyapunov_on_full_rank(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let rho0 = random_density(space("s", d), d, &mut r);
        let h = LabeledOperator::new(space("s", d), random_hermitian(d, &mut r)).unwrap();
        let f = ParametrizedFamily::unitary(&rho0, &h).unwrap();
        let theta = r.random_range(-3.0..3.0);
        let rho = f.evaluate(theta).unwrap();
        let drho = family_derivative(&f, theta).unwrap();
        let s = sld(&rho, &drho, DEFAULT_CUTOFF).unwrap();
        prop_assert!(s.residual <= 1e-8, "residual {:e}", s.residual);
    }
}
