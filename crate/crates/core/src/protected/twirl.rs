use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{haar_unitary, LabeledOperator, PureState, SpaceDescriptor};

/// Haar samples are drawn in chunks of this size and summed in order, so
/// averages do not depend on the thread count.
pub(crate) const CHUNK: usize = 256;

fn check_pair(rho: &LabeledOperator, a: &str, b: &str) -> Result<usize> {
    let (da, db) = (rho.space().dim_of(a)?, rho.space().dim_of(b)?);
    if a == b || da != db {
        return Err(Error::DimensionMismatch(format!(
            "twirl needs two distinct subsystems of equal dimension, got `{a}`({da}) and `{b}`({db})"
        )));
    }
    Ok(da)
}

/// `π⁻ = (I − Φ⁺)/(D² − 1)` on `a ⊗ b`.
pub fn antisym_state(a: &str, b: &str, d: usize) -> Result<LabeledOperator> {
    if d < 2 {
        return Err(Error::InvalidArgument("π⁻ needs D ≥ 2".into()));
    }
    let phi = PureState::max_entangled(a, b, d)?.projector();
    let space = SpaceDescriptor::new([(a, d), (b, d)])?;
    Ok(LabeledOperator::identity(space)
        .sub(&phi)?
        .scale_real(1.0 / (d * d - 1) as f64))
}

/// `∫dU (U ⊗ Ū) ρ (U ⊗ Ū)†` on subsystems `a ⊗ b`, identity elsewhere:
/// `Φ⁺ ⊗ Tr_ab[Φ⁺ρ] + π⁻ ⊗ Tr_ab[(I − Φ⁺)ρ]`.
///
/// The result keeps the subsystem order of `rho`.
pub fn twirl(rho: &LabeledOperator, a: &str, b: &str) -> Result<LabeledOperator> {
    let d = check_pair(rho, a, b)?;
    let phi = PureState::max_entangled(a, b, d)?.projector();
    let phi_full = phi.embed(rho.space())?;
    let on_phi = phi_full.mul(rho)?.partial_trace(&[a, b])?;
    let on_rest = rho.partial_trace(&[a, b])?.sub(&on_phi)?;
    let out = phi
        .tensor(&on_phi)?
        .add(&antisym_state(a, b, d)?.tensor(&on_rest)?)?;
    out.permute(&rho.space().labels())
}

/// Empirical mean of `(U ⊗ Ū) ρ (U ⊗ Ū)†` over `n_samples` Haar unitaries
/// drawn in order from `rng`.
pub fn twirl_monte_carlo<R: Rng + ?Sized>(
    rho: &LabeledOperator,
    a: &str,
    b: &str,
    n_samples: usize,
    rng: &mut R,
) -> Result<LabeledOperator> {
    let d = check_pair(rho, a, b)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument(
            "twirl average without samples".into(),
        ));
    }
    let pair = SpaceDescriptor::new([(a, d), (b, d)])?;
    let mut total = LabeledOperator::zeros(rho.space().clone());
    let mut left = n_samples;
    while left > 0 {
        let take = left.min(CHUNK);
        left -= take;
        let us = (0..take)
            .map(|_| haar_unitary(d, rng))
            .collect::<Result<Vec<_>>>()?;
        let terms = us
            .par_iter()
            .map(|u| {
                let g = LabeledOperator::new(pair.clone(), u.kronecker(&u.conjugate()))?;
                rho.conjugate_by(&g)
            })
            .collect::<Result<Vec<_>>>()?;
        for t in &terms {
            total = total.add(t)?;
        }
    }
    Ok(total.scale_real(1.0 / n_samples as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{maximally_mixed, random_density, trace_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair(d: usize) -> SpaceDescriptor {
        SpaceDescriptor::new([("a", d), ("b", d)]).unwrap()
    }

    #[test]
    fn fixed_points() {
        let phi = PureState::max_entangled("a", "b", 3).unwrap().projector();
        assert!(
            twirl(&phi, "a", "b")
                .unwrap()
                .sub(&phi)
                .unwrap()
                .frobenius_norm()
                < 1e-13
        );
        let mixed = maximally_mixed(pair(3));
        assert!(
            twirl(&mixed, "a", "b")
                .unwrap()
                .sub(&mixed)
                .unwrap()
                .frobenius_norm()
                < 1e-13
        );
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let once = twirl_monte_carlo(&phi, "a", "b", 1, &mut rng).unwrap();
        assert!(once.sub(&phi).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn product_state_splits_evenly() {
        let zero = PureState::basis(pair(2), 0).unwrap().projector();
        let t = twirl(&zero, "a", "b").unwrap();
        let phi = PureState::max_entangled("a", "b", 2).unwrap().projector();
        let expected = phi
            .scale_real(0.5)
            .add(&antisym_state("a", "b", 2).unwrap().scale_real(0.5))
            .unwrap();
        assert!(t.sub(&expected).unwrap().frobenius_norm() < 1e-13);
    }

    #[test]
    fn idempotent_and_embedded() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let space = SpaceDescriptor::new([("x", 2), ("a", 2), ("b", 2)]).unwrap();
        let rho = random_density(space, 8, &mut rng).into_operator();
        let once = twirl(&rho, "a", "b").unwrap();
        let twice = twirl(&once, "a", "b").unwrap();
        assert!(once.sub(&twice).unwrap().frobenius_norm() < 1e-12);
        assert!((once.trace().re - 1.0).abs() < 1e-12);
        assert_eq!(once.space(), rho.space());
    }

    #[test]
    fn monte_carlo_converges() {
        let zero = PureState::basis(pair(2), 0).unwrap().projector();
        let exact = twirl(&zero, "a", "b").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let mc = twirl_monte_carlo(&zero, "a", "b", 10_000, &mut rng).unwrap();
        assert!(trace_distance(&mc, &exact).unwrap() < 0.05);
    }

    #[test]
    fn rejects_unequal_pairs() {
        let op = maximally_mixed(SpaceDescriptor::new([("a", 2), ("b", 3)]).unwrap());
        assert!(twirl(&op, "a", "b").is_err());
    }
}
