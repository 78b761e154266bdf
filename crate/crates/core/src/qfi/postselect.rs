use serde::Serialize;

use super::family::{family_derivative, ParametrizedFamily};
use super::sld::{qfi_of, DEFAULT_CUTOFF};
use crate::error::{Error, Result};
use crate::tensor::{herm_eig_matrix, tolerance, LabeledOperator, LinearMap};

/// Success probabilities below this leave the conditional state undefined.
pub const MIN_SUCCESS_PROBABILITY: f64 = 1e-12;
/// Slack allowed in `F_Q[ρ] ≥ p·F_Q[ρ_succ]`.
pub const POSTSELECTION_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PostselectionReport {
    /// `F_Q[ρ_θ]`.
    pub lhs: f64,
    /// `p_θ · F_Q[ρ_succ,θ]`; zero when the probability is too small.
    pub rhs: f64,
    pub probability: f64,
    /// `None` when `p_θ < 1e-12`.
    pub holds: Option<bool>,
}

fn check_trace_nonincreasing(kraus: &[LinearMap]) -> Result<()> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?;
    let input = first.input().clone();
    let mut total = LabeledOperator::zeros(input.clone());
    for k in kraus {
        if k.input() != &input {
            return Err(Error::DimensionMismatch(
                "Kraus operators act on different inputs".into(),
            ));
        }
        if k.output() != first.output() {
            return Err(Error::DimensionMismatch(
                "Kraus operators have different outputs".into(),
            ));
        }
        let m = k.matrix();
        total = total.add(&LabeledOperator::new(input.clone(), m.adjoint() * m)?)?;
    }
    let excess = herm_eig_matrix(total.matrix()).max() - 1.0;
    if excess > tolerance::TRACE {
        return Err(Error::NotTraceNonIncreasing { excess });
    }
    Ok(())
}

fn apply(kraus: &[LinearMap], x: &LabeledOperator) -> Result<LabeledOperator> {
    let mut out = kraus[0].conjugate(x)?;
    for k in &kraus[1..] {
        out = out.add(&k.conjugate(x)?)?;
    }
    Ok(out)
}

/// Checks `F_Q[ρ_θ] ≥ p_θ F_Q[ρ_succ,θ]` for the filter `ρ ↦ Σ M ρ M†`.
///
/// The conditional family is `ρ̃_θ / p_θ`; its derivative carries the
/// θ-dependence of `p_θ`.
pub fn check_postselection(
    f: &ParametrizedFamily,
    kraus: &[LinearMap],
    theta: f64,
) -> Result<PostselectionReport> {
    check_trace_nonincreasing(kraus)?;
    let rho = f.evaluate(theta)?;
    let drho = family_derivative(f, theta)?;
    let lhs = qfi_of(&rho, &drho, DEFAULT_CUTOFF)?.value;

    let filtered = apply(kraus, &rho)?;
    let dfiltered = apply(kraus, &drho)?;
    let p = filtered.trace().re;
    if p < MIN_SUCCESS_PROBABILITY {
        return Ok(PostselectionReport {
            lhs,
            rhs: 0.0,
            probability: p.max(0.0),
            holds: None,
        });
    }
    let dp = dfiltered.trace().re;
    let succ = filtered.scale_real(1.0 / p);
    let dsucc = dfiltered
        .scale_real(1.0 / p)
        .sub(&filtered.scale_real(dp / (p * p)))?;
    let rhs = p * qfi_of(&succ, &dsucc, DEFAULT_CUTOFF)?.value;
    Ok(PostselectionReport {
        lhs,
        rhs,
        probability: p,
        holds: Some(lhs >= rhs - POSTSELECTION_SLACK),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{c, pauli, random_density, random_hermitian, PureState, SpaceDescriptor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q() -> SpaceDescriptor {
        SpaceDescriptor::single("q", 2).unwrap()
    }

    #[test]
    fn identity_filter_is_equality() {
        let plus =
            PureState::normalized(q(), nalgebra::DVector::from_element(2, c(1.0, 0.0))).unwrap();
        let h = LabeledOperator::new(q(), pauli::z() * c(0.5, 0.0)).unwrap();
        let f = ParametrizedFamily::unitary(&plus.density(), &h).unwrap();
        let r = check_postselection(&f, &[LinearMap::identity(q())], 0.7).unwrap();
        assert!((r.lhs - r.rhs).abs() < 1e-12);
        assert!((r.probability - 1.0).abs() < 1e-12);
        assert_eq!(r.holds, Some(true));
    }

    #[test]
    fn vanishing_probability_is_indeterminate() {
        let zero = PureState::basis(q(), 0).unwrap();
        let h = LabeledOperator::new(q(), pauli::z()).unwrap();
        let f = ParametrizedFamily::unitary(&zero.density(), &h).unwrap();
        let proj_one = LinearMap::new(q(), q(), pauli::combination([0.5, 0.0, 0.0, -0.5])).unwrap();
        let r = check_postselection(&f, &[proj_one], 0.1).unwrap();
        assert_eq!(r.holds, None);
    }

    #[test]
    fn rejects_trace_increasing_maps() {
        let f = ParametrizedFamily::constant(&crate::tensor::DensityOperator::maximally_mixed(q()));
        let big = LinearMap::identity(q()).scale(c(1.1, 0.0));
        assert!(matches!(
            check_postselection(&f, &[big], 0.0),
            Err(Error::NotTraceNonIncreasing { .. })
        ));
    }

    #[test]
    fn random_filters_never_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let rho = random_density(q(), 2, &mut rng);
            let h = LabeledOperator::new(q(), random_hermitian(2, &mut rng)).unwrap();
            let f = ParametrizedFamily::unitary(&rho, &h).unwrap();
            let m = crate::tensor::ginibre(2, 2, &mut rng);
            let norm = herm_eig_matrix(&(m.adjoint() * &m)).max().sqrt();
            let k = LinearMap::new(q(), q(), m.unscale(norm)).unwrap();
            let r = check_postselection(&f, &[k], 0.3).unwrap();
            assert_eq!(r.holds, Some(true), "{r:?}");
        }
    }
}
