use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::comb::{
    a_out, b_in, build_protected_comb, A_IN, A_IN_REF, A_TOT, B_REF, KEY_OUT1, KEY_OUT2,
};
use super::spec::ProtectedCombSpec;
use super::twirl::{antisym_state, CHUNK};
use crate::bound::{choi_extended_state, reference_label};
use crate::comb::CombFamily;
use crate::error::{Error, Result};
use crate::qfi::{pure_state_qfi, sld, ParametrizedFamily, DEFAULT_CUTOFF};
use crate::tensor::{
    haar_unitary, maximally_mixed, unitary_exp, CMatrix, CVector, DensityOperator, LabeledOperator,
    PureState, SpaceDescriptor,
};

/// Samples summed sequentially by one task inside a chunk.
const TASK: usize = 16;

/// The averaged output split along `Φ⁺` and `π⁻` on `a_tot ⊗ b_ref`.
#[derive(Clone, Debug)]
pub struct ProtectedOutput {
    pub state: DensityOperator,
    /// `1/D²`.
    pub entangled_weight: f64,
    /// `Ψ'_θ ⊗ Φ⁺ ⊗ π`.
    pub entangled_component: LabeledOperator,
    /// `((D² − 4)ρ_Ψ' + 3π⁻_θ)/(D² − 1) ⊗ π⁻ ⊗ π`.
    pub antisym_component: LabeledOperator,
}

/// Subsystem order of every output state.
pub fn output_labels() -> [&'static str; 5] {
    [KEY_OUT1, A_IN_REF, A_TOT, B_REF, KEY_OUT2]
}

fn input_state(psi: &PureState) -> Result<PureState> {
    let sp = psi.space();
    if sp.len() != 2 || sp.dim_of(A_IN).ok() != Some(2) || sp.dim_of(A_IN_REF).ok() != Some(2) {
        return Err(Error::DimensionMismatch(format!(
            "input must live on `{A_IN}`(2) ⊗ `{A_IN_REF}`(2), got {sp}"
        )));
    }
    psi.permute(&[A_IN, A_IN_REF])
}

/// `X` with `ψ′ = (I ⊗ X)|Φ⁺⟩`, so `Tr_{a_in} ψ′ = X X†/2`.
pub fn input_operator(psi: &PureState) -> Result<CMatrix> {
    let psi = input_state(psi)?;
    let a = psi.amplitudes();
    Ok(DMatrix::from_fn(2, 2, |r, c| a[c * 2 + r] * SQRT_2))
}

fn generator_on_key(spec: &ProtectedCombSpec) -> Result<LabeledOperator> {
    LabeledOperator::new(
        SpaceDescriptor::single(KEY_OUT1, 2)?,
        spec.generator().clone(),
    )
}

/// `Ψ'_θ = (V_θ ⊗ I)ψ′` with the probe relabelled `key_out1`.
pub fn rotated_input(spec: &ProtectedCombSpec, psi: &PureState, theta: f64) -> Result<PureState> {
    let psi = input_state(psi)?;
    let v = unitary_exp(spec.generator(), theta).kronecker(&DMatrix::identity(2, 2));
    PureState::new(
        SpaceDescriptor::new([(KEY_OUT1, 2), (A_IN_REF, 2)])?,
        v * psi.amplitudes(),
    )
}

/// `ρ_Ψ' = I/2 ⊗ Tr_{a_in} ψ′` on `key_out1 ⊗ a_in_ref`.
pub fn reduced_input(psi: &PureState) -> Result<LabeledOperator> {
    let psi = input_state(psi)?;
    let half = maximally_mixed(SpaceDescriptor::single(KEY_OUT1, 2)?);
    half.tensor(&psi.projector().partial_trace(&[A_IN])?)
}

/// `π⁻_θ = (4ρ_Ψ' − Ψ'_θ)/3`.
pub fn twisted_state(
    spec: &ProtectedCombSpec,
    psi: &PureState,
    theta: f64,
) -> Result<LabeledOperator> {
    let rho = reduced_input(psi)?;
    let rot = rotated_input(spec, psi, theta)?.projector();
    Ok(rho.scale_real(4.0).sub(&rot)?.scale_real(1.0 / 3.0))
}

/// Closed form of the shield-averaged output on `key_out1 ⊗ a_in_ref ⊗ a_tot ⊗ b_ref ⊗ key_out2`.
pub fn protected_output_exact(
    spec: &ProtectedCombSpec,
    psi: &PureState,
    theta: f64,
) -> Result<ProtectedOutput> {
    let d = spec.total_dim();
    let d2 = (d * d) as f64;
    let rot = rotated_input(spec, psi, theta)?.projector();
    let rho = reduced_input(psi)?;
    let pi_minus_theta = twisted_state(spec, psi, theta)?;
    let phi = PureState::max_entangled(A_TOT, B_REF, d)?.projector();
    let pi_minus = antisym_state(A_TOT, B_REF, d)?;
    let pi = maximally_mixed(SpaceDescriptor::single(KEY_OUT2, spec.ancilla_dim())?);

    let entangled = rot.tensor(&phi)?.tensor(&pi)?;
    let local = rho
        .scale_real(d2 - 4.0)
        .add(&pi_minus_theta.scale_real(3.0))?
        .scale_real(1.0 / (d2 - 1.0));
    let antisym = local.tensor(&pi_minus)?.tensor(&pi)?;
    let state = entangled
        .scale_real(1.0 / d2)
        .add(&antisym.scale_real((d2 - 1.0) / d2))?;
    Ok(ProtectedOutput {
        state: DensityOperator::new(state)?,
        entangled_weight: 1.0 / d2,
        entangled_component: entangled,
        antisym_component: antisym,
    })
}

/// `θ ↦` the averaged output, a unitary family generated by `H` on `key_out1`.
pub fn protected_output_family(
    spec: &ProtectedCombSpec,
    psi: &PureState,
) -> Result<ParametrizedFamily> {
    let out = protected_output_exact(spec, psi, 0.0)?;
    ParametrizedFamily::unitary(&out.state, &generator_on_key(spec)?)
}

/// `F[Ψ'_θ]/D² + F[M_θ]` with `M_θ = ρ_Ψ' − Ψ'_θ/D²`, the QFI of the
/// averaged output computed block by block.
pub fn protected_block_qfi(spec: &ProtectedCombSpec, psi: &PureState) -> Result<f64> {
    let psi = input_state(psi)?;
    block_qfi_raw(spec.generator(), spec.total_dim(), psi.amplitudes())
}

pub(crate) fn block_qfi_raw(h: &CMatrix, d: usize, v: &CVector) -> Result<f64> {
    let d2 = (d * d) as f64;
    let space = SpaceDescriptor::new([(KEY_OUT1, 2), (A_IN_REF, 2)])?;
    let psi = PureState::new(space.clone(), v.clone())?;
    let g = LabeledOperator::new(SpaceDescriptor::single(KEY_OUT1, 2)?, h.clone())?;
    let pure = pure_state_qfi(&psi, &g)?;
    let proj = psi.projector();
    let half = maximally_mixed(SpaceDescriptor::single(KEY_OUT1, 2)?);
    let rho = half.tensor(&proj.partial_trace(&[KEY_OUT1])?)?;
    let m = rho.sub(&proj.scale_real(1.0 / d2))?;
    let dm = proj.commutator_derivative(&g)?.scale_real(-1.0 / d2);
    Ok(pure / d2 + sld(&m, &dm, DEFAULT_CUTOFF)?.qfi)
}

/// Output for one shield `u`: `U(V_θψ′V_θ† ⊗ π)U†` on `a_tot ⊗ a_in_ref`
/// times the key state `(U† ⊗ I)Φ⁺` on `key ⊗ b_ref`, in output order.
pub fn protected_output_for_shield(
    spec: &ProtectedCombSpec,
    psi: &PureState,
    theta: f64,
    u: &CMatrix,
) -> Result<LabeledOperator> {
    let prepared = prepared_input(spec, psi, theta)?;
    let raw = shield_term(&prepared, u, spec.total_dim());
    LabeledOperator::new(shield_space(spec)?, raw)?.permute(&output_labels())
}

fn prepared_input(spec: &ProtectedCombSpec, psi: &PureState, theta: f64) -> Result<CMatrix> {
    let rot = rotated_input(spec, psi, theta)?
        .projector()
        .rename(KEY_OUT1, A_IN)?;
    let anc = maximally_mixed(SpaceDescriptor::single("anc", spec.ancilla_dim())?);
    Ok(rot
        .tensor(&anc)?
        .permute(&[A_IN, "anc", A_IN_REF])?
        .into_matrix())
}

fn shield_space(spec: &ProtectedCombSpec) -> Result<SpaceDescriptor> {
    let d = spec.total_dim();
    SpaceDescriptor::new([
        (A_TOT, d),
        (A_IN_REF, 2),
        (KEY_OUT1, 2),
        (KEY_OUT2, spec.ancilla_dim()),
        (B_REF, d),
    ])
}

fn shield_term(prepared: &CMatrix, u: &CMatrix, d: usize) -> CMatrix {
    let g = u.kronecker(&DMatrix::<Complex64>::identity(2, 2));
    let sigma = &g * prepared * g.adjoint();
    let ud = u.adjoint();
    let scale = 1.0 / (d as f64).sqrt();
    let kappa = DVector::from_fn(d * d, |i, _| ud[(i / d, i % d)] * scale);
    sigma.kronecker(&(&kappa * kappa.adjoint()))
}

/// The same output obtained by composing the fixed-shield comb with `ψ′`
/// and `Φ⁺` on every later input.
pub fn protected_output_composed(
    spec: &ProtectedCombSpec,
    psi: &PureState,
    theta: f64,
    u: &CMatrix,
) -> Result<LabeledOperator> {
    let psi = input_state(psi)?;
    let comb = build_protected_comb(spec, u)?;
    let out = choi_extended_state(&comb.choi(theta)?, &psi)?.into_operator();
    let k = spec.phase_dims().len();
    let outs: Vec<String> = (1..=k).map(a_out).collect();
    let refs: Vec<String> = (1..=k).map(|j| reference_label(&b_in(j))).collect();
    let mut order = vec![KEY_OUT1.to_string(), A_IN_REF.to_string()];
    order.extend(outs.iter().cloned());
    order.extend(refs.iter().cloned());
    order.push(KEY_OUT2.to_string());
    out.permute(&order)?
        .merge_adjacent(&outs, A_TOT)?
        .merge_adjacent(&refs, B_REF)
}

/// Monte Carlo average of [`protected_output_for_shield`] over Haar shields.
pub fn protected_output_mc<R: Rng + ?Sized>(
    spec: &ProtectedCombSpec,
    psi: &PureState,
    theta: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<DensityOperator> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument(
            "Monte Carlo average without samples".into(),
        ));
    }
    let d = spec.total_dim();
    let prepared = prepared_input(spec, psi, theta)?;
    let space = shield_space(spec)?;
    let n = space.total_dim();
    let mut total = DMatrix::<Complex64>::zeros(n, n);
    let mut left = n_samples;
    while left > 0 {
        let take = left.min(CHUNK);
        left -= take;
        let us = (0..take)
            .map(|_| haar_unitary(d, rng))
            .collect::<Result<Vec<_>>>()?;
        let partial: Vec<CMatrix> = us
            .par_chunks(TASK)
            .map(|group| {
                let mut acc = DMatrix::zeros(n, n);
                for u in group {
                    acc += shield_term(&prepared, u, d);
                }
                acc
            })
            .collect();
        for p in partial {
            total += p;
        }
    }
    total /= Complex64::new(n_samples as f64, 0.0);
    let op = LabeledOperator::new(space, total)?.permute(&output_labels())?;
    DensityOperator::new(op.hermitian_part())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfi::qfi_state;
    use crate::tensor::{c, pauli, random_pure_state, trace_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(d: usize) -> ProtectedCombSpec {
        ProtectedCombSpec::with_total_dim(d, pauli::z() * c(0.5, 0.0)).unwrap()
    }

    fn bell() -> PureState {
        PureState::max_entangled(A_IN, A_IN_REF, 2).unwrap()
    }

    fn input_space() -> SpaceDescriptor {
        SpaceDescriptor::new([(A_IN, 2), (A_IN_REF, 2)]).unwrap()
    }

    #[test]
    fn composition_matches_product_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(80);
        for d in [2, 4] {
            let s = spec(d);
            let psi = random_pure_state(input_space(), &mut rng);
            let u = haar_unitary(d, &mut rng).unwrap();
            let a = protected_output_composed(&s, &psi, 0.7, &u).unwrap();
            let b = protected_output_for_shield(&s, &psi, 0.7, &u).unwrap();
            assert_eq!(a.space(), b.space());
            assert!(a.sub(&b).unwrap().frobenius_norm() < 1e-10, "D={d}");
        }
    }

    #[test]
    fn components_are_orthogonal_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        for d in [2, 4] {
            let psi = random_pure_state(input_space(), &mut rng);
            let out = protected_output_exact(&spec(d), &psi, 0.3).unwrap();
            let e = &out.entangled_component;
            let a = &out.antisym_component;
            assert!(e.inner_trace(a).unwrap().norm() < 1e-12);
            assert!((e.trace().re - 1.0).abs() < 1e-12);
            assert!((a.trace().re - 1.0).abs() < 1e-12);
            assert!(DensityOperator::new(a.clone()).is_ok());
            assert!((out.entangled_weight - 1.0 / (d * d) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn twisted_state_is_a_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(82);
        for _ in 0..20 {
            let psi = random_pure_state(input_space(), &mut rng);
            let t = twisted_state(&spec(2), &psi, 1.1).unwrap();
            assert!(DensityOperator::new(t).is_ok());
        }
    }

    #[test]
    fn monte_carlo_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let psi = random_pure_state(input_space(), &mut rng);
        for d in [2, 4] {
            let exact = protected_output_exact(&spec(d), &psi, 0.4).unwrap();
            let mc = protected_output_mc(&spec(d), &psi, 0.4, 10_000, &mut rng).unwrap();
            let dist = trace_distance(mc.as_operator(), exact.state.as_operator()).unwrap();
            assert!(dist < 0.05, "D={d}: {dist}");
        }
    }

    #[test]
    fn block_qfi_matches_dense_qfi() {
        let mut rng = ChaCha8Rng::seed_from_u64(84);
        for d in [2, 4] {
            for psi in [bell(), random_pure_state(input_space(), &mut rng)] {
                let fam = protected_output_family(&spec(d), &psi).unwrap();
                let dense = qfi_state(&fam, 0.2, DEFAULT_CUTOFF).unwrap().value;
                let fast = protected_block_qfi(&spec(d), &psi).unwrap();
                assert!((dense - fast).abs() < 1e-9, "D={d}: {dense} vs {fast}");
            }
        }
    }

    #[test]
    fn bell_input_values() {
        let half = protected_block_qfi(&spec(2), &bell()).unwrap();
        assert!((half - 0.5).abs() < 1e-9, "{half}");
        let fourteenth = protected_block_qfi(&spec(4), &bell()).unwrap();
        assert!((fourteenth - 1.0 / 14.0).abs() < 1e-9, "{fourteenth}");
    }

    #[test]
    fn input_operator_of_bell_is_identity() {
        let x = input_operator(&bell()).unwrap();
        assert!((x - DMatrix::<Complex64>::identity(2, 2)).norm() < 1e-14);
        assert!(input_operator(&PureState::max_entangled("a", "b", 2).unwrap()).is_err());
    }
}
