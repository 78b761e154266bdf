use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::optimize::{maximize_over_states, MultistartConfig};
use super::sld::{qfi_of, QfiResult};
use crate::comb::{ChoiOperator, CombFamily, REFERENCE_LABEL};
use crate::error::{Error, Result};
use crate::tensor::{
    herm_eig_matrix, CMatrix, CVector, LabeledOperator, PureState, SpaceDescriptor,
};

/// QFI of `ρ = AA†` with `dρ = Σ_m μ_m w_m w_m†` (the `w_m` are columns of `w`).
///
/// Works on the support of `ρ` only, so its cost scales with the ranks
/// rather than with the full dimension. Agrees with the dense SLD sum up to
/// pairs of eigenvalues that both sit below the cutoff.
pub fn qfi_factored(a: &CMatrix, w: &CMatrix, mu: &[f64], eps: f64) -> f64 {
    let gram = a.adjoint() * a;
    let eig = herm_eig_matrix(&gram);
    let kept: Vec<usize> = (0..eig.values.len())
        .filter(|&j| eig.values[j] > eps)
        .collect();
    if kept.is_empty() {
        return 0.0;
    }
    let lambda: Vec<f64> = kept.iter().map(|&j| eig.values[j]).collect();
    let q = kept.len();
    // orthonormal support vectors s_j = A u_j / √λ_j
    let u = DMatrix::from_fn(eig.vectors.nrows(), q, |i, j| {
        eig.vectors[(i, kept[j])] / lambda[j].sqrt()
    });
    let s = a * u;
    let mut ws = w.adjoint() * &s;
    for (m, &scale) in mu.iter().enumerate() {
        ws.row_mut(m).iter_mut().for_each(|z| *z *= scale);
    }
    let ds = w * ws;
    let x = s.adjoint() * &ds;
    let outside = &ds - &s * &x;
    let mut f = 0.0;
    for j in 0..q {
        for k in 0..q {
            f += 2.0 * x[(j, k)].norm_sqr() / (lambda[j] + lambda[k]);
        }
        f += 4.0 * outside.column(j).norm_squared() / lambda[j];
    }
    f.max(0.0)
}

/// Kraus-like factors of a channel's Choi operator and of its derivative.
#[derive(Clone, Debug)]
pub struct ChannelFactors {
    input: SpaceDescriptor,
    output: SpaceDescriptor,
    /// Stacked `K_j` (`rank·d_out × d_in`).
    kraus: CMatrix,
    /// Stacked eigen-operators of `dC` (`m·d_out × d_in`).
    dkraus: CMatrix,
    mu: Vec<f64>,
}

fn stacked(vectors: &[CVector], d_in: usize, d_out: usize) -> CMatrix {
    DMatrix::from_fn(vectors.len() * d_out, d_in, |r, i| {
        let (j, o) = (r / d_out, r % d_out);
        vectors[j][i * d_out + o]
    })
}

impl ChannelFactors {
    /// Treats every input port as channel input and every output port as
    /// channel output.
    pub fn new(c: &ChoiOperator, dc: &LabeledOperator) -> Result<Self> {
        let input = c.ports().input_space();
        let output = c.ports().output_space();
        let mut order = input.labels();
        order.extend(output.labels());
        let cm = c.op().permute(&order)?;
        let dm = dc.permute(&order)?;
        let (d_in, d_out) = (input.total_dim(), output.total_dim());

        let eig = herm_eig_matrix(cm.matrix());
        let cut = 1e-13 * eig.max().abs().max(1.0);
        let kraus_vecs: Vec<CVector> = (0..eig.values.len())
            .filter(|&j| eig.values[j] > cut)
            .map(|j| eig.vectors.column(j) * Complex64::new(eig.values[j].sqrt(), 0.0))
            .collect();
        let deig = herm_eig_matrix(dm.matrix());
        let dmax = deig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dcut = 1e-13 * dmax.max(1e-300);
        let mut dvecs = Vec::new();
        let mut mu = Vec::new();
        for j in 0..deig.values.len() {
            if deig.values[j].abs() > dcut && dmax > 0.0 {
                dvecs.push(deig.vectors.column(j).into_owned());
                mu.push(deig.values[j]);
            }
        }
        Ok(ChannelFactors {
            kraus: stacked(&kraus_vecs, d_in, d_out),
            dkraus: stacked(&dvecs, d_in, d_out),
            input,
            output,
            mu,
        })
    }

    pub fn input(&self) -> &SpaceDescriptor {
        &self.input
    }

    pub fn output(&self) -> &SpaceDescriptor {
        &self.output
    }

    pub fn rank(&self) -> usize {
        self.kraus.nrows() / self.output.total_dim()
    }

    /// Columns `(K_j ⊗ I_R)|ψ⟩` for `ψ` on input ⊗ reference (`d_ref` wide).
    fn apply(&self, stack: &CMatrix, psi: &CVector, d_ref: usize) -> CMatrix {
        let (d_in, d_out) = (self.input.total_dim(), self.output.total_dim());
        let psi_m = DMatrix::from_fn(d_in, d_ref, |i, r| psi[i * d_ref + r]);
        let out = stack * psi_m;
        let count = stack.nrows() / d_out;
        DMatrix::from_fn(d_out * d_ref, count, |row, j| {
            let (o, r) = (row / d_ref, row % d_ref);
            out[(j * d_out + o, r)]
        })
    }

    /// QFI of the output for input `ψ` on input ⊗ reference.
    pub fn output_qfi(&self, psi: &CVector, d_ref: usize, eps: f64) -> f64 {
        if self.mu.is_empty() {
            return 0.0;
        }
        let a = self.apply(&self.kraus, psi, d_ref);
        let w = self.apply(&self.dkraus, psi, d_ref);
        qfi_factored(&a, &w, &self.mu, eps)
    }

    /// Output state and its derivative as dense operators on output ⊗ `reference`.
    pub fn output_operators(
        &self,
        psi: &CVector,
        reference: &SpaceDescriptor,
    ) -> Result<(LabeledOperator, LabeledOperator)> {
        let d_ref = reference.total_dim();
        let a = self.apply(&self.kraus, psi, d_ref);
        let mut w = self.apply(&self.dkraus, psi, d_ref);
        let space = self.output.concat(reference)?;
        let rho = &a * a.adjoint();
        let w_plain = w.clone();
        for (m, &scale) in self.mu.iter().enumerate() {
            w.column_mut(m).iter_mut().for_each(|z| *z *= scale);
        }
        let drho = &w * w_plain.adjoint();
        Ok((
            LabeledOperator::new(space.clone(), rho)?,
            LabeledOperator::new(space, drho)?,
        ))
    }
}

/// Channel QFI together with the optimizer's diagnostics.
#[derive(Clone, Debug)]
pub struct ChannelQfi {
    pub result: QfiResult,
    pub start_values: Vec<f64>,
    pub agreeing_starts: usize,
    /// The best value was reached by fewer than two starts.
    pub flagged: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChannelQfiSummary {
    pub value: f64,
    pub agreeing_starts: usize,
    pub starts: usize,
    pub flagged: bool,
}

impl ChannelQfi {
    pub fn summary(&self) -> ChannelQfiSummary {
        ChannelQfiSummary {
            value: self.result.value,
            agreeing_starts: self.agreeing_starts,
            starts: self.start_values.len(),
            flagged: self.flagged,
        }
    }
}

/// Maximal QFI over pure inputs with a reference as large as the input.
///
/// The value is the best found by multistart optimization, hence a lower
/// estimate of the true maximum. `candidates` are extra starting inputs on
/// input ⊗ reference.
pub fn qfi_channel<F: CombFamily + ?Sized>(
    family: &F,
    theta: f64,
    cfg: &MultistartConfig,
    candidates: &[PureState],
    eps: f64,
) -> Result<ChannelQfi> {
    let c = family.choi(theta)?;
    let dc = family.choi_derivative(theta)?;
    let factors = ChannelFactors::new(&c, &dc)?;
    let d_in = factors.input().total_dim();
    if factors.output().contains(REFERENCE_LABEL) || factors.input().contains(REFERENCE_LABEL) {
        return Err(Error::DuplicateLabel(REFERENCE_LABEL.into()));
    }
    let reference = SpaceDescriptor::single(REFERENCE_LABEL, d_in)?;
    let joint = factors.input().concat(&reference)?;
    let mut starts = Vec::new();
    for psi in candidates {
        starts.push(psi.permute(&joint.labels())?.amplitudes().clone());
    }
    let outcome = maximize_over_states(
        |v| factors.output_qfi(v, d_in, eps),
        d_in * d_in,
        &starts,
        cfg,
    );
    let best = PureState::normalized(joint, outcome.best_state.clone())?;
    let (rho, drho) = factors.output_operators(best.amplitudes(), &reference)?;
    let mut result = qfi_of(&rho, &drho, eps)?;
    result.optimal_input = Some(best);
    Ok(ChannelQfi {
        result,
        start_values: outcome.start_values,
        agreeing_starts: outcome.agreeing_starts,
        flagged: outcome.flagged,
    })
}

/// `(λ_max(H) − λ_min(H))²`, the QFI of the unitary channel `e^{−iθH}`.
pub fn unitary_channel_qfi(generator: &CMatrix) -> f64 {
    let eig = herm_eig_matrix(generator);
    let spread = eig.max() - eig.min();
    spread * spread
}

/// QFI of the isometry channel family `V_θ` with derivative `dV`, maximized
/// over inputs with a reference:
/// `max_ρ 4(Tr ρA − (Tr ρB)²) = min_μ 4(λ_max(A − 2μB) + μ²)` with
/// `A = dV†dV` and `B = iV†dV`.
///
/// The dual is convex in `μ` and is minimized by golden-section search over
/// the spectrum of `B`, so the value does not depend on a start.
pub fn isometric_channel_qfi(v: &CMatrix, dv: &CMatrix) -> f64 {
    let a = dv.adjoint() * dv;
    let b = v.adjoint() * dv * Complex64::new(0.0, 1.0);
    let b = (&b + b.adjoint()) * Complex64::new(0.5, 0.0);
    let dual =
        |mu: f64| herm_eig_matrix(&(&a - &b * Complex64::new(2.0 * mu, 0.0))).max() + mu * mu;
    let spec = herm_eig_matrix(&b);
    let (mut lo, mut hi) = (spec.min(), spec.max());
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (dual(x1), dual(x2));
    while hi - lo > 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = dual(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = dual(x2);
        }
    }
    let best = [dual(lo), dual(hi), f1, f2]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    (4.0 * best).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comb::{PhaseDilation, StinespringComb};
    use crate::qfi::sld::DEFAULT_CUTOFF;
    use crate::tensor::{c, haar_isometry, pauli, random_hermitian, random_pure_state, LinearMap};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sp(items: &[(&str, usize)]) -> SpaceDescriptor {
        SpaceDescriptor::new(items.iter().map(|(l, d)| (*l, *d))).unwrap()
    }

    fn unitary_comb(h: CMatrix) -> StinespringComb {
        let d = h.nrows();
        StinespringComb::from_phases(&[PhaseDilation {
            map: LinearMap::wire(sp(&[("i", d)]), sp(&[("o", d)])).unwrap(),
            environment: vec![],
            generator: Some(LabeledOperator::new(sp(&[("i", d)]), h).unwrap()),
        }])
        .unwrap()
    }

    #[test]
    fn half_sigma_z_channel_has_unit_qfi() {
        let comb = unitary_comb(pauli::z() * c(0.5, 0.0));
        let r = qfi_channel(
            &comb,
            0.3,
            &MultistartConfig::default().with_starts(8),
            &[],
            DEFAULT_CUTOFF,
        )
        .unwrap();
        assert!((r.result.value - 1.0).abs() < 1e-8, "{}", r.result.value);
        assert!(r.result.optimal_input.is_some());
    }

    #[test]
    fn random_unitary_channels_match_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for d in [2, 3] {
            let h = random_hermitian(d, &mut rng);
            let oracle = unitary_channel_qfi(&h);
            let comb = unitary_comb(h);
            let r = qfi_channel(
                &comb,
                0.1,
                &MultistartConfig::default().with_starts(16),
                &[],
                DEFAULT_CUTOFF,
            )
            .unwrap();
            assert!(
                (r.result.value - oracle).abs() < 1e-7 * oracle.max(1.0),
                "{} vs {oracle}",
                r.result.value
            );
        }
    }

    #[test]
    fn isometric_oracle_matches_spread_and_optimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let h = random_hermitian(3, &mut rng);
        let u = crate::tensor::unitary_exp(&h, 0.4);
        let du = &h * &u * c(0.0, -1.0);
        let oracle = isometric_channel_qfi(&u, &du);
        assert!((oracle - unitary_channel_qfi(&h)).abs() < 1e-9 * oracle.max(1.0));

        let w = haar_isometry(2, 4, &mut rng).unwrap();
        let comb = StinespringComb::from_phases(&[PhaseDilation {
            map: LinearMap::new(sp(&[("i", 2)]), sp(&[("o", 4)]), w).unwrap(),
            environment: vec![],
            generator: Some(
                LabeledOperator::new(sp(&[("i", 2)]), random_hermitian(2, &mut rng)).unwrap(),
            ),
        }])
        .unwrap();
        let (v, dv) = comb.pure_dilation(0.7).unwrap().unwrap();
        let exact = isometric_channel_qfi(v.matrix(), dv.matrix());
        let r = qfi_channel(
            &comb,
            0.7,
            &MultistartConfig::default().with_starts(8),
            &[],
            DEFAULT_CUTOFF,
        )
        .unwrap();
        assert!(
            (r.result.value - exact).abs() < 1e-7 * exact.max(1.0),
            "{} vs {exact}",
            r.result.value
        );
    }

    #[test]
    fn depolarizing_channel_has_no_information() {
        let kraus: Vec<CMatrix> = [pauli::i(), pauli::x(), pauli::y(), pauli::z()]
            .iter()
            .map(|p| p * c(0.5, 0.0))
            .collect();
        let ch = crate::comb::choi_of_kraus(&kraus, "i", "o").unwrap();
        let dc = LabeledOperator::zeros(ch.op().space().clone());
        let f = ChannelFactors::new(&ch, &dc).unwrap();
        let psi = crate::tensor::PureState::max_entangled("i", "R", 2).unwrap();
        assert_eq!(f.output_qfi(psi.amplitudes(), 2, DEFAULT_CUTOFF), 0.0);
    }

    #[test]
    fn factored_qfi_matches_dense_sld() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let w = haar_isometry(2, 8, &mut rng).unwrap();
        let comb = StinespringComb::from_phases(&[PhaseDilation {
            map: LinearMap::new(sp(&[("i", 2)]), sp(&[("o", 4), ("e", 2)]), w).unwrap(),
            environment: vec!["e".into()],
            generator: Some(
                LabeledOperator::new(sp(&[("i", 2)]), random_hermitian(2, &mut rng)).unwrap(),
            ),
        }])
        .unwrap();
        let ch = comb.choi(0.2).unwrap();
        let dc = comb.choi_derivative(0.2).unwrap();
        let f = ChannelFactors::new(&ch, &dc).unwrap();
        for _ in 0..5 {
            let psi = random_pure_state(sp(&[("i", 2), ("R", 2)]), &mut rng);
            let fast = f.output_qfi(psi.amplitudes(), 2, DEFAULT_CUTOFF);
            let (rho, drho) = f
                .output_operators(psi.amplitudes(), &sp(&[("R", 2)]))
                .unwrap();
            let dense = qfi_of(&rho, &drho, DEFAULT_CUTOFF).unwrap().value;
            assert!(
                (fast - dense).abs() < 1e-9 * dense.max(1.0),
                "{fast} vs {dense}"
            );
        }
    }
}
