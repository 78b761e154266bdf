use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::operator::LabeledOperator;
use super::{tolerance, CMatrix};
use crate::error::{Error, Result};

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(v);
        }
        &scaled * self.vectors.adjoint()
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a Hermitian labeled operator.
///
/// Fails if the anti-Hermitian part exceeds `τ_herm · max(1, ‖h‖_F)`.
pub fn herm_eig(h: &LabeledOperator) -> Result<HermEig> {
    let residual = h.hermitian_residual();
    if residual > tolerance::HERM * h.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    Ok(herm_eig_matrix(h.matrix()))
}

/// Eigendecomposition of the Hermitian part of `m`, without validation.
pub fn herm_eig_matrix(m: &CMatrix) -> HermEig {
    let d = m.nrows();
    if d == 0 {
        return HermEig {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
        };
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    HermEig { values, vectors }
}

/// `exp(−i t H)` for Hermitian `H`.
pub fn unitary_exp(h: &CMatrix, t: f64) -> CMatrix {
    let eig = herm_eig_matrix(h);
    let phases = DVector::from_iterator(
        eig.values.len(),
        eig.values
            .iter()
            .map(|&v| Complex64::from_polar(1.0, -t * v)),
    );
    let mut scaled = eig.vectors.clone();
    for (k, p) in phases.iter().enumerate() {
        scaled.column_mut(k).iter_mut().for_each(|z| *z *= *p);
    }
    &scaled * eig.vectors.adjoint()
}

/// Principal square root of a positive semidefinite matrix (negative
/// eigenvalues clipped to zero).
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let eig = herm_eig_matrix(m);
    let mut scaled = eig.vectors.clone();
    for (k, &v) in eig.values.iter().enumerate() {
        scaled.column_mut(k).scale_mut(v.max(0.0).sqrt());
    }
    &scaled * eig.vectors.adjoint()
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    herm_eig_matrix(m).values.iter().map(|v| v.abs()).sum()
}

/// `½‖ρ − σ‖₁` for Hermitian operators on a common space.
pub fn trace_distance(rho: &LabeledOperator, sigma: &LabeledOperator) -> Result<f64> {
    let diff = rho.sub(sigma)?;
    Ok(0.5 * trace_norm_hermitian(diff.matrix()))
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &LabeledOperator, sigma: &LabeledOperator) -> Result<f64> {
    let sigma = sigma.permute(&rho.space().labels())?;
    let sr = psd_sqrt(rho.matrix());
    let inner = &sr * sigma.matrix() * &sr;
    let root_trace: f64 = herm_eig_matrix(&inner)
        .values
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .sum();
    Ok(root_trace * root_trace)
}

/// Outer product `|u⟩⟨v|`.
pub fn outer(u: &DVector<Complex64>, v: &DVector<Complex64>) -> CMatrix {
    u * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{c, pauli, SpaceDescriptor};
    use rand::SeedableRng;

    #[test]
    fn pauli_z_spectrum() {
        let z = LabeledOperator::new(SpaceDescriptor::single("q", 2).unwrap(), pauli::z()).unwrap();
        let eig = herm_eig(&z).unwrap();
        assert_eq!(eig.values, vec![1.0, -1.0]);
    }

    #[test]
    fn identity_spectrum() {
        let id = LabeledOperator::identity(SpaceDescriptor::single("q", 5).unwrap());
        let eig = herm_eig(&id).unwrap();
        assert!(eig.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for d in [1, 2, 5, 16, 40] {
            let h = crate::tensor::random_hermitian(d, &mut rng);
            let eig = herm_eig_matrix(&h);
            assert!((eig.reconstruct() - &h).norm() <= 1e-10);
            let v = &eig.vectors;
            let gram = v.adjoint() * v;
            assert!((gram - DMatrix::<Complex64>::identity(d, d)).norm() <= 1e-10);
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        let op = LabeledOperator::new(SpaceDescriptor::single("q", 2).unwrap(), m).unwrap();
        assert!(matches!(herm_eig(&op), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn exp_of_pauli_z() {
        let u = unitary_exp(&pauli::z(), 0.3);
        assert!((u[(0, 0)] - Complex64::from_polar(1.0, -0.3)).norm() < 1e-14);
        assert!((u[(1, 1)] - Complex64::from_polar(1.0, 0.3)).norm() < 1e-14);
    }
}
