use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::linalg::herm_eig_matrix;
use super::operator::LabeledOperator;
use super::space::SpaceDescriptor;
use super::{tolerance, CVector};
use crate::error::{Error, Result};

/// A normalized state vector over a labeled space.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    space: SpaceDescriptor,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(space: SpaceDescriptor, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for space {space}",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > tolerance::TRACE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState { space, amplitudes })
    }

    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn normalized(space: SpaceDescriptor, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(space, amplitudes.unscale(norm))
    }

    pub fn basis(space: SpaceDescriptor, index: usize) -> Result<Self> {
        let d = space.total_dim();
        if index >= d {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {d}"
            )));
        }
        let mut v = DVector::zeros(d);
        v[index] = Complex64::new(1.0, 0.0);
        Self::new(space, v)
    }

    /// `(1/√d) Σ_j |j⟩_a |j⟩_b`.
    pub fn max_entangled(label_a: &str, label_b: &str, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension(label_a.to_string()));
        }
        let space = SpaceDescriptor::new([(label_a, d), (label_b, d)])?;
        let amp = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        let mut v = DVector::zeros(d * d);
        for j in 0..d {
            v[j * d + j] = amp;
        }
        Self::new(space, v)
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn projector(&self) -> LabeledOperator {
        LabeledOperator::new(
            self.space.clone(),
            &self.amplitudes * self.amplitudes.adjoint(),
        )
        .expect("dimensions match by construction")
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator(self.projector())
    }

    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        Ok(PureState {
            space: self.space.concat(&other.space)?,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }

    pub fn permute<S: AsRef<str>>(&self, new_order: &[S]) -> Result<Self> {
        let perm = self.space.basis_permutation(new_order)?;
        Ok(PureState {
            space: self.space.select(new_order)?,
            amplitudes: DVector::from_fn(perm.len(), |i, _| self.amplitudes[perm[i]]),
        })
    }

    /// Applies an operator acting on a subset of the subsystems.
    pub fn apply(&self, op: &LabeledOperator) -> Result<CVector> {
        let big = op.embed(&self.space)?;
        Ok(big.matrix() * &self.amplitudes)
    }

    pub fn overlap(&self, other: &PureState) -> Result<Complex64> {
        let other = other.permute(&self.space.labels())?;
        if other.space != self.space {
            return Err(Error::DimensionMismatch(
                "states live on different spaces".into(),
            ));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn rename(&self, from: &str, to: &str) -> Result<Self> {
        Ok(PureState {
            space: self.space.rename(from, to)?,
            amplitudes: self.amplitudes.clone(),
        })
    }
}

/// Result of checking the density-operator invariants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityCheck {
    pub hermitian_residual: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl DensityCheck {
    pub fn of(op: &LabeledOperator) -> Self {
        let eig = herm_eig_matrix(op.matrix());
        DensityCheck {
            hermitian_residual: op.hermitian_residual(),
            trace_error: (op.trace() - Complex64::new(1.0, 0.0)).norm(),
            min_eigenvalue: eig.min(),
        }
    }

    pub fn passes(&self) -> bool {
        self.hermitian_residual <= tolerance::HERM
            && self.trace_error <= tolerance::TRACE
            && self.min_eigenvalue >= -tolerance::PSD
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator(LabeledOperator);

impl DensityOperator {
    pub fn new(op: LabeledOperator) -> Result<Self> {
        let check = DensityCheck::of(&op);
        if check.hermitian_residual > tolerance::HERM {
            return Err(Error::NotDensity(format!(
                "Hermitian residual {:.3e}",
                check.hermitian_residual
            )));
        }
        if check.trace_error > tolerance::TRACE {
            return Err(Error::NotDensity(format!(
                "trace error {:.3e}",
                check.trace_error
            )));
        }
        if check.min_eigenvalue < -tolerance::PSD {
            return Err(Error::NotDensity(format!(
                "minimum eigenvalue {:.3e}",
                check.min_eigenvalue
            )));
        }
        Ok(DensityOperator(op))
    }

    /// Wraps an operator already known to be a state.
    pub(crate) fn trusted(op: LabeledOperator) -> Self {
        DensityOperator(op)
    }

    pub fn maximally_mixed(space: SpaceDescriptor) -> Self {
        DensityOperator(maximally_mixed(space))
    }

    pub fn as_operator(&self) -> &LabeledOperator {
        &self.0
    }

    pub fn into_operator(self) -> LabeledOperator {
        self.0
    }

    pub fn space(&self) -> &SpaceDescriptor {
        self.0.space()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        self.0.matrix()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        herm_eig_matrix(self.0.matrix()).values
    }

    pub fn purity(&self) -> f64 {
        self.0
            .inner_trace(&self.0)
            .map(|c| c.re)
            .unwrap_or(f64::NAN)
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<Self> {
        Ok(DensityOperator(self.0.tensor(&other.0)?))
    }

    pub fn partial_trace<S: AsRef<str>>(&self, traced: &[S]) -> Result<Self> {
        Ok(DensityOperator(self.0.partial_trace(traced)?))
    }

    pub fn permute<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        Ok(DensityOperator(self.0.permute(order)?))
    }
}

impl AsRef<LabeledOperator> for DensityOperator {
    fn as_ref(&self) -> &LabeledOperator {
        &self.0
    }
}

pub fn maximally_mixed(space: SpaceDescriptor) -> LabeledOperator {
    let d = space.total_dim() as f64;
    LabeledOperator::identity(space).scale_real(1.0 / d)
}
