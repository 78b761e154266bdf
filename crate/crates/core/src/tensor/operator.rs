use nalgebra::DMatrix;
use num_complex::Complex64;

use super::space::SpaceDescriptor;
use super::CMatrix;
use crate::error::{Error, Result};

/// A square complex matrix over a labeled tensor-product space.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledOperator {
    space: SpaceDescriptor,
    matrix: CMatrix,
}

impl LabeledOperator {
    pub fn new(space: SpaceDescriptor, matrix: CMatrix) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but space {space} has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(LabeledOperator { space, matrix })
    }

    pub fn identity(space: SpaceDescriptor) -> Self {
        let d = space.total_dim();
        LabeledOperator {
            space,
            matrix: DMatrix::identity(d, d),
        }
    }

    pub fn zeros(space: SpaceDescriptor) -> Self {
        let d = space.total_dim();
        LabeledOperator {
            space,
            matrix: DMatrix::zeros(d, d),
        }
    }

    /// A 1x1 operator on the trivial space.
    pub fn scalar(value: Complex64) -> Self {
        LabeledOperator {
            space: SpaceDescriptor::empty(),
            matrix: DMatrix::from_element(1, 1, value),
        }
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn adjoint(&self) -> Self {
        LabeledOperator {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    /// Frobenius norm of the anti-Hermitian part, `‖M − M†‖_F / 2`.
    pub fn hermitian_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm() / 2.0
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }

    pub fn hermitian_part(&self) -> Self {
        LabeledOperator {
            space: self.space.clone(),
            matrix: (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        LabeledOperator {
            space: self.space.clone(),
            matrix: &self.matrix * factor,
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Brings `other` into this operator's subsystem order.
    fn aligned<'a>(&self, other: &'a LabeledOperator) -> Result<std::borrow::Cow<'a, CMatrix>> {
        if other.space == self.space {
            return Ok(std::borrow::Cow::Borrowed(&other.matrix));
        }
        let permuted = other.permute(&self.space.labels())?;
        if permuted.space != self.space {
            return Err(Error::DimensionMismatch(format!(
                "spaces {} and {} differ",
                self.space, other.space
            )));
        }
        Ok(std::borrow::Cow::Owned(permuted.matrix))
    }

    pub fn add(&self, other: &LabeledOperator) -> Result<Self> {
        let m = self.aligned(other)?;
        Ok(LabeledOperator {
            space: self.space.clone(),
            matrix: &self.matrix + m.as_ref(),
        })
    }

    pub fn sub(&self, other: &LabeledOperator) -> Result<Self> {
        let m = self.aligned(other)?;
        Ok(LabeledOperator {
            space: self.space.clone(),
            matrix: &self.matrix - m.as_ref(),
        })
    }

    /// Operator product `self · other` on a common space.
    pub fn mul(&self, other: &LabeledOperator) -> Result<Self> {
        let m = self.aligned(other)?;
        Ok(LabeledOperator {
            space: self.space.clone(),
            matrix: &self.matrix * m.as_ref(),
        })
    }

    /// `Tr(self · other)`.
    pub fn inner_trace(&self, other: &LabeledOperator) -> Result<Complex64> {
        let m = self.aligned(other)?;
        // Tr(AB) = Σ_ij A_ij B_ji
        Ok(self
            .matrix
            .iter()
            .zip(m.transpose().iter())
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Kronecker product; subsystem lists are concatenated.
    pub fn tensor(&self, other: &LabeledOperator) -> Result<Self> {
        let space = self.space.concat(&other.space)?;
        Ok(LabeledOperator {
            space,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    pub fn permute<S: AsRef<str>>(&self, new_order: &[S]) -> Result<Self> {
        let perm = self.space.basis_permutation(new_order)?;
        let space = self.space.select(new_order)?;
        let d = self.dim();
        let matrix = DMatrix::from_fn(d, d, |i, j| self.matrix[(perm[i], perm[j])]);
        Ok(LabeledOperator { space, matrix })
    }

    pub fn partial_trace<S: AsRef<str>>(&self, traced: &[S]) -> Result<Self> {
        let kept = self.space.without(traced)?;
        let traced_space = self.space.select(traced)?;
        let mut order: Vec<&str> = kept.labels();
        order.extend(traced_space.labels());
        let perm = self.space.basis_permutation(&order)?;
        let dk = kept.total_dim();
        let dt = traced_space.total_dim();
        let matrix = DMatrix::from_fn(dk, dk, |a, b| {
            (0..dt)
                .map(|t| self.matrix[(perm[a * dt + t], perm[b * dt + t])])
                .sum()
        });
        Ok(LabeledOperator {
            space: kept,
            matrix,
        })
    }

    /// Transpose on the named subsystems only.
    pub fn partial_transpose<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        let sel = self.space.select(labels)?;
        let rest = self.space.without(labels)?;
        let mut order: Vec<&str> = sel.labels();
        order.extend(rest.labels());
        let perm = self.space.basis_permutation(&order)?;
        let ds = sel.total_dim();
        let dr = rest.total_dim();
        let d = self.dim();
        let mut matrix = DMatrix::zeros(d, d);
        for s in 0..ds {
            for r in 0..dr {
                let a = s * dr + r;
                for s2 in 0..ds {
                    for r2 in 0..dr {
                        let b = s2 * dr + r2;
                        let src_a = s2 * dr + r;
                        let src_b = s * dr + r2;
                        matrix[(perm[a], perm[b])] = self.matrix[(perm[src_a], perm[src_b])];
                    }
                }
            }
        }
        Ok(LabeledOperator {
            space: self.space.clone(),
            matrix,
        })
    }

    /// `self ⊗ I` on the subsystems of `target` not present here, ordered as `target`.
    pub fn embed(&self, target: &SpaceDescriptor) -> Result<Self> {
        for s in self.space.subsystems() {
            if target.dim_of(&s.label)? != s.dim {
                return Err(Error::DimensionMismatch(format!(
                    "subsystem `{}` has dim {} but target has {}",
                    s.label,
                    s.dim,
                    target.dim_of(&s.label)?
                )));
            }
        }
        let extra = target.without(&self.space.labels())?;
        let full = self.tensor(&LabeledOperator::identity(extra))?;
        full.permute(&target.labels())
    }

    /// `G X G†` where `G` acts on a subset of this operator's subsystems.
    pub fn conjugate_by(&self, g: &LabeledOperator) -> Result<Self> {
        let big = g.embed(&self.space)?;
        Ok(LabeledOperator {
            space: self.space.clone(),
            matrix: &big.matrix * &self.matrix * big.matrix.adjoint(),
        })
    }

    /// `−i[G, X]` where `G` acts on a subset of this operator's subsystems.
    pub fn commutator_derivative(&self, g: &LabeledOperator) -> Result<Self> {
        let big = g.embed(&self.space)?;
        let comm = &big.matrix * &self.matrix - &self.matrix * &big.matrix;
        Ok(LabeledOperator {
            space: self.space.clone(),
            matrix: comm * Complex64::new(0.0, -1.0),
        })
    }

    pub fn rename(&self, from: &str, to: &str) -> Result<Self> {
        Ok(LabeledOperator {
            space: self.space.rename(from, to)?,
            matrix: self.matrix.clone(),
        })
    }

    pub fn merge_adjacent<S: AsRef<str>>(&self, labels: &[S], merged: &str) -> Result<Self> {
        Ok(LabeledOperator {
            space: self.space.merge_adjacent(labels, merged)?,
            matrix: self.matrix.clone(),
        })
    }

    pub fn split(&self, label: &str, parts: &[(&str, usize)]) -> Result<Self> {
        Ok(LabeledOperator {
            space: self.space.split(label, parts)?,
            matrix: self.matrix.clone(),
        })
    }
}
