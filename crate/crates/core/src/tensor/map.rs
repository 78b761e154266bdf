use nalgebra::DMatrix;
use num_complex::Complex64;

use super::operator::LabeledOperator;
use super::space::SpaceDescriptor;
use super::state::PureState;
use super::CMatrix;
use crate::error::{Error, Result};

/// A linear map between labeled spaces, stored as an `out × in` matrix.
///
/// Used for Stinespring dilations: pure states are maps from the trivial
/// space, isometries carry environment factors in their output.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    input: SpaceDescriptor,
    output: SpaceDescriptor,
    matrix: CMatrix,
}

impl LinearMap {
    pub fn new(input: SpaceDescriptor, output: SpaceDescriptor, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != output.total_dim() || matrix.ncols() != input.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} for map {input} -> {output}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(LinearMap {
            input,
            output,
            matrix,
        })
    }

    pub fn identity(space: SpaceDescriptor) -> Self {
        let d = space.total_dim();
        LinearMap {
            input: space.clone(),
            output: space,
            matrix: DMatrix::identity(d, d),
        }
    }

    /// Identity between two equally sized spaces with different labels.
    pub fn wire(input: SpaceDescriptor, output: SpaceDescriptor) -> Result<Self> {
        let d = input.total_dim();
        Self::new(input, output, DMatrix::identity(d, d))
    }

    pub fn from_state(state: &PureState) -> Self {
        let v = state.amplitudes();
        LinearMap {
            input: SpaceDescriptor::empty(),
            output: state.space().clone(),
            matrix: DMatrix::from_column_slice(v.len(), 1, v.as_slice()),
        }
    }

    pub fn input(&self) -> &SpaceDescriptor {
        &self.input
    }

    pub fn output(&self) -> &SpaceDescriptor {
        &self.output
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn tensor(&self, other: &LinearMap) -> Result<Self> {
        Ok(LinearMap {
            input: self.input.concat(&other.input)?,
            output: self.output.concat(&other.output)?,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    pub fn permute_output<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        let perm = self.output.basis_permutation(order)?;
        let matrix = DMatrix::from_fn(perm.len(), self.matrix.ncols(), |i, j| {
            self.matrix[(perm[i], j)]
        });
        Ok(LinearMap {
            input: self.input.clone(),
            output: self.output.select(order)?,
            matrix,
        })
    }

    pub fn permute_input<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        let perm = self.input.basis_permutation(order)?;
        let matrix = DMatrix::from_fn(self.matrix.nrows(), perm.len(), |i, j| {
            self.matrix[(i, perm[j])]
        });
        Ok(LinearMap {
            input: self.input.select(order)?,
            output: self.output.clone(),
            matrix,
        })
    }

    pub fn rename_output(&self, from: &str, to: &str) -> Result<Self> {
        Ok(LinearMap {
            input: self.input.clone(),
            output: self.output.rename(from, to)?,
            matrix: self.matrix.clone(),
        })
    }

    /// Right-multiplies by an operator acting on part of the input.
    pub fn precompose(&self, op: &LabeledOperator) -> Result<Self> {
        let big = op.embed(&self.input)?;
        Ok(LinearMap {
            input: self.input.clone(),
            output: self.output.clone(),
            matrix: &self.matrix * big.matrix(),
        })
    }

    /// Sequential composition: feeds the outputs of `self` whose labels
    /// appear among `next`'s inputs into `next`.
    ///
    /// Inputs of `next` not produced by `self` become extra inputs of the
    /// result (after `self`'s inputs); outputs of `self` not consumed pass
    /// through (before `next`'s outputs).
    pub fn then(&self, next: &LinearMap) -> Result<Self> {
        for s in next.input.subsystems() {
            if let Some(p) = self.output.position(&s.label) {
                if self.output.subsystems()[p].dim != s.dim {
                    return Err(Error::DimensionMismatch(format!(
                        "wire `{}` has dim {} on one side and {} on the other",
                        s.label,
                        self.output.subsystems()[p].dim,
                        s.dim
                    )));
                }
            }
        }
        let new_labels: Vec<&str> = next
            .input
            .labels()
            .into_iter()
            .filter(|l| !self.output.contains(l))
            .collect();
        let new_inputs = next.input.select(&new_labels)?;
        let pass_labels: Vec<&str> = self
            .output
            .labels()
            .into_iter()
            .filter(|l| !next.input.contains(l))
            .collect();
        let pass = self.output.select(&pass_labels)?;

        let widened = self.tensor(&LinearMap::identity(new_inputs))?;
        let mut order: Vec<&str> = pass.labels();
        order.extend(next.input.labels());
        let widened = widened.permute_output(&order)?;
        let lifted = LinearMap::identity(pass).tensor(next)?;
        Ok(LinearMap {
            input: widened.input,
            output: lifted.output,
            matrix: &lifted.matrix * &widened.matrix,
        })
    }

    /// Choi operator `Tr_traced |W⟩⟩⟨⟨W|` on `input ⊗ (output \ traced)`,
    /// with `|W⟩⟩ = Σ_i |i⟩ ⊗ W|i⟩`.
    pub fn choi<S: AsRef<str>>(&self, traced: &[S]) -> Result<LabeledOperator> {
        let kept = self.output.without(traced)?;
        let traced_space = self.output.select(traced)?;
        let mut order: Vec<&str> = kept.labels();
        order.extend(traced_space.labels());
        let w = self.permute_output(&order)?;
        let (di, dk, dt) = (
            self.input.total_dim(),
            kept.total_dim(),
            traced_space.total_dim(),
        );
        let n = di * dk;
        // column t of `vecs` is |W_t⟩⟩
        let vecs = DMatrix::from_fn(n, dt, |row, t| {
            let (i, k) = (row / dk, row % dk);
            w.matrix[(k * dt + t, i)]
        });
        let space = self.input.concat(&kept)?;
        LabeledOperator::new(space, &vecs * vecs.adjoint())
    }

    /// Output operator `Tr_traced W W†` of a map with trivial input.
    pub fn output_state<S: AsRef<str>>(&self, traced: &[S]) -> Result<LabeledOperator> {
        if self.input.total_dim() != 1 {
            return Err(Error::InvalidArgument("map still has open inputs".into()));
        }
        // the input space is trivial, so the Choi operator is the output state
        self.choi(traced)
    }

    /// `(W ⊗ I) |ψ⟩` where `ψ` covers the inputs of `W` plus extra subsystems.
    pub fn apply_to_state(&self, state: &PureState) -> Result<LinearMap> {
        LinearMap::from_state(state).then(self)
    }

    /// `W X W†`, with `W` acting on its input subsystems of `X` and the
    /// identity elsewhere; the untouched subsystems follow the outputs.
    pub fn conjugate(&self, x: &LabeledOperator) -> Result<LabeledOperator> {
        let input_labels = self.input.labels();
        if x.space().select(&input_labels)? != self.input {
            return Err(Error::DimensionMismatch(format!(
                "map on {} applied to {}",
                self.input,
                x.space()
            )));
        }
        let rest = x.space().without(&input_labels)?;
        let full = self.tensor(&LinearMap::identity(rest))?;
        let x = x.permute(&full.input.labels())?;
        let m = &full.matrix;
        LabeledOperator::new(full.output.clone(), m * x.matrix() * m.adjoint())
    }

    /// Scales the matrix.
    pub fn scale(&self, factor: Complex64) -> Self {
        LinearMap {
            input: self.input.clone(),
            output: self.output.clone(),
            matrix: &self.matrix * factor,
        }
    }
}
