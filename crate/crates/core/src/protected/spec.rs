use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{herm_eig_matrix, tolerance, CMatrix};

/// Shape of a shield/key comb: `K − 1` intermediate phases of dimensions
/// `d_{B_1}, …, d_{B_{K−1}}` with product `D`, a qubit input and a
/// maximally mixed ancilla of dimension `D/2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtectedCombSpec {
    phase_dims: Vec<usize>,
    #[serde(skip)]
    generator: CMatrix,
}

/// Every constraint a candidate spec violates; empty when valid.
pub fn spec_violations(phase_dims: &[usize], generator: &CMatrix) -> Vec<String> {
    let mut out = Vec::new();
    if phase_dims.is_empty() {
        out.push("at least one intermediate phase dimension is required".to_string());
    }
    if phase_dims.contains(&0) {
        out.push("phase dimensions must be positive".to_string());
    }
    let d: usize = phase_dims.iter().product();
    if !phase_dims.is_empty() && !phase_dims.contains(&0) && !d.is_multiple_of(2) {
        out.push(format!("D = {d} must be even"));
    }
    if generator.shape() != (2, 2) {
        out.push(format!(
            "generator must be 2x2, got {}x{}",
            generator.nrows(),
            generator.ncols()
        ));
    } else {
        let residual = (generator - generator.adjoint()).norm();
        if residual > tolerance::HERM {
            out.push(format!(
                "generator is not Hermitian (residual {residual:.3e})"
            ));
        }
    }
    out
}

impl ProtectedCombSpec {
    pub fn new(phase_dims: Vec<usize>, generator: CMatrix) -> Result<Self> {
        let violations = spec_violations(&phase_dims, &generator);
        if !violations.is_empty() {
            return Err(Error::InvalidArgument(violations.join("; ")));
        }
        Ok(ProtectedCombSpec {
            phase_dims,
            generator,
        })
    }

    /// Smallest comb with total intermediate dimension `D`: one phase of
    /// dimension 2 for `D = 2`, otherwise qubit phases when `D` is a power
    /// of two and a single phase of dimension `D` else.
    pub fn with_total_dim(d: usize, generator: CMatrix) -> Result<Self> {
        let dims = if d >= 2 && d.is_power_of_two() {
            vec![2; d.trailing_zeros() as usize]
        } else {
            vec![d]
        };
        Self::new(dims, generator)
    }

    pub fn phase_dims(&self) -> &[usize] {
        &self.phase_dims
    }

    pub fn generator(&self) -> &CMatrix {
        &self.generator
    }

    /// Number of phases `K`.
    pub fn num_phases(&self) -> usize {
        self.phase_dims.len() + 1
    }

    /// `D = ∏ d_{B_i}`.
    pub fn total_dim(&self) -> usize {
        self.phase_dims.iter().product()
    }

    pub fn ancilla_dim(&self) -> usize {
        self.total_dim() / 2
    }

    /// `(λ_max(H) − λ_min(H))²`, the largest QFI of `V_θ ⊗ I` on pure inputs.
    pub fn optimal_qfi(&self) -> f64 {
        let eig = herm_eig_matrix(&self.generator);
        (eig.max() - eig.min()).powi(2)
    }
}
