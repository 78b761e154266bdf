//! Dense complex linear algebra over labeled tensor-product spaces.

mod haar;
mod linalg;
mod map;
mod operator;
mod space;
mod state;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use haar::{
    ginibre, haar_isometry, haar_unitary, haar_unitary_on, random_density, random_hermitian,
    random_pure_state,
};
pub use linalg::{
    fidelity, herm_eig, herm_eig_matrix, outer, psd_sqrt, trace_distance, trace_norm_hermitian,
    unitary_exp, HermEig,
};
pub use map::LinearMap;
pub use operator::LabeledOperator;
pub use space::{SpaceDescriptor, Subsystem};
pub use state::{maximally_mixed, DensityCheck, DensityOperator, PureState};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Numerical tolerances shared across the crate.
pub mod tolerance {
    /// Hermiticity (Frobenius norm of the anti-Hermitian part).
    pub const HERM: f64 = 1e-9;
    /// Trace and normalization.
    pub const TRACE: f64 = 1e-9;
    /// Smallest admissible eigenvalue is `-PSD`.
    pub const PSD: f64 = 1e-9;
    /// Eigendecomposition reconstruction and orthonormality.
    pub const EIG: f64 = 1e-10;
}

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Single-qubit Pauli matrices.
pub mod pauli {
    use super::{c, CMatrix};
    use nalgebra::DMatrix;

    pub fn i() -> CMatrix {
        DMatrix::identity(2, 2)
    }

    pub fn x() -> CMatrix {
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn y() -> CMatrix {
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn z() -> CMatrix {
        DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }

    /// `a·I + b·X + c·Y + d·Z`.
    pub fn combination(coeffs: [f64; 4]) -> CMatrix {
        i() * c(coeffs[0], 0.0)
            + x() * c(coeffs[1], 0.0)
            + y() * c(coeffs[2], 0.0)
            + z() * c(coeffs[3], 0.0)
    }
}
