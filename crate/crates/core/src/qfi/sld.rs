use nalgebra::DMatrix;
use num_complex::Complex64;

use super::family::{family_derivative, ParametrizedFamily};
use crate::error::{Error, Result};
use crate::tensor::{herm_eig_matrix, LabeledOperator, PureState};

/// Eigenvalue-sum cutoff for SLD sums.
pub const DEFAULT_CUTOFF: f64 = 1e-10;

/// Symmetric logarithmic derivative and the quantities computed with it.
#[derive(Clone, Debug)]
pub struct Sld {
    pub operator: LabeledOperator,
    /// `Σ 2|dρ_jk|²/(λ_j+λ_k)` over the retained pairs.
    pub qfi: f64,
    /// `‖(Lρ + ρL)/2 − dρ‖_F`.
    pub residual: f64,
    pub cutoff: f64,
}

/// QFI of a family at a point, with the SLD that certifies it.
#[derive(Clone, Debug)]
pub struct QfiResult {
    pub value: f64,
    pub sld: LabeledOperator,
    pub sld_residual: f64,
    pub support_cutoff: f64,
    /// Best input found, for channel QFIs.
    pub optimal_input: Option<PureState>,
}

/// SLD of `ρ` for the derivative `dρ`: `L_jk = 2 dρ_jk / (λ_j + λ_k)` in the
/// eigenbasis of `ρ`, restricted to pairs with `λ_j + λ_k > ε`.
///
/// `ρ` need not be normalized, which lets weighted blocks be handled directly.
pub fn sld(rho: &LabeledOperator, drho: &LabeledOperator, eps: f64) -> Result<Sld> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "SLD cutoff must be positive, got {eps}"
        )));
    }
    let drho = drho.permute(&rho.space().labels())?;
    if drho.space() != rho.space() {
        return Err(Error::DimensionMismatch(
            "ρ and dρ live on different spaces".into(),
        ));
    }
    let eig = herm_eig_matrix(rho.matrix());
    let v = &eig.vectors;
    let d_eig = v.adjoint() * drho.matrix() * v;
    let n = eig.values.len();
    let mut l_eig = DMatrix::<Complex64>::zeros(n, n);
    let mut qfi = 0.0;
    for j in 0..n {
        for k in 0..n {
            let s = eig.values[j] + eig.values[k];
            if s > eps {
                let x = d_eig[(j, k)];
                l_eig[(j, k)] = x * (2.0 / s);
                qfi += 2.0 * x.norm_sqr() / s;
            }
        }
    }
    let l = v * l_eig * v.adjoint();
    let l = (&l + l.adjoint()) * Complex64::new(0.5, 0.0);
    let rm = rho.matrix();
    let lyapunov = (&l * rm + rm * &l) * Complex64::new(0.5, 0.0);
    let residual = (lyapunov - drho.matrix()).norm();
    Ok(Sld {
        operator: LabeledOperator::new(rho.space().clone(), l)?,
        qfi: qfi.max(0.0),
        residual,
        cutoff: eps,
    })
}

/// QFI of the pair `(ρ, dρ)`.
pub fn qfi_of(rho: &LabeledOperator, drho: &LabeledOperator, eps: f64) -> Result<QfiResult> {
    let s = sld(rho, drho, eps)?;
    Ok(QfiResult {
        value: s.qfi,
        sld: s.operator,
        sld_residual: s.residual,
        support_cutoff: eps,
        optimal_input: None,
    })
}

/// QFI of a state family at `θ`.
pub fn qfi_state(f: &ParametrizedFamily, theta: f64, eps: f64) -> Result<QfiResult> {
    let rho = f.evaluate(theta)?;
    let drho = family_derivative(f, theta)?;
    qfi_of(&rho, &drho, eps)
}

/// `4(⟨H²⟩ − ⟨H⟩²)`, the QFI of `e^{−iθH}|ψ⟩`.
pub fn pure_state_qfi(psi: &PureState, generator: &LabeledOperator) -> Result<f64> {
    let hpsi = psi.apply(generator)?;
    let a = psi.amplitudes();
    let mean = a.dotc(&hpsi).re;
    let second = hpsi.dotc(&hpsi).re;
    Ok((4.0 * (second - mean * mean)).max(0.0))
}
