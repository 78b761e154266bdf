use nalgebra::DVector;
use serde::Serialize;

use super::comb::{A_IN, A_IN_REF};
use super::output::{
    block_qfi_raw, protected_block_qfi, protected_output_family, rotated_input, twisted_state,
};
use super::spec::ProtectedCombSpec;
use crate::error::Result;
use crate::qfi::{
    maximize_over_states, pure_state_qfi, qfi_state, sld, MultistartConfig, DEFAULT_CUTOFF,
};
use crate::tensor::{c, herm_eig_matrix, CVector, LabeledOperator, PureState, SpaceDescriptor};

/// Slack used when comparing a QFI against a bound.
pub const PROTECTED_SLACK: f64 = 1e-8;

/// The averaged output's QFI for one input against its two upper bounds.
#[derive(Clone, Debug, Serialize)]
pub struct ParallelBoundCheck {
    pub theta: f64,
    /// Dense SLD QFI of the full output.
    pub lhs: f64,
    /// Same quantity summed over the `Φ⁺` and `π⁻` blocks.
    pub lhs_blocks: f64,
    /// `F[Ψ'_θ]/D² + 3F[π⁻_θ]/D²`.
    pub rhs_mixture: f64,
    /// `4 (λ_max − λ_min)²/D²`.
    pub rhs_spread: f64,
    pub holds_mixture: bool,
    pub holds_spread: bool,
}

pub fn verify_parallel_bound(
    spec: &ProtectedCombSpec,
    psi: &PureState,
    theta: f64,
) -> Result<ParallelBoundCheck> {
    let d2 = (spec.total_dim() * spec.total_dim()) as f64;
    let fam = protected_output_family(spec, psi)?;
    let lhs = qfi_state(&fam, theta, DEFAULT_CUTOFF)?.value;
    let lhs_blocks = protected_block_qfi(spec, psi)?;

    let rot = rotated_input(spec, psi, theta)?;
    let g = LabeledOperator::new(
        SpaceDescriptor::single(super::comb::KEY_OUT1, 2)?,
        spec.generator().clone(),
    )?;
    let f_pure = pure_state_qfi(&rot, &g)?;
    let twisted = twisted_state(spec, psi, theta)?;
    let d_twisted = rot
        .projector()
        .commutator_derivative(&g)?
        .scale_real(-1.0 / 3.0);
    let f_twisted = sld(&twisted, &d_twisted, DEFAULT_CUTOFF)?.qfi;

    let rhs_mixture = (f_pure + 3.0 * f_twisted) / d2;
    let rhs_spread = 4.0 * spec.optimal_qfi() / d2;
    Ok(ParallelBoundCheck {
        theta,
        lhs,
        lhs_blocks,
        rhs_mixture,
        rhs_spread,
        holds_mixture: lhs <= rhs_mixture + PROTECTED_SLACK,
        holds_spread: lhs <= rhs_spread + PROTECTED_SLACK,
    })
}

/// How far the shield/key comb separates sequential from parallel use.
#[derive(Clone, Debug, Serialize)]
pub struct TightnessReport {
    pub total_dim: usize,
    pub num_phases: usize,
    /// `(λ_max − λ_min)²`, reached by sending the probe straight through.
    pub optimal_qfi: f64,
    /// Best QFI of the averaged output over inputs `ψ′`.
    pub parallel_qfi: f64,
    /// `4 optimal_qfi / D²`.
    pub parallel_cap: f64,
    /// `optimal_qfi / parallel_qfi`; `None` when the parallel QFI vanishes.
    pub ratio: Option<f64>,
    /// `D²/4`.
    pub ratio_floor: f64,
    /// `optimal_qfi ≥ (D²/4) parallel_qfi − slack`.
    pub holds: bool,
    /// `parallel_qfi` is within 10% of `parallel_cap`.
    pub near_cap: bool,
    #[serde(skip)]
    pub best_input: Option<PureState>,
    pub starts: usize,
    pub agreeing_starts: usize,
    pub flagged: bool,
}

/// Maximizes the averaged output's QFI over inputs and compares it with the
/// QFI of the probe itself.
pub fn tightness_report(
    spec: &ProtectedCombSpec,
    cfg: &MultistartConfig,
) -> Result<TightnessReport> {
    let d = spec.total_dim();
    let d2 = (d * d) as f64;
    let h = spec.generator().clone();
    let eig = herm_eig_matrix(&h);
    let (top, bottom) = (
        eig.vectors.column(0),
        eig.vectors.column(eig.values.len() - 1),
    );
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // (|e_max⟩ + |e_min⟩)/√2 ⊗ |0⟩ and Φ⁺
    let spread_probe: CVector = DVector::from_fn(4, |i, _| {
        if i % 2 == 0 {
            (top[i / 2] + bottom[i / 2]) * s
        } else {
            c(0.0, 0.0)
        }
    });
    let bell = DVector::from_fn(4, |i, _| {
        if i == 0 || i == 3 {
            c(s, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });

    let f = |v: &CVector| block_qfi_raw(&h, d, v).unwrap_or(f64::NEG_INFINITY);
    let out = maximize_over_states(f, 4, &[spread_probe, bell], cfg);
    let optimal_qfi = spec.optimal_qfi();
    let parallel_qfi = out.best_value.max(0.0);
    let ratio_floor = d2 / 4.0;
    let best_input = PureState::normalized(
        SpaceDescriptor::new([(A_IN, 2), (A_IN_REF, 2)])?,
        out.best_state,
    )?;
    Ok(TightnessReport {
        total_dim: d,
        num_phases: spec.num_phases(),
        optimal_qfi,
        parallel_qfi,
        parallel_cap: optimal_qfi / ratio_floor,
        ratio: (parallel_qfi > 0.0).then(|| optimal_qfi / parallel_qfi),
        ratio_floor,
        holds: optimal_qfi >= ratio_floor * parallel_qfi - PROTECTED_SLACK,
        near_cap: parallel_qfi >= 0.9 * optimal_qfi / ratio_floor,
        best_input: Some(best_input),
        starts: out.start_values.len(),
        agreeing_starts: out.agreeing_starts,
        flagged: out.flagged,
    })
}
