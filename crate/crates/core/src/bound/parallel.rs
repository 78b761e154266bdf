use num_rational::Ratio;
use serde::Serialize;

use crate::comb::{
    link_operators, state_choi, ChoiOperator, CombFamily, LinkedComb, PortSpec, Role,
};
use crate::error::{Error, Result};
use crate::qfi::{isometric_channel_qfi, qfi_channel, MultistartConfig, DEFAULT_CUTOFF};
use crate::tensor::{DensityOperator, LinearMap, PureState};

/// Label of the reference half of the maximally entangled state fed into `port`.
pub fn reference_label(port: &str) -> String {
    format!("{port}_ref")
}

/// `∏_{k≥2} d_k^(in)`, the total input dimension of the later phases.
pub fn later_input_dim(ports: &PortSpec) -> u64 {
    ports
        .with_role(Role::In)
        .iter()
        .filter(|p| p.phase > 1)
        .map(|p| p.dim as u64)
        .product()
}

/// `(∏_{k≥2} d_k^(in))²`.
pub fn dim_factor(ports: &PortSpec) -> u64 {
    later_input_dim(ports).pow(2)
}

/// `(∏_{k≥2} d_k^(in))^{−2}`, the chance that every teleportation succeeds
/// without correction.
pub fn success_probability(ports: &PortSpec) -> Ratio<u64> {
    Ratio::new(1, dim_factor(ports))
}

/// `Φ⁺ ⊗ ⋯ ⊗ Φ⁺` over every input port of phases `2..K` and its reference,
/// or `None` for a single-phase comb.
pub fn parallel_partner(ports: &PortSpec) -> Result<Option<PureState>> {
    let mut state: Option<PureState> = None;
    for p in ports
        .with_role(Role::In)
        .into_iter()
        .filter(|p| p.phase > 1)
    {
        let r = reference_label(&p.label);
        if ports.get(&r).is_some() {
            return Err(Error::DuplicateLabel(r));
        }
        let phi = PureState::max_entangled(&p.label, &r, p.dim)?;
        state = Some(match state {
            None => phi,
            Some(s) => s.tensor(&phi)?,
        });
    }
    Ok(state)
}

/// `Φ_{N∗Ψ₁} = N ∗ (Ψ₁ ⊗ Φ⁺₂ ⊗ ⋯ ⊗ Φ⁺_K)`.
///
/// `psi1` covers the first-phase inputs; its other subsystems are kept as
/// a reference.
pub fn choi_extended_state(n: &ChoiOperator, psi1: &PureState) -> Result<DensityOperator> {
    let ports = n.ports();
    let partner = parallel_partner(ports)?;
    for p in ports.in_phase(1, Role::In) {
        if psi1.space().dim_of(&p.label)? != p.dim {
            return Err(Error::DimensionMismatch(format!("input `{}`", p.label)));
        }
    }
    for s in psi1.space().subsystems() {
        match ports.get(&s.label) {
            Some(p) if p.role == Role::In && p.phase == 1 => {}
            Some(_) => {
                return Err(Error::InvalidPorts(format!(
                    "`{}` is not a first-phase input",
                    s.label
                )))
            }
            None => {
                let clash = partner
                    .as_ref()
                    .is_some_and(|ph| ph.space().contains(&s.label));
                if clash {
                    return Err(Error::DuplicateLabel(s.label.clone()));
                }
            }
        }
    }
    let mut op = n.op().clone();
    if let Some(phi) = partner {
        op = link_operators(&op, &phi.projector())?;
    }
    DensityOperator::new(link_operators(&op, &psi1.projector())?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParallelMethod {
    /// Exact dual form for isometric families.
    IsometricOracle,
    /// Multistart optimization over inputs; a lower estimate.
    Multistart,
}

/// `max_{Ψ₁} F_Q[Φ_{N_θ∗Ψ₁}]` and how it was obtained.
#[derive(Clone, Debug)]
pub struct ParallelQfi {
    pub value: f64,
    pub method: ParallelMethod,
    /// Best input on the first-phase inputs ⊗ `R`, when optimized.
    pub optimal_input: Option<PureState>,
    pub starts: usize,
    pub agreeing_starts: usize,
    pub flagged: bool,
}

/// The QFI of the phase-parallel scheme: the channel QFI of
/// `N_θ ∗ (Φ⁺₂ ⊗ ⋯ ⊗ Φ⁺_K)`.
///
/// Families with a pure dilation use the exact isometric formula; all others
/// are optimized from `cfg.starts` random starts plus `candidates`.
pub fn phase_parallel_qfi<F: CombFamily + ?Sized>(
    family: &F,
    theta: f64,
    cfg: &MultistartConfig,
    candidates: &[PureState],
) -> Result<ParallelQfi> {
    let partner = parallel_partner(family.ports())?;
    if let Some((w, dw)) = family.pure_dilation(theta)? {
        let (v, dv) = match &partner {
            Some(phi) => {
                let feed = LinearMap::from_state(phi);
                (feed.then(&w)?, feed.then(&dw)?)
            }
            None => (w, dw),
        };
        return Ok(ParallelQfi {
            value: isometric_channel_qfi(v.matrix(), dv.matrix()),
            method: ParallelMethod::IsometricOracle,
            optimal_input: None,
            starts: 0,
            agreeing_starts: 0,
            flagged: false,
        });
    }
    let r = match partner {
        Some(phi) => {
            let linked = LinkedComb::new(family, state_choi(&phi.projector()))?;
            qfi_channel(&linked, theta, cfg, candidates, DEFAULT_CUTOFF)?
        }
        None => qfi_channel(family, theta, cfg, candidates, DEFAULT_CUTOFF)?,
    };
    Ok(ParallelQfi {
        value: r.result.value,
        method: ParallelMethod::Multistart,
        optimal_input: r.result.optimal_input,
        starts: r.start_values.len(),
        agreeing_starts: r.agreeing_starts,
        flagged: r.flagged,
    })
}
