use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::parallel::{dim_factor, phase_parallel_qfi, ParallelMethod};
use crate::comb::{
    compose_sensor, compose_sensor_derivative, random_sensor, ChoiOperator, CombFamily, Role,
    SensorComb,
};
use crate::error::{Error, Result};
use crate::qfi::{qfi_of, MultistartConfig, DEFAULT_CUTOFF};
use crate::tensor::{LabeledOperator, PureState};

/// Slack allowed when comparing sensor QFIs with the bound.
pub const BOUND_SLACK: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub dim_factor: u64,
    pub parallel_qfi: f64,
    pub bound: f64,
    pub method: ParallelMethod,
    #[serde(skip)]
    pub optimal_input: Option<PureState>,
    pub sampled_sensor_qfis: Vec<f64>,
    /// Sensors whose QFI exceeds `bound + 1e-8`.
    pub violations: usize,
    /// The parallel QFI came from an optimizer whose starts disagreed, so
    /// the bound is heuristic.
    pub flagged: bool,
}

/// `F_Q[N_θ ∗ S]`.
pub fn sensor_qfi(n: &ChoiOperator, dn: &LabeledOperator, s: &SensorComb) -> Result<f64> {
    let rho = compose_sensor(n, s)?;
    let drho = compose_sensor_derivative(dn, s)?;
    Ok(qfi_of(rho.as_operator(), &drho, DEFAULT_CUTOFF)?.value)
}

fn sensor_qfis(n: &ChoiOperator, dn: &LabeledOperator, sensors: &[SensorComb]) -> Result<Vec<f64>> {
    sensors.par_iter().map(|s| sensor_qfi(n, dn, s)).collect()
}

/// Upper bound `(∏_{k≥2} d_k^(in))² · max_{Ψ₁} F_Q[Φ_{N_θ∗Ψ₁}]` on the QFI of
/// the comb, checked against the given sensors.
pub fn theorem1_bound<F: CombFamily + ?Sized>(
    family: &F,
    theta: f64,
    cfg: &MultistartConfig,
    candidates: &[PureState],
    sensors: &[SensorComb],
) -> Result<BoundReport> {
    let factor = dim_factor(family.ports());
    let parallel = phase_parallel_qfi(family, theta, cfg, candidates)?;
    let bound = factor as f64 * parallel.value;
    let n = family.choi(theta)?;
    let dn = family.choi_derivative(theta)?;
    let qfis = sensor_qfis(&n, &dn, sensors)?;
    let violations = qfis.iter().filter(|&&q| q > bound + BOUND_SLACK).count();
    Ok(BoundReport {
        dim_factor: factor,
        parallel_qfi: parallel.value,
        bound,
        method: parallel.method,
        optimal_input: parallel.optimal_input,
        sampled_sensor_qfis: qfis,
        violations,
        flagged: parallel.flagged,
    })
}

/// Random sensors, drawn in order from `rng`.
pub fn sample_sensors<F: CombFamily + ?Sized, R: Rng + ?Sized>(
    family: &F,
    n_samples: usize,
    ancilla_dim: usize,
    rng: &mut R,
) -> Result<Vec<SensorComb>> {
    (0..n_samples)
        .map(|_| random_sensor(family.ports(), ancilla_dim, rng))
        .collect()
}

/// QFIs of `N_θ ∗ S` for `n_samples` random sensors.
pub fn sensor_sweep<F: CombFamily + ?Sized, R: Rng + ?Sized>(
    family: &F,
    theta: f64,
    n_samples: usize,
    ancilla_dim: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument(
            "sensor sweep without samples".into(),
        ));
    }
    let sensors = sample_sensors(family, n_samples, ancilla_dim, rng)?;
    sensor_qfis(
        &family.choi(theta)?,
        &family.choi_derivative(theta)?,
        &sensors,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct MemoryAdvantage {
    pub best_sensor_qfi: f64,
    pub parallel_qfi: f64,
    /// `None` when the parallel QFI vanishes.
    pub ratio: Option<f64>,
    /// `d^{2(K−1)}`.
    pub ceiling: u64,
    /// `best ≤ ceiling · parallel + 1e-8`.
    pub within_ceiling: bool,
    /// Set for a vanishing parallel QFI with informative sensors, or a
    /// disagreeing optimizer.
    pub flagged: bool,
}

/// Best sensor QFI over the phase-parallel QFI, for combs whose phases all
/// take inputs of the same dimension.
pub fn memory_advantage<F: CombFamily + ?Sized>(
    family: &F,
    theta: f64,
    cfg: &MultistartConfig,
    candidates: &[PureState],
    sensors: &[SensorComb],
) -> Result<MemoryAdvantage> {
    let ports = family.ports();
    let dims: Vec<usize> = (1..=ports.num_phases())
        .map(|k| ports.dim_in_phase(k, Role::In))
        .collect();
    if dims.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::InvalidPorts(format!(
            "phase input dimensions {dims:?} differ"
        )));
    }
    if sensors.is_empty() {
        return Err(Error::InvalidArgument("no sensors to compare".into()));
    }
    let report = theorem1_bound(family, theta, cfg, candidates, sensors)?;
    let best = report
        .sampled_sensor_qfis
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    let parallel = report.parallel_qfi;
    let ratio = (parallel > 0.0).then(|| best / parallel);
    Ok(MemoryAdvantage {
        best_sensor_qfi: best,
        parallel_qfi: parallel,
        ratio,
        ceiling: report.dim_factor,
        within_ceiling: best <= report.bound + BOUND_SLACK,
        flagged: report.flagged || (ratio.is_none() && best > 0.0),
    })
}
