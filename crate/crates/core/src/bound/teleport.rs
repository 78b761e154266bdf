use nalgebra::DVector;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::Serialize;

use super::parallel::{parallel_partner, success_probability};
use crate::comb::{compose_sensor, link_operators, ChoiOperator, Role, SensorComb};
use crate::error::{Error, Result};
use crate::tensor::{fidelity, CVector, DensityOperator, LabeledOperator, PureState};

#[derive(Clone, Debug, Serialize)]
pub struct TeleportReport {
    pub trials: usize,
    pub successes: usize,
    pub p_empirical: f64,
    /// `(∏_{k≥2} d_k^(in))^{−2}`.
    pub p_theory: f64,
    /// Probability of the all-`Φ⁺` outcome in the simulated state.
    pub p_state: f64,
    /// Binomial standard error at `p_theory`.
    pub sigma: f64,
    pub within_three_sigma: bool,
    /// Fidelity of the conditional state with `N ∗ S`; `None` without successes.
    pub conditional_fidelity: Option<f64>,
    #[serde(skip)]
    pub conditional_state: Option<DensityOperator>,
}

/// `(X^a Z^b ⊗ I)|Φ⁺⟩` on `d ⊗ d`; `(0, 0)` is `Φ⁺` itself.
fn bell_vector(d: usize, a: usize, b: usize) -> CVector {
    let mut v = DVector::zeros(d * d);
    let norm = 1.0 / (d as f64).sqrt();
    for j in 0..d {
        let phase = 2.0 * std::f64::consts::PI * (b * j) as f64 / d as f64;
        v[((j + a) % d) * d + j] = Complex64::from_polar(norm, phase);
    }
    v
}

/// Simulates the postselected protocol: the comb receives the sensor's
/// first-phase output and halves of `Φ⁺` in its later inputs, the sensor
/// runs on the comb's outputs without feeding back, and each later input
/// the sensor emits is Bell-measured against the matching `Φ⁺` half.
///
/// A trial succeeds when every Bell outcome is `Φ⁺`; the conditional state
/// is then exactly `N ∗ S`.
pub fn simulate_teleport_trick<R: Rng + ?Sized>(
    n: &ChoiOperator,
    sensor: &SensorComb,
    n_trials: usize,
    rng: &mut R,
) -> Result<TeleportReport> {
    if n_trials == 0 {
        return Err(Error::InvalidArgument("no trials".into()));
    }
    let direct = compose_sensor(n, sensor)?;
    let ports = n.ports();
    let p_theory = {
        let r = success_probability(ports);
        *r.numer() as f64 / *r.denom() as f64
    };
    let Some(partner) = parallel_partner(ports)? else {
        return Ok(TeleportReport {
            trials: n_trials,
            successes: n_trials,
            p_empirical: 1.0,
            p_theory,
            p_state: 1.0,
            sigma: 0.0,
            within_three_sigma: true,
            conditional_fidelity: Some(1.0),
            conditional_state: Some(direct),
        });
    };

    let opened = link_operators(n.op(), &partner.projector())?;
    let pre = link_operators(&opened, sensor.choi().op())?;

    let pairs: Vec<(String, String, usize)> = ports
        .with_role(Role::In)
        .into_iter()
        .filter(|p| p.phase > 1)
        .map(|p| {
            (
                p.label.clone(),
                super::parallel::reference_label(&p.label),
                p.dim,
            )
        })
        .collect();
    let mut pair_labels = Vec::new();
    for (a, b, _) in &pairs {
        pair_labels.push(a.clone());
        pair_labels.push(b.clone());
    }
    let rest: Vec<String> = pre
        .space()
        .labels()
        .into_iter()
        .filter(|l| !pair_labels.iter().any(|p| p == l))
        .map(String::from)
        .collect();
    let sigma_pairs = pre.partial_trace(&rest)?.permute(&pair_labels)?;

    // outcome index runs over (a, b) per pair, big-endian across pairs
    let mut outcomes: Vec<CVector> = vec![DVector::from_element(1, Complex64::new(1.0, 0.0))];
    for (_, _, d) in &pairs {
        let mut next = Vec::with_capacity(outcomes.len() * d * d);
        for v in &outcomes {
            for a in 0..*d {
                for b in 0..*d {
                    next.push(v.kronecker(&bell_vector(*d, a, b)));
                }
            }
        }
        outcomes = next;
    }
    let probs: Vec<f64> = outcomes
        .iter()
        .map(|v| v.dotc(&(sigma_pairs.matrix() * v)).re.max(0.0))
        .collect();
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| Error::InvalidArgument(format!("outcome distribution: {e}")))?;
    let successes = (0..n_trials).filter(|_| dist.sample(rng) == 0).count();

    let success_vec = outcomes.swap_remove(0);
    let success_space = sigma_pairs.space().clone();
    let projector = PureState::new(success_space, success_vec)?.projector();
    let unnormalized = link_operators(&pre, &projector)?;
    let p_state = unnormalized.trace().re;
    let (conditional_fidelity, conditional_state) = if successes > 0 && p_state > 0.0 {
        let state: LabeledOperator = unnormalized.scale_real(1.0 / p_state);
        let state = DensityOperator::new(state)?;
        (
            Some(fidelity(state.as_operator(), direct.as_operator())?),
            Some(state),
        )
    } else {
        (None, None)
    };
    let p_empirical = successes as f64 / n_trials as f64;
    let sigma = (p_theory * (1.0 - p_theory) / n_trials as f64).sqrt();
    Ok(TeleportReport {
        trials: n_trials,
        successes,
        p_empirical,
        p_theory,
        p_state,
        sigma,
        within_three_sigma: (p_empirical - p_theory).abs() <= 3.0 * sigma,
        conditional_fidelity,
        conditional_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_vectors_are_orthonormal() {
        for d in [2, 3] {
            let vs: Vec<CVector> = (0..d * d).map(|i| bell_vector(d, i / d, i % d)).collect();
            for i in 0..vs.len() {
                for j in 0..vs.len() {
                    let ip = vs[i].dotc(&vs[j]).norm();
                    assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
                }
            }
        }
    }
}
