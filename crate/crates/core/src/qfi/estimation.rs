use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use super::family::ParametrizedFamily;
use crate::error::{Error, Result};
use crate::tensor::{herm_eig_matrix, tolerance, LabeledOperator};

/// `1/√(ν F_Q)`, the Cramér–Rao floor for `ν` repetitions.
pub fn cramer_rao(f_q: f64, nu: u64) -> Result<f64> {
    if nu == 0 {
        return Err(Error::InvalidArgument("zero repetitions".into()));
    }
    if !(f_q > 0.0) {
        return Err(Error::UnboundedError);
    }
    Ok(1.0 / (nu as f64 * f_q).sqrt())
}

/// A measurement: positive effects summing to the identity.
#[derive(Clone, Debug)]
pub struct Povm {
    effects: Vec<LabeledOperator>,
}

impl Povm {
    pub fn new(effects: Vec<LabeledOperator>) -> Result<Self> {
        let first = effects
            .first()
            .ok_or_else(|| Error::InvalidArgument("POVM without effects".into()))?;
        let space = first.space().clone();
        let mut total = LabeledOperator::zeros(space.clone());
        for e in &effects {
            if e.hermitian_residual() > tolerance::HERM {
                return Err(Error::NotHermitian {
                    residual: e.hermitian_residual(),
                });
            }
            if herm_eig_matrix(e.matrix()).min() < -tolerance::PSD {
                return Err(Error::InvalidArgument("POVM effect is not positive".into()));
            }
            total = total.add(e)?;
        }
        let defect = total
            .sub(&LabeledOperator::identity(space))?
            .frobenius_norm();
        if defect > tolerance::TRACE {
            return Err(Error::InvalidArgument(format!(
                "POVM effects sum to the identity only up to {defect:.3e}"
            )));
        }
        Ok(Povm { effects })
    }

    /// Projective measurement in the eigenbasis of a Hermitian observable.
    pub fn from_observable(observable: &LabeledOperator) -> Result<Self> {
        let eig = crate::tensor::herm_eig(observable)?;
        let d = eig.values.len();
        let effects = (0..d)
            .map(|k| {
                let v = eig.vectors.column(k);
                LabeledOperator::new(observable.space().clone(), v * v.adjoint())
            })
            .collect::<Result<Vec<_>>>()?;
        Povm::new(effects)
    }

    pub fn effects(&self) -> &[LabeledOperator] {
        &self.effects
    }

    /// Born probabilities, clipped at zero and renormalized.
    pub fn probabilities(&self, rho: &LabeledOperator) -> Result<Vec<f64>> {
        let mut p = self
            .effects
            .iter()
            .map(|e| Ok(e.inner_trace(rho)?.re.max(0.0)))
            .collect::<Result<Vec<f64>>>()?;
        let total: f64 = p.iter().sum();
        if total > 0.0 {
            p.iter_mut().for_each(|x| *x /= total);
        }
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimationSettings {
    pub grid_points: usize,
    /// Width of the grid window, centered at the true value.
    pub window: f64,
    pub trials: usize,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        EstimationSettings {
            grid_points: 2001,
            window: std::f64::consts::PI,
            trials: 100,
        }
    }
}

/// Repeated grid maximum-likelihood estimation.
#[derive(Clone, Debug, Serialize)]
pub struct EstimationRun {
    pub nu: u64,
    pub theta_true: f64,
    pub estimator: &'static str,
    pub estimates: Vec<f64>,
    pub rmse: f64,
    pub bias: f64,
    /// Trials where every grid point had the same likelihood.
    pub flat_trials: usize,
    pub settings: EstimationSettings,
}

fn multinomial<R: Rng + ?Sized>(nu: u64, p: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0; p.len()];
    let (mut left, mut mass) = (nu, 1.0);
    for (k, &pk) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == p.len() || mass <= 0.0 {
            counts[k] = left;
            break;
        }
        let q = (pk / mass).clamp(0.0, 1.0);
        let n = Binomial::new(left, q).expect("valid binomial").sample(rng);
        counts[k] = n;
        left -= n;
        mass -= pk;
    }
    counts
}

/// Simulates `trials` experiments of `ν` repetitions each and estimates `θ`
/// by maximum likelihood over a grid; ties are broken uniformly at random.
pub fn simulate_estimation<R: Rng + ?Sized>(
    f: &ParametrizedFamily,
    theta_true: f64,
    nu: u64,
    povm: &Povm,
    settings: EstimationSettings,
    rng: &mut R,
) -> Result<EstimationRun> {
    if settings.grid_points < 2 || !(settings.window > 0.0) || settings.trials == 0 {
        return Err(Error::InvalidArgument(
            "degenerate estimation settings".into(),
        ));
    }
    if nu == 0 {
        return Err(Error::InvalidArgument("zero repetitions".into()));
    }
    let p_true = povm.probabilities(&f.evaluate(theta_true)?)?;
    let lo = theta_true - 0.5 * settings.window;
    let step = settings.window / (settings.grid_points - 1) as f64;
    let grid: Vec<f64> = (0..settings.grid_points)
        .map(|g| lo + step * g as f64)
        .collect();
    let log_p: Vec<Vec<f64>> = grid
        .iter()
        .map(|&t| {
            Ok(povm
                .probabilities(&f.evaluate(t)?)?
                .iter()
                .map(|p| p.ln())
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut estimates = Vec::with_capacity(settings.trials);
    let mut flat_trials = 0;
    let mut ties = Vec::new();
    for _ in 0..settings.trials {
        let counts = multinomial(nu, &p_true, rng);
        let loglik: Vec<f64> = log_p
            .iter()
            .map(|lp| {
                counts
                    .iter()
                    .zip(lp)
                    .map(|(&n, &l)| if n == 0 { 0.0 } else { n as f64 * l })
                    .sum()
            })
            .collect();
        let best = loglik.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ties.clear();
        // relative slack absorbs rounding in sums of identical terms
        let slack = 1e-12 * best.abs().max(1.0);
        ties.extend((0..grid.len()).filter(|&g| loglik[g] >= best - slack));
        if ties.len() == grid.len() {
            flat_trials += 1;
        }
        let pick = ties[rng.random_range(0..ties.len())];
        estimates.push(grid[pick]);
    }
    let n = estimates.len() as f64;
    let bias = estimates.iter().map(|e| e - theta_true).sum::<f64>() / n;
    let rmse = (estimates
        .iter()
        .map(|e| (e - theta_true).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(EstimationRun {
        nu,
        theta_true,
        estimator: "grid-mle",
        estimates,
        rmse,
        bias,
        flat_trials,
        settings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{c, pauli, DensityOperator, PureState, SpaceDescriptor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q() -> SpaceDescriptor {
        SpaceDescriptor::single("q", 2).unwrap()
    }

    #[test]
    fn cramer_rao_values() {
        assert_eq!(cramer_rao(1.0, 1).unwrap(), 1.0);
        assert!((cramer_rao(1.0, 10_000).unwrap() - 0.01).abs() < 1e-15);
        assert!((cramer_rao(4.0, 100).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(cramer_rao(0.0, 10), Err(Error::UnboundedError));
    }

    #[test]
    fn povm_must_sum_to_identity() {
        let half = LabeledOperator::identity(q()).scale_real(0.5);
        assert!(Povm::new(vec![half.clone(), half.clone()]).is_ok());
        assert!(Povm::new(vec![half]).is_err());
        let x = LabeledOperator::new(q(), pauli::x()).unwrap();
        let m = Povm::from_observable(&x).unwrap();
        assert_eq!(m.effects().len(), 2);
    }

    #[test]
    fn flat_likelihood_spreads_over_the_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let f = ParametrizedFamily::constant(&DensityOperator::maximally_mixed(q()));
        let povm = Povm::from_observable(&LabeledOperator::new(q(), pauli::x()).unwrap()).unwrap();
        let settings = EstimationSettings {
            trials: 2000,
            ..Default::default()
        };
        let run = simulate_estimation(&f, 0.5, 100, &povm, settings, &mut rng).unwrap();
        assert_eq!(run.flat_trials, 2000);
        let grid_var = std::f64::consts::PI.powi(2) / 12.0;
        assert!((run.rmse.powi(2) - grid_var).abs() < 0.1 * grid_var);
    }

    #[test]
    fn single_shot_stays_in_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let plus =
            PureState::normalized(q(), nalgebra::DVector::from_element(2, c(1.0, 0.0))).unwrap();
        let h = LabeledOperator::new(q(), pauli::z() * c(0.5, 0.0)).unwrap();
        let f = ParametrizedFamily::unitary(&plus.density(), &h).unwrap();
        let povm = Povm::from_observable(&LabeledOperator::new(q(), pauli::x()).unwrap()).unwrap();
        let run = simulate_estimation(&f, 1.0, 1, &povm, EstimationSettings::default(), &mut rng)
            .unwrap();
        assert!(run.rmse <= std::f64::consts::FRAC_PI_2 + 1e-12);
    }
}
