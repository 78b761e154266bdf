use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tensor::{unitary_exp, DensityOperator, LabeledOperator};

/// Central finite-difference step for family derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

pub type StateFn = dyn Fn(f64) -> Result<LabeledOperator> + Send + Sync;

/// How `dρ_θ/dθ` is obtained.
#[derive(Clone)]
pub enum DerivativeMode {
    /// `ρ_θ = e^{−iθH} ρ₀ e^{iθH}`, so `dρ = −i[H, ρ_θ]`.
    Analytic(LabeledOperator),
    /// `(ρ_{θ+h} − ρ_{θ−h}) / 2h`.
    FiniteDifference { step: f64 },
    /// A derivative supplied alongside the family.
    Explicit(Arc<StateFn>),
}

impl fmt::Debug for DerivativeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DerivativeMode::Analytic(h) => write!(f, "Analytic(on {})", h.space()),
            DerivativeMode::FiniteDifference { step } => write!(f, "FiniteDifference({step})"),
            DerivativeMode::Explicit(_) => write!(f, "Explicit"),
        }
    }
}

/// A one-parameter family of states `θ ↦ ρ_θ` on an interval `Θ`.
#[derive(Clone)]
pub struct ParametrizedFamily {
    evaluate: Arc<StateFn>,
    mode: DerivativeMode,
    domain: (f64, f64),
}

impl fmt::Debug for ParametrizedFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametrizedFamily")
            .field("mode", &self.mode)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ParametrizedFamily {
    pub fn new<F>(evaluate: F, mode: DerivativeMode, domain: (f64, f64)) -> Result<Self>
    where
        F: Fn(f64) -> Result<LabeledOperator> + Send + Sync + 'static,
    {
        if !(domain.0 < domain.1) {
            return Err(Error::InvalidArgument(format!(
                "empty parameter domain [{}, {}]",
                domain.0, domain.1
            )));
        }
        if let DerivativeMode::FiniteDifference { step } = mode {
            if !(step > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "finite-difference step {step}"
                )));
            }
        }
        Ok(ParametrizedFamily {
            evaluate: Arc::new(evaluate),
            mode,
            domain,
        })
    }

    /// `θ ↦ e^{−iθH} ρ₀ e^{iθH}` on the whole real line, with `H` acting on
    /// a subset of `ρ₀`'s subsystems.
    pub fn unitary(rho0: &DensityOperator, generator: &LabeledOperator) -> Result<Self> {
        let rho0 = rho0.as_operator().clone();
        let h = generator.embed(rho0.space())?;
        if h.hermitian_residual() > crate::tensor::tolerance::HERM * h.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian {
                residual: h.hermitian_residual(),
            });
        }
        let h_eval = h.clone();
        Self::new(
            move |theta| {
                let u = LabeledOperator::new(
                    h_eval.space().clone(),
                    unitary_exp(h_eval.matrix(), theta),
                )?;
                rho0.conjugate_by(&u)
            },
            DerivativeMode::Analytic(h),
            (f64::NEG_INFINITY, f64::INFINITY),
        )
    }

    /// A θ-independent family.
    pub fn constant(rho: &DensityOperator) -> Self {
        let rho = rho.as_operator().clone();
        let zero = LabeledOperator::zeros(rho.space().clone());
        ParametrizedFamily {
            evaluate: Arc::new(move |_| Ok(rho.clone())),
            mode: DerivativeMode::Explicit(Arc::new(move |_| Ok(zero.clone()))),
            domain: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Same family with a finite-difference derivative of step `h`.
    pub fn with_finite_difference(&self, step: f64) -> Result<Self> {
        let evaluate = self.evaluate.clone();
        Self::new(
            move |t| evaluate(t),
            DerivativeMode::FiniteDifference { step },
            self.domain,
        )
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "empty parameter domain [{lo}, {hi}]"
            )));
        }
        self.domain = (lo, hi);
        Ok(self)
    }

    /// `θ ↦ Λ(ρ_θ)` for a linear map `Λ`; the derivative is mapped too.
    pub fn map_linear<M>(&self, map: M) -> Self
    where
        M: Fn(&LabeledOperator) -> Result<LabeledOperator> + Send + Sync + 'static,
    {
        let map = Arc::new(map);
        let (inner, m1) = (self.clone(), map.clone());
        let inner_d = self.clone();
        ParametrizedFamily {
            evaluate: Arc::new(move |t| m1(&inner.evaluate(t)?)),
            mode: DerivativeMode::Explicit(Arc::new(move |t| {
                map(&family_derivative(&inner_d, t)?)
            })),
            domain: self.domain,
        }
    }

    /// `θ ↦ p ρ_θ + (1 − p) σ_θ`.
    pub fn mix(&self, other: &ParametrizedFamily, p: f64) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let (da, db) = (self.clone(), other.clone());
        ParametrizedFamily {
            evaluate: Arc::new(move |t| {
                a.evaluate(t)?
                    .scale_real(p)
                    .add(&b.evaluate(t)?.scale_real(1.0 - p))
            }),
            mode: DerivativeMode::Explicit(Arc::new(move |t| {
                family_derivative(&da, t)?
                    .scale_real(p)
                    .add(&family_derivative(&db, t)?.scale_real(1.0 - p))
            })),
            domain: (
                self.domain.0.max(other.domain.0),
                self.domain.1.min(other.domain.1),
            ),
        }
    }

    pub fn mode(&self) -> &DerivativeMode {
        &self.mode
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn check_domain(&self, theta: f64) -> Result<()> {
        let (lo, hi) = self.domain;
        if theta < lo || theta > hi || theta.is_nan() {
            return Err(Error::OutsideDomain { theta, lo, hi });
        }
        Ok(())
    }

    /// `ρ_θ` as a bare operator.
    pub fn evaluate(&self, theta: f64) -> Result<LabeledOperator> {
        self.check_domain(theta)?;
        (self.evaluate)(theta)
    }

    /// `ρ_θ`, validated as a density operator.
    pub fn state(&self, theta: f64) -> Result<DensityOperator> {
        DensityOperator::new(self.evaluate(theta)?)
    }
}

/// `dρ_θ/dθ` according to the family's derivative mode.
pub fn family_derivative(f: &ParametrizedFamily, theta: f64) -> Result<LabeledOperator> {
    f.check_domain(theta)?;
    match &f.mode {
        DerivativeMode::Analytic(h) => f.evaluate(theta)?.commutator_derivative(h),
        DerivativeMode::FiniteDifference { step } => {
            let (lo, hi) = f.domain;
            if theta - step < lo || theta + step > hi {
                return Err(Error::OutsideDomain { theta, lo, hi });
            }
            let plus = (f.evaluate)(theta + step)?;
            let minus = (f.evaluate)(theta - step)?;
            Ok(plus.sub(&minus)?.scale_real(0.5 / step))
        }
        DerivativeMode::Explicit(d) => d(theta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{c, pauli, PureState, SpaceDescriptor};

    fn plus_state() -> DensityOperator {
        let space = SpaceDescriptor::single("q", 2).unwrap();
        let v = nalgebra::DVector::from_element(2, c(1.0, 0.0));
        PureState::normalized(space, v).unwrap().density()
    }

    fn half_z() -> LabeledOperator {
        LabeledOperator::new(
            SpaceDescriptor::single("q", 2).unwrap(),
            pauli::z() * c(0.5, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn commutator_at_zero_is_half_sigma_y() {
        let f = ParametrizedFamily::unitary(&plus_state(), &half_z()).unwrap();
        let d = family_derivative(&f, 0.0).unwrap();
        assert!((d.matrix() - pauli::y() * c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn constant_family_has_zero_derivative() {
        let f = ParametrizedFamily::constant(&plus_state());
        assert_eq!(family_derivative(&f, 1.3).unwrap().frobenius_norm(), 0.0);
    }

    #[test]
    fn finite_difference_matches_analytic() {
        let f = ParametrizedFamily::unitary(&plus_state(), &half_z()).unwrap();
        let fd = f.with_finite_difference(DEFAULT_FD_STEP).unwrap();
        for theta in [0.0, 0.4, 2.0] {
            let a = family_derivative(&f, theta).unwrap();
            let b = family_derivative(&fd, theta).unwrap();
            assert!(
                a.sub(&b).unwrap().frobenius_norm() <= 10.0 * DEFAULT_FD_STEP * DEFAULT_FD_STEP
            );
        }
    }

    #[test]
    fn finite_difference_respects_domain() {
        let f = ParametrizedFamily::unitary(&plus_state(), &half_z())
            .unwrap()
            .with_finite_difference(1e-3)
            .unwrap()
            .with_domain(0.0, 1.0)
            .unwrap();
        assert!(matches!(
            family_derivative(&f, 0.0),
            Err(Error::OutsideDomain { .. })
        ));
        assert!(family_derivative(&f, 0.5).is_ok());
        assert!(matches!(f.evaluate(1.5), Err(Error::OutsideDomain { .. })));
    }
}
