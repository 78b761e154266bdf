use std::sync::Arc;

use num_complex::Complex64;

use super::choi::{link_operators, ChoiOperator};
use super::ports::{Port, PortSpec, Role};
use crate::error::{Error, Result};
use crate::tensor::{unitary_exp, LabeledOperator, LinearMap};

/// Central finite-difference step for Choi derivatives.
pub const FD_STEP: f64 = 1e-5;

/// A comb depending on a real parameter, `θ ↦ C_θ`.
pub trait CombFamily: Send + Sync {
    fn ports(&self) -> &PortSpec;

    fn choi(&self, theta: f64) -> Result<ChoiOperator>;

    /// `dC_θ/dθ`, by central differences unless overridden.
    fn choi_derivative(&self, theta: f64) -> Result<LabeledOperator> {
        let plus = self.choi(theta + FD_STEP)?;
        let minus = self.choi(theta - FD_STEP)?;
        Ok(plus.op().sub(minus.op())?.scale_real(0.5 / FD_STEP))
    }

    /// `(W_θ, dW_θ/dθ)` for combs given by an isometry with nothing traced out.
    fn pure_dilation(&self, _theta: f64) -> Result<Option<(LinearMap, LinearMap)>> {
        Ok(None)
    }
}

impl<T: CombFamily + ?Sized> CombFamily for &T {
    fn ports(&self) -> &PortSpec {
        (**self).ports()
    }

    fn choi(&self, theta: f64) -> Result<ChoiOperator> {
        (**self).choi(theta)
    }

    fn choi_derivative(&self, theta: f64) -> Result<LabeledOperator> {
        (**self).choi_derivative(theta)
    }

    fn pure_dilation(&self, theta: f64) -> Result<Option<(LinearMap, LinearMap)>> {
        (**self).pure_dilation(theta)
    }
}

impl<T: CombFamily + ?Sized> CombFamily for Arc<T> {
    fn ports(&self) -> &PortSpec {
        (**self).ports()
    }

    fn choi(&self, theta: f64) -> Result<ChoiOperator> {
        (**self).choi(theta)
    }

    fn choi_derivative(&self, theta: f64) -> Result<LabeledOperator> {
        (**self).choi_derivative(theta)
    }

    fn pure_dilation(&self, theta: f64) -> Result<Option<(LinearMap, LinearMap)>> {
        (**self).pure_dilation(theta)
    }
}

/// One phase of a memoryless comb.
#[derive(Clone, Debug)]
pub struct PhaseDilation {
    pub map: LinearMap,
    /// Output labels of `map` that are traced out.
    pub environment: Vec<String>,
    /// Generator on some of the phase's inputs.
    pub generator: Option<LabeledOperator>,
}

/// Comb given by a Stinespring dilation `W_θ = W e^{−iθG}`, with `G`
/// acting on some of the input ports and every non-port output of `W`
/// traced out as environment.
#[derive(Clone, Debug)]
pub struct StinespringComb {
    ports: PortSpec,
    dilation: LinearMap,
    environment: Vec<String>,
    generator: Option<LabeledOperator>,
    /// `G^T`, which generates the Choi operator's evolution.
    generator_t: Option<LabeledOperator>,
    choi0: LabeledOperator,
}

impl StinespringComb {
    pub fn new(
        ports: PortSpec,
        dilation: LinearMap,
        generator: Option<LabeledOperator>,
    ) -> Result<Self> {
        let inputs = ports.input_space();
        if dilation.input().len() != inputs.len() {
            return Err(Error::InvalidPorts(format!(
                "dilation inputs {} do not match input ports {}",
                dilation.input(),
                inputs
            )));
        }
        for s in inputs.subsystems() {
            if dilation.input().dim_of(&s.label)? != s.dim {
                return Err(Error::DimensionMismatch(format!(
                    "input port `{}`",
                    s.label
                )));
            }
        }
        for p in ports.with_role(Role::Out) {
            if dilation.output().dim_of(&p.label)? != p.dim {
                return Err(Error::DimensionMismatch(format!(
                    "output port `{}`",
                    p.label
                )));
            }
        }
        let environment: Vec<String> = dilation
            .output()
            .labels()
            .into_iter()
            .filter(|l| ports.get(l).is_none())
            .map(String::from)
            .collect();
        let generator_t = match &generator {
            Some(g) => {
                for s in g.space().subsystems() {
                    match ports.get(&s.label) {
                        Some(p) if p.role == Role::In && p.dim == s.dim => {}
                        _ => {
                            return Err(Error::InvalidPorts(format!(
                                "generator acts on `{}`",
                                s.label
                            )))
                        }
                    }
                }
                Some(LabeledOperator::new(
                    g.space().clone(),
                    g.matrix().transpose(),
                )?)
            }
            None => None,
        };
        let choi0 = dilation
            .choi(&environment)?
            .permute(&ports.space().labels())?;
        Ok(StinespringComb {
            ports,
            dilation,
            environment,
            generator,
            generator_t,
            choi0,
        })
    }

    /// Comb whose phases are independent channels, each with its own dilation.
    pub fn from_phases(phases: &[PhaseDilation]) -> Result<Self> {
        let mut port_list = Vec::new();
        let mut total: Option<LinearMap> = None;
        let mut generator: Option<LabeledOperator> = None;
        for (k, ph) in phases.iter().enumerate() {
            for s in ph.map.input().subsystems() {
                port_list.push(Port::input(s.label.clone(), s.dim, k + 1));
            }
            for s in ph.map.output().subsystems() {
                if !ph.environment.contains(&s.label) {
                    port_list.push(Port::output(s.label.clone(), s.dim, k + 1));
                }
            }
            total = Some(match total {
                None => ph.map.clone(),
                Some(t) => t.tensor(&ph.map)?,
            });
            if let Some(g) = &ph.generator {
                generator = Some(match generator {
                    None => g.clone(),
                    Some(prev) => {
                        let space = prev.space().concat(g.space())?;
                        prev.embed(&space)?.add(&g.embed(&space)?)?
                    }
                });
            }
        }
        let total = total.ok_or_else(|| Error::InvalidArgument("comb without phases".into()))?;
        Self::new(PortSpec::new(port_list)?, total, generator)
    }

    pub fn dilation(&self) -> &LinearMap {
        &self.dilation
    }

    pub fn environment(&self) -> &[String] {
        &self.environment
    }

    pub fn generator(&self) -> Option<&LabeledOperator> {
        self.generator.as_ref()
    }

    /// `W e^{−iθG}`.
    pub fn dilation_at(&self, theta: f64) -> Result<LinearMap> {
        match &self.generator {
            Some(g) => {
                let u = LabeledOperator::new(g.space().clone(), unitary_exp(g.matrix(), theta))?;
                self.dilation.precompose(&u)
            }
            None => Ok(self.dilation.clone()),
        }
    }
}

impl CombFamily for StinespringComb {
    fn ports(&self) -> &PortSpec {
        &self.ports
    }

    fn choi(&self, theta: f64) -> Result<ChoiOperator> {
        let op = match &self.generator_t {
            Some(gt) => {
                let v = LabeledOperator::new(gt.space().clone(), unitary_exp(gt.matrix(), theta))?;
                self.choi0.conjugate_by(&v)?
            }
            None => self.choi0.clone(),
        };
        ChoiOperator::new(op, self.ports.clone())
    }

    fn choi_derivative(&self, theta: f64) -> Result<LabeledOperator> {
        let c = self.choi(theta)?;
        match &self.generator_t {
            Some(gt) => c.op().commutator_derivative(gt),
            None => Ok(LabeledOperator::zeros(c.op().space().clone())),
        }
    }

    fn pure_dilation(&self, theta: f64) -> Result<Option<(LinearMap, LinearMap)>> {
        if !self.environment.is_empty() {
            return Ok(None);
        }
        let w = self.dilation_at(theta)?;
        let dw = match &self.generator {
            Some(g) => w.precompose(&g.scale(Complex64::new(0.0, -1.0)))?,
            None => w.scale(Complex64::new(0.0, 0.0)),
        };
        Ok(Some((w, dw)))
    }
}

/// A family linked with a fixed operator: `θ ↦ C_θ ∗ P`.
///
/// The derivative is linked the same way, so it stays exact whenever the
/// inner family's derivative is.
pub struct LinkedComb<F: CombFamily> {
    inner: F,
    partner: LabeledOperator,
    ports: PortSpec,
}

impl<F: CombFamily> LinkedComb<F> {
    /// The result keeps the unshared ports of both sides.
    pub fn new(inner: F, partner: ChoiOperator) -> Result<Self> {
        let probe = super::choi::link_product(&inner.choi(0.0)?, &partner)?;
        Ok(LinkedComb {
            ports: probe.ports().clone(),
            partner: partner.into_op(),
            inner,
        })
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: CombFamily> CombFamily for LinkedComb<F> {
    fn ports(&self) -> &PortSpec {
        &self.ports
    }

    fn choi(&self, theta: f64) -> Result<ChoiOperator> {
        let c = self.inner.choi(theta)?;
        ChoiOperator::new(link_operators(c.op(), &self.partner)?, self.ports.clone())
    }

    fn choi_derivative(&self, theta: f64) -> Result<LabeledOperator> {
        let d = self.inner.choi_derivative(theta)?;
        link_operators(&d, &self.partner)?.permute(&self.ports.space().labels())
    }
}
