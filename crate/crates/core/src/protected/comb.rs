use nalgebra::DMatrix;
use num_complex::Complex64;

use super::spec::ProtectedCombSpec;
use super::twirl::twirl;
use crate::comb::{ChoiOperator, CombFamily, Port, PortSpec, StinespringComb};
use crate::error::{Error, Result};
use crate::tensor::{tolerance, unitary_exp, CMatrix, LabeledOperator, LinearMap, SpaceDescriptor};

pub const A_IN: &str = "a_in";
pub const A_IN_REF: &str = "a_in_ref";
pub const KEY_OUT1: &str = "key_out1";
pub const KEY_OUT2: &str = "key_out2";
pub const ANC_ENV: &str = "anc_env";
pub const A_TOT: &str = "a_tot";
pub const B_REF: &str = "b_ref";

pub fn a_out(j: usize) -> String {
    format!("a_out{j}")
}

pub fn b_in(j: usize) -> String {
    format!("b_in{j}")
}

fn stream(spec: &ProtectedCombSpec, name: fn(usize) -> String) -> Vec<(String, usize)> {
    spec.phase_dims()
        .iter()
        .enumerate()
        .map(|(i, &d)| (name(i + 1), d))
        .collect()
}

/// Ports: `a_in` and the outputs `a_out1..a_out{K−1}` in phase 1,
/// `b_in{k−1}` in phase `k`, and `key_out1 ⊗ key_out2` in phase `K`.
pub fn protected_ports(spec: &ProtectedCombSpec) -> Result<PortSpec> {
    let k_max = spec.num_phases();
    let mut ports = vec![Port::input(A_IN, 2, 1)];
    for (label, d) in stream(spec, a_out) {
        ports.push(Port::output(label, d, 1));
    }
    for (j, (label, d)) in stream(spec, b_in).into_iter().enumerate() {
        ports.push(Port::input(label, d, j + 2));
    }
    ports.push(Port::output(KEY_OUT1, 2, k_max));
    ports.push(Port::output(KEY_OUT2, spec.ancilla_dim(), k_max));
    PortSpec::new(ports)
}

fn check_unitary(u: &CMatrix, d: usize) -> Result<()> {
    if u.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!(
            "shield is {}x{}, expected {d}x{d}",
            u.nrows(),
            u.ncols()
        )));
    }
    let defect = (u.adjoint() * u - DMatrix::<Complex64>::identity(d, d)).norm();
    if defect > tolerance::TRACE {
        return Err(Error::InvalidArgument(format!(
            "shield is not unitary (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// The comb with a fixed shield `u`: phase 1 applies `u (V_θ ⊗ I)` to the
/// input and a maximally mixed ancilla, the middle phases only store their
/// inputs, and phase `K` applies `u†` to all stored inputs.
pub fn build_protected_comb(spec: &ProtectedCombSpec, u: &CMatrix) -> Result<StinespringComb> {
    let d = spec.total_dim();
    let d_anc = spec.ancilla_dim();
    check_unitary(u, d)?;
    let scale = 1.0 / (d_anc as f64).sqrt();
    // column a: Σ_j u(|a⟩|j⟩) ⊗ |j⟩_env / √d_anc
    let shield = DMatrix::from_fn(d * d_anc, 2, |row, a| {
        let (o, e) = (row / d_anc, row % d_anc);
        u[(o, a * d_anc + e)] * scale
    });
    let mut shield_out = stream(spec, a_out);
    shield_out.push((ANC_ENV.to_string(), d_anc));
    let first = LinearMap::new(
        SpaceDescriptor::single(A_IN, 2)?,
        SpaceDescriptor::new(shield_out)?,
        shield,
    )?;
    let key = LinearMap::new(
        SpaceDescriptor::new(stream(spec, b_in))?,
        SpaceDescriptor::new([(KEY_OUT1, 2), (KEY_OUT2, d_anc)])?,
        u.adjoint(),
    )?;
    let generator =
        LabeledOperator::new(SpaceDescriptor::single(A_IN, 2)?, spec.generator().clone())?;
    StinespringComb::new(protected_ports(spec)?, first.tensor(&key)?, Some(generator))
}

/// The comb averaged over Haar shields: the Choi operator is twirled on the
/// merged shield outputs against the merged key inputs.
#[derive(Clone, Debug)]
pub struct AveragedProtectedComb {
    ports: PortSpec,
    choi0: LabeledOperator,
    generator_t: LabeledOperator,
}

impl AveragedProtectedComb {
    pub fn new(spec: &ProtectedCombSpec) -> Result<Self> {
        let d = spec.total_dim();
        let plain = build_protected_comb(spec, &DMatrix::identity(d, d))?;
        let c0 = plain.choi(0.0)?.into_op();
        let outs: Vec<String> = stream(spec, a_out).into_iter().map(|s| s.0).collect();
        let ins: Vec<String> = stream(spec, b_in).into_iter().map(|s| s.0).collect();
        let rest: Vec<String> = c0
            .space()
            .labels()
            .into_iter()
            .filter(|l| !outs.iter().any(|o| o == l) && !ins.iter().any(|i| i == l))
            .map(String::from)
            .collect();
        let mut order = outs.clone();
        order.extend(ins.iter().cloned());
        order.extend(rest);
        let merged = c0
            .permute(&order)?
            .merge_adjacent(&outs, A_TOT)?
            .merge_adjacent(&ins, B_REF)?;
        let twirled = twirl(&merged, A_TOT, B_REF)?;
        let split_out: Vec<(&str, usize)> = outs
            .iter()
            .map(|l| l.as_str())
            .zip(spec.phase_dims().iter().copied())
            .collect();
        let split_in: Vec<(&str, usize)> = ins
            .iter()
            .map(|l| l.as_str())
            .zip(spec.phase_dims().iter().copied())
            .collect();
        let choi0 = twirled.split(A_TOT, &split_out)?.split(B_REF, &split_in)?;
        let ports = plain.ports().clone();
        let choi0 = choi0.permute(&ports.space().labels())?;
        let generator_t = LabeledOperator::new(
            SpaceDescriptor::single(A_IN, 2)?,
            spec.generator().transpose(),
        )?;
        Ok(AveragedProtectedComb {
            ports,
            choi0,
            generator_t,
        })
    }
}

impl CombFamily for AveragedProtectedComb {
    fn ports(&self) -> &PortSpec {
        &self.ports
    }

    fn choi(&self, theta: f64) -> Result<ChoiOperator> {
        let v = LabeledOperator::new(
            self.generator_t.space().clone(),
            unitary_exp(self.generator_t.matrix(), theta),
        )?;
        ChoiOperator::new(self.choi0.conjugate_by(&v)?, self.ports.clone())
    }

    fn choi_derivative(&self, theta: f64) -> Result<LabeledOperator> {
        self.choi(theta)?
            .op()
            .commutator_derivative(&self.generator_t)
    }
}
