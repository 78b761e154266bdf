use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::comb::{Port, PortSpec, StinespringComb};
use crate::error::{Error, Result};
use crate::tensor::{haar_isometry, random_hermitian, LabeledOperator, LinearMap, SpaceDescriptor};

/// Shape of a random comb: phase `k` maps `in{k}` (dim `phases[k].0`) to
/// `out{k}` (dim `phases[k].1`) through a memory of `memory_dim` and an
/// environment of (at least) `env_dim` per phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomCombSpec {
    pub phases: Vec<(usize, usize)>,
    pub memory_dim: usize,
    pub env_dim: usize,
}

impl RandomCombSpec {
    /// `k` qubit phases with a qubit memory and a qubit environment.
    pub fn qubits(k: usize) -> Self {
        RandomCombSpec {
            phases: vec![(2, 2); k],
            memory_dim: 2,
            env_dim: 2,
        }
    }

    /// `k` qubit phases without memory or environment: a product of unitaries.
    pub fn unitary_qubits(k: usize) -> Self {
        RandomCombSpec {
            phases: vec![(2, 2); k],
            memory_dim: 1,
            env_dim: 1,
        }
    }
}

fn port_label(kind: &str, k: usize) -> String {
    format!("{kind}{k}")
}

/// Random comb built from Haar isometries, with a random local generator
/// `G_k` on every input so that `W_θ = W e^{−iθ Σ G_k}`.
///
/// The last memory and all environments are traced out. With unit memory
/// and environment and square phases the comb is a product of unitaries.
pub fn random_comb<R: Rng + ?Sized>(spec: &RandomCombSpec, rng: &mut R) -> Result<StinespringComb> {
    let k_max = spec.phases.len();
    if k_max == 0 {
        return Err(Error::InvalidArgument("comb without phases".into()));
    }
    if spec.memory_dim == 0
        || spec.env_dim == 0
        || spec.phases.iter().any(|&(a, b)| a == 0 || b == 0)
    {
        return Err(Error::ZeroDimension("random comb".into()));
    }
    let mut ports = Vec::new();
    let mut network: Option<LinearMap> = None;
    for (idx, &(d_in, d_out)) in spec.phases.iter().enumerate() {
        let k = idx + 1;
        let (input, output) = (port_label("in", k), port_label("out", k));
        ports.push(Port::input(input.clone(), d_in, k));
        ports.push(Port::output(output.clone(), d_out, k));
        let mut src = vec![(input, d_in)];
        let mut dst = vec![(output, d_out)];
        if spec.memory_dim > 1 {
            if k > 1 {
                src.push((port_label("mem", k - 1), spec.memory_dim));
            }
            dst.push((port_label("mem", k), spec.memory_dim));
        }
        let d_src: usize = src.iter().map(|s| s.1).product();
        let d_dst: usize = dst.iter().map(|s| s.1).product();
        let env = spec.env_dim.max(d_src.div_ceil(d_dst));
        if env > 1 {
            dst.push((port_label("env", k), env));
        }
        let src = SpaceDescriptor::new(src)?;
        let dst = SpaceDescriptor::new(dst)?;
        let v = LinearMap::new(
            src.clone(),
            dst.clone(),
            haar_isometry(src.total_dim(), dst.total_dim(), rng)?,
        )?;
        network = Some(match network {
            None => v,
            Some(n) => n.then(&v)?,
        });
    }
    let network = network.expect("at least one phase");
    let ports = PortSpec::new(ports)?;
    let inputs = ports.input_space();
    let mut generator = LabeledOperator::zeros(inputs.clone());
    for (idx, &(d_in, _)) in spec.phases.iter().enumerate() {
        let local = SpaceDescriptor::single(port_label("in", idx + 1), d_in)?;
        let g = LabeledOperator::new(local, random_hermitian(d_in, rng))?;
        generator = generator.add(&g.embed(&inputs)?)?;
    }
    StinespringComb::new(ports, network, Some(generator))
}
