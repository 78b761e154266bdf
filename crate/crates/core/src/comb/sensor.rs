use rand::Rng;

use super::choi::{link_operators, ChoiOperator};
use super::ports::{Port, PortSpec, Role};
use crate::error::{Error, Result};
use crate::tensor::{
    haar_isometry, random_pure_state, DensityOperator, LabeledOperator, LinearMap, PureState,
    SpaceDescriptor,
};

/// Label of the sensor's reference output in randomly sampled sensors.
pub const REFERENCE_LABEL: &str = "R";

/// A comb that supplies every input of a target comb, absorbs its
/// intermediate outputs and emits a final state on its reference ports.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorComb {
    choi: ChoiOperator,
    reference: Vec<String>,
}

/// Ports of a sensor for `target`: target inputs of phase `k` become sensor
/// outputs of phase `k`, target outputs of phase `k < K` become sensor inputs
/// of phase `k + 1`, and `reference` is emitted in the last phase.
pub fn sensor_ports(target: &PortSpec, reference: &[(String, usize)]) -> Result<PortSpec> {
    let k_max = target.num_phases();
    let mut ports = Vec::new();
    for k in 1..=k_max {
        if k > 1 {
            for p in target.in_phase(k - 1, Role::Out) {
                ports.push(Port::input(p.label.clone(), p.dim, k));
            }
        }
        for p in target.in_phase(k, Role::In) {
            ports.push(Port::output(p.label.clone(), p.dim, k));
        }
    }
    for (label, dim) in reference {
        ports.push(Port::output(label.clone(), *dim, k_max.max(1)));
    }
    PortSpec::compacted(ports)
}

/// Checks that `sensor` mirrors `target` and returns the reference labels.
fn check_mirror(sensor: &PortSpec, target: &PortSpec) -> Result<Vec<String>> {
    let k_max = target.num_phases();
    for p in target.ports() {
        let last_output = p.role == Role::Out && p.phase == k_max;
        match sensor.get(&p.label) {
            Some(q) if last_output => {
                return Err(Error::InvalidPorts(format!(
                    "sensor port `{}` collides with a final output",
                    q.label
                )))
            }
            None if last_output => {}
            None => return Err(Error::UnlinkedPort(p.label.clone())),
            Some(q) => {
                if q.dim != p.dim {
                    return Err(Error::DimensionMismatch(format!(
                        "port `{}` has dim {} on the comb and {} on the sensor",
                        p.label, p.dim, q.dim
                    )));
                }
                if q.role == p.role {
                    return Err(Error::RoleCollision(p.label.clone()));
                }
            }
        }
    }
    // causal consistency: whatever the sensor feeds in must not depend on
    // outputs the comb only produces later
    for p in target.with_role(Role::In) {
        for q in target.with_role(Role::Out) {
            if q.phase >= p.phase && q.phase < k_max {
                let (sp, sq) = (sensor.get(&p.label).unwrap(), sensor.get(&q.label).unwrap());
                if sq.phase <= sp.phase {
                    return Err(Error::InvalidPorts(format!(
                        "sensor receives `{}` before emitting `{}`",
                        q.label, p.label
                    )));
                }
            }
        }
    }
    let s_max = sensor.num_phases();
    let mut reference = Vec::new();
    for q in sensor.ports() {
        if target.get(&q.label).is_none() {
            if q.role != Role::Out || q.phase != s_max {
                return Err(Error::InvalidPorts(format!(
                    "extra sensor port `{}` must be a final output",
                    q.label
                )));
            }
            reference.push(q.label.clone());
        }
    }
    Ok(reference)
}

impl SensorComb {
    pub fn new(choi: ChoiOperator, target: &PortSpec) -> Result<Self> {
        let reference = check_mirror(choi.ports(), target)?;
        Ok(SensorComb { choi, reference })
    }

    pub fn choi(&self) -> &ChoiOperator {
        &self.choi
    }

    pub fn into_choi(self) -> ChoiOperator {
        self.choi
    }

    pub fn reference(&self) -> &[String] {
        &self.reference
    }
}

/// Labels for ports of the target with the given role, in phase order.
fn stream(target: &PortSpec, role: Role, phases: std::ops::RangeInclusive<usize>) -> Vec<Port> {
    phases
        .flat_map(|k| {
            target
                .in_phase(k, role)
                .into_iter()
                .cloned()
                .collect::<Vec<_>>()
        })
        .collect()
}

fn space_of(ports: &[Port]) -> Result<SpaceDescriptor> {
    SpaceDescriptor::new(ports.iter().map(|p| (p.label.clone(), p.dim)))
}

fn finish(
    network: &LinearMap,
    traced: &[String],
    target: &PortSpec,
    reference: Vec<(String, usize)>,
) -> Result<SensorComb> {
    let op = network.choi(traced)?;
    let ports = sensor_ports(target, &reference)?;
    SensorComb::new(ChoiOperator::new(op, ports)?, target)
}

/// Sensor that feeds `psi` into the first-phase inputs and wires the
/// `j`-th intermediate output of the comb straight into its `j`-th later
/// input, storing everything else in memory.
///
/// Subsystems of `psi` that are not first-phase inputs form the reference.
pub fn wire_through_sensor(target: &PortSpec, psi: &PureState) -> Result<SensorComb> {
    let k_max = target.num_phases();
    let first_inputs = target.in_phase(1, Role::In);
    for p in &first_inputs {
        if psi.space().dim_of(&p.label)? != p.dim {
            return Err(Error::DimensionMismatch(format!("input `{}`", p.label)));
        }
    }
    let reference: Vec<(String, usize)> = psi
        .space()
        .subsystems()
        .iter()
        .filter(|s| target.get(&s.label).is_none())
        .map(|s| (s.label.clone(), s.dim))
        .collect();
    if reference.len() + first_inputs.len() != psi.space().len() {
        return Err(Error::InvalidPorts(
            "input state covers ports beyond the first phase".into(),
        ));
    }

    let outs = stream(target, Role::Out, 1..=k_max.saturating_sub(1));
    let ins = stream(target, Role::In, 2..=k_max);
    if outs.len() != ins.len() || outs.iter().zip(&ins).any(|(o, i)| o.dim != i.dim) {
        return Err(Error::DimensionMismatch(
            "intermediate outputs and later inputs cannot be wired one to one".into(),
        ));
    }
    let mut network = LinearMap::from_state(psi);
    if !outs.is_empty() {
        network = network.then(&LinearMap::wire(space_of(&outs)?, space_of(&ins)?)?)?;
    }
    finish(&network, &[], target, reference)
}

/// Random sensor: a Haar-random input state on the first-phase inputs and
/// a memory, then Haar-random isometries between phases. The memory (and
/// the final reference `R`) have dimension `ancilla_dim`.
pub fn random_sensor<R: Rng + ?Sized>(
    target: &PortSpec,
    ancilla_dim: usize,
    rng: &mut R,
) -> Result<SensorComb> {
    if ancilla_dim == 0 {
        return Err(Error::ZeroDimension(REFERENCE_LABEL.into()));
    }
    let k_max = target.num_phases().max(1);
    let memory = |k: usize| {
        if k == k_max {
            REFERENCE_LABEL.to_string()
        } else {
            format!("sensor_mem{k}")
        }
    };
    for k in 1..=k_max {
        for label in [memory(k), format!("sensor_env{k}")] {
            if target.get(&label).is_some() {
                return Err(Error::DuplicateLabel(label));
            }
        }
    }

    let first: Vec<Port> = target.in_phase(1, Role::In).into_iter().cloned().collect();
    let mut space = space_of(&first)?;
    space = space.concat(&SpaceDescriptor::single(memory(1), ancilla_dim)?)?;
    let mut network = LinearMap::from_state(&random_pure_state(space, rng));
    let mut traced = Vec::new();
    for k in 2..=k_max {
        let src_ports: Vec<Port> = target
            .in_phase(k - 1, Role::Out)
            .into_iter()
            .cloned()
            .collect();
        let src =
            space_of(&src_ports)?.concat(&SpaceDescriptor::single(memory(k - 1), ancilla_dim)?)?;
        let dst_ports: Vec<Port> = target.in_phase(k, Role::In).into_iter().cloned().collect();
        let mut dst =
            space_of(&dst_ports)?.concat(&SpaceDescriptor::single(memory(k), ancilla_dim)?)?;
        let (d_src, d_dst) = (src.total_dim(), dst.total_dim());
        if d_src > d_dst {
            let env = format!("sensor_env{k}");
            dst = dst.concat(&SpaceDescriptor::single(
                env.clone(),
                d_src.div_ceil(d_dst),
            )?)?;
            traced.push(env);
        }
        let v = haar_isometry(d_src, dst.total_dim(), rng)?;
        network = network.then(&LinearMap::new(src, dst, v)?)?;
    }
    finish(
        &network,
        &traced,
        target,
        vec![(REFERENCE_LABEL.to_string(), ancilla_dim)],
    )
}

/// `N ∗ S`: the state a sensor extracts from a comb.
pub fn compose_sensor(n: &ChoiOperator, s: &SensorComb) -> Result<DensityOperator> {
    check_mirror(s.choi.ports(), n.ports())?;
    DensityOperator::new(link_operators(n.op(), s.choi.op())?)
}

/// `dN ∗ S`, the derivative of the composed state.
pub fn compose_sensor_derivative(dn: &LabeledOperator, s: &SensorComb) -> Result<LabeledOperator> {
    link_operators(dn, s.choi.op())
}
