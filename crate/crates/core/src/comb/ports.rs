use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::SpaceDescriptor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    In,
    Out,
}

impl Role {
    pub fn opposite(self) -> Role {
        match self {
            Role::In => Role::Out,
            Role::Out => Role::In,
        }
    }
}

/// One wire of a comb: label, dimension, direction and the phase it belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Port {
    pub label: String,
    pub dim: usize,
    pub role: Role,
    pub phase: usize,
}

impl Port {
    pub fn new(label: impl Into<String>, dim: usize, role: Role, phase: usize) -> Self {
        Port {
            label: label.into(),
            dim,
            role,
            phase,
        }
    }

    pub fn input(label: impl Into<String>, dim: usize, phase: usize) -> Self {
        Self::new(label, dim, Role::In, phase)
    }

    pub fn output(label: impl Into<String>, dim: usize, phase: usize) -> Self {
        Self::new(label, dim, Role::Out, phase)
    }
}

/// Ordered port list of a comb. Phases run contiguously from 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortSpec {
    ports: Vec<Port>,
}

impl PortSpec {
    pub fn new(ports: Vec<Port>) -> Result<Self> {
        for (i, p) in ports.iter().enumerate() {
            if p.dim == 0 {
                return Err(Error::ZeroDimension(p.label.clone()));
            }
            if p.phase == 0 {
                return Err(Error::InvalidPorts(format!(
                    "port `{}` has phase 0",
                    p.label
                )));
            }
            if ports[..i].iter().any(|q| q.label == p.label) {
                return Err(Error::DuplicateLabel(p.label.clone()));
            }
        }
        let max_phase = ports.iter().map(|p| p.phase).max().unwrap_or(0);
        for k in 1..=max_phase {
            if !ports.iter().any(|p| p.phase == k) {
                return Err(Error::InvalidPorts(format!("phase {k} has no ports")));
            }
        }
        Ok(PortSpec { ports })
    }

    /// A single-phase channel `in → out`.
    pub fn channel(in_label: &str, d_in: usize, out_label: &str, d_out: usize) -> Result<Self> {
        Self::new(vec![
            Port::input(in_label, d_in, 1),
            Port::output(out_label, d_out, 1),
        ])
    }

    /// All subsystems of `space` as phase-1 outputs (a state).
    pub fn state(space: &SpaceDescriptor) -> Self {
        PortSpec {
            ports: space
                .subsystems()
                .iter()
                .map(|s| Port::output(s.label.clone(), s.dim, 1))
                .collect(),
        }
    }

    pub fn ports(&self) -> &[Port] {
        &self.ports
    }

    pub fn get(&self, label: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.label == label)
    }

    pub fn space(&self) -> SpaceDescriptor {
        SpaceDescriptor::new(self.ports.iter().map(|p| (p.label.clone(), p.dim)))
            .expect("validated at construction")
    }

    pub fn num_phases(&self) -> usize {
        self.ports.iter().map(|p| p.phase).max().unwrap_or(0)
    }

    pub fn with_role(&self, role: Role) -> Vec<&Port> {
        self.ports.iter().filter(|p| p.role == role).collect()
    }

    pub fn in_phase(&self, phase: usize, role: Role) -> Vec<&Port> {
        self.ports
            .iter()
            .filter(|p| p.phase == phase && p.role == role)
            .collect()
    }

    pub fn labels_in_phase(&self, phase: usize, role: Role) -> Vec<String> {
        self.in_phase(phase, role)
            .iter()
            .map(|p| p.label.clone())
            .collect()
    }

    /// Product of the dimensions of the ports with this role in this phase.
    pub fn dim_in_phase(&self, phase: usize, role: Role) -> usize {
        self.in_phase(phase, role).iter().map(|p| p.dim).product()
    }

    pub fn input_space(&self) -> SpaceDescriptor {
        SpaceDescriptor::new(
            self.with_role(Role::In)
                .iter()
                .map(|p| (p.label.clone(), p.dim)),
        )
        .expect("validated at construction")
    }

    pub fn output_space(&self) -> SpaceDescriptor {
        SpaceDescriptor::new(
            self.with_role(Role::Out)
                .iter()
                .map(|p| (p.label.clone(), p.dim)),
        )
        .expect("validated at construction")
    }

    /// Renumbers phases to a contiguous range, keeping their relative order.
    pub(crate) fn compacted(mut ports: Vec<Port>) -> Result<Self> {
        let mut phases: Vec<usize> = ports.iter().map(|p| p.phase).collect();
        phases.sort_unstable();
        phases.dedup();
        for p in &mut ports {
            p.phase = phases.iter().position(|&q| q == p.phase).expect("present") + 1;
        }
        Self::new(ports)
    }

    /// All ports moved to phase 1.
    pub fn flattened(&self) -> Self {
        PortSpec {
            ports: self
                .ports
                .iter()
                .map(|p| Port {
                    phase: 1,
                    ..p.clone()
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phases_must_be_contiguous() {
        let bad = PortSpec::new(vec![Port::input("a", 2, 1), Port::output("b", 2, 3)]);
        assert!(matches!(bad, Err(Error::InvalidPorts(_))));
        let ok = PortSpec::new(vec![Port::input("a", 2, 1), Port::output("b", 2, 2)]).unwrap();
        assert_eq!(ok.num_phases(), 2);
    }

    #[test]
    fn labels_unique() {
        let bad = PortSpec::new(vec![Port::input("a", 2, 1), Port::output("a", 2, 1)]);
        assert_eq!(bad, Err(Error::DuplicateLabel("a".into())));
    }

    #[test]
    fn compaction_preserves_order() {
        let spec =
            PortSpec::compacted(vec![Port::output("x", 2, 4), Port::input("y", 2, 2)]).unwrap();
        assert_eq!(spec.get("x").unwrap().phase, 2);
        assert_eq!(spec.get("y").unwrap().phase, 1);
    }
}
