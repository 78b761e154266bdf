use num_complex::Complex64;
use serde::Serialize;

use super::choi::ChoiOperator;
use super::ports::Role;
use crate::tensor::LabeledOperator;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseResidual {
    pub phase: usize,
    /// `‖Tr_{out_k} C_k − I_{in_k} ⊗ C_{k−1}‖_F`
    pub residual: f64,
}

/// Outcome of checking the comb normalization hierarchy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub min_eigenvalue: f64,
    pub hermitian_residual: f64,
    pub phases: Vec<PhaseResidual>,
    /// `|C_0 − 1|` after all phases have been peeled off.
    pub normalization_residual: f64,
    pub tolerance: f64,
    pub valid: bool,
}

impl ValidationReport {
    pub fn max_residual(&self) -> f64 {
        self.phases
            .iter()
            .map(|p| p.residual)
            .fold(self.normalization_residual, f64::max)
    }
}

/// Checks positivity and the partial-trace hierarchy of a comb.
///
/// Never fails: problems that would prevent the check (such as malformed
/// operators) show up as infinite residuals.
pub fn validate_comb(c: &ChoiOperator, tol: f64) -> ValidationReport {
    let ports = c.ports();
    let mut current: LabeledOperator = c.op().clone();
    let mut phases = Vec::new();
    for k in (1..=ports.num_phases()).rev() {
        let outs = ports.labels_in_phase(k, Role::Out);
        let ins = ports.labels_in_phase(k, Role::In);
        let d_in = ports.dim_in_phase(k, Role::In) as f64;
        let step = current.partial_trace(&outs).and_then(|t| {
            let prev = t.partial_trace(&ins)?.scale_real(1.0 / d_in);
            let in_space = t.space().select(&ins)?;
            let expected = LabeledOperator::identity(in_space).tensor(&prev)?;
            Ok((t.sub(&expected)?.frobenius_norm(), prev))
        });
        match step {
            Ok((residual, prev)) => {
                phases.push(PhaseResidual { phase: k, residual });
                current = prev;
            }
            Err(_) => {
                phases.push(PhaseResidual {
                    phase: k,
                    residual: f64::INFINITY,
                });
                current = LabeledOperator::scalar(Complex64::new(f64::INFINITY, 0.0));
                break;
            }
        }
    }
    phases.reverse();
    let normalization_residual = if current.dim() == 1 {
        (current.matrix()[(0, 0)] - Complex64::new(1.0, 0.0)).norm()
    } else {
        f64::INFINITY
    };
    let min_eigenvalue = c.min_eigenvalue();
    let hermitian_residual = c.op().hermitian_residual();
    let valid = min_eigenvalue >= -tol
        && hermitian_residual <= tol
        && normalization_residual <= tol
        && phases.iter().all(|p| p.residual <= tol);
    ValidationReport {
        min_eigenvalue,
        hermitian_residual,
        phases,
        normalization_residual,
        tolerance: tol,
        valid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comb::{choi_of_kraus, link_product, Port, PortSpec};
    use crate::tensor::{c, haar_unitary, pauli, CMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn channel_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = haar_unitary(3, &mut rng).unwrap();
        let ch = choi_of_kraus(&[u], "i", "o").unwrap();
        let r = validate_comb(&ch, 1e-9);
        assert!(r.valid, "{r:?}");
        assert!(r.max_residual() <= 1e-9);
    }

    #[test]
    fn perturbed_identity_is_invalid() {
        let ch = choi_of_kraus(&[pauli::i()], "i", "o").unwrap();
        let mut m = ch.matrix().clone();
        m[(0, 0)] += c(0.1, 0.0);
        let bad = ChoiOperator::new(
            crate::tensor::LabeledOperator::new(ch.op().space().clone(), m).unwrap(),
            ch.ports().clone(),
        )
        .unwrap();
        let r = validate_comb(&bad, 1e-9);
        assert!(!r.valid);
        assert!(r.max_residual() > 0.01 && r.max_residual() < 0.2, "{r:?}");
    }

    #[test]
    fn two_sequential_channels_form_a_two_comb() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u: CMatrix = haar_unitary(2, &mut rng).unwrap();
        let a = choi_of_kraus(std::slice::from_ref(&u), "i1", "o1").unwrap();
        let b = choi_of_kraus(&[u], "i2", "o2").unwrap();
        let joint = crate::tensor::LabeledOperator::tensor(a.op(), b.op()).unwrap();
        let ports = PortSpec::new(vec![
            Port::input("i1", 2, 1),
            Port::output("o1", 2, 1),
            Port::input("i2", 2, 2),
            Port::output("o2", 2, 2),
        ])
        .unwrap();
        let comb = ChoiOperator::new(joint, ports).unwrap();
        assert!(validate_comb(&comb, 1e-9).valid);
        // the link with a wire o1 -> i2 is a channel again
        let wire = choi_of_kraus(&[pauli::i()], "o1", "i2").unwrap();
        let chain = link_product(&comb, &wire).unwrap();
        assert_eq!(chain.ports().num_phases(), 2);
        assert!(validate_comb(&chain.flattened(), 1e-9).valid);
    }

    #[test]
    fn reversed_causality_is_detected() {
        // a channel whose output is declared to come before its input
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let u = haar_unitary(2, &mut rng).unwrap();
        let ch = choi_of_kraus(&[u], "i", "o").unwrap();
        let ports = PortSpec::new(vec![Port::input("i", 2, 2), Port::output("o", 2, 1)]).unwrap();
        let swapped = ChoiOperator::new(ch.into_op(), ports).unwrap();
        // phase 2 holds only the input, so C would have to equal I_i ⊗ C_1
        let r = validate_comb(&swapped, 1e-9);
        assert!(!r.valid, "{r:?}");
    }
}
