use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ports::{Port, PortSpec};
use crate::error::{Error, Result};
use crate::tensor::{herm_eig_matrix, tolerance, CMatrix, LabeledOperator};

/// Choi operator of a channel, comb or sensor together with its ports.
///
/// The operator's subsystems always appear in port order.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiOperator {
    op: LabeledOperator,
    ports: PortSpec,
}

impl ChoiOperator {
    /// Pairs an operator with a port list, reordering the operator to match.
    pub fn new(op: LabeledOperator, ports: PortSpec) -> Result<Self> {
        let space = ports.space();
        let op = op.permute(&space.labels())?;
        if op.space() != &space {
            return Err(Error::DimensionMismatch(format!(
                "operator on {} does not match ports {}",
                op.space(),
                space
            )));
        }
        Ok(ChoiOperator { op, ports })
    }

    pub fn op(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn into_op(self) -> LabeledOperator {
        self.op
    }

    pub fn ports(&self) -> &PortSpec {
        &self.ports
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    /// Smallest eigenvalue of the Choi operator.
    pub fn min_eigenvalue(&self) -> f64 {
        herm_eig_matrix(self.op.matrix()).min()
    }

    /// Same operator with every port moved to phase 1.
    pub fn flattened(&self) -> ChoiOperator {
        ChoiOperator {
            op: self.op.clone(),
            ports: self.ports.flattened(),
        }
    }
}

/// Vectorization `|K⟩⟩` with index `i·d_out + o` (input digit first).
fn double_ket(k: &CMatrix) -> nalgebra::DVector<Complex64> {
    let (d_out, d_in) = (k.nrows(), k.ncols());
    nalgebra::DVector::from_fn(d_in * d_out, |r, _| k[(r % d_out, r / d_out)])
}

/// Choi operator `Σ_k |K_k⟩⟩⟨⟨K_k|` of a Kraus decomposition, on `[in, out]`.
///
/// Accepts trace-preserving and trace-non-increasing lists; anything with
/// `Σ K†K > I` beyond `τ_trace` is rejected.
pub fn choi_of_kraus(kraus: &[CMatrix], in_label: &str, out_label: &str) -> Result<ChoiOperator> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?;
    let (d_out, d_in) = (first.nrows(), first.ncols());
    if kraus
        .iter()
        .any(|k| k.nrows() != d_out || k.ncols() != d_in)
    {
        return Err(Error::DimensionMismatch(
            "Kraus operators differ in shape".into(),
        ));
    }
    let mut completeness = DMatrix::<Complex64>::zeros(d_in, d_in);
    let mut choi = DMatrix::<Complex64>::zeros(d_in * d_out, d_in * d_out);
    for k in kraus {
        completeness += k.adjoint() * k;
        let v = double_ket(k);
        choi += &v * v.adjoint();
    }
    let excess = herm_eig_matrix(&completeness).max() - 1.0;
    if excess > tolerance::TRACE {
        return Err(Error::NotTraceNonIncreasing { excess });
    }
    let ports = PortSpec::channel(in_label, d_in, out_label, d_out)?;
    ChoiOperator::new(LabeledOperator::new(ports.space(), choi)?, ports)
}

/// Link product of two labeled operators, contracting every shared label.
///
/// Computes `Tr_s[(A^{T_s} ⊗ I)(I ⊗ B)]`; the result lives on the unshared
/// subsystems of `a` followed by those of `b`.
pub fn link_operators(a: &LabeledOperator, b: &LabeledOperator) -> Result<LabeledOperator> {
    let shared: Vec<&str> = a
        .space()
        .labels()
        .into_iter()
        .filter(|l| b.space().contains(l))
        .collect();
    for l in &shared {
        let (da, db) = (a.space().dim_of(l)?, b.space().dim_of(l)?);
        if da != db {
            return Err(Error::DimensionMismatch(format!(
                "shared label `{l}` has dims {da} and {db}"
            )));
        }
    }
    let a_free = a.space().without(&shared)?;
    let b_free = b.space().without(&shared)?;

    let mut a_order = a_free.labels();
    a_order.extend(shared.iter().copied());
    let ap = a.permute(&a_order)?;
    let mut b_order = shared.clone();
    b_order.extend(b_free.labels());
    let bp = b.permute(&b_order)?;

    let (da, db) = (a_free.total_dim(), b_free.total_dim());
    let ds = ap.dim() / da;
    let (am, bm) = (ap.matrix(), bp.matrix());

    // Â[(x,x'),(s',s)] = A[(x s'),(x' s)],  B̂[(y,y'),(s',s)] = B[(s' y),(s y')]
    let a_hat = DMatrix::from_fn(da * da, ds * ds, |r, c| {
        let (x, x2) = (r / da, r % da);
        let (s1, s) = (c / ds, c % ds);
        am[(x * ds + s1, x2 * ds + s)]
    });
    let b_hat = DMatrix::from_fn(db * db, ds * ds, |r, c| {
        let (y, y2) = (r / db, r % db);
        let (s1, s) = (c / ds, c % ds);
        bm[(s1 * db + y, s * db + y2)]
    });
    let prod = a_hat * b_hat.transpose();
    let m = DMatrix::from_fn(da * db, da * db, |r, c| {
        let (x, y) = (r / db, r % db);
        let (x2, y2) = (c / db, c % db);
        prod[(x * da + x2, y * db + y2)]
    });
    LabeledOperator::new(a_free.concat(&b_free)?, m)
}

/// Link product of two port-annotated operators.
///
/// Shared labels must have equal dimensions and opposite roles. The result
/// keeps the unshared ports of `a` then `b`, with phases renumbered to a
/// contiguous range.
pub fn link_product(a: &ChoiOperator, b: &ChoiOperator) -> Result<ChoiOperator> {
    let mut kept: Vec<Port> = Vec::new();
    for p in a.ports.ports() {
        match b.ports.get(&p.label) {
            Some(q) => {
                if q.dim != p.dim {
                    return Err(Error::DimensionMismatch(format!(
                        "port `{}` has dims {} and {}",
                        p.label, p.dim, q.dim
                    )));
                }
                if q.role == p.role {
                    return Err(Error::RoleCollision(p.label.clone()));
                }
            }
            None => kept.push(p.clone()),
        }
    }
    kept.extend(
        b.ports
            .ports()
            .iter()
            .filter(|q| a.ports.get(&q.label).is_none())
            .cloned(),
    );
    let op = link_operators(&a.op, &b.op)?;
    let ports = PortSpec::compacted(kept)?;
    ChoiOperator::new(op, ports)
}

/// Operator of a state on `space` as a Choi operator with output ports.
pub fn state_choi(op: &LabeledOperator) -> ChoiOperator {
    let ports = PortSpec::state(op.space());
    ChoiOperator {
        op: op.clone(),
        ports,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{c, haar_unitary, pauli, random_density, PureState, SpaceDescriptor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unitary_channel(u: &CMatrix, i: &str, o: &str) -> ChoiOperator {
        choi_of_kraus(std::slice::from_ref(u), i, o).unwrap()
    }

    #[test]
    fn identity_channel_is_twice_phi_plus() {
        let id = unitary_channel(&pauli::i(), "i", "o");
        let phi = PureState::max_entangled("i", "o", 2).unwrap().projector();
        assert!((id.matrix() - phi.matrix() * c(2.0, 0.0)).norm() < 1e-14);
        assert!((id.op().trace() - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn depolarizing_choi_is_identity_over_two() {
        let kraus: Vec<CMatrix> = [pauli::i(), pauli::x(), pauli::y(), pauli::z()]
            .iter()
            .map(|p| p * c(0.5, 0.0))
            .collect();
        let ch = choi_of_kraus(&kraus, "i", "o").unwrap();
        let expect = DMatrix::<Complex64>::identity(4, 4) * c(0.5, 0.0);
        assert!((ch.matrix() - expect).norm() < 1e-14);
    }

    #[test]
    fn over_complete_kraus_rejected() {
        let kraus = vec![pauli::i(), pauli::x() * c(0.1, 0.0)];
        assert!(matches!(
            choi_of_kraus(&kraus, "i", "o"),
            Err(Error::NotTraceNonIncreasing { .. })
        ));
    }

    #[test]
    fn unitary_channel_applied_to_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = haar_unitary(2, &mut rng).unwrap();
        let ch = unitary_channel(&u, "i", "o");
        let rho = random_density(SpaceDescriptor::single("i", 2).unwrap(), 2, &mut rng);
        let out = link_product(&state_choi(rho.as_operator()), &ch).unwrap();
        let direct = &u * rho.matrix() * u.adjoint();
        assert_eq!(out.op().space().labels(), vec!["o"]);
        assert!((out.matrix() - direct).norm() < 1e-12);
    }

    #[test]
    fn sequential_channels_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = haar_unitary(2, &mut rng).unwrap();
        let v = haar_unitary(2, &mut rng).unwrap();
        let a = unitary_channel(&u, "x", "y");
        let b = unitary_channel(&v, "y", "z");
        let ab = link_product(&a, &b).unwrap();
        let direct = unitary_channel(&(&v * &u), "x", "z");
        assert!((ab.matrix() - direct.matrix()).norm() < 1e-12);
    }

    #[test]
    fn same_role_collision_is_an_error() {
        let a = unitary_channel(&pauli::i(), "x", "y");
        let b = unitary_channel(&pauli::i(), "z", "y");
        assert_eq!(link_product(&a, &b), Err(Error::RoleCollision("y".into())));
    }

    #[test]
    fn dimension_mismatch_on_shared_label() {
        let a = unitary_channel(&pauli::i(), "x", "y");
        let b = unitary_channel(&DMatrix::identity(3, 3), "y", "z");
        assert!(matches!(
            link_product(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
