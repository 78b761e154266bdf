//! Random matrices and states.
//!
//! Haar unitaries come from the QR decomposition of a complex Ginibre matrix,
//! with the phases of `R`'s diagonal folded back into `Q`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::operator::LabeledOperator;
use super::space::SpaceDescriptor;
use super::state::{DensityOperator, PureState};
use super::CMatrix;
use crate::error::{Error, Result};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-distributed unitary on `U(d)`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<CMatrix> {
    if d == 0 {
        return Err(Error::InvalidArgument("Haar unitary of dimension 0".into()));
    }
    let z = ginibre(d, d, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 {
            rkk / rkk.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        q.column_mut(k).iter_mut().for_each(|z| *z *= phase);
    }
    Ok(q)
}

pub fn haar_unitary_on<R: Rng + ?Sized>(
    space: SpaceDescriptor,
    rng: &mut R,
) -> Result<LabeledOperator> {
    let u = haar_unitary(space.total_dim(), rng)?;
    LabeledOperator::new(space, u)
}

/// Haar-random isometry `C^{d_in} → C^{d_out}` (a `d_out × d_in` matrix).
pub fn haar_isometry<R: Rng + ?Sized>(d_in: usize, d_out: usize, rng: &mut R) -> Result<CMatrix> {
    if d_in > d_out {
        return Err(Error::DimensionMismatch(format!(
            "no isometry from dimension {d_in} into {d_out}"
        )));
    }
    let u = haar_unitary(d_out, rng)?;
    Ok(u.columns(0, d_in).into_owned())
}

pub fn random_pure_state<R: Rng + ?Sized>(space: SpaceDescriptor, rng: &mut R) -> PureState {
    let d = space.total_dim();
    let v = DVector::from_fn(d, |_, _| gaussian(rng));
    PureState::normalized(space, v).expect("Gaussian vector is nonzero almost surely")
}

/// Random density operator of the given rank (induced measure).
pub fn random_density<R: Rng + ?Sized>(
    space: SpaceDescriptor,
    rank: usize,
    rng: &mut R,
) -> DensityOperator {
    let d = space.total_dim();
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let t = m.trace();
    let op = LabeledOperator::new(space, m / t).expect("square by construction");
    DensityOperator::trusted(op.hermitian_part())
}

/// Random Hermitian matrix with Gaussian entries (GUE up to scale).
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::c;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [1, 2, 3, 8] {
            let u = haar_unitary(d, &mut rng).unwrap();
            let err = (u.adjoint() * &u - DMatrix::<Complex64>::identity(d, d)).norm();
            assert!(err <= 1e-10);
        }
        let u1 = haar_unitary(1, &mut rng).unwrap();
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-14);
        assert!(haar_unitary(0, &mut rng).is_err());
    }

    #[test]
    fn first_moment_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let d = 3;
        let mut mean = DMatrix::<Complex64>::zeros(d, d);
        for _ in 0..n {
            mean += haar_unitary(d, &mut rng).unwrap();
        }
        mean /= c(n as f64, 0.0);
        assert!(mean.iter().all(|z| z.norm() <= 0.05));
    }

    #[test]
    fn conjugation_average_is_maximally_mixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 2;
        let rho = random_density(SpaceDescriptor::single("q", d).unwrap(), 1, &mut rng);
        let mut errors = Vec::new();
        for n in [1_000usize, 10_000] {
            let mut mean = DMatrix::<Complex64>::zeros(d, d);
            for _ in 0..n {
                let u = haar_unitary(d, &mut rng).unwrap();
                mean += &u * rho.matrix() * u.adjoint();
            }
            mean /= c(n as f64, 0.0);
            let target = DMatrix::<Complex64>::identity(d, d) * c(0.5, 0.0);
            let err = (mean - target).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err <= 5.0 / (n as f64).sqrt(), "n={n}: {err}");
            errors.push(err);
        }
    }

    #[test]
    fn left_invariance_of_second_moment() {
        // E|U_00|^2 = 1/d, unchanged after a fixed left rotation.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = 3;
        let fixed = haar_unitary(d, &mut rng).unwrap();
        let n = 10_000;
        let (mut plain, mut rotated) = (0.0, 0.0);
        for _ in 0..n {
            let u = haar_unitary(d, &mut rng).unwrap();
            plain += u[(0, 0)].norm_sqr();
            rotated += (&fixed * &u)[(0, 0)].norm_sqr();
        }
        plain /= n as f64;
        rotated /= n as f64;
        assert!((plain - 1.0 / 3.0).abs() < 0.02);
        assert!((rotated - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn isometry_columns_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = haar_isometry(2, 6, &mut rng).unwrap();
        assert!((v.adjoint() * &v - DMatrix::<Complex64>::identity(2, 2)).norm() < 1e-12);
        assert!(haar_isometry(3, 2, &mut rng).is_err());
    }
}
