#![allow(dead_code)]

use combfisher::qfi::{qfi_of, DEFAULT_CUTOFF};
use combfisher::tensor::{
    haar_isometry, random_density, random_hermitian, unitary_exp, CMatrix, LabeledOperator,
    SpaceDescriptor,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn space(label: &str, d: usize) -> SpaceDescriptor {
    SpaceDescriptor::single(label, d).unwrap()
}

/// `(ρ_θ, dρ_θ)` for `e^{−iθH} ρ₀ e^{iθH}`.
pub fn rotated(rho0: &CMatrix, h: &CMatrix, theta: f64) -> (CMatrix, CMatrix) {
    let u = unitary_exp(h, theta);
    let rho = &u * rho0 * u.adjoint();
    let d = (h * &rho - &rho * h) * Complex64::new(0.0, -1.0);
    (rho, d)
}

pub fn qfi(rho: &CMatrix, drho: &CMatrix) -> f64 {
    let s = space("s", rho.nrows());
    let r = LabeledOperator::new(s.clone(), rho.clone()).unwrap();
    let d = LabeledOperator::new(s, drho.clone()).unwrap();
    qfi_of(&r, &d, DEFAULT_CUTOFF).unwrap().value
}

fn random_state<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    let rank = rng.random_range(1..=d);
    random_density(space("s", d), rank, rng).matrix().clone()
}

/// Kraus operators of a random channel `C^d → C^{d_out}` with `k` outcomes,
/// cut from one Haar isometry.
pub fn random_kraus<R: Rng>(d: usize, d_out: usize, k: usize, rng: &mut R) -> Vec<CMatrix> {
    let v = haar_isometry(d, d_out * k, rng).unwrap();
    (0..k)
        .map(|j| v.rows(j * d_out, d_out).into_owned())
        .collect()
}

pub fn apply_kraus(kraus: &[CMatrix], x: &CMatrix) -> CMatrix {
    let d_out = kraus[0].nrows();
    kraus.iter().fold(DMatrix::zeros(d_out, d_out), |acc, k| {
        acc + k * x * k.adjoint()
    })
}

/// `F[Λ(ρ_θ)] − F[ρ_θ]` for a random channel and unitary family.
pub fn monotonicity_excess(seed: u64) -> f64 {
    let mut r = rng(seed);
    let d = r.random_range(2..=3);
    let rho0 = random_state(d, &mut r);
    let h = random_hermitian(d, &mut r);
    let theta = r.random_range(0.0..std::f64::consts::TAU);
    let (rho, drho) = rotated(&rho0, &h, theta);
    let d_out = r.random_range(2..=3);
    let k = r.random_range(d.div_ceil(d_out)..=3);
    let kraus = random_kraus(d, d_out, k, &mut r);
    qfi(&apply_kraus(&kraus, &rho), &apply_kraus(&kraus, &drho)) - qfi(&rho, &drho)
}

/// Largest `F[pρ + (1−p)σ] − pF[ρ] − (1−p)F[σ]` over `p ∈ {0.1, …, 0.9}`.
pub fn convexity_excess(seed: u64) -> f64 {
    let mut r = rng(seed);
    let d = r.random_range(2..=4);
    let h = random_hermitian(d, &mut r);
    let theta = r.random_range(0.0..std::f64::consts::TAU);
    let (a, da) = rotated(&random_state(d, &mut r), &h, theta);
    let (b, db) = rotated(&random_state(d, &mut r), &h, theta);
    let (fa, fb) = (qfi(&a, &da), qfi(&b, &db));
    (1..=9)
        .map(|j| {
            let p = j as f64 / 10.0;
            let mix = |x: &CMatrix, y: &CMatrix| {
                x * Complex64::new(p, 0.0) + y * Complex64::new(1.0 - p, 0.0)
            };
            qfi(&mix(&a, &b), &mix(&da, &db)) - p * fa - (1.0 - p) * fb
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `|F[(V ⊗ I)ρ_θ(V ⊗ I)†] − F[ρ_θ]|` for a random isometry on the first
/// factor of a qubit ⊗ qubit family.
pub fn isometry_gap(seed: u64) -> f64 {
    let mut r = rng(seed);
    let rho0 = random_state(4, &mut r);
    let h = random_hermitian(4, &mut r);
    let theta = r.random_range(0.0..std::f64::consts::TAU);
    let (rho, drho) = rotated(&rho0, &h, theta);
    let d_out = r.random_range(2..=5);
    let v = haar_isometry(2, d_out, &mut r)
        .unwrap()
        .kronecker(&DMatrix::identity(2, 2));
    let conj = |x: &CMatrix| &v * x * v.adjoint();
    (qfi(&conj(&rho), &conj(&drho)) - qfi(&rho, &drho)).abs()
}
