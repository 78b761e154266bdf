//! Multistart quasi-Newton maximization over pure states.
//!
//! A pure state on `C^n` is parametrized by `x ∈ R^{2n}` through
//! `ψ = (x_re + i x_im) / ‖x‖`. Each start runs BFGS with Armijo
//! backtracking on central-difference gradients.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tensor::CVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultistartConfig {
    pub starts: usize,
    pub max_iterations: usize,
    pub gradient_step: f64,
    /// Stop when an iteration improves the value by less than this (relative).
    pub tolerance: f64,
    /// Starts within `agreement · max(1, best)` of the best count as agreeing.
    pub agreement: f64,
    pub seed: u64,
}

impl Default for MultistartConfig {
    fn default() -> Self {
        MultistartConfig {
            starts: 32,
            max_iterations: 300,
            gradient_step: 1e-6,
            tolerance: 1e-12,
            agreement: 1e-6,
            seed: 0,
        }
    }
}

impl MultistartConfig {
    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = starts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug)]
pub struct MultistartOutcome {
    pub best_value: f64,
    pub best_state: CVector,
    /// Final value reached from each start, in start order.
    pub start_values: Vec<f64>,
    pub agreeing_starts: usize,
    /// Set when fewer than two starts reach the best value.
    pub flagged: bool,
}

/// Maps `x ∈ R^{2n}` to a unit vector in `C^n`.
pub fn point_to_state(x: &[f64]) -> CVector {
    let n = x.len() / 2;
    let v = DVector::from_fn(n, |i, _| Complex64::new(x[i], x[n + i]));
    let norm = v.norm();
    if norm > 0.0 {
        v.unscale(norm)
    } else {
        let mut e = DVector::zeros(n);
        e[0] = Complex64::new(1.0, 0.0);
        e
    }
}

pub fn state_to_point(v: &CVector) -> Vec<f64> {
    v.iter()
        .map(|z| z.re)
        .chain(v.iter().map(|z| z.im))
        .collect()
}

fn gradient<F: Fn(&CVector) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&point_to_state(&probe));
            probe[i] = x[i] - h;
            let down = f(&point_to_state(&probe));
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// BFGS ascent from one start; returns the final point and value.
fn ascend<F: Fn(&CVector) -> f64>(f: &F, start: &[f64], cfg: &MultistartConfig) -> (Vec<f64>, f64) {
    let m = start.len();
    let mut x = start.to_vec();
    normalize(&mut x);
    let mut fx = f(&point_to_state(&x));
    let mut g = gradient(f, &x, cfg.gradient_step);
    let mut h_inv = DMatrix::<f64>::identity(m, m);
    let mut stalls = 0;
    for _ in 0..cfg.max_iterations {
        let gv = DVector::from_column_slice(&g);
        let mut p = &h_inv * &gv;
        let mut slope = p.dot(&gv);
        if slope <= 0.0 {
            h_inv = DMatrix::identity(m, m);
            p = gv.clone();
            slope = p.dot(&gv);
        }
        if slope <= 1e-300 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + t * b).collect();
            let ft = f(&point_to_state(&trial));
            if ft >= fx + 1e-4 * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((mut x_new, f_new)) = accepted else {
            break;
        };
        // the objective is scale invariant; keep the iterate on the sphere
        normalize(&mut x_new);
        let g_new = gradient(f, &x_new, cfg.gradient_step);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 {
            let rho = 1.0 / sy;
            let sv = DVector::from_column_slice(&s);
            let yv = DVector::from_column_slice(&y);
            let left = DMatrix::identity(m, m) - &sv * yv.transpose() * rho;
            h_inv = &left * &h_inv * left.transpose() + &sv * sv.transpose() * rho;
        }
        let improvement = f_new - fx;
        x = x_new;
        fx = f_new;
        g = g_new;
        if improvement <= cfg.tolerance * fx.abs().max(1.0) {
            stalls += 1;
            if stalls >= 2 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    (x, fx)
}

/// Random starting points, drawn sequentially from `seed`.
pub fn random_starts(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..2 * dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect()
        })
        .collect()
}

/// Maximizes `f` over unit vectors in `C^dim` from `cfg.starts` random starts
/// plus the given candidate states.
///
/// Starts run in parallel; the reduction is over start order, so results do
/// not depend on scheduling.
pub fn maximize_over_states<F>(
    f: F,
    dim: usize,
    candidates: &[CVector],
    cfg: &MultistartConfig,
) -> MultistartOutcome
where
    F: Fn(&CVector) -> f64 + Sync,
{
    let mut starts: Vec<Vec<f64>> = candidates.iter().map(state_to_point).collect();
    starts.extend(random_starts(dim, cfg.starts, cfg.seed));
    let runs: Vec<(Vec<f64>, f64)> = starts.par_iter().map(|s| ascend(&f, s, cfg)).collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.1 > runs[best].1 {
            best = i;
        }
    }
    let best_value = runs[best].1;
    let window = cfg.agreement * best_value.abs().max(1.0);
    let start_values: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let agreeing_starts = start_values
        .iter()
        .filter(|&&v| v >= best_value - window)
        .count();
    MultistartOutcome {
        best_value,
        best_state: point_to_state(&runs[best].0),
        start_values,
        agreeing_starts,
        flagged: agreeing_starts < 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::random_hermitian;

    #[test]
    fn finds_top_eigenvalue_of_hermitian_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(5, &mut rng);
        let top = crate::tensor::herm_eig_matrix(&h).max();
        let out = maximize_over_states(
            |v: &CVector| v.dotc(&(&h * v)).re,
            5,
            &[],
            &MultistartConfig::default().with_starts(8),
        );
        assert!(
            (out.best_value - top).abs() < 1e-8,
            "{} vs {}",
            out.best_value,
            top
        );
        assert!(!out.flagged);
        assert_eq!(out.start_values.len(), 8);
    }

    #[test]
    fn deterministic_given_seed() {
        let f = |v: &CVector| (v[0].norm_sqr() - 0.3).powi(2) + v[1].re;
        let cfg = MultistartConfig::default().with_starts(6).with_seed(9);
        let a = maximize_over_states(f, 3, &[], &cfg);
        let b = maximize_over_states(f, 3, &[], &cfg);
        assert_eq!(a.start_values, b.start_values);
    }

    #[test]
    fn single_start_is_flagged() {
        let out = maximize_over_states(
            |v: &CVector| v[0].norm_sqr(),
            2,
            &[],
            &MultistartConfig::default().with_starts(1),
        );
        assert!(out.flagged);
        assert!((out.best_value - 1.0).abs() < 1e-8);
    }
}
