use anyhow::Context;
use combfisher::bound::{
    random_comb, sample_sensors, sensor_qfi, simulate_teleport_trick, theorem1_bound,
    RandomCombSpec,
};
use combfisher::comb::{wire_through_sensor, CombFamily, StinespringComb, REFERENCE_LABEL};
use combfisher::protected::{
    build_protected_comb, protected_output_exact, protected_output_mc, tightness_report, twirl,
    twirl_monte_carlo, verify_parallel_bound, ProtectedCombSpec, A_IN, A_IN_REF, PROTECTED_SLACK,
};
use combfisher::qfi::{
    cramer_rao, qfi_channel, qfi_state, simulate_estimation, unitary_channel_qfi,
    EstimationSettings, MultistartConfig, ParametrizedFamily, Povm, DEFAULT_CUTOFF,
    DEFAULT_FD_STEP,
};
use combfisher::tensor::{
    c, haar_unitary, herm_eig_matrix, pauli, random_density, random_pure_state, tolerance,
    trace_distance, CMatrix, DensityOperator, LabeledOperator, LinearMap, PureState,
    SpaceDescriptor,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig, Parameters};
use crate::record::Recorder;

/// Agreement demanded between two exact evaluations of the same QFI.
const EXACT_TOL: f64 = 1e-8;
/// Agreement demanded between the optimizer and a closed form.
const OPTIMIZER_TOL: f64 = 1e-6;

pub fn run(cfg: &ExperimentConfig, rec: &mut Recorder) -> anyhow::Result<Value> {
    let p = &cfg.parameters;
    let seed = cfg.seed.unwrap_or(0);
    let out = match cfg.experiment {
        Experiment::QfiState => qfi_state_run(p, rec),
        Experiment::QfiChannel => qfi_channel_run(p, seed, rec),
        Experiment::Bound => bound_run(p, seed, rec),
        Experiment::Protected => protected_run(p, seed, rec),
        Experiment::TwirlCheck => twirl_run(p, seed, rec),
        Experiment::Estimate => estimate_run(p, seed, rec),
    };
    out.with_context(|| format!("experiment `{}`", cfg.experiment))
}

fn qubit() -> anyhow::Result<SpaceDescriptor> {
    Ok(SpaceDescriptor::single("q", 2)?)
}

fn bloch_state(bloch: [f64; 3], mixing: f64) -> anyhow::Result<DensityOperator> {
    let s = 0.5 * (1.0 - mixing);
    let m = pauli::combination([0.5, s * bloch[0], s * bloch[1], s * bloch[2]]);
    Ok(DensityOperator::new(LabeledOperator::new(qubit()?, m)?)?)
}

fn multistart(p: &Parameters, seed: u64) -> MultistartConfig {
    MultistartConfig::default()
        .with_starts(p.starts)
        .with_seed(seed)
}

/// `4|h × r|²` for `H = h₀I + h·σ` acting on Bloch vector `r`.
fn bloch_rotation_qfi(generator: [f64; 4], r: [f64; 3]) -> f64 {
    let h = [generator[1], generator[2], generator[3]];
    let cross = [
        h[1] * r[2] - h[2] * r[1],
        h[2] * r[0] - h[0] * r[2],
        h[0] * r[1] - h[1] * r[0],
    ];
    4.0 * cross.iter().map(|x| x * x).sum::<f64>()
}

fn qfi_state_run(p: &Parameters, rec: &mut Recorder) -> anyhow::Result<Value> {
    let rho0 = bloch_state(p.bloch, p.mixing)?;
    let h = LabeledOperator::new(qubit()?, pauli::combination(p.generator))?;
    let fam = ParametrizedFamily::unitary(&rho0, &h)?;
    let fd = fam.with_finite_difference(DEFAULT_FD_STEP)?;
    let r = p.bloch.map(|x| x * (1.0 - p.mixing));
    let closed = bloch_rotation_qfi(p.generator, r);
    let mut rows = Vec::new();
    for &theta in &p.theta {
        let exact = qfi_state(&fam, theta, DEFAULT_CUTOFF)?;
        let approx = qfi_state(&fd, theta, DEFAULT_CUTOFF)?;
        rec.push("qfi", Some(theta), exact.value, EXACT_TOL);
        rec.push(
            "qfi_finite_difference",
            Some(theta),
            approx.value,
            OPTIMIZER_TOL,
        );
        rec.push("qfi_closed_form", Some(theta), closed, EXACT_TOL);
        rec.push("sld_residual", Some(theta), exact.sld_residual, EXACT_TOL);
        rec.check((exact.value - closed).abs() <= EXACT_TOL, || {
            format!(
                "θ={theta}: QFI {} differs from closed form {closed}",
                exact.value
            )
        });
        rec.check(exact.sld_residual <= EXACT_TOL, || {
            format!("θ={theta}: SLD residual {:.3e}", exact.sld_residual)
        });
        rec.check((approx.value - exact.value).abs() <= OPTIMIZER_TOL, || {
            format!(
                "θ={theta}: finite-difference QFI {} vs {}",
                approx.value, exact.value
            )
        });
        rows.push(json!({"theta": theta, "qfi": exact.value, "qfi_fd": approx.value}));
    }
    Ok(json!({"closed_form": closed, "points": rows}))
}

/// `V_θ` followed by dephasing `ρ ↦ (1 − p)ρ + pZρZ`, with the dephasing
/// environment kept in the dilation.
fn dephased_unitary(generator: &CMatrix, p: f64) -> anyhow::Result<StinespringComb> {
    let kraus = [
        pauli::i() * c((1.0 - p).sqrt(), 0.0),
        pauli::z() * c(p.sqrt(), 0.0),
    ];
    let m = CMatrix::from_fn(4, 2, |row, i| kraus[row % 2][(row / 2, i)]);
    let w = LinearMap::new(
        SpaceDescriptor::single("in", 2)?,
        SpaceDescriptor::new([("out", 2), ("env", 2)])?,
        m,
    )?;
    let ports = combfisher::comb::PortSpec::channel("in", 2, "out", 2)?;
    let g = LabeledOperator::new(SpaceDescriptor::single("in", 2)?, generator.clone())?;
    Ok(StinespringComb::new(ports, w, Some(g))?)
}

fn qfi_channel_run(p: &Parameters, seed: u64, rec: &mut Recorder) -> anyhow::Result<Value> {
    let h = pauli::combination(p.generator);
    let comb = dephased_unitary(&h, p.dephasing)?;
    let spread = unitary_channel_qfi(&h);
    let commuting = p.generator[1] == 0.0 && p.generator[2] == 0.0;
    let closed = commuting.then(|| (1.0 - 2.0 * p.dephasing).powi(2) * spread);
    let mut rows = Vec::new();
    for &theta in &p.theta {
        let q = qfi_channel(&comb, theta, &multistart(p, seed), &[], DEFAULT_CUTOFF)?;
        let s = q.summary();
        rec.push("channel_qfi", Some(theta), s.value, OPTIMIZER_TOL);
        rec.push(
            "agreeing_starts",
            Some(theta),
            s.agreeing_starts as f64,
            0.0,
        );
        rec.check(s.value <= spread + EXACT_TOL, || {
            format!(
                "θ={theta}: channel QFI {} exceeds the unitary value {spread}",
                s.value
            )
        });
        if let Some(cf) = closed {
            rec.push("channel_qfi_closed_form", Some(theta), cf, EXACT_TOL);
            rec.check(s.flagged || (s.value - cf).abs() <= OPTIMIZER_TOL, || {
                format!("θ={theta}: channel QFI {} vs closed form {cf}", s.value)
            });
        }
        rows.push(json!({"theta": theta, "summary": s}));
    }
    rec.push("unitary_channel_qfi", None, spread, EXACT_TOL);
    Ok(json!({"closed_form": closed, "points": rows}))
}

fn bound_run(p: &Parameters, seed: u64, rec: &mut Recorder) -> anyhow::Result<Value> {
    let spec = RandomCombSpec {
        phases: vec![(2, 2); p.phases],
        memory_dim: p.memory_dim,
        env_dim: 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let (mut flagged, mut instances, mut violations) = (0usize, 0usize, 0usize);
    let mut first = None;
    for i in 0..p.combs {
        let comb = random_comb(&spec, &mut rng)?;
        let sensors = sample_sensors(&comb, p.sensors, p.ancilla_dim, &mut rng)?;
        for &theta in &p.theta {
            let cfg = multistart(p, seed.wrapping_add(i as u64));
            let r = theorem1_bound(&comb, theta, &cfg, &[], &sensors)?;
            instances += 1;
            let best = r.sampled_sensor_qfis.iter().copied().fold(0.0, f64::max);
            if r.flagged {
                flagged += 1;
            } else {
                violations += r.violations;
                rec.check(r.violations == 0, || {
                    format!(
                        "comb {i}, θ={theta}: {} sensors exceed the bound {}",
                        r.violations, r.bound
                    )
                });
            }
            rows.push(json!({
                "comb": i, "theta": theta, "dim_factor": r.dim_factor, "parallel_qfi": r.parallel_qfi,
                "bound": r.bound, "method": r.method, "best_sensor_qfi": best,
                "violations": r.violations, "flagged": r.flagged,
            }));
            rec.push(format!("comb{i}.bound"), Some(theta), r.bound, 1e-8);
            rec.push(format!("comb{i}.best_sensor_qfi"), Some(theta), best, 1e-8);
        }
        if first.is_none() {
            first = Some((comb, sensors.into_iter().next()));
        }
    }
    let rate = flagged as f64 / instances.max(1) as f64;
    rec.push(
        "dim_factor",
        None,
        (1u64 << (2 * (p.phases - 1))) as f64,
        0.0,
    );
    rec.push("violations", None, violations as f64, 0.0);
    rec.push("exclusion_rate", None, rate, 0.0);

    let mut teleport = Value::Null;
    if p.teleport_trials > 0 {
        if let Some((comb, Some(sensor))) = &first {
            let t = simulate_teleport_trick(
                &comb.choi(p.theta[0])?,
                sensor,
                p.teleport_trials,
                &mut rng,
            )?;
            rec.push(
                "teleport.p_empirical",
                Some(p.theta[0]),
                t.p_empirical,
                3.0 * t.sigma,
            );
            rec.push("teleport.p_theory", Some(p.theta[0]), t.p_theory, 0.0);
            if let Some(f) = t.conditional_fidelity {
                rec.push("teleport.fidelity", Some(p.theta[0]), f, 1e-6);
                rec.check(f >= 1.0 - 1e-6, || {
                    format!("teleported state has fidelity {f}")
                });
            }
            teleport = serde_json::to_value(&t)?;
        }
    }
    Ok(json!({"instances": rows, "flagged": flagged, "teleport": teleport}))
}

fn protected_run(p: &Parameters, seed: u64, rec: &mut Recorder) -> anyhow::Result<Value> {
    let spec = ProtectedCombSpec::new(p.dims.clone(), pauli::combination(p.generator))?;
    let d = spec.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = tightness_report(&spec, &multistart(p, seed))?;
    rec.push("optimal_qfi", None, t.optimal_qfi, EXACT_TOL);
    rec.push("parallel_qfi", None, t.parallel_qfi, PROTECTED_SLACK);
    rec.push("parallel_cap", None, t.parallel_cap, EXACT_TOL);
    if let Some(r) = t.ratio {
        rec.push("ratio", None, r, PROTECTED_SLACK);
    }
    rec.push("ratio_floor", None, t.ratio_floor, 0.0);
    rec.check(t.holds, || {
        format!(
            "optimal QFI {} below (D²/4)·{}",
            t.optimal_qfi, t.parallel_qfi
        )
    });

    let input_space = SpaceDescriptor::new([(A_IN, 2), (A_IN_REF, 2)])?;
    let mut inputs: Vec<PureState> = (0..p.inputs)
        .map(|_| random_pure_state(input_space.clone(), &mut rng))
        .collect();
    if let Some(best) = &t.best_input {
        inputs.push(best.clone());
    }
    let shield = haar_unitary(d, &mut rng)?;
    let comb = build_protected_comb(&spec, &shield)?;
    let eig = herm_eig_matrix(spec.generator());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let probe = PureState::normalized(
        SpaceDescriptor::new([(A_IN, 2), (REFERENCE_LABEL, 1)])?,
        (eig.vectors.column(0) + eig.vectors.column(1)) * c(s, 0.0),
    )?;
    let sensor = wire_through_sensor(comb.ports(), &probe)?;

    let mut rows = Vec::new();
    for &theta in &p.theta {
        let mut worst = 0.0f64;
        for (k, psi) in inputs.iter().enumerate() {
            let b = verify_parallel_bound(&spec, psi, theta)?;
            worst = worst.max(b.lhs);
            rec.check(b.holds_mixture && b.holds_spread, || {
                format!(
                    "θ={theta}, input {k}: output QFI {} above {} or {}",
                    b.lhs, b.rhs_mixture, b.rhs_spread
                )
            });
        }
        rec.push("max_output_qfi", Some(theta), worst, PROTECTED_SLACK);
        let wire = sensor_qfi(&comb.choi(theta)?, &comb.choi_derivative(theta)?, &sensor)?;
        rec.push("wire_through_qfi", Some(theta), wire, EXACT_TOL);
        rec.check((wire - t.optimal_qfi).abs() <= EXACT_TOL, || {
            format!("θ={theta}: wire-through QFI {wire} vs {}", t.optimal_qfi)
        });
        let mut mc_distance = Value::Null;
        if p.samples > 0 {
            let exact = protected_output_exact(&spec, &inputs[0], theta)?;
            let mc = protected_output_mc(&spec, &inputs[0], theta, p.samples, &mut rng)?;
            let dist = trace_distance(mc.as_operator(), exact.state.as_operator())?;
            rec.push(
                "mc_trace_distance",
                Some(theta),
                dist,
                5.0 / (p.samples as f64).sqrt(),
            );
            mc_distance = json!(dist);
        }
        rows.push(json!({"theta": theta, "max_output_qfi": worst, "wire_through_qfi": wire, "mc_trace_distance": mc_distance}));
    }
    Ok(json!({"tightness": t, "points": rows}))
}

fn twirl_run(p: &Parameters, seed: u64, rec: &mut Recorder) -> anyhow::Result<Value> {
    let d: usize = p.dims.iter().product();
    let space = SpaceDescriptor::new([("a", d), ("b", d)])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol_mc = 5.0 / (p.samples as f64).sqrt();
    let mut rows = Vec::new();
    for i in 0..p.inputs.max(1) {
        let rho = random_density(space.clone(), d * d, &mut rng).into_operator();
        let exact = twirl(&rho, "a", "b")?;
        let again = twirl(&exact, "a", "b")?;
        let idem = again.sub(&exact)?.frobenius_norm();
        let trace = (exact.trace().re - 1.0).abs();
        let min_eig = herm_eig_matrix(exact.matrix()).min();
        let mc = twirl_monte_carlo(&rho, "a", "b", p.samples, &mut rng)?;
        let dist = trace_distance(&mc, &exact)?;
        rec.push(format!("input{i}.idempotence_residual"), None, idem, 1e-12);
        rec.push(
            format!("input{i}.trace_residual"),
            None,
            trace,
            tolerance::TRACE,
        );
        rec.push(
            format!("input{i}.min_eigenvalue"),
            None,
            min_eig,
            tolerance::PSD,
        );
        rec.push(format!("input{i}.mc_trace_distance"), None, dist, tol_mc);
        rec.check(idem <= 1e-12, || {
            format!("input {i}: twirl not idempotent ({idem:.3e})")
        });
        rec.check(trace <= tolerance::TRACE, || {
            format!("input {i}: trace off by {trace:.3e}")
        });
        rec.check(min_eig >= -tolerance::PSD, || {
            format!("input {i}: eigenvalue {min_eig:.3e}")
        });
        rows.push(json!({"input": i, "mc_trace_distance": dist, "idempotence_residual": idem}));
    }
    Ok(json!({"d": d, "samples": p.samples, "inputs": rows}))
}

fn estimate_run(p: &Parameters, seed: u64, rec: &mut Recorder) -> anyhow::Result<Value> {
    let rho0 = bloch_state(p.bloch, p.mixing)?;
    let h = LabeledOperator::new(qubit()?, pauli::combination(p.generator))?;
    let fam = ParametrizedFamily::unitary(&rho0, &h)?;
    let povm = Povm::from_observable(&LabeledOperator::new(
        qubit()?,
        pauli::combination(p.observable),
    )?)?;
    let settings = EstimationSettings {
        grid_points: p.grid_points,
        trials: p.trials,
        ..EstimationSettings::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for &theta in &p.theta {
        let f = qfi_state(&fam, theta, DEFAULT_CUTOFF)?.value;
        let run = simulate_estimation(&fam, theta, p.nu, &povm, settings, &mut rng)?;
        rec.push("qfi", Some(theta), f, EXACT_TOL);
        rec.push("rmse", Some(theta), run.rmse, 0.0);
        rec.push("bias", Some(theta), run.bias, 0.0);
        rec.push("flat_trials", Some(theta), run.flat_trials as f64, 0.0);
        let cr = cramer_rao(f, p.nu).ok();
        if let Some(cr) = cr {
            rec.push("cramer_rao", Some(theta), cr, EXACT_TOL);
            rec.push("rmse_over_cramer_rao", Some(theta), run.rmse / cr, 0.0);
        }
        rows.push(
            json!({"theta": theta, "qfi": f, "cramer_rao": cr, "rmse": run.rmse, "bias": run.bias}),
        );
    }
    Ok(json!({"estimator": "grid-mle", "points": rows}))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bloch_closed_form_matches_pure_variance() {
        // |+⟩ under σz/2: 4 Var = 1
        assert!((bloch_rotation_qfi([0.0, 0.0, 0.0, 0.5], [1.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(
            bloch_rotation_qfi([0.0, 0.0, 0.0, 0.5], [0.0, 0.0, 1.0]),
            0.0
        );
    }

    #[test]
    fn dephased_channel_is_valid() {
        let comb = dephased_unitary(&(pauli::z() * c(0.5, 0.0)), 0.1).unwrap();
        let report = combfisher::comb::validate_comb(&comb.choi(0.2).unwrap(), 1e-9);
        assert!(report.valid);
    }
}
