//! A comb whose sequential QFI exceeds its phase-parallel QFI by a factor
//! growing with the stored dimension: the probe is scrambled by a Haar
//! shield in the first phase and unscrambled by the key in the last.

mod comb;
mod output;
mod report;
mod spec;
mod twirl;

pub use comb::{
    a_out, b_in, build_protected_comb, protected_ports, AveragedProtectedComb, ANC_ENV, A_IN,
    A_IN_REF, A_TOT, B_REF, KEY_OUT1, KEY_OUT2,
};
pub use output::{
    input_operator, output_labels, protected_block_qfi, protected_output_composed,
    protected_output_exact, protected_output_family, protected_output_for_shield,
    protected_output_mc, reduced_input, rotated_input, twisted_state, ProtectedOutput,
};
pub use report::{
    tightness_report, verify_parallel_bound, ParallelBoundCheck, TightnessReport, PROTECTED_SLACK,
};
pub use spec::{spec_violations, ProtectedCombSpec};
pub use twirl::{antisym_state, twirl, twirl_monte_carlo};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::{memory_advantage, phase_parallel_qfi};
    use crate::comb::{wire_through_sensor, CombFamily, REFERENCE_LABEL};
    use crate::qfi::MultistartConfig;
    use crate::tensor::{c, pauli, PureState};

    fn spec(d: usize) -> ProtectedCombSpec {
        ProtectedCombSpec::with_total_dim(d, pauli::z() * c(0.5, 0.0)).unwrap()
    }

    #[test]
    fn averaged_comb_parallel_qfi_matches_block_optimum() {
        let cfg = MultistartConfig::default().with_starts(6);
        let s = spec(2);
        let avg = AveragedProtectedComb::new(&s).unwrap();
        let p = phase_parallel_qfi(&avg, 0.2, &cfg, &[]).unwrap();
        let t = tightness_report(&s, &cfg).unwrap();
        assert!(
            (p.value - t.parallel_qfi).abs() < 1e-6,
            "{} vs {}",
            p.value,
            t.parallel_qfi
        );
    }

    #[test]
    fn wire_through_beats_parallel() {
        let s = spec(2);
        let avg = AveragedProtectedComb::new(&s).unwrap();
        let probe = PureState::max_entangled(A_IN, REFERENCE_LABEL, 2).unwrap();
        let sensor = wire_through_sensor(avg.ports(), &probe).unwrap();
        let q = crate::bound::sensor_qfi(
            &avg.choi(0.1).unwrap(),
            &avg.choi_derivative(0.1).unwrap(),
            &sensor,
        )
        .unwrap();
        assert!((q - 1.0).abs() < 1e-9, "{q}");
        let adv = memory_advantage(
            &avg,
            0.1,
            &MultistartConfig::default().with_starts(6),
            &[],
            &[sensor],
        )
        .unwrap();
        assert!(adv.within_ceiling, "{adv:?}");
        assert!(adv.ratio.unwrap() >= 2.0 - 1e-6, "{adv:?}");
    }
}
