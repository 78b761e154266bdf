//! Quantum Fisher information of states and channels, estimation
//! simulation and the postselection inequality.

mod channel;
mod estimation;
mod family;
mod optimize;
mod postselect;
mod sld;

pub use channel::{
    isometric_channel_qfi, qfi_channel, qfi_factored, unitary_channel_qfi, ChannelFactors,
    ChannelQfi, ChannelQfiSummary,
};
pub use estimation::{cramer_rao, simulate_estimation, EstimationRun, EstimationSettings, Povm};
pub use family::{family_derivative, DerivativeMode, ParametrizedFamily, StateFn, DEFAULT_FD_STEP};
pub use optimize::{
    maximize_over_states, point_to_state, random_starts, state_to_point, MultistartConfig,
    MultistartOutcome,
};
pub use postselect::{
    check_postselection, PostselectionReport, MIN_SUCCESS_PROBABILITY, POSTSELECTION_SLACK,
};
pub use sld::{pure_state_qfi, qfi_of, qfi_state, sld, QfiResult, Sld, DEFAULT_CUTOFF};
