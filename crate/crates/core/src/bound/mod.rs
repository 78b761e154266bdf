//! Upper bound on the QFI of a comb by its phase-parallel QFI, and the
//! postselected teleportation protocol behind it.

mod parallel;
mod random;
mod sweep;
mod teleport;

pub use parallel::{
    choi_extended_state, dim_factor, later_input_dim, parallel_partner, phase_parallel_qfi,
    reference_label, success_probability, ParallelMethod, ParallelQfi,
};
pub use random::{random_comb, RandomCombSpec};
pub use sweep::{
    memory_advantage, sample_sensors, sensor_qfi, sensor_sweep, theorem1_bound, BoundReport,
    MemoryAdvantage, BOUND_SLACK,
};
pub use teleport::{simulate_teleport_trick, TeleportReport};
