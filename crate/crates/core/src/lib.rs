//! Quantum Fisher information of parametrized quantum combs.
//!
//! The crate is organized bottom-up:
//!
//! * [`tensor`]: labeled dense linear algebra (partial traces, transposes,
//!   permutations, Hermitian eigendecomposition, Haar sampling).
//! * [`comb`]: Choi operators of channels, combs and sensors, comb validation
//!   and the link product.
//! * [`qfi`]: symmetric logarithmic derivatives, state and channel QFI,
//!   Cramér–Rao bounds and estimation simulations.
//! * [`bound`]: the dimension-factor upper bound on comb QFI, teleportation
//!   postselection and memory-advantage reports.
//! * [`protected`]: the shield/key comb whose parameter is only accessible to
//!   sensors with memory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod comb;
mod error;
pub mod protected;
pub mod qfi;
pub mod tensor;

pub use error::{Error, Result};
