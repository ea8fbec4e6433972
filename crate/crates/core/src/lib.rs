//! Test pattern generation for logic-testing-based hardware Trojan detection.
//!
//! The crate is `no_std` (it needs `alloc`). Every stage is a pure function
//! over an immutable [`Netlist`](netlist::Netlist):
//!
//! * [`netlist`] parses bench-format gate-level netlists and levelizes them.
//! * [`sim`] evaluates the netlist, one vector at a time or 64 lanes per word.
//! * [`profile`] estimates signal probabilities, picks rare nodes and computes
//!   SCOAP testability.
//! * [`satinit`] encodes the circuit to CNF and seeds a test set with vectors
//!   that drive chosen rare nodes to their rare values.
//! * [`tpg`] is the reward-guided adaptive search loop.
//! * [`trojan`] builds AND-triggered / XOR-payload Trojans for benchmarking.
//! * [`eval`] measures trigger and Trojan coverage and hosts the MERO-style and
//!   TRIAGE-style baselines.
//! * [`hwgen`] maps a finished test set onto a cyclic shift register driving an
//!   OR-gate network.
//!
//! Enable the `parallel` feature to evaluate candidate rewards and campaign
//! cells on a rayon pool; results never depend on the thread count.
#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

mod bits;
mod error;
pub mod eval;
pub mod hwgen;
pub mod netlist;
pub mod profile;
pub mod satinit;
pub mod seed;
pub mod sim;
pub mod tpg;
pub mod trojan;

pub use bits::BitVec;
pub use error::{Error, Result};
