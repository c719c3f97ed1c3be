//! Constructive-interference 1-bit precoding for the massive MIMO downlink.
//!
//! A base station with `Nt` antennas and 1-bit DACs serves `K` single-antenna
//! users; every transmit entry is `+/-1/sqrt(2Nt) +/- j/sqrt(2Nt)`. Rather
//! than forcing the received points onto the symbols, the precoders here
//! maximize the constructive-interference margin: each noiseless received
//! symbol is decomposed along its two detection boundaries, and the smallest
//! scaling coefficient is pushed as deep into the decision region as the
//! 1-bit alphabet allows.
//!
//! The crate provides:
//!
//! - the real-expansion algebra, DAC alphabet, and PSK/QAM constellations
//!   with Gray labels ([`expand`], [`constellation`]);
//! - the scaling-matrix formulation `Lambda = M x_E` plus structural audits
//!   (rank, boundary count, KKT residuals) ([`geometry`]);
//! - deterministic convex solvers: a box-constrained max-min simplex with
//!   dual certificates and a box-constrained least-squares active set
//!   ([`solver`]);
//! - branch-and-bound over the handful of relaxed entries that violate the
//!   1-bit constraint (partial BB), full BB and exhaustive oracles ([`bb`]);
//! - end-to-end precoders: quantized/unquantized ZF, CI 1-bit, OPSU, P-BB,
//!   F-BB, and the QAM alternating optimization ([`precode`]);
//! - a seeded Monte Carlo harness for BER sweeps, node counts, convergence
//!   traces, and structural audits, with CSV export ([`sim`]).
//!
//! Start with the runnable examples (`cargo run --release --example
//! ci_relaxation`) or the `onebit-ci` binary for the simulation campaigns.

pub mod bb;
pub mod constellation;
pub mod error;
pub mod expand;
pub mod geometry;
pub mod precode;
pub mod sim;
pub mod solver;

pub use constellation::{Constellation, ConstellationKind};
pub use error::{Error, Result};
pub use expand::DacAlphabet;
pub use geometry::CiProblem;
pub use precode::PrecodeResult;
