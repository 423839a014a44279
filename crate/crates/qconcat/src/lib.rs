//! Coding library and Monte Carlo simulator for polar outer codes
//! concatenated with quantum LDPC CSS inner codes.
//!
//! Quantum channels are handled through their classical reduction: a Pauli
//! error is a pair of GF(2) vectors `(e_x, e_z)` plus an erased-position set,
//! and each CSS side is decoded as a classical linear code. The crate is
//! organised bottom-up:
//!
//! * [`gf2`] - bit-packed GF(2) vectors and matrices, elimination, and the
//!   restricted solver used for erasure decoding.
//! * [`polar`] - Bhattacharyya construction for the BEC, natural-order
//!   encoding, and successive cancellation decoders (erasure-exact and soft).
//! * [`css_ldpc`] - CSS code pairs (Steane, seeded bicycle codes), syndrome
//!   tools, erasure and belief propagation decoders, and degeneracy-aware
//!   failure classification.
//! * [`channels`] - classically reduced quantum erasure and depolarizing
//!   channels.
//! * [`concat`] - the concatenated scheme: per-side polar outer code over the
//!   systematic info positions of the inner CSS blocks.
//! * [`sim`] - deterministic Monte Carlo harness, Wilson intervals, error
//!   floor metric, complexity probe, and the CSV boundary.
//!
//! Every random quantity is derived from explicit seeds; reruns with the same
//! configuration and seed are bit-identical regardless of worker count.

pub mod channels;
pub mod concat;
pub mod css_ldpc;
pub mod gf2;
pub mod polar;
pub mod sim;

pub(crate) mod util;
