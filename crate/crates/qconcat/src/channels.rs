//! Classically reduced quantum channels.
//!
//! A sampled Pauli error is a pair of GF(2) indicator vectors `(e_x, e_z)`
//! plus the set of positions the channel flagged as erased. The two models:
//!
//! * **Quantum erasure(eps)**: each position is independently erased with
//!   probability `eps`; an erased position carries independent fair-coin X
//!   and Z components, a kept position carries nothing. Decoders know the
//!   erased set.
//! * **Depolarizing(p)**: each position independently suffers X, Y, or Z
//!   with probability `p/3` each; Y sets both components. Nothing is erased,
//!   so decoders work from syndromes alone.
//!
//! The per-position draw order is fixed (erasure coin, then X coin, then Z
//! coin; one uniform draw for depolarizing), so a sample is a pure function
//! of the channel, the length, and the generator state.

use crate::gf2::BitVector;
use rand::Rng;
use std::fmt;

/// One sampled block error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliErrorSample {
    /// Bit-flip components (set on X and Y).
    pub e_x: BitVector,
    /// Phase-flip components (set on Z and Y).
    pub e_z: BitVector,
    /// Erased positions, ascending; empty for depolarizing noise.
    pub erased: Vec<usize>,
}

/// An iid single-qubit noise model, classically reduced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelModel {
    QuantumErasure { eps: f64 },
    Depolarizing { p: f64 },
}

impl ChannelModel {
    /// Parses the command-line form `erasure:0.3` or `depolarizing:0.05`.
    pub fn parse(text: &str) -> Result<Self, ChannelParseError> {
        let (kind, param) = text.split_once(':').ok_or_else(|| ChannelParseError {
            input: text.to_string(),
            reason: "expected kind:param".to_string(),
        })?;
        let value: f64 = param.parse().map_err(|_| ChannelParseError {
            input: text.to_string(),
            reason: "parameter must be a number".to_string(),
        })?;
        if !(0.0..=1.0).contains(&value) {
            return Err(ChannelParseError {
                input: text.to_string(),
                reason: "parameter must be in [0, 1]".to_string(),
            });
        }
        match kind {
            "erasure" => Ok(ChannelModel::QuantumErasure { eps: value }),
            "depolarizing" => Ok(ChannelModel::Depolarizing { p: value }),
            _ => Err(ChannelParseError {
                input: text.to_string(),
                reason: "unknown channel kind (erasure, depolarizing)".to_string(),
            }),
        }
    }

    /// CSV column value.
    pub fn kind_name(&self) -> &'static str {
        match self {
            ChannelModel::QuantumErasure { .. } => "erasure",
            ChannelModel::Depolarizing { .. } => "depolarizing",
        }
    }

    pub fn param(&self) -> f64 {
        match *self {
            ChannelModel::QuantumErasure { eps } => eps,
            ChannelModel::Depolarizing { p } => p,
        }
    }

    /// Same channel family at a different noise level; sweeps use this to
    /// walk a parameter grid.
    pub fn with_param(&self, param: f64) -> ChannelModel {
        assert!(
            (0.0..=1.0).contains(&param),
            "channel parameter must be in [0, 1]"
        );
        match self {
            ChannelModel::QuantumErasure { .. } => ChannelModel::QuantumErasure { eps: param },
            ChannelModel::Depolarizing { .. } => ChannelModel::Depolarizing { p: param },
        }
    }

    /// Per-side marginal bit-flip probability, the natural design point for
    /// classical decoding: `eps` for erasure (an erased position's component
    /// is a fair coin), `2p/3` for depolarizing (X and Y set `e_x`).
    pub fn design_crossover(&self) -> f64 {
        match *self {
            ChannelModel::QuantumErasure { eps } => eps,
            ChannelModel::Depolarizing { p } => 2.0 * p / 3.0,
        }
    }

    /// Draws one block error of length `n`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> PauliErrorSample {
        let mut e_x = BitVector::zeros(n);
        let mut e_z = BitVector::zeros(n);
        let mut erased = Vec::new();
        match *self {
            ChannelModel::QuantumErasure { eps } => {
                for i in 0..n {
                    if rng.random::<f64>() < eps {
                        erased.push(i);
                        if rng.random::<bool>() {
                            e_x.set(i, true);
                        }
                        if rng.random::<bool>() {
                            e_z.set(i, true);
                        }
                    }
                }
            }
            ChannelModel::Depolarizing { p } => {
                for i in 0..n {
                    let u = rng.random::<f64>();
                    if u < p {
                        // Thirds of the error mass: X, then Y, then Z.
                        if u < p / 3.0 {
                            e_x.set(i, true);
                        } else if u < 2.0 * p / 3.0 {
                            e_x.set(i, true);
                            e_z.set(i, true);
                        } else {
                            e_z.set(i, true);
                        }
                    }
                }
            }
        }
        PauliErrorSample { e_x, e_z, erased }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind_name(), self.param())
    }
}

/// Unusable channel description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelParseError {
    pub input: String,
    pub reason: String,
}

impl fmt::Display for ChannelParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bad channel {:?}: {}", self.input, self.reason)
    }
}

impl std::error::Error for ChannelParseError {}

// ============================================================================
// Tests
// ============================================================================
