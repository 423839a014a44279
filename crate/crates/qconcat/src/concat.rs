//! Polar outer codes over the systematic info positions of CSS LDPC inner
//! blocks.
//!
//! Per side (X or Z), `blocks` copies of the inner code are laid side by
//! side. The outer polar code's length is `blocks · k_in`, where `k_in` is
//! the number of systematic info positions of the inner side; outer bit `j`
//! rides in block `j / k_in` at that block's `(j mod k_in)`-th info position
//! (identity interleaver). Encoding is systematic end to end: reading the
//! block info positions of the physical vector recovers the outer codeword.
//!
//! Decoding is a two-stage pipeline. Erasure noise: each block solves its
//! syndrome restricted to the erased positions; info positions the checks do
//! not pin down stay erased and flow into the outer erasure-exact successive
//! cancellation decoder, everything else arrives as a correct bit.
//! Depolarizing noise: each block runs syndrome belief propagation, and the
//! corrected info bits feed the outer soft decoder as ±`ln((1-q)/q)` ratios,
//! where `q` is the post-inner crossover measured by a seeded calibration
//! pre-run.

use crate::channels::ChannelModel;
use crate::css_ldpc::{
    decode_bp_counted, decode_erasure_counted, pipeline_view, CssCode, PipelineCode, Side,
};
use crate::gf2::BitVector;
use crate::polar::{ErasureSymbol, PolarCodeSpec};
use crate::util::derived_rng;

/// Stream tag for the depolarizing calibration pre-run.
const CALIBRATION_STREAM: u64 = 0xCA11B;

/// Crossover estimates are kept away from 0 and 1/2 so the outer ratios stay
/// finite and correctly signed.
const CROSSOVER_CEIL: f64 = 0.49;

/// Per-trial outcome fields shared by every simulated scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub side_x_ok: bool,
    pub side_z_ok: bool,
    pub info_bit_errors_x: u64,
    pub info_bit_errors_z: u64,
    /// Fraction of this trial's inner decodes that converged; erasure-path
    /// and outer-only decodes count as converged.
    pub inner_converged_fraction: f64,
}

/// One side's decode result, before comparison against the transmitted bits.
#[derive(Clone, Debug, PartialEq)]
pub struct SideDecode {
    /// Outer info decisions in info-set order; depolarizing decoding always
    /// returns known symbols, erasure decoding may leave some erased.
    pub info_symbols: Vec<ErasureSymbol>,
    pub converged_blocks: usize,
    pub iterations_total: u64,
}

/// A concatenated scheme: one inner CSS code, `blocks` copies per side, and
/// a polar outer code per side over the block info positions.
#[derive(Clone, Debug)]
pub struct ConcatScheme {
    pub inner: CssCode,
    pub blocks: usize,
    pub outer_k_fraction: f64,
    pub design_eps: f64,
    pipeline_x: PipelineCode,
    pipeline_z: PipelineCode,
    outer_x: PolarCodeSpec,
    outer_z: PolarCodeSpec,
}

impl ConcatScheme {
    /// Lays `blocks` inner copies per side and designs the outer codes.
    /// `blocks · k_in` must be a power of two on both sides (the outer code
    /// needs it) and the outer rate fraction must be in (0, 1].
    pub fn build(inner: CssCode, blocks: usize, outer_k_fraction: f64, design_eps: f64) -> Self {
        assert!(blocks >= 1, "need at least one inner block");
        assert!(
            outer_k_fraction > 0.0 && outer_k_fraction <= 1.0,
            "outer rate fraction must be in (0, 1]"
        );
        let pipeline_x = pipeline_view(inner.detector(Side::X));
        let pipeline_z = pipeline_view(inner.detector(Side::Z));
        let mut outer = Vec::with_capacity(2);
        for pipe in [&pipeline_x, &pipeline_z] {
            let outer_len = blocks * pipe.k_in;
            assert!(
                outer_len.is_power_of_two(),
                "blocks x inner info positions = {outer_len} must be a power of two"
            );
            let k = (outer_k_fraction * outer_len as f64).round() as usize;
            outer.push(PolarCodeSpec::construct(outer_len, k, design_eps));
        }
        let outer_z = outer.pop().unwrap();
        let outer_x = outer.pop().unwrap();
        ConcatScheme {
            inner,
            blocks,
            outer_k_fraction,
            design_eps,
            pipeline_x,
            pipeline_z,
            outer_x,
            outer_z,
        }
    }

    pub fn pipeline(&self, side: Side) -> &PipelineCode {
        match side {
            Side::X => &self.pipeline_x,
            Side::Z => &self.pipeline_z,
        }
    }

    pub fn outer(&self, side: Side) -> &PolarCodeSpec {
        match side {
            Side::X => &self.outer_x,
            Side::Z => &self.outer_z,
        }
    }

    pub fn n_physical(&self) -> usize {
        self.blocks * self.inner.n
    }

    /// Payload bits per physical bit, both sides pooled.
    pub fn rate_classical(&self) -> f64 {
        (self.outer_x.k + self.outer_z.k) as f64 / (2.0 * self.n_physical() as f64)
    }

    /// Net qubit rate `(k_x + k_z - n) / n`; negative when the scheme spends
    /// more checks than the block carries payload.
    pub fn rate_quantum(&self) -> f64 {
        let n = self.n_physical() as f64;
        ((self.outer_x.k + self.outer_z.k) as f64 - n) / n
    }

    pub fn encode_side(&self, side: Side, info: &[bool]) -> BitVector {
        let mut ops = 0u64;
        self.encode_side_counted(side, info, &mut ops)
    }

    /// Outer-encodes `info`, splits the outer codeword into `k_in`-bit
    /// segments, and systematically encodes each segment into its block.
    pub fn encode_side_counted(&self, side: Side, info: &[bool], ops: &mut u64) -> BitVector {
        let outer = self.outer(side);
        let pipe = self.pipeline(side);
        let outer_cw = outer.encode_counted(&outer.u_from_info(info), ops);
        let n_in = self.inner.n;
        let mut physical = BitVector::zeros(self.n_physical());
        let mut segment = vec![false; pipe.k_in];
        for block in 0..self.blocks {
            for (j, s) in segment.iter_mut().enumerate() {
                *s = outer_cw.get(block * pipe.k_in + j);
            }
            let v = pipe.encode_counted(&segment, ops);
            let base = block * n_in;
            for i in v.support() {
                physical.set(base + i, true);
            }
        }
        physical
    }

    /// Erasure-channel decoding of one side. `received` is the physical
    /// vector with the side's error already added; `erased` lists the erased
    /// physical positions ascending. Never produces a wrong info bit: every
    /// known decision equals the transmitted bit.
    pub fn decode_side_erasure(&self, side: Side, received: &BitVector, erased: &[usize]) -> SideDecode {
        let mut ops = 0u64;
        self.decode_side_erasure_counted(side, received, erased, &mut ops)
    }

    pub fn decode_side_erasure_counted(
        &self,
        side: Side,
        received: &BitVector,
        erased: &[usize],
        ops: &mut u64,
    ) -> SideDecode {
        assert_eq!(received.len(), self.n_physical(), "physical length mismatch");
        let n_in = self.inner.n;
        let pipe = self.pipeline(side);
        let outer = self.outer(side);
        let detector = self.inner.detector(side);
        let sparse = self.inner.sparse_detector(side);
        let mut outer_sym = vec![ErasureSymbol::Erased; outer.n];
        for block in 0..self.blocks {
            let base = block * n_in;
            let mut w = BitVector::zeros(n_in);
            for i in 0..n_in {
                if received.get(base + i) {
                    w.set(i, true);
                }
            }
            // Global erased list -> block-local indices.
            let lo = erased.partition_point(|&p| p < base);
            let hi = erased.partition_point(|&p| p < base + n_in);
            let local: Vec<usize> = erased[lo..hi].iter().map(|&p| p - base).collect();
            // The codeword part drops out of the syndrome: H w = H e.
            let s = sparse.mat_vec_counted(&w, ops);
            let out = decode_erasure_counted(detector, &s, &local, ops)
                .expect("the error is supported on the erased set, so the system is consistent");
            let mut corrected = w;
            corrected.xor_assign(&out.estimate);
            *ops += n_in.div_ceil(64) as u64;
            for (j, &pos) in pipe.info_positions.iter().enumerate() {
                outer_sym[block * pipe.k_in + j] = if out.undetermined.binary_search(&pos).is_ok()
                {
                    ErasureSymbol::Erased
                } else {
                    ErasureSymbol::known(corrected.get(pos))
                };
            }
        }
        let info_symbols = outer.sc_decode_erasure_symbols_counted(&outer_sym, ops);
        SideDecode {
            info_symbols,
            converged_blocks: self.blocks,
            iterations_total: 0,
        }
    }

    /// Depolarizing-channel decoding of one side: per-block syndrome belief
    /// propagation with prior ratio `bp_prior_mag`, then outer soft decoding
    /// with per-bit ratios `±outer_llr_mag`.
    #[allow(clippy::too_many_arguments)]
    pub fn decode_side_depolarizing_counted(
        &self,
        side: Side,
        received: &BitVector,
        bp_prior_mag: f64,
        outer_llr_mag: f64,
        max_bp_iters: u32,
        ops: &mut u64,
    ) -> SideDecode {
        assert_eq!(received.len(), self.n_physical(), "physical length mismatch");
        let n_in = self.inner.n;
        let pipe = self.pipeline(side);
        let outer = self.outer(side);
        let sparse = self.inner.sparse_detector(side);
        let prior = vec![bp_prior_mag; n_in];
        let mut llr = vec![0.0f64; outer.n];
        let mut converged_blocks = 0usize;
        let mut iterations_total = 0u64;
        for block in 0..self.blocks {
            let base = block * n_in;
            let mut w = BitVector::zeros(n_in);
            for i in 0..n_in {
                if received.get(base + i) {
                    w.set(i, true);
                }
            }
            let s = sparse.mat_vec_counted(&w, ops);
            let bp = decode_bp_counted(sparse, &s, &prior, max_bp_iters, ops);
            converged_blocks += bp.converged as usize;
            iterations_total += u64::from(bp.iterations);
            let mut corrected = w;
            corrected.xor_assign(&bp.estimate);
            *ops += n_in.div_ceil(64) as u64;
            for (j, &pos) in pipe.info_positions.iter().enumerate() {
                llr[block * pipe.k_in + j] = if corrected.get(pos) {
                    -outer_llr_mag
                } else {
                    outer_llr_mag
                };
            }
        }
        let info = outer.sc_decode_soft_counted(&llr, ops);
        SideDecode {
            info_symbols: info.into_iter().map(ErasureSymbol::known).collect(),
            converged_blocks,
            iterations_total,
        }
    }

    /// Measures the post-inner crossover per side for depolarizing noise:
    /// decodes `cal_blocks` standalone inner blocks over the channel (fixed
    /// derived seed) and reports the fraction of block info bits left wrong,
    /// clamped into `[1/(2·observed bits), 0.49]`. These pre-runs are outside
    /// any trial accounting.
    pub fn calibrated_crossovers(
        &self,
        channel: &ChannelModel,
        max_bp_iters: u32,
        cal_blocks: usize,
        seed: u64,
    ) -> [f64; 2] {
        let mut rng = derived_rng(seed, CALIBRATION_STREAM);
        let n_in = self.inner.n;
        let q0 = channel.design_crossover().clamp(1e-12, CROSSOVER_CEIL);
        let prior_mag = ((1.0 - q0) / q0).ln();
        let mut wrong = [0u64; 2];
        let mut ops = 0u64;
        for _ in 0..cal_blocks {
            let err = channel.sample(n_in, &mut rng);
            for (slot, side) in Side::BOTH.iter().enumerate() {
                let e = match side {
                    Side::X => &err.e_x,
                    Side::Z => &err.e_z,
                };
                let sparse = self.inner.sparse_detector(*side);
                let s = sparse.mat_vec(e);
                let bp = decode_bp_counted(
                    sparse,
                    &s,
                    &vec![prior_mag; n_in],
                    max_bp_iters,
                    &mut ops,
                );
                let mut residual = bp.estimate;
                residual.xor_assign(e);
                for &pos in &self.pipeline(*side).info_positions {
                    if residual.get(pos) {
                        wrong[slot] += 1;
                    }
                }
            }
        }
        let mut q = [0.0f64; 2];
        for (slot, side) in Side::BOTH.iter().enumerate() {
            let observed = (cal_blocks * self.pipeline(*side).k_in) as f64;
            let floor = 1.0 / (2.0 * observed);
            q[slot] = (wrong[slot] as f64 / observed).clamp(floor, CROSSOVER_CEIL);
        }
        q
    }
}

// ============================================================================
// Tests
// ============================================================================
