//! CSS code pairs and their classical per-side decoders.
//!
//! A CSS code is a pair of parity check matrices `(Hx, Hz)` over GF(2) with
//! `Hx · Hzᵀ = 0`. X-type errors flip the Z-type checks and vice versa, so
//! the *detector* for side X is `Hz` and for side Z is `Hx`; each side then
//! decodes as an ordinary classical linear code. Failure classification is
//! degeneracy-aware: a residual equal to a stabilizer combination counts as
//! success.
//!
//! Constructions: the Steane code (both sides the Hamming [7,4] checks) and
//! seeded bicycle codes `H = [C | Cᵀ]` from a random circulant with an even
//! first-row weight, which makes the orthogonality identity hold after any
//! row deletion.

use crate::gf2::{BitMatrix, BitVector, SparseBitMatrix};
use crate::polar::LLR_CLAMP;
use crate::util::derived_rng;
use rand::Rng;
use std::fmt;

/// Stream tag for deriving a bicycle first row from a code seed.
const BICYCLE_STREAM: u64 = 0xB1C47;

/// Error species a side decodes: side X handles bit-flip (X/Y) components,
/// side Z handles phase-flip (Z/Y) components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    X,
    Z,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::X, Side::Z];
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::X => "X",
            Side::Z => "Z",
        })
    }
}

/// A CSS pair with cached sparse views of both matrices.
#[derive(Clone, Debug)]
pub struct CssCode {
    pub n: usize,
    pub hx: BitMatrix,
    pub hz: BitMatrix,
    /// `n - rank(Hx) - rank(Hz)`, the number of encoded logical qubits.
    pub k_logical: usize,
    sparse_hx: SparseBitMatrix,
    sparse_hz: SparseBitMatrix,
}

impl CssCode {
    /// Builds a pair, asserting the CSS orthogonality `Hx · Hzᵀ = 0`.
    pub fn new(hx: BitMatrix, hz: BitMatrix) -> Self {
        assert_eq!(hx.cols(), hz.cols(), "check matrices must share a length");
        assert!(
            hx.mul_transpose(&hz).is_zero(),
            "check matrices must be orthogonal"
        );
        let n = hx.cols();
        let k_logical = n - hx.rank() - hz.rank();
        let sparse_hx = SparseBitMatrix::from_dense(&hx);
        let sparse_hz = SparseBitMatrix::from_dense(&hz);
        CssCode {
            n,
            hx,
            hz,
            k_logical,
            sparse_hx,
            sparse_hz,
        }
    }

    /// The [[7,1,3]] Steane code: both sides are the Hamming [7,4] checks.
    pub fn steane() -> Self {
        let h = BitMatrix::from_str_rows(&["1010101", "0110011", "0001111"]).unwrap();
        let code = CssCode::new(h.clone(), h);
        debug_assert_eq!(code.k_logical, 1);
        code
    }

    /// The checkless code on `n` qubits: no constraints, every position an
    /// info position. Concatenation over it degenerates to the outer code.
    pub fn identity(n: usize) -> Self {
        CssCode::new(BitMatrix::zeros(0, n), BitMatrix::zeros(0, n))
    }

    /// Seeded bicycle construction. A random first row of even weight
    /// `row_weight` defines a circulant `C`; `H₀ = [C | Cᵀ]` is
    /// self-orthogonal, and `half_len - rows_kept` rows are deleted at evenly
    /// spaced indices. Both sides share the kept rows.
    pub fn bicycle(half_len: usize, row_weight: usize, rows_kept: usize, seed: u64) -> Self {
        assert!(row_weight > 0 && row_weight <= half_len, "row weight out of range");
        assert!(row_weight % 2 == 0, "row weight must be even to keep [C|Cᵀ] self-orthogonal");
        assert!(rows_kept <= half_len, "cannot keep more rows than exist");
        let mut rng = derived_rng(seed, BICYCLE_STREAM);
        // Partial Fisher-Yates: the first row_weight slots become a uniform
        // sample of distinct positions.
        let mut idx: Vec<usize> = (0..half_len).collect();
        for j in 0..row_weight {
            let pick = rng.random_range(j..half_len);
            idx.swap(j, pick);
        }
        let first_row = BitVector::from_support(half_len, &idx[..row_weight]);
        CssCode::bicycle_with_first_row(&first_row, rows_kept)
    }

    /// Bicycle construction from an explicit circulant first row.
    pub fn bicycle_with_first_row(first_row: &BitVector, rows_kept: usize) -> Self {
        let half_len = first_row.len();
        assert!(first_row.weight() % 2 == 0, "first row weight must be even");
        assert!(rows_kept <= half_len, "cannot keep more rows than exist");
        let n = 2 * half_len;
        let support = first_row.support();
        let keep = kept_row_indices(half_len, rows_kept);
        let mut h = BitMatrix::zeros(rows_kept, n);
        for (r, &i) in keep.iter().enumerate() {
            for &j0 in &support {
                // C[i][j] = first_row[(j - i) mod half_len], so row i sets
                // column (j0 + i); the transpose block shifts the other way.
                h.set(r, (j0 + i) % half_len, true);
                h.set(r, half_len + (half_len + i - j0) % half_len, true);
            }
        }
        CssCode::new(h.clone(), h)
    }

    /// Checks that detect errors of the given species.
    pub fn detector(&self, side: Side) -> &BitMatrix {
        match side {
            Side::X => &self.hz,
            Side::Z => &self.hx,
        }
    }

    pub fn sparse_detector(&self, side: Side) -> &SparseBitMatrix {
        match side {
            Side::X => &self.sparse_hz,
            Side::Z => &self.sparse_hx,
        }
    }

    /// Stabilizer rows of the same species as the error: residuals inside
    /// this row space act trivially.
    pub fn stabilizer_rows(&self, side: Side) -> &BitMatrix {
        match side {
            Side::X => &self.hx,
            Side::Z => &self.hz,
        }
    }

    pub fn syndrome(&self, side: Side, e: &BitVector) -> BitVector {
        let mut ops = 0u64;
        self.syndrome_counted(side, e, &mut ops)
    }

    pub fn syndrome_counted(&self, side: Side, e: &BitVector, ops: &mut u64) -> BitVector {
        self.sparse_detector(side).mat_vec_counted(e, ops)
    }
}

/// Evenly spaced deletion: removing `d` rows strikes indices `i·⌈half/d⌉`;
/// any stride overshoot is completed with the smallest surviving indices so
/// exactly `d` rows go. Returns the kept indices, ascending.
fn kept_row_indices(half_len: usize, rows_kept: usize) -> Vec<usize> {
    let deleted = half_len - rows_kept;
    let mut drop = vec![false; half_len];
    if deleted > 0 {
        let stride = half_len.div_ceil(deleted);
        let mut marked = 0usize;
        for i in 0..deleted {
            let at = i * stride;
            if at < half_len && !drop[at] {
                drop[at] = true;
                marked += 1;
            }
        }
        let mut i = 0;
        while marked < deleted {
            if !drop[i] {
                drop[i] = true;
                marked += 1;
            }
            i += 1;
        }
    }
    (0..half_len).filter(|&i| !drop[i]).collect()
}

// ============================================================================
// Erasure decoding
// ============================================================================

/// The syndrome cannot be explained by any pattern on the erased positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyndromeMismatch;

impl fmt::Display for SyndromeMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("no error on the erased positions matches the syndrome")
    }
}

impl std::error::Error for SyndromeMismatch {}

/// Result of solving the syndrome equation restricted to the erased set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErasureDecodeOutcome {
    /// One valid error pattern (free variables fixed to 0).
    pub estimate: BitVector,
    pub free_vars: usize,
    /// Erased positions whose value the checks do not pin down, ascending.
    pub undetermined: Vec<usize>,
}

/// Solves `h · e = s` with `e` supported on `erased` (sorted ascending).
/// Errors on erased positions always yield a consistent system, so
/// [`SyndromeMismatch`] can only arise from a mismatched input.
pub fn decode_erasure(
    h: &BitMatrix,
    s: &BitVector,
    erased: &[usize],
) -> Result<ErasureDecodeOutcome, SyndromeMismatch> {
    let mut ops = 0u64;
    decode_erasure_counted(h, s, erased, &mut ops)
}

pub fn decode_erasure_counted(
    h: &BitMatrix,
    s: &BitVector,
    erased: &[usize],
    ops: &mut u64,
) -> Result<ErasureDecodeOutcome, SyndromeMismatch> {
    match h.solve_restricted_counted(s, erased, ops) {
        Some(sol) => Ok(ErasureDecodeOutcome {
            estimate: sol.x,
            free_vars: sol.free_vars,
            undetermined: sol.undetermined,
        }),
        None => Err(SyndromeMismatch),
    }
}

// ============================================================================
// Belief propagation decoding
// ============================================================================

/// Outcome of syndrome belief propagation.
#[derive(Clone, Debug, PartialEq)]
pub struct BpOutcome {
    pub estimate: BitVector,
    /// True when the estimate reproduced the syndrome within `max_iters`.
    pub converged: bool,
    /// Iterations executed; on convergence, the first satisfying iteration.
    pub iterations: u32,
}

pub fn decode_bp(
    h: &SparseBitMatrix,
    s: &BitVector,
    prior_llr: &[f64],
    max_iters: u32,
) -> BpOutcome {
    let mut ops = 0u64;
    decode_bp_counted(h, s, prior_llr, max_iters, &mut ops)
}

/// Flooding sum-product decoding of `h · e = s` with the given per-position
/// prior ratios (positive favors no error). Check messages carry the factor
/// `(-1)^{s_c}`; all messages are clamped to ±[`LLR_CLAMP`], and a check
/// product that rounds to ±1 saturates instead of overflowing. Convergence
/// (`h · ê = s`) is tested after every iteration, so a syndrome-free block
/// with consistent priors converges at iteration 1, never 0. Each check→var
/// and var→marginal update counts one unit into `ops`.
pub fn decode_bp_counted(
    h: &SparseBitMatrix,
    s: &BitVector,
    prior_llr: &[f64],
    max_iters: u32,
    ops: &mut u64,
) -> BpOutcome {
    assert_eq!(h.rows(), s.len(), "syndrome length mismatch");
    assert_eq!(h.cols(), prior_llr.len(), "prior length mismatch");
    let n = h.cols();
    let rows = h.rows();
    let prior: Vec<f64> = prior_llr.iter().map(|&l| clamp(l)).collect();

    // Flat edge storage: c2v[row_offset[r] + j] pairs with h.row(r)[j].
    let mut row_offset = Vec::with_capacity(rows + 1);
    let mut total_edges = 0usize;
    for r in 0..rows {
        row_offset.push(total_edges);
        total_edges += h.row(r).len();
    }
    row_offset.push(total_edges);
    let mut c2v = vec![0.0f64; total_edges];
    let mut marginal: Vec<f64> = prior.clone();
    let mut t = vec![0.0f64; 0];
    let mut fwd = vec![0.0f64; 0];

    let mut estimate = BitVector::zeros(n);
    for it in 1..=max_iters {
        // Check pass: every outgoing message uses the previous iteration's
        // marginals minus this check's own contribution (pure extrinsic).
        for r in 0..rows {
            let vars = h.row(r);
            let deg = vars.len();
            let base = row_offset[r];
            t.clear();
            t.resize(deg, 0.0);
            for (j, &v) in vars.iter().enumerate() {
                let v2c = clamp(marginal[v as usize] - c2v[base + j]);
                t[j] = (v2c / 2.0).tanh();
            }
            // Forward/backward partial products avoid any division.
            fwd.clear();
            fwd.resize(deg + 1, 1.0);
            for j in 0..deg {
                fwd[j + 1] = fwd[j] * t[j];
            }
            let mut bwd = 1.0f64;
            let sign = if s.get(r) { -1.0 } else { 1.0 };
            for j in (0..deg).rev() {
                let prod = fwd[j] * bwd;
                bwd *= t[j];
                let raw = 2.0 * prod.atanh();
                let msg = if raw.is_finite() {
                    clamp(raw)
                } else {
                    LLR_CLAMP.copysign(prod)
                };
                c2v[base + j] = sign * msg;
                *ops += 1;
            }
        }
        // Variable pass: fold every check message back into the marginals.
        marginal.copy_from_slice(&prior);
        for r in 0..rows {
            let base = row_offset[r];
            for (j, &v) in h.row(r).iter().enumerate() {
                marginal[v as usize] += c2v[base + j];
                *ops += 1;
            }
        }
        for v in 0..n {
            estimate.set(v, marginal[v] < 0.0);
        }
        if h.mat_vec_counted(&estimate, ops) == *s {
            return BpOutcome {
                estimate,
                converged: true,
                iterations: it,
            };
        }
    }
    BpOutcome {
        estimate,
        converged: false,
        iterations: max_iters,
    }
}

#[inline]
fn clamp(x: f64) -> f64 {
    x.clamp(-LLR_CLAMP, LLR_CLAMP)
}

// ============================================================================
// Failure classification
// ============================================================================

/// How a residual error `e_true ⊕ e_hat` acts on the code space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    /// Residual is a stabilizer combination: acts trivially.
    Success,
    /// Residual still triggers checks: visibly wrong.
    Detected,
    /// Residual commutes with all checks but is not a stabilizer: corrupts
    /// logical content silently.
    Logical,
}

/// Classifies a residual of the given error species. The detector of that
/// species must vanish on it for it to be invisible; an invisible residual is
/// harmless exactly when it lies in the same-species stabilizer row space.
pub fn logical_failure(code: &CssCode, side: Side, residual: &BitVector) -> FailureKind {
    if !code.syndrome(side, residual).is_zero() {
        return FailureKind::Detected;
    }
    if code.stabilizer_rows(side).in_row_space(residual) {
        FailureKind::Success
    } else {
        FailureKind::Logical
    }
}

// ============================================================================
// Systematic pipeline view
// ============================================================================

/// A classical code `ker(h)` in systematic form: info positions are the
/// non-pivot columns of the reduced parity checks, and `g_sys` restricted to
/// them is the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineCode {
    pub n: usize,
    pub k_in: usize,
    /// Non-pivot columns, ascending: positions carrying payload bits.
    pub info_positions: Vec<usize>,
    /// Pivot columns, ascending: positions fixed by the checks.
    pub parity_positions: Vec<usize>,
    /// `k_in × n` generator with `h · g_sysᵀ = 0`.
    pub g_sys: BitMatrix,
}

/// Reduces `h` and reads off a systematic encoder for its kernel, preferring
/// the lowest-index pivot columns.
pub fn pipeline_view(h: &BitMatrix) -> PipelineCode {
    let n = h.cols();
    let ech = h.row_reduce();
    let mut is_pivot = vec![false; n];
    for &(_, c) in &ech.pivots {
        is_pivot[c] = true;
    }
    let info_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    let parity_positions: Vec<usize> = (0..n).filter(|&c| is_pivot[c]).collect();
    let k_in = info_positions.len();
    let mut g_sys = BitMatrix::zeros(k_in, n);
    for (j, &f) in info_positions.iter().enumerate() {
        g_sys.set(j, f, true);
        // Kernel basis vector: the free column's entries in the reduced rows
        // land on the corresponding pivot columns.
        for &(r, c) in &ech.pivots {
            if ech.mat.get(r, f) {
                g_sys.set(j, c, true);
            }
        }
    }
    debug_assert!(h.mul_transpose(&g_sys).is_zero());
    PipelineCode {
        n,
        k_in,
        info_positions,
        parity_positions,
        g_sys,
    }
}

impl PipelineCode {
    /// Systematic encoding: scatters `info` over the info positions and
    /// fills the parity positions. One op unit per word XOR.
    pub fn encode_counted(&self, info: &[bool], ops: &mut u64) -> BitVector {
        assert_eq!(info.len(), self.k_in, "expected {} info bits", self.k_in);
        let mut v = BitVector::zeros(self.n);
        for (j, &bit) in info.iter().enumerate() {
            if bit {
                v.xor_assign(&self.g_sys.row_vector(j));
                *ops += self.n.div_ceil(64) as u64;
            }
        }
        v
    }

    pub fn encode(&self, info: &[bool]) -> BitVector {
        let mut ops = 0u64;
        self.encode_counted(info, &mut ops)
    }

    /// Reads the payload bits back out of a codeword-length vector.
    pub fn extract_info(&self, v: &BitVector) -> Vec<bool> {
        self.info_positions.iter().map(|&c| v.get(c)).collect()
    }
}

// ============================================================================
// Tests
// ============================================================================
