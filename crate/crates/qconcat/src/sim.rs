//! Monte Carlo driver: runs coding schemes over the reduced Pauli channels
//! and reports block/bit error rates with Wilson confidence intervals,
//! iteration statistics, and elementary-operation counts.
//!
//! Determinism contract: trial `t` of a run draws everything it needs from
//! `derived_rng(seed, t)` in a pinned order (X info bits, Z info bits, then
//! the channel sample), so results are identical for any worker count and
//! across reruns. The depolarizing calibration pre-run for concatenated
//! schemes has its own derived stream and is excluded from trial accounting.
//!
//! Accounting conventions: a trial is a block error when either side fails;
//! an info decision that is wrong or left erased counts as a bit error;
//! `total_info_bits = trials * (k_x + k_z)`. Standalone LDPC runs are
//! error-only (by linearity the all-zero frame stands in for any codeword):
//! a side succeeds when the residual after correction lies in the stabilizer
//! row space, and a failed side's bit errors are the residual positions that
//! land on the code's systematic info coordinates.

use std::fmt;

use crate::channels::ChannelModel;
use crate::concat::{ConcatScheme, TrialOutcome};
use crate::css_ldpc::{
    decode_bp_counted, decode_erasure_counted, logical_failure, pipeline_view, CssCode,
    FailureKind, PipelineCode, Side,
};
use crate::gf2::BitVector;
use crate::polar::{ErasureSymbol, PolarCodeSpec};
use crate::util::{derived_rng, fmt_f64};
use rand::Rng;

/// CSV column layout; every emitted file starts with this exact line.
pub const CSV_HEADER: &str = "scheme,channel_kind,channel_param,n_physical,rate_classical,\
rate_quantum,trials,block_errors,bler,bler_ci_lo,bler_ci_hi,bit_errors,ber,mean_inner_iters,\
op_count,seed";

/// Inner CSS code family for concatenated and standalone LDPC schemes.
#[derive(Clone, Debug, PartialEq)]
pub enum InnerSpec {
    Steane,
    /// A checkless code: every vector is a codeword. Concatenating over it
    /// degenerates to the bare outer code.
    Identity { n: usize },
    Bicycle {
        half_len: usize,
        row_weight: usize,
        rows_kept: usize,
        code_seed: u64,
    },
}

impl InnerSpec {
    pub fn build(&self) -> CssCode {
        match *self {
            InnerSpec::Steane => CssCode::steane(),
            InnerSpec::Identity { n } => CssCode::identity(n),
            InnerSpec::Bicycle {
                half_len,
                row_weight,
                rows_kept,
                code_seed,
            } => CssCode::bicycle(half_len, row_weight, rows_kept, code_seed),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            InnerSpec::Steane => "steane".to_string(),
            InnerSpec::Identity { n } => format!("id{n}"),
            InnerSpec::Bicycle {
                half_len,
                row_weight,
                rows_kept,
                code_seed,
            } => format!("h{half_len}-w{row_weight}-r{rows_kept}-s{code_seed}"),
        }
    }
}

/// What gets simulated.
#[derive(Clone, Debug, PartialEq)]
pub enum SchemeSpec {
    /// One polar code used classically on each side.
    PolarOnly { n: usize, k: usize, design_eps: f64 },
    /// Polar outer codes over the info positions of repeated inner blocks.
    Concat {
        inner: InnerSpec,
        blocks: usize,
        outer_k_fraction: f64,
        design_eps: f64,
    },
    /// A single inner block with no outer code, decoded per side.
    LdpcOnly { inner: InnerSpec },
}

impl SchemeSpec {
    pub fn name(&self) -> String {
        match self {
            SchemeSpec::PolarOnly { n, k, .. } => format!("polar-n{n}-k{k}"),
            SchemeSpec::Concat {
                inner,
                blocks,
                outer_k_fraction,
                ..
            } => format!("concat-{}-b{blocks}-f{outer_k_fraction}", inner.name()),
            SchemeSpec::LdpcOnly { inner } => format!("ldpc-{}", inner.name()),
        }
    }
}

/// One simulation run: a scheme, a channel point, and the reproducibility
/// knobs. `workers` only affects wall-clock time, never results.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub scheme: SchemeSpec,
    pub channel: ChannelModel,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub max_bp_iters: u32,
    /// Blocks decoded by the depolarizing calibration pre-run of
    /// concatenated schemes.
    pub calibration_blocks: usize,
}

/// Aggregated outcome of a run; `PartialEq` is exact, which is what the
/// determinism guarantees promise.
#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub scheme_name: String,
    pub channel_kind: &'static str,
    pub channel_param: f64,
    pub n_physical: usize,
    pub rate_classical: f64,
    pub rate_quantum: f64,
    pub trials: u64,
    pub block_errors: u64,
    pub bler: f64,
    pub bler_ci: (f64, f64),
    pub bit_errors: u64,
    pub total_info_bits: u64,
    pub ber: f64,
    /// Mean iterations per belief-propagation decode; 0.0 when the run never
    /// invoked one.
    pub mean_inner_iters: f64,
    /// Converged inner decodes over all inner decodes; 1.0 when the run has
    /// no inner stage (erasure solving always converges).
    pub inner_converged_fraction: f64,
    pub op_count: u64,
    pub seed: u64,
    /// Deterministic `#`-prefixed description line echoed into CSV output.
    pub config_echo: String,
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.96f64;
    let z2 = z * z;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let halfwidth = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - halfwidth).max(0.0), (center + halfwidth).min(1.0))
}

/// Bit-flip probability turned into a log-likelihood ratio magnitude.
fn llr_mag(q: f64) -> f64 {
    ((1.0 - q) / q).ln()
}

/// Prior ratio used by every in-trial soft decode: the channel's design
/// crossover, kept away from 0 and 1/2.
fn design_prior_mag(channel: &ChannelModel) -> f64 {
    llr_mag(channel.design_crossover().clamp(1e-12, 0.49))
}

/// Fully built scheme, shared read-only by the worker threads.
enum Runtime {
    Polar {
        code: PolarCodeSpec,
        soft_mag: f64,
    },
    Concat {
        scheme: ConcatScheme,
        bp_prior_mag: f64,
        /// Outer-stage ratio magnitude per side, from the calibration
        /// pre-run; unused on erasure channels.
        outer_mag: [f64; 2],
    },
    Ldpc {
        code: CssCode,
        pipes: [PipelineCode; 2],
        prior: Vec<f64>,
    },
}

impl Runtime {
    fn n_physical(&self) -> usize {
        match self {
            Runtime::Polar { code, .. } => code.n,
            Runtime::Concat { scheme, .. } => scheme.n_physical(),
            Runtime::Ldpc { code, .. } => code.n,
        }
    }

    fn k_side(&self, side: Side) -> usize {
        match self {
            Runtime::Polar { code, .. } => code.k,
            Runtime::Concat { scheme, .. } => scheme.outer(side).k,
            Runtime::Ldpc { pipes, .. } => pipes[side as usize].k_in,
        }
    }
}

fn build_runtime(config: &SimConfig) -> Runtime {
    match &config.scheme {
        SchemeSpec::PolarOnly { n, k, design_eps } => Runtime::Polar {
            code: PolarCodeSpec::construct(*n, *k, *design_eps),
            soft_mag: design_prior_mag(&config.channel),
        },
        SchemeSpec::Concat {
            inner,
            blocks,
            outer_k_fraction,
            design_eps,
        } => {
            let scheme = ConcatScheme::build(inner.build(), *blocks, *outer_k_fraction, *design_eps);
            let (bp_prior_mag, outer_mag) = match config.channel {
                ChannelModel::Depolarizing { .. } => {
                    let q = scheme.calibrated_crossovers(
                        &config.channel,
                        config.max_bp_iters,
                        config.calibration_blocks,
                        config.seed,
                    );
                    (design_prior_mag(&config.channel), [llr_mag(q[0]), llr_mag(q[1])])
                }
                ChannelModel::QuantumErasure { .. } => (0.0, [0.0, 0.0]),
            };
            Runtime::Concat {
                scheme,
                bp_prior_mag,
                outer_mag,
            }
        }
        SchemeSpec::LdpcOnly { inner } => {
            let code = inner.build();
            let pipes = [
                pipeline_view(code.detector(Side::X)),
                pipeline_view(code.detector(Side::Z)),
            ];
            let prior = vec![design_prior_mag(&config.channel); code.n];
            Runtime::Ldpc { code, pipes, prior }
        }
    }
}

/// Everything a single trial contributes to the aggregate.
struct TrialStats {
    outcome: TrialOutcome,
    ops: u64,
    bp_iterations: u64,
    bp_decodes: u64,
    converged_inner: u64,
    inner_decodes: u64,
}

#[derive(Clone, Copy, Default)]
struct Accum {
    block_errors: u64,
    bit_errors: u64,
    op_count: u64,
    bp_iterations: u64,
    bp_decodes: u64,
    converged_inner: u64,
    inner_decodes: u64,
}

impl Accum {
    fn absorb(&mut self, st: &TrialStats) {
        self.block_errors += u64::from(!st.outcome.side_x_ok || !st.outcome.side_z_ok);
        self.bit_errors += st.outcome.info_bit_errors_x + st.outcome.info_bit_errors_z;
        self.op_count += st.ops;
        self.bp_iterations += st.bp_iterations;
        self.bp_decodes += st.bp_decodes;
        self.converged_inner += st.converged_inner;
        self.inner_decodes += st.inner_decodes;
    }

    fn merge(&mut self, other: &Accum) {
        self.block_errors += other.block_errors;
        self.bit_errors += other.bit_errors;
        self.op_count += other.op_count;
        self.bp_iterations += other.bp_iterations;
        self.bp_decodes += other.bp_decodes;
        self.converged_inner += other.converged_inner;
        self.inner_decodes += other.inner_decodes;
    }
}

/// Received symbols for the erasure channel: erased positions (sorted) are
/// unknown, everything else is the received bit.
fn symbols_from_erasure(w: &BitVector, erased: &[usize]) -> Vec<ErasureSymbol> {
    let mut y = Vec::with_capacity(w.len());
    let mut next = 0usize;
    for i in 0..w.len() {
        if next < erased.len() && erased[next] == i {
            next += 1;
            y.push(ErasureSymbol::Erased);
        } else {
            y.push(ErasureSymbol::known(w.get(i)));
        }
    }
    y
}

/// A decision that is erased or disagrees with the transmitted bit is a bit
/// error; the side is ok only with zero of them.
fn score_side(symbols: &[ErasureSymbol], truth: &[bool]) -> (bool, u64) {
    debug_assert_eq!(symbols.len(), truth.len());
    let mut errs = 0u64;
    for (sym, &t) in symbols.iter().zip(truth) {
        if sym.bit() != Some(t) {
            errs += 1;
        }
    }
    (errs == 0, errs)
}

/// |support(residual) ∩ info_positions|, both sorted ascending.
fn residual_info_errors(residual: &BitVector, info_positions: &[usize]) -> u64 {
    let sup = residual.support();
    let mut count = 0u64;
    let mut j = 0usize;
    for &pos in &sup {
        while j < info_positions.len() && info_positions[j] < pos {
            j += 1;
        }
        if j < info_positions.len() && info_positions[j] == pos {
            count += 1;
        }
    }
    count
}

fn run_trial(rt: &Runtime, config: &SimConfig, trial: u64) -> TrialStats {
    let mut rng = derived_rng(config.seed, trial);
    let mut ops = 0u64;
    match rt {
        Runtime::Polar { code, soft_mag } => {
            let info_x: Vec<bool> = (0..code.k).map(|_| rng.random()).collect();
            let info_z: Vec<bool> = (0..code.k).map(|_| rng.random()).collect();
            let err = config.channel.sample(code.n, &mut rng);
            let mut ok = [false; 2];
            let mut errs = [0u64; 2];
            for (slot, (info, e)) in [(&info_x, &err.e_x), (&info_z, &err.e_z)]
                .into_iter()
                .enumerate()
            {
                let mut w = code.encode_counted(&code.u_from_info(info), &mut ops);
                w.xor_assign(e);
                let symbols: Vec<ErasureSymbol> = match config.channel {
                    ChannelModel::QuantumErasure { .. } => {
                        let y = symbols_from_erasure(&w, &err.erased);
                        code.sc_decode_erasure_symbols_counted(&y, &mut ops)
                    }
                    ChannelModel::Depolarizing { .. } => {
                        let llr: Vec<f64> = (0..code.n)
                            .map(|i| if w.get(i) { -soft_mag } else { *soft_mag })
                            .collect();
                        code.sc_decode_soft_counted(&llr, &mut ops)
                            .into_iter()
                            .map(ErasureSymbol::known)
                            .collect()
                    }
                };
                let (o, c) = score_side(&symbols, info);
                ok[slot] = o;
                errs[slot] = c;
            }
            TrialStats {
                outcome: TrialOutcome {
                    side_x_ok: ok[0],
                    side_z_ok: ok[1],
                    info_bit_errors_x: errs[0],
                    info_bit_errors_z: errs[1],
                    inner_converged_fraction: 1.0,
                },
                ops,
                bp_iterations: 0,
                bp_decodes: 0,
                converged_inner: 0,
                inner_decodes: 0,
            }
        }
        Runtime::Concat {
            scheme,
            bp_prior_mag,
            outer_mag,
        } => {
            let info_x: Vec<bool> = (0..scheme.outer(Side::X).k).map(|_| rng.random()).collect();
            let info_z: Vec<bool> = (0..scheme.outer(Side::Z).k).map(|_| rng.random()).collect();
            let err = config.channel.sample(scheme.n_physical(), &mut rng);
            let mut ok = [false; 2];
            let mut errs = [0u64; 2];
            let mut bp_iterations = 0u64;
            let mut bp_decodes = 0u64;
            let mut converged_inner = 0u64;
            let mut inner_decodes = 0u64;
            for (slot, side) in Side::BOTH.into_iter().enumerate() {
                let (info, e) = match side {
                    Side::X => (&info_x, &err.e_x),
                    Side::Z => (&info_z, &err.e_z),
                };
                let mut w = scheme.encode_side_counted(side, info, &mut ops);
                w.xor_assign(e);
                let dec = match config.channel {
                    ChannelModel::QuantumErasure { .. } => {
                        scheme.decode_side_erasure_counted(side, &w, &err.erased, &mut ops)
                    }
                    ChannelModel::Depolarizing { .. } => {
                        bp_decodes += scheme.blocks as u64;
                        scheme.decode_side_depolarizing_counted(
                            side,
                            &w,
                            *bp_prior_mag,
                            outer_mag[slot],
                            config.max_bp_iters,
                            &mut ops,
                        )
                    }
                };
                bp_iterations += dec.iterations_total;
                converged_inner += dec.converged_blocks as u64;
                inner_decodes += scheme.blocks as u64;
                let (o, c) = score_side(&dec.info_symbols, info);
                ok[slot] = o;
                errs[slot] = c;
            }
            TrialStats {
                outcome: TrialOutcome {
                    side_x_ok: ok[0],
                    side_z_ok: ok[1],
                    info_bit_errors_x: errs[0],
                    info_bit_errors_z: errs[1],
                    inner_converged_fraction: converged_inner as f64 / inner_decodes as f64,
                },
                ops,
                bp_iterations,
                bp_decodes,
                converged_inner,
                inner_decodes,
            }
        }
        Runtime::Ldpc { code, pipes, prior } => {
            let err = config.channel.sample(code.n, &mut rng);
            let mut ok = [false; 2];
            let mut errs = [0u64; 2];
            let mut bp_iterations = 0u64;
            let mut bp_decodes = 0u64;
            let mut converged_inner = 0u64;
            for (slot, side) in Side::BOTH.into_iter().enumerate() {
                let e = match side {
                    Side::X => &err.e_x,
                    Side::Z => &err.e_z,
                };
                let sparse = code.sparse_detector(side);
                let s = sparse.mat_vec_counted(e, &mut ops);
                let (mut residual, converged) = match config.channel {
                    ChannelModel::QuantumErasure { .. } => {
                        let out = decode_erasure_counted(code.detector(side), &s, &err.erased, &mut ops)
                            .expect("the error is supported on the erased set");
                        (out.estimate, true)
                    }
                    ChannelModel::Depolarizing { .. } => {
                        let bp = decode_bp_counted(sparse, &s, prior, config.max_bp_iters, &mut ops);
                        bp_iterations += u64::from(bp.iterations);
                        bp_decodes += 1;
                        (bp.estimate, bp.converged)
                    }
                };
                converged_inner += u64::from(converged);
                residual.xor_assign(e);
                ops += code.n.div_ceil(64) as u64;
                let kind = logical_failure(code, side, &residual);
                ok[slot] = kind == FailureKind::Success;
                errs[slot] = if ok[slot] {
                    0
                } else {
                    residual_info_errors(&residual, &pipes[slot].info_positions)
                };
            }
            TrialStats {
                outcome: TrialOutcome {
                    side_x_ok: ok[0],
                    side_z_ok: ok[1],
                    info_bit_errors_x: errs[0],
                    info_bit_errors_z: errs[1],
                    inner_converged_fraction: converged_inner as f64 / 2.0,
                },
                ops,
                bp_iterations,
                bp_decodes,
                converged_inner,
                inner_decodes: 2,
            }
        }
    }
}

fn run_chunk(
    rt: &Runtime,
    config: &SimConfig,
    start: u64,
    end: u64,
    collect: bool,
) -> (Accum, Vec<TrialOutcome>) {
    let mut acc = Accum::default();
    let mut outs = Vec::new();
    if collect {
        outs.reserve((end - start) as usize);
    }
    for t in start..end {
        let st = run_trial(rt, config, t);
        acc.absorb(&st);
        if collect {
            outs.push(st.outcome);
        }
    }
    (acc, outs)
}

fn config_echo(config: &SimConfig, rt: &Runtime) -> String {
    let mut echo = format!("# scheme={}", config.scheme.name());
    match &config.scheme {
        SchemeSpec::PolarOnly { n, k, design_eps } => {
            echo.push_str(&format!(" n={n} k={k} design_eps={design_eps}"));
        }
        SchemeSpec::Concat {
            inner,
            blocks,
            outer_k_fraction,
            design_eps,
        } => {
            echo.push_str(&format!(
                " inner={} blocks={blocks} outer_k_fraction={outer_k_fraction} \
design_eps={design_eps} k_x={} k_z={}",
                inner.name(),
                rt.k_side(Side::X),
                rt.k_side(Side::Z)
            ));
        }
        SchemeSpec::LdpcOnly { inner } => {
            echo.push_str(&format!(
                " inner={} k_x={} k_z={}",
                inner.name(),
                rt.k_side(Side::X),
                rt.k_side(Side::Z)
            ));
        }
    }
    echo.push_str(&format!(
        " channel_kind={} trials={} seed={}",
        config.channel.kind_name(),
        config.trials,
        config.seed
    ));
    let uses_bp = matches!(config.channel, ChannelModel::Depolarizing { .. })
        && !matches!(config.scheme, SchemeSpec::PolarOnly { .. });
    if uses_bp {
        echo.push_str(&format!(" max_bp_iters={}", config.max_bp_iters));
    }
    if uses_bp && matches!(config.scheme, SchemeSpec::Concat { .. }) {
        echo.push_str(&format!(" calibration_blocks={}", config.calibration_blocks));
    }
    echo
}

fn run_impl(config: &SimConfig, collect: bool) -> (SimResult, Vec<TrialOutcome>) {
    assert!(config.trials >= 1, "need at least one trial");
    let rt = build_runtime(config);
    let workers = (config.workers.max(1) as u64).min(config.trials);
    let mut partials: Vec<(Accum, Vec<TrialOutcome>)> = Vec::with_capacity(workers as usize);
    if workers == 1 {
        partials.push(run_chunk(&rt, config, 0, config.trials, collect));
    } else {
        std::thread::scope(|scope| {
            let rt = &rt;
            let handles: Vec<_> = (0..workers)
                .map(|c| {
                    let start = config.trials * c / workers;
                    let end = config.trials * (c + 1) / workers;
                    scope.spawn(move || run_chunk(rt, config, start, end, collect))
                })
                .collect();
            for handle in handles {
                partials.push(handle.join().expect("worker thread panicked"));
            }
        });
    }
    let mut acc = Accum::default();
    let mut outcomes = Vec::new();
    for (a, outs) in partials {
        acc.merge(&a);
        outcomes.extend(outs);
    }
    let k_total = (rt.k_side(Side::X) + rt.k_side(Side::Z)) as u64;
    let n_physical = rt.n_physical();
    let total_info_bits = config.trials * k_total;
    let (lo, hi) = wilson_interval(acc.block_errors, config.trials);
    let result = SimResult {
        scheme_name: config.scheme.name(),
        channel_kind: config.channel.kind_name(),
        channel_param: config.channel.param(),
        n_physical,
        rate_classical: k_total as f64 / (2.0 * n_physical as f64),
        rate_quantum: (k_total as f64 - n_physical as f64) / n_physical as f64,
        trials: config.trials,
        block_errors: acc.block_errors,
        bler: acc.block_errors as f64 / config.trials as f64,
        bler_ci: (lo, hi),
        bit_errors: acc.bit_errors,
        total_info_bits,
        ber: acc.bit_errors as f64 / total_info_bits as f64,
        mean_inner_iters: if acc.bp_decodes == 0 {
            0.0
        } else {
            acc.bp_iterations as f64 / acc.bp_decodes as f64
        },
        inner_converged_fraction: if acc.inner_decodes == 0 {
            1.0
        } else {
            acc.converged_inner as f64 / acc.inner_decodes as f64
        },
        op_count: acc.op_count,
        seed: config.seed,
        config_echo: config_echo(config, &rt),
    };
    (result, outcomes)
}

pub fn run(config: &SimConfig) -> SimResult {
    run_impl(config, false).0
}

/// Like [`run`], additionally returning every trial's outcome in trial
/// order (worker count still does not matter).
pub fn run_detailed(config: &SimConfig) -> (SimResult, Vec<TrialOutcome>) {
    run_impl(config, true)
}

/// Runs `base` at each channel parameter, highest noise first.
pub fn sweep(base: &SimConfig, params: &[f64]) -> Vec<SimResult> {
    let mut grid = params.to_vec();
    grid.sort_by(|a, b| b.partial_cmp(a).expect("channel parameters must be comparable"));
    grid.iter()
        .map(|&p| {
            let mut config = base.clone();
            config.channel = base.channel.with_param(p);
            run(&config)
        })
        .collect()
}

// ============================================================================
// Curve diagnostics
// ============================================================================

/// Verdict of [`error_floor_metric`].
#[derive(Clone, Debug, PartialEq)]
pub struct FloorReport {
    pub floor_detected: bool,
    /// log10(bler) vs log10(param) slopes between consecutive usable points,
    /// strongest noise first.
    pub slopes: Vec<f64>,
    /// Points dropped because no errors were observed there.
    pub excluded_zero_bler: usize,
}

/// Flags an error floor: a late slope (last third of the grid) that is much
/// shallower than the steepest improvement seen before it. Slopes are
/// signed, positive meaning the error rate falls as the noise falls; a
/// negative late slope (the curve getting worse) counts as flattening, while
/// a negative early slope never raises the baseline. Takes
/// `(channel_param, bler)` points; needs at least four usable points to ever
/// report a floor.
pub fn error_floor_metric(points: &[(f64, f64)]) -> FloorReport {
    let mut usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(param, bler)| param > 0.0 && bler > 0.0)
        .collect();
    let excluded_zero_bler = points.len() - usable.len();
    usable.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("parameters must be comparable"));
    let mut slopes = Vec::new();
    for pair in usable.windows(2) {
        let (p0, b0) = pair[0];
        let (p1, b1) = pair[1];
        slopes.push((b1.log10() - b0.log10()) / (p1.log10() - p0.log10()));
    }
    let mut floor_detected = false;
    if usable.len() >= 4 {
        let late_from = 2 * slopes.len() / 3;
        for j in late_from.max(1)..slopes.len() {
            let steepest_before = slopes[..j].iter().copied().fold(0.0f64, f64::max);
            if steepest_before > 0.0 && slopes[j] < 0.5 * steepest_before {
                floor_detected = true;
            }
        }
    }
    FloorReport {
        floor_detected,
        slopes,
        excluded_zero_bler,
    }
}

/// Least-squares slope of `log2(y)` against `log2(x)`: the growth exponent
/// of a measured cost or error curve. Needs two distinct positive `x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    assert!(points.len() >= 2, "need at least two points");
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| {
            assert!(x > 0.0 && y > 0.0, "points must be positive");
            (x.log2(), y.log2())
        })
        .collect();
    let n = logs.len() as f64;
    let mean_u = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_v = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (u, v) in logs {
        num += (u - mean_u) * (v - mean_v);
        den += (u - mean_u) * (u - mean_u);
    }
    assert!(den > 0.0, "need at least two distinct x values");
    num / den
}

// ============================================================================
// CSV
// ============================================================================

/// One parsed CSV data row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRecord {
    pub scheme: String,
    pub channel_kind: String,
    pub channel_param: f64,
    pub n_physical: usize,
    pub rate_classical: f64,
    pub rate_quantum: f64,
    pub trials: u64,
    pub block_errors: u64,
    pub bler: f64,
    pub bler_ci_lo: f64,
    pub bler_ci_hi: f64,
    pub bit_errors: u64,
    pub ber: f64,
    pub mean_inner_iters: f64,
    pub op_count: u64,
    pub seed: u64,
}

#[derive(Debug)]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for CsvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "csv line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for CsvError {}

fn csv_row(r: &SimResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.scheme_name,
        r.channel_kind,
        fmt_f64(r.channel_param),
        r.n_physical,
        fmt_f64(r.rate_classical),
        fmt_f64(r.rate_quantum),
        r.trials,
        r.block_errors,
        fmt_f64(r.bler),
        fmt_f64(r.bler_ci.0),
        fmt_f64(r.bler_ci.1),
        r.bit_errors,
        fmt_f64(r.ber),
        fmt_f64(r.mean_inner_iters),
        r.op_count,
        r.seed
    )
}

/// Renders results as CSV: the fixed header, then rows grouped by scheme
/// name (lexicographic) with channel parameters descending inside a group;
/// each group is preceded by its `#` configuration line(s). The output is a
/// pure function of the results, so identical runs give identical bytes.
pub fn results_to_csv(results: &[SimResult]) -> String {
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| {
        results[a]
            .scheme_name
            .cmp(&results[b].scheme_name)
            .then_with(|| {
                results[b]
                    .channel_param
                    .partial_cmp(&results[a].channel_param)
                    .expect("channel parameters must be comparable")
            })
    });
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let mut current_scheme: Option<&str> = None;
    let mut echoed: Vec<&str> = Vec::new();
    for &i in &order {
        let r = &results[i];
        if current_scheme != Some(r.scheme_name.as_str()) {
            current_scheme = Some(r.scheme_name.as_str());
            echoed.clear();
        }
        if !echoed.contains(&r.config_echo.as_str()) {
            out.push_str(&r.config_echo);
            out.push('\n');
            echoed.push(r.config_echo.as_str());
        }
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

/// Parses CSV produced by [`results_to_csv`], skipping `#` lines.
pub fn parse_results_csv(text: &str) -> Result<Vec<CsvRecord>, CsvError> {
    let mut records = Vec::new();
    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != CSV_HEADER {
                return Err(CsvError {
                    line: lineno,
                    message: "unrecognized header".to_string(),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 16 {
            return Err(CsvError {
                line: lineno,
                message: format!("expected 16 fields, found {}", fields.len()),
            });
        }
        fn num<T: std::str::FromStr>(field: &str, lineno: usize, what: &str) -> Result<T, CsvError> {
            field.parse().map_err(|_| CsvError {
                line: lineno,
                message: format!("bad {what}: {field:?}"),
            })
        }
        records.push(CsvRecord {
            scheme: fields[0].to_string(),
            channel_kind: fields[1].to_string(),
            channel_param: num(fields[2], lineno, "channel_param")?,
            n_physical: num(fields[3], lineno, "n_physical")?,
            rate_classical: num(fields[4], lineno, "rate_classical")?,
            rate_quantum: num(fields[5], lineno, "rate_quantum")?,
            trials: num(fields[6], lineno, "trials")?,
            block_errors: num(fields[7], lineno, "block_errors")?,
            bler: num(fields[8], lineno, "bler")?,
            bler_ci_lo: num(fields[9], lineno, "bler_ci_lo")?,
            bler_ci_hi: num(fields[10], lineno, "bler_ci_hi")?,
            bit_errors: num(fields[11], lineno, "bit_errors")?,
            ber: num(fields[12], lineno, "ber")?,
            mean_inner_iters: num(fields[13], lineno, "mean_inner_iters")?,
            op_count: num(fields[14], lineno, "op_count")?,
            seed: num(fields[15], lineno, "seed")?,
        });
    }
    if !saw_header {
        return Err(CsvError {
            line: 0,
            message: "missing header".to_string(),
        });
    }
    Ok(records)
}

// ============================================================================
// Tests
// ============================================================================
