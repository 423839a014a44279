//! Command-line Monte Carlo harness: polar code construction, single
//! simulations, channel sweeps, scheme comparisons, error-floor scans, and
//! decode-cost probes, all emitting reproducible CSV.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qconcat::channels::ChannelModel;
use qconcat::css_ldpc::{pipeline_view, Side};
use qconcat::polar::PolarCodeSpec;
use qconcat::sim::{
    error_floor_metric, log_log_slope, results_to_csv, run, sweep, wilson_interval, InnerSpec,
    SchemeSpec, SimConfig, SimResult,
};

#[derive(Parser)]
#[command(
    name = "qconcat-cli",
    version,
    about = "Monte Carlo harness for polar, LDPC CSS, and concatenated coding schemes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a polar code and emit its spec text file.
    Construct(ConstructArgs),
    /// Run one simulation and emit a single-row CSV.
    Simulate(SimulateArgs),
    /// Run one scheme over a channel-parameter grid and emit the curve CSV.
    Sweep(SweepArgs),
    /// Run polar-only and concatenated schemes over one grid; merged CSV
    /// plus a point-by-point report with asymptotic reference overlays.
    Compare(CompareArgs),
    /// Sweep one scheme and report local slopes and floor detection.
    FloorScan(FloorScanArgs),
    /// Fit the decode-cost exponent of a scheme family across sizes.
    Complexity(ComplexityArgs),
}

/// Scheme selection shared by the simulation commands.
#[derive(Args)]
struct SchemeArgs {
    /// Scheme kind: polar-only | ldpc-only | concat.
    #[arg(long)]
    scheme: String,
    /// Polar block length (polar-only; power of two).
    #[arg(long)]
    n: Option<usize>,
    /// Polar information bits per side (polar-only).
    #[arg(long)]
    k: Option<usize>,
    /// Inner code: "steane", "id:<n>", or "half_len,row_weight,rows_kept,code_seed".
    #[arg(long)]
    inner: Option<String>,
    /// Inner blocks per codeword (concat).
    #[arg(long)]
    blocks: Option<usize>,
    /// Outer information fraction in (0, 1] (concat).
    #[arg(long)]
    outer_k_fraction: Option<f64>,
    /// Design erasure rate for polar construction.
    #[arg(long, default_value_t = 0.3)]
    design_eps: f64,
}

/// Execution knobs shared by the simulation commands.
#[derive(Args)]
struct RunArgs {
    /// Channel as kind:param, e.g. erasure:0.3 or depolarizing:0.05.
    #[arg(long)]
    channel: String,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 50)]
    max_bp_iters: u32,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    /// Block length, a power of two.
    #[arg(long)]
    n: usize,
    /// Information bits per side.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.3)]
    design_eps: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated channel parameters, strictly monotone.
    #[arg(long)]
    grid: String,
}

#[derive(Args)]
struct CompareArgs {
    /// Polar block length (power of two).
    #[arg(long)]
    n: usize,
    /// Polar information bits per side.
    #[arg(long)]
    k: usize,
    /// Inner code of the concatenated scheme (see --inner of simulate).
    #[arg(long)]
    inner: String,
    #[arg(long)]
    blocks: usize,
    #[arg(long)]
    outer_k_fraction: f64,
    #[arg(long, default_value_t = 0.3)]
    design_eps: f64,
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated channel parameters, strictly monotone.
    #[arg(long)]
    grid: String,
}

#[derive(Args)]
struct FloorScanArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated channel parameters, strictly monotone, length >= 4.
    #[arg(long)]
    grid: String,
}

#[derive(Args)]
struct ComplexityArgs {
    /// Scheme family: polar-only (sizes are block lengths) or concat
    /// (sizes are block counts).
    #[arg(long)]
    scheme: String,
    /// Comma-separated family sizes, at least 4 distinct values.
    #[arg(long)]
    sizes: String,
    /// Information fraction for the polar-only family.
    #[arg(long, default_value_t = 0.25)]
    k_fraction: f64,
    /// Inner code for the concat family (see --inner of simulate).
    #[arg(long)]
    inner: Option<String>,
    #[arg(long)]
    outer_k_fraction: Option<f64>,
    #[arg(long, default_value_t = 0.3)]
    design_eps: f64,
    #[command(flatten)]
    run: RunArgs,
}

enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Construct(args) => cmd_construct(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Compare(args) => cmd_compare(args),
        Command::FloorScan(args) => cmd_floor_scan(args),
        Command::Complexity(args) => cmd_complexity(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(3)
        }
    }
}

// ============================================================================
// Flag parsing and validation
// ============================================================================

fn parse_channel(text: &str) -> Result<ChannelModel, CliError> {
    let (kind, param) = text
        .split_once(':')
        .ok_or_else(|| CliError::config(format!("channel must be kind:param, got '{text}'")))?;
    let param: f64 = param
        .parse()
        .map_err(|_| CliError::config(format!("channel parameter '{param}' is not a number")))?;
    if !(0.0..=1.0).contains(&param) {
        return Err(CliError::config(format!(
            "channel parameter {param} outside [0, 1]"
        )));
    }
    match kind {
        "erasure" => Ok(ChannelModel::QuantumErasure { eps: param }),
        "depolarizing" => Ok(ChannelModel::Depolarizing { p: param }),
        other => Err(CliError::config(format!(
            "unknown channel kind '{other}' (erasure | depolarizing)"
        ))),
    }
}

fn parse_inner(text: &str) -> Result<InnerSpec, CliError> {
    if text == "steane" {
        return Ok(InnerSpec::Steane);
    }
    if let Some(n) = text.strip_prefix("id:") {
        let n: usize = n
            .parse()
            .map_err(|_| CliError::config(format!("identity inner length '{n}' is not a count")))?;
        if n == 0 {
            return Err(CliError::config("identity inner length must be positive"));
        }
        return Ok(InnerSpec::Identity { n });
    }
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(CliError::config(format!(
            "inner must be steane, id:<n>, or half_len,row_weight,rows_kept,code_seed; got '{text}'"
        )));
    }
    let nums: Result<Vec<u64>, _> = parts.iter().map(|p| p.trim().parse::<u64>()).collect();
    let nums =
        nums.map_err(|_| CliError::config(format!("inner '{text}' has a non-integer field")))?;
    let (half_len, row_weight, rows_kept, code_seed) =
        (nums[0] as usize, nums[1] as usize, nums[2] as usize, nums[3]);
    if row_weight == 0 || row_weight % 2 != 0 || row_weight > half_len {
        return Err(CliError::config(format!(
            "bicycle row weight {row_weight} must be even, positive, and at most {half_len}"
        )));
    }
    if rows_kept == 0 || rows_kept > half_len {
        return Err(CliError::config(format!(
            "bicycle rows kept {rows_kept} must be in 1..={half_len}"
        )));
    }
    Ok(InnerSpec::Bicycle { half_len, row_weight, rows_kept, code_seed })
}

fn validate_polar(n: usize, k: usize) -> Result<(), CliError> {
    if !n.is_power_of_two() || n < 2 {
        return Err(CliError::config(format!(
            "polar block length {n} must be a power of two, at least 2"
        )));
    }
    if k == 0 || k > n {
        return Err(CliError::config(format!(
            "information bits {k} must be in 1..={n}"
        )));
    }
    Ok(())
}

/// Checks the concat composition rules without building the scheme, so bad
/// configurations are reported before any trial runs.
fn validate_concat(
    inner: &InnerSpec,
    blocks: usize,
    fraction: f64,
) -> Result<(), CliError> {
    if blocks == 0 {
        return Err(CliError::config("blocks must be at least 1"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CliError::config(format!(
            "outer information fraction {fraction} outside (0, 1]"
        )));
    }
    let code = inner.build();
    for side in Side::BOTH {
        let k_in = pipeline_view(code.detector(side)).k_in;
        let outer_len = blocks * k_in;
        if !outer_len.is_power_of_two() || outer_len < 2 {
            return Err(CliError::config(format!(
                "blocks x inner payload = {blocks} x {k_in} = {outer_len} must be a power of \
                 two, at least 2"
            )));
        }
        let k = (fraction * outer_len as f64).round() as usize;
        if k == 0 || k > outer_len {
            return Err(CliError::config(format!(
                "outer information fraction {fraction} gives {k} of {outer_len} bits"
            )));
        }
    }
    Ok(())
}

fn build_scheme(args: &SchemeArgs) -> Result<SchemeSpec, CliError> {
    match args.scheme.as_str() {
        "polar-only" => {
            let n = args
                .n
                .ok_or_else(|| CliError::config("polar-only needs --n"))?;
            let k = args
                .k
                .ok_or_else(|| CliError::config("polar-only needs --k"))?;
            validate_polar(n, k)?;
            Ok(SchemeSpec::PolarOnly { n, k, design_eps: args.design_eps })
        }
        "ldpc-only" => {
            let inner = parse_inner(
                args.inner
                    .as_deref()
                    .ok_or_else(|| CliError::config("ldpc-only needs --inner"))?,
            )?;
            Ok(SchemeSpec::LdpcOnly { inner })
        }
        "concat" => {
            let inner = parse_inner(
                args.inner
                    .as_deref()
                    .ok_or_else(|| CliError::config("concat needs --inner"))?,
            )?;
            let blocks = args
                .blocks
                .ok_or_else(|| CliError::config("concat needs --blocks"))?;
            let fraction = args
                .outer_k_fraction
                .ok_or_else(|| CliError::config("concat needs --outer-k-fraction"))?;
            validate_concat(&inner, blocks, fraction)?;
            Ok(SchemeSpec::Concat {
                inner,
                blocks,
                outer_k_fraction: fraction,
                design_eps: args.design_eps,
            })
        }
        other => Err(CliError::config(format!(
            "unknown scheme '{other}' (polar-only | ldpc-only | concat)"
        ))),
    }
}

fn build_config(scheme: SchemeSpec, run_args: &RunArgs) -> Result<SimConfig, CliError> {
    if run_args.trials == 0 {
        return Err(CliError::config("trials must be at least 1"));
    }
    if run_args.workers == 0 {
        return Err(CliError::config("workers must be at least 1"));
    }
    if run_args.max_bp_iters == 0 {
        return Err(CliError::config("max BP iterations must be at least 1"));
    }
    Ok(SimConfig {
        scheme,
        channel: parse_channel(&run_args.channel)?,
        trials: run_args.trials,
        seed: run_args.seed,
        workers: run_args.workers,
        max_bp_iters: run_args.max_bp_iters,
        calibration_blocks: 10_000,
    })
}

fn parse_grid(text: &str, min_len: usize) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let values =
        values.map_err(|_| CliError::config(format!("grid '{text}' has a non-numeric entry")))?;
    if values.len() < min_len {
        return Err(CliError::config(format!(
            "grid needs at least {min_len} points, got {}",
            values.len()
        )));
    }
    let increasing = values.windows(2).all(|w| w[0] < w[1]);
    let decreasing = values.windows(2).all(|w| w[0] > w[1]);
    if !(increasing || decreasing) {
        return Err(CliError::config("grid values must be strictly monotone"));
    }
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(CliError::config("grid values must lie in [0, 1]"));
    }
    Ok(values)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

// ============================================================================
// Commands
// ============================================================================

fn cmd_construct(args: ConstructArgs) -> Result<(), CliError> {
    validate_polar(args.n, args.k)?;
    if !(0.0..=1.0).contains(&args.design_eps) {
        return Err(CliError::config(format!(
            "design erasure rate {} outside [0, 1]",
            args.design_eps
        )));
    }
    let spec = PolarCodeSpec::construct(args.n, args.k, args.design_eps);
    emit(&args.out, &spec.to_text())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let config = build_config(build_scheme(&args.scheme)?, &args.run)?;
    let result = run(&config);
    emit(&args.run.out, &results_to_csv(std::slice::from_ref(&result)))
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let grid = parse_grid(&args.grid, 1)?;
    let config = build_config(build_scheme(&args.scheme)?, &args.run)?;
    let results = sweep(&config, &grid);
    emit(&args.run.out, &results_to_csv(&results))
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let grid = parse_grid(&args.grid, 1)?;
    validate_polar(args.n, args.k)?;
    let inner = parse_inner(&args.inner)?;
    validate_concat(&inner, args.blocks, args.outer_k_fraction)?;
    let polar_config = build_config(
        SchemeSpec::PolarOnly { n: args.n, k: args.k, design_eps: args.design_eps },
        &args.run,
    )?;
    let concat_config = build_config(
        SchemeSpec::Concat {
            inner,
            blocks: args.blocks,
            outer_k_fraction: args.outer_k_fraction,
            design_eps: args.design_eps,
        },
        &args.run,
    )?;
    let polar = sweep(&polar_config, &grid);
    let concat = sweep(&concat_config, &grid);

    let mut report = String::new();
    for (p, c) in polar.iter().zip(&concat) {
        let pw = wilson_interval(p.bit_errors, p.total_info_bits);
        let cw = wilson_interval(c.bit_errors, c.total_info_bits);
        let verdict = if cw.1 < pw.0 {
            "concat ahead, separated"
        } else if pw.1 < cw.0 {
            "polar ahead, separated"
        } else {
            "overlapping"
        };
        writeln!(
            report,
            "param={:.4}: polar ber={:.4e} [{:.3e},{:.3e}]  concat ber={:.4e} [{:.3e},{:.3e}]  {verdict}",
            p.channel_param, p.ber, pw.0, pw.1, c.ber, cw.0, cw.1
        )
        .expect("string writes cannot fail");
    }
    // Reference decay shapes at each scheme's physical length; printed for
    // orientation only, never asserted against measurements (their constants
    // are not pinned by anything measurable here).
    for r in [&polar[0], &concat[0]] {
        let n = r.n_physical as f64;
        writeln!(
            report,
            "reference overlays at n={}: 2^-sqrt(n) = {:.3e}, 2^-(n/log2(n)) = {:.3e}  [{}]",
            r.n_physical,
            (-n.sqrt()).exp2(),
            (-(n / n.log2())).exp2(),
            r.scheme_name
        )
        .expect("string writes cannot fail");
    }
    print!("{report}");

    let mut merged: Vec<SimResult> = polar;
    merged.extend(concat);
    match &args.run.out {
        Some(_) => emit(&args.run.out, &results_to_csv(&merged)),
        // Report already went to stdout; keep the CSV on stdout too, after it.
        None => {
            print!("{}", results_to_csv(&merged));
            Ok(())
        }
    }
}

fn cmd_floor_scan(args: FloorScanArgs) -> Result<(), CliError> {
    let grid = parse_grid(&args.grid, 4)?;
    let config = build_config(build_scheme(&args.scheme)?, &args.run)?;
    let results = sweep(&config, &grid);
    let points: Vec<(f64, f64)> = results
        .iter()
        .map(|r| (r.channel_param, r.bler))
        .collect();
    let report = error_floor_metric(&points);
    let slopes: Vec<String> = report.slopes.iter().map(|s| format!("{s:.3}")).collect();
    println!(
        "floor_detected={} slopes=[{}] excluded_zero_bler={}",
        report.floor_detected,
        slopes.join(", "),
        report.excluded_zero_bler
    );
    if args.run.out.is_some() {
        emit(&args.run.out, &results_to_csv(&results))?;
    }
    Ok(())
}

fn cmd_complexity(args: ComplexityArgs) -> Result<(), CliError> {
    let sizes: Result<Vec<usize>, _> =
        args.sizes.split(',').map(|p| p.trim().parse::<usize>()).collect();
    let sizes = sizes
        .map_err(|_| CliError::config(format!("sizes '{}' has a non-integer entry", args.sizes)))?;
    let mut distinct = sizes.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(CliError::config("complexity fit needs at least 4 distinct sizes"));
    }

    let mut points = Vec::new();
    let mut lines = String::new();
    for &size in &sizes {
        let scheme = match args.scheme.as_str() {
            "polar-only" => {
                let k = ((size as f64 * args.k_fraction).round() as usize).clamp(1, size);
                validate_polar(size, k)?;
                SchemeSpec::PolarOnly { n: size, k, design_eps: args.design_eps }
            }
            "concat" => {
                let inner = parse_inner(
                    args.inner
                        .as_deref()
                        .ok_or_else(|| CliError::config("concat family needs --inner"))?,
                )?;
                let fraction = args.outer_k_fraction.ok_or_else(|| {
                    CliError::config("concat family needs --outer-k-fraction")
                })?;
                validate_concat(&inner, size, fraction)?;
                SchemeSpec::Concat {
                    inner,
                    blocks: size,
                    outer_k_fraction: fraction,
                    design_eps: args.design_eps,
                }
            }
            other => {
                return Err(CliError::config(format!(
                    "complexity supports polar-only or concat families, got '{other}'"
                )))
            }
        };
        let result = run(&build_config(scheme, &args.run)?);
        let per_trial = result.op_count as f64 / result.trials as f64;
        writeln!(lines, "n_physical={} ops_per_trial={per_trial:.1}", result.n_physical)
            .expect("string writes cannot fail");
        points.push((result.n_physical as f64, per_trial));
    }
    let exponent = log_log_slope(&points);
    // Fitted slopes of the analytic shapes over the same physical sizes, as
    // reference points for reading the measured exponent.
    let linear_log: Vec<(f64, f64)> =
        points.iter().map(|&(n, _)| (n, n * n.log2())).collect();
    let linear_log2: Vec<(f64, f64)> =
        points.iter().map(|&(n, _)| (n, n * n.log2() * n.log2())).collect();
    print!("{lines}");
    println!(
        "fitted_exponent={exponent:.4} reference: n*log2(n) fits {:.4}, n*log2(n)^2 fits {:.4}",
        log_log_slope(&linear_log),
        log_log_slope(&linear_log2)
    );
    Ok(())
}
