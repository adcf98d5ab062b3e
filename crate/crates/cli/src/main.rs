use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cqpolar::bounds::{propagate_all, ReliabilityInterval};
use cqpolar::channel::{channel_params, BinaryCQChannel, ChannelSpec};
use cqpolar::construction::{construct, error_bound, info_count_for_rate, reliabilities, select_information_set, Backend, FrozenPolicy};
use cqpolar::decoder::{write_trajectory_csv, Decoder, ErrorReport, Measurement, ERROR_REPORT_SCHEMA, FROZEN_AVERAGE_CAP};
use cqpolar::synthesis::{split_params, split_root_fidelity, Budget};
use cqpolar::transform::{CodeSpec, CodeSpecDoc};
use cqpolar::verify::{self, Suite, VerifyOptions, VERIFY_SCHEMA};

const POLARIZE_SCHEMA: &str = "cqpolar.polarize.v1";
const BOUNDS_VS_EXACT_SCHEMA: &str = "cqpolar.bounds_vs_exact.v1";
const DELTAS: [f64; 2] = [0.1, 0.01];

#[derive(Parser)]
#[command(name = "cqpolar", version, about = "Polar codes for binary-input classical-quantum channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-index reliabilities and Holevo information of the split channels (CSV).
    Polarize(PolarizeArgs),
    /// Choose an information set and report the block-error bound (JSON).
    Construct(ConstructArgs),
    /// Exact and Monte Carlo block error of the successive-cancellation decoder (JSON).
    Decode(DecodeArgs),
    /// Run the invariant suites; exits non-zero if any check fails.
    Verify(VerifyArgs),
    /// Propagated intervals next to exactly computed reliabilities (CSV).
    BoundsVsExact(BoundsVsExactArgs),
}

#[derive(Args)]
struct ChannelArgs {
    /// JSON channel file, or `<preset>:<param>` (bsc, bec, pure_overlap, bpsk).
    #[arg(long)]
    channel: String,
    /// Number of polarization levels; N = 2^n.
    #[arg(long)]
    n: u32,
}

#[derive(Args)]
struct RateArgs {
    /// Code rate; K = ⌊N·R⌋.
    #[arg(long, conflicts_with = "k")]
    rate: Option<f64>,
    /// Number of information bits.
    #[arg(long = "K", id = "k")]
    k: Option<usize>,
}

impl RateArgs {
    fn info_count(&self, block_length: usize) -> Result<usize> {
        match (self.rate, self.k) {
            (_, Some(k)) => Ok(k),
            (Some(r), None) => Ok(info_count_for_rate(block_length, r)?),
            (None, None) => bail!("one of --rate or --K is required"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Bounds,
    Hybrid,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Exact => Backend::Exact,
            BackendArg::Bounds => Backend::Bounds,
            BackendArg::Hybrid => Backend::Hybrid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FrozenArg {
    Zeros,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasurementArg {
    SquareRoot,
    Helstrom,
}

#[derive(Args)]
struct PolarizeArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long, value_enum, default_value = "hybrid")]
    backend: BackendArg,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    rate: RateArgs,
    #[arg(long, value_enum, default_value = "hybrid")]
    backend: BackendArg,
    #[arg(long, value_enum, default_value = "zeros")]
    frozen: FrozenArg,
    /// Seed for random frozen bits.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    rate: RateArgs,
    /// Code specification JSON; overrides --rate/--K.
    #[arg(long)]
    code: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "square-root")]
    measurement: MeasurementArg,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the exact block-error computation.
    #[arg(long)]
    no_exact: bool,
    /// Per-step trajectory CSV.
    #[arg(long)]
    trajectories: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Restrict to one or more suites.
    #[arg(long = "suite", value_enum)]
    suites: Vec<SuiteArg>,
    /// Deepest level of exact synthesis checks.
    #[arg(long, default_value_t = 3)]
    n: u32,
    /// Number of random qubit channels added to the presets.
    #[arg(long, default_value_t = 3)]
    random: usize,
    #[arg(long, default_value_t = 2009)]
    seed: u64,
    /// Negative control: perturb √F(W⁺) before the fidelity checks.
    #[arg(long, hide = true)]
    mutate_fidelity: bool,
    /// Also write the rows as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Encoder,
    Synthesis,
    Bounds,
    Decoder,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Encoder => Suite::Encoder,
            SuiteArg::Synthesis => Suite::Synthesis,
            SuiteArg::Bounds => Suite::Bounds,
            SuiteArg::Decoder => Suite::Decoder,
        }
    }
}

#[derive(Args)]
struct BoundsVsExactArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let budget = Budget::from_env().context("reading CQPOLAR_BUDGET")?;
    match cli.command {
        Command::Polarize(a) => polarize(a, &budget)?,
        Command::Construct(a) => construct_cmd(a, &budget)?,
        Command::Decode(a) => decode(a, &budget)?,
        Command::Verify(a) => return verify_cmd(a, budget),
        Command::BoundsVsExact(a) => bounds_vs_exact(a, &budget)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn load_channel(arg: &str) -> Result<(ChannelSpec, BinaryCQChannel)> {
    let spec = if Path::new(arg).is_file() {
        let text = std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
        ChannelSpec::from_json(&text).with_context(|| format!("parsing {arg}"))?
    } else {
        ChannelSpec::parse_preset(arg)?
    };
    let w = spec.build().with_context(|| format!("building channel {}", spec.label()))?;
    Ok((spec, w))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn block_length(levels: u32) -> Result<usize> {
    1usize.checked_shl(levels).filter(|_| levels < usize::BITS).context("--n too large")
}

/// Summary fractions over certified Holevo bounds: good if the lower bound
/// exceeds 1 − δ, bad if the upper bound is below δ.
fn summary_lines(holevo: &[(f64, f64)]) -> Vec<String> {
    let n = holevo.len() as f64;
    DELTAS
        .iter()
        .map(|&d| {
            let good = holevo.iter().filter(|(lo, _)| *lo > 1.0 - d).count() as f64 / n;
            let bad = holevo.iter().filter(|(_, hi)| *hi < d).count() as f64 / n;
            format!("# delta={d} good_fraction={good} bad_fraction={bad}")
        })
        .collect()
}

#[derive(Serialize)]
struct PolarizeRow {
    index: usize,
    f_lo: f64,
    f_hi: f64,
    holevo_lo: f64,
    holevo_hi: f64,
}

fn polarize(a: PolarizeArgs, budget: &Budget) -> Result<()> {
    let (spec, w) = load_channel(&a.channel.channel)?;
    let levels = a.channel.n;
    let backend = Backend::from(a.backend);
    let rows: Vec<PolarizeRow> = if backend == Backend::Exact {
        split_params(&w, levels, budget)?
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let f = p.root_fidelity();
                PolarizeRow { index: k + 1, f_lo: f, f_hi: f, holevo_lo: p.holevo, holevo_hi: p.holevo }
            })
            .collect()
    } else {
        let (ivs, _) = reliabilities(&w, levels, backend, budget)?;
        ivs.iter()
            .enumerate()
            .map(|(k, iv)| {
                let (holevo_lo, holevo_hi) = iv.holevo_bounds();
                PolarizeRow { index: k + 1, f_lo: iv.f_lo, f_hi: iv.f_hi, holevo_lo, holevo_hi }
            })
            .collect()
    };
    let holevo: Vec<(f64, f64)> = rows.iter().map(|r| (r.holevo_lo, r.holevo_hi)).collect();
    let mut out = output(&a.out)?;
    writeln!(out, "# schema={POLARIZE_SCHEMA}")?;
    writeln!(out, "# channel={} n={levels} backend={}", spec.label(), backend.name())?;
    for line in summary_lines(&holevo) {
        writeln!(out, "{line}")?;
    }
    let mut csv = csv::Writer::from_writer(out);
    for r in &rows {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

fn construct_cmd(a: ConstructArgs, budget: &Budget) -> Result<()> {
    let (spec, w) = load_channel(&a.channel.channel)?;
    let n = block_length(a.channel.n)?;
    let k = a.rate.info_count(n)?;
    let policy = match a.frozen {
        FrozenArg::Zeros => FrozenPolicy::Zeros,
        FrozenArg::Random => FrozenPolicy::Random { seed: a.seed },
    };
    let report = construct(&w, a.channel.n, k, a.backend.into(), budget, policy)?;
    let mut out = output(&a.out)?;
    writeln!(out, "{}", report.to_json(Some(&spec.label()))?)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DecodeDoc {
    #[serde(flatten)]
    report: ErrorReport,
    channel: String,
    code: CodeSpecDoc,
}

fn decode(a: DecodeArgs, budget: &Budget) -> Result<()> {
    let (spec, w) = load_channel(&a.channel.channel)?;
    let levels = a.channel.n;
    let n = block_length(levels)?;
    let measurement = match a.measurement {
        MeasurementArg::SquareRoot => Measurement::SquareRoot,
        MeasurementArg::Helstrom => Measurement::Helstrom,
    };
    let decoder = Decoder::new(&w, levels, budget)?.with_measurement(measurement);
    let f = split_root_fidelity(&w, levels, budget)?;
    let code = match &a.code {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let c = CodeSpec::from_json(&text)?;
            if c.block_length() != n {
                bail!("code has N = {}, but --n gives N = {n}", c.block_length());
            }
            c
        }
        None => {
            let k = a.rate.info_count(n)?;
            CodeSpec::with_zero_frozen(n, select_information_set(&f, k)?)?
        }
    };
    let bound = error_bound(&f, code.info_set());
    let (exact, averaged) = if a.no_exact {
        (None, None)
    } else {
        let e = decoder.exact_block_error(&code)?;
        let avg = if n - code.info_count() <= FROZEN_AVERAGE_CAP {
            Some(decoder.exact_block_error_frozen_average(&code)?)
        } else {
            None
        };
        (Some(e), avg)
    };
    let monte_carlo = if a.trials > 0 {
        let (summary, runs) = decoder.monte_carlo(&code, a.trials, a.seed, true)?;
        if let Some(p) = &a.trajectories {
            let file = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            write_trajectory_csv(&code, &runs, file)?;
        }
        Some(summary)
    } else {
        None
    };
    let doc = DecodeDoc {
        report: ErrorReport {
            schema: ERROR_REPORT_SCHEMA,
            measurement,
            exact_block_error: exact,
            exact_block_error_frozen_average: averaged,
            monte_carlo,
            prop2_bound: bound,
        },
        channel: spec.label(),
        code: CodeSpecDoc::from(&code),
    };
    let mut out = output(&a.out)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct VerifyDoc<'a> {
    schema: &'static str,
    passed: bool,
    rows: &'a [verify::VerifyRow],
}

fn verify_cmd(a: VerifyArgs, budget: Budget) -> Result<ExitCode> {
    let suites = if a.suites.is_empty() { Suite::ALL.to_vec() } else { a.suites.into_iter().map(Suite::from).collect() };
    let options = VerifyOptions {
        suites,
        levels: a.n,
        random_channels: a.random,
        seed: a.seed,
        mutate_fidelity: a.mutate_fidelity,
        budget,
    };
    let rows = verify::run(&options)?;
    let all_passed = rows.iter().all(|r| r.passed);
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{:<6} {:<32} {:<18} {:>2} {:>12} {:>9}", "result", "property", "channel", "n", "max_violation", "tol")?;
    for r in &rows {
        writeln!(
            stdout,
            "{:<6} {:<32} {:<18} {:>2} {:>12.3e} {:>9.0e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.property,
            r.channel,
            r.n,
            r.max_violation,
            r.tolerance
        )?;
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    writeln!(stdout, "{} checks, {failed} failed", rows.len())?;
    if let Some(p) = &a.out {
        let doc = VerifyDoc { schema: VERIFY_SCHEMA, passed: all_passed, rows: &rows };
        std::fs::write(p, serde_json::to_string_pretty(&doc)? + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

#[derive(Serialize)]
struct ComparisonRow {
    index: usize,
    exact: f64,
    f_lo: f64,
    f_hi: f64,
    width: f64,
    contained: bool,
}

fn bounds_vs_exact(a: BoundsVsExactArgs, budget: &Budget) -> Result<()> {
    let (spec, w) = load_channel(&a.channel.channel)?;
    let levels = a.channel.n;
    let exact = split_root_fidelity(&w, levels, budget)?;
    let f0 = channel_params(&w)?.root_fidelity().clamp(0.0, 1.0);
    let ivs: Vec<ReliabilityInterval> = propagate_all(f0, levels)?;
    let mut out = output(&a.out)?;
    writeln!(out, "# schema={BOUNDS_VS_EXACT_SCHEMA}")?;
    writeln!(out, "# channel={} n={levels}", spec.label())?;
    let mut csv = csv::Writer::from_writer(out);
    for (k, (iv, &f)) in ivs.iter().zip(&exact).enumerate() {
        csv.serialize(ComparisonRow {
            index: k + 1,
            exact: f,
            f_lo: iv.f_lo,
            f_hi: iv.f_hi,
            width: iv.width(),
            contained: iv.contains(f, 1e-9),
        })?;
    }
    csv.flush()?;
    Ok(())
}
