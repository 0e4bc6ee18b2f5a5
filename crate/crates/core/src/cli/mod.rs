//! Command-line surface: spec parsing, configuration and the subcommands.

pub mod config;
pub mod spec;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gallery::make_moebius_twist;
use crate::lseries::{detect_multiplicity, find_zeros};
use crate::multfun::{ClassParams, MultFunc};
use crate::oracle::freeze_constants;
use crate::structure::{geometric_grid, heuristic_demo, transition_points, HEURISTIC_TOL};
use crate::sums::{partial_sum, partial_sum_record, prime_count, prime_log_record, sifted_sum, SumKind, SumRecord, CSV_HEADER};

pub use config::{OutputFormat, RunConfig};
pub use spec::FunctionSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;
pub const EXIT_CHECK: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "multlab", version, about = "Numerical laboratory for multiplicative functions with small partial sums")]
pub struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub format: Option<OutputFormat>,
    /// Largest integer any sieve may touch.
    #[arg(long, global = true, value_parser = parse_count)]
    pub ceiling: Option<u64>,
    #[arg(long, global = true, value_parser = parse_count)]
    pub segment_size: Option<u64>,
    /// Repeat for more log output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partial, sifted or prime sums as CSV rows.
    Sums(SumsArgs),
    /// Construct the transition profile (JSON).
    Transition(TransitionArgs),
    /// Locate the zeros near s = 1 (JSON).
    Zeros(ZerosArgs),
    /// Heuristic integrals against measured prime sums.
    Heuristic(HeuristicArgs),
    /// Run a frozen-constant suite.
    Check(CheckArgs),
    /// Time one engine.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SumsArgs {
    #[arg(long)]
    pub f: String,
    /// Comma-separated upper limits of `Σ_{n<=x} f(n)`.
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    pub x: Vec<u64>,
    /// Restrict the partial sums to `P⁻(n) > y`.
    #[arg(long)]
    pub sift: Option<f64>,
    /// Prime interval `(LO, HI]` for `Σ (Re f(p) + j)/p`.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub interval: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub j: u32,
}

#[derive(Debug, Args)]
pub struct TransitionArgs {
    #[arg(long)]
    pub f: String,
    /// Class degree (defaults to the degree of the spec).
    #[arg(long = "D")]
    pub d: Option<u32>,
    /// Class exponent (defaults to D + 2).
    #[arg(long = "A")]
    pub a: Option<f64>,
    #[arg(long = "Q", default_value_t = 10.0)]
    pub q: f64,
    /// Multiplicity at 1 (detected when omitted).
    #[arg(long)]
    pub m: Option<u32>,
    /// Also write the per-step diagnostics as CSV to this file.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ZerosArgs {
    #[arg(long)]
    pub f: String,
    #[arg(long = "D")]
    pub d: Option<u32>,
    #[arg(long = "Q", default_value_t = 10.0)]
    pub q: f64,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long = "X", value_parser = parse_count)]
    pub x: Option<u64>,
}

#[derive(Debug, Args)]
pub struct HeuristicArgs {
    /// Zeros such as `1+0.3i`, repeated for multiplicity.
    #[arg(long, value_delimiter = ',', value_parser = parse_complex)]
    pub rho: Vec<Complex64>,
    /// Intervals `LO:HI`, comma-separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_interval, required = true)]
    pub intervals: Vec<(f64, f64)>,
    /// Function whose prime sums are measured alongside.
    #[arg(long)]
    pub f: Option<String>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// `lemma22`, `structure`, `heuristic` or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Overwrite the frozen values instead of comparing with them.
    #[arg(long)]
    pub freeze: bool,
    #[arg(long)]
    pub constants: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchTarget {
    Sieve,
    Psum,
    Zeros,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub target: BenchTarget,
    #[arg(long, value_parser = parse_count)]
    pub n: u64,
}

/// Integers, also in the form `1e8`.
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    s.parse::<u64>().or_else(|_| match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 => Ok(v as u64),
        _ => Err(format!("`{s}` is not a non-negative integer")),
    })
}

/// `a+bi`, `a-bi`, `a` or `bi`.
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let t = s.trim();
    let bad = || format!("`{s}` is not a complex number like 1+0.3i");
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split before the last sign that is not an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (body[..k].parse::<f64>().map_err(|_| bad())?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re, im))
}

pub fn parse_interval(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("`{s}` is not an interval LO:HI"))?;
    let lo = a.trim().parse::<f64>().map_err(|_| format!("bad lower end in `{s}`"))?;
    let hi = b.trim().parse::<f64>().map_err(|_| format!("bad upper end in `{s}`"))?;
    Ok((lo, hi))
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Domain(_) => EXIT_PARSE,
        Error::Capacity { .. } | Error::Depth { .. } => EXIT_CAPACITY,
        Error::Check(_) | Error::Regression { .. } | Error::Io(_) | Error::Range(..) => EXIT_CHECK,
        _ => EXIT_DEGENERATE,
    }
}

fn build_spec(text: &str) -> Result<MultFunc> {
    FunctionSpec::parse(text)?.build()
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

pub fn write_records(out: &mut dyn Write, records: &[SumRecord], format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in records {
                writeln!(out, "{}", r.to_csv_row())?;
            }
        }
        OutputFormat::Json => write_json(out, &records)?,
    }
    Ok(())
}

/// Resolve the configuration from defaults, `--config` and flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.ceiling {
        cfg.ceiling = v;
    }
    if let Some(v) = cli.segment_size {
        cfg.segment_size = v;
    }
    if let Some(v) = cli.format {
        cfg.format = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run a parsed command, writing its output to `out`; returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let cfg = resolve_config(cli)?;
    let mut buf: Vec<u8> = Vec::new();
    let code = match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Check(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(&cli.command, &cfg, &mut buf))
        }
        None => dispatch(&cli.command, &cfg, &mut buf),
    };
    out.write_all(&buf)?;
    code
}

fn dispatch(cmd: &Command, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Sums(a) => cmd_sums(a, cfg, out),
        Command::Transition(a) => cmd_transition(a, cfg, out),
        Command::Zeros(a) => cmd_zeros(a, cfg, out),
        Command::Heuristic(a) => cmd_heuristic(a, cfg, out),
        Command::Check(a) => cmd_check(a, cfg, out),
        Command::Bench(a) => cmd_bench(a, cfg, out),
    }
}

pub fn cmd_sums(a: &SumsArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let f = build_spec(&a.f)?;
    let limits = cfg.limits();
    let mut records = Vec::new();
    for &x in &a.x {
        records.push(match a.sift {
            None => partial_sum_record(&f, x, &limits)?,
            Some(y) => SumRecord {
                kind: SumKind::Sifted,
                label: f.label().to_string(),
                lo: y,
                hi: x as f64,
                j_shift: 0,
                value: sifted_sum(&f, x, y, &limits)?,
                truncation: x,
                error_budget: 4.0 * f64::EPSILON * x as f64,
            },
        });
    }
    if let Some(iv) = &a.interval {
        records.push(prime_log_record(&f, iv[0], iv[1], a.j, &limits)?);
    }
    if records.is_empty() {
        return Err(Error::domain("give --x and/or --interval"));
    }
    write_records(out, &records, cfg.format)?;
    Ok(EXIT_OK)
}

fn class_params(f: &MultFunc, d: Option<u32>, a: Option<f64>, q: f64, eta: f64) -> Result<ClassParams> {
    let d = d.unwrap_or(f.degree()).max(1);
    ClassParams::new(d, a.unwrap_or(d as f64 + 2.0), q, eta)
}

#[derive(Serialize)]
struct TransitionOutput<'a> {
    f: &'a str,
    params: &'a ClassParams,
    profile: &'a crate::structure::TransitionProfile,
}

pub fn cmd_transition(a: &TransitionArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let f = build_spec(&a.f)?;
    let limits = cfg.limits();
    let params = class_params(&f, a.d, a.a, a.q, 1.0)?;
    let m = match a.m {
        Some(m) => m,
        None => detect_multiplicity(&f, &params, cfg.theta, cfg.x_zeros(), &limits)?,
    };
    let grid = geometric_grid(a.q, cfg.ceiling as f64, cfg.grid_ratio)?;
    let profile = transition_points(&f, &params, m, &grid, cfg.x_transition(), &limits)?;
    write_json(out, &TransitionOutput { f: f.label(), params: &params, profile: &profile })?;
    if let Some(path) = &a.diagnostics {
        let mut text = String::from("k,sigma,y_star,l_re,l_im,log_value,at_endpoint\n");
        for s in &profile.diagnostics {
            text.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.k, s.sigma, s.y_star, s.l_value.re, s.l_value.im, s.log_value, s.at_endpoint
            ));
        }
        std::fs::write(path, text)?;
    }
    let finite = profile.saturated.len() - 1;
    let saturated = profile.saturated.iter().filter(|&&s| s).count();
    Ok(if finite > 0 && 2 * saturated > finite { EXIT_DEGENERATE } else { EXIT_OK })
}

pub fn cmd_zeros(a: &ZerosArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let f = build_spec(&a.f)?;
    let limits = cfg.limits();
    let d = a.d.unwrap_or(f.degree()).max(1);
    let params = ClassParams::strong(d, a.q)?;
    let x = a.x.unwrap_or(cfg.x_zeros());
    let zeros = find_zeros(&f, &params, a.c0.unwrap_or(cfg.c0), x, &limits)?;
    write_json(out, &zeros)?;
    Ok(EXIT_OK)
}

pub fn cmd_heuristic(a: &HeuristicArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let limits = cfg.limits();
    let label = format!("model({})", a.rho.iter().map(|z| z.to_string()).collect::<Vec<_>>().join(","));
    let rows = heuristic_demo(&a.rho, &a.intervals, None, &limits)?;
    let f = a.f.as_deref().map(build_spec).transpose()?;
    let mut records = Vec::new();
    for row in rows {
        records.push(SumRecord {
            kind: SumKind::Heuristic,
            label: label.clone(),
            lo: row.lo,
            hi: row.hi,
            j_shift: 0,
            value: Complex64::new(row.prediction, 0.0),
            truncation: 0,
            error_budget: HEURISTIC_TOL * a.rho.len() as f64,
        });
        if let Some(f) = &f {
            records.push(prime_log_record(f, row.lo, row.hi, 0, &limits)?);
        }
    }
    write_records(out, &records, cfg.format)?;
    Ok(EXIT_OK)
}

pub fn cmd_check(a: &CheckArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let path = a.constants.clone().unwrap_or_else(|| cfg.constants.clone());
    let report = freeze_constants(&a.suite, &path, a.freeze, &cfg.limits())?;
    write_json(out, &report)?;
    Ok(if report.pass() { EXIT_OK } else { EXIT_CHECK })
}

#[derive(Serialize)]
struct BenchOutput {
    target: BenchTarget,
    n: u64,
    seconds: f64,
    threads: usize,
    result: String,
}

pub fn cmd_bench(a: &BenchArgs, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let limits = cfg.limits();
    let start = Instant::now();
    let result = match a.target {
        BenchTarget::Sieve => prime_count(2, a.n + 1, &limits)?.to_string(),
        BenchTarget::Psum => partial_sum(&crate::gallery::moebius(), a.n, &limits)?.re.to_string(),
        BenchTarget::Zeros => {
            let e = make_moebius_twist(0.3)?;
            let z = find_zeros(&e.f, &ClassParams::strong(1, 2f64.exp())?, cfg.c0, a.n, &limits)?;
            z.zeros.iter().map(|z| z.rho.to_string()).collect::<Vec<_>>().join(",")
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    write_json(out, &BenchOutput { target: a.target, n: a.n, seconds, threads: rayon::current_num_threads(), result })?;
    Ok(EXIT_OK)
}

/// Parse `std::env::args`, run, report errors on stderr and return the exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
