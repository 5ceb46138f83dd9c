//! Command-line front end.
//!
//! Exit codes: 0 on success (and for `--help`/`--version`), 1 for usage or
//! configuration errors, 2 for runtime or I/O failures and failed checks.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use randbell_core::experiments::{SettingsMode, DEFAULT_CURVE_TRIALS, DEFAULT_EXPERIMENT_TRIALS};
use randbell_core::statistics::wilson_interval_95;

use crate::check::run_suite;
use crate::output::{format_number, read_spec, write_output, Format, Table};
use crate::parallel::{default_threads, Parallel};
use crate::run::{CountsSpec, Kind, RunError, RunSpec, Sweep};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for usage and configuration errors.
pub const EXIT_CONFIG: i32 = 1;
/// Exit status for runtime failures.
pub const EXIT_RUNTIME: i32 = 2;

/// Settings per party when neither the mode nor `--m` fixes it.
pub const DEFAULT_M: usize = 5;

#[derive(Debug, Parser)]
#[command(
    name = "randbell",
    version,
    about = "Monte Carlo Bell tests with randomly chosen measurements",
    after_help = "Worker threads default to $RANDBELL_THREADS, else the number of available cores."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One Haar-random triad per party in every trial.
    Triads(TrialArgs),
    /// Random measurement directions, optionally from uncalibrated heater voltages.
    Random(RandomArgs),
    /// Violation probability against visibility or number of settings.
    Curve(CurveArgs),
    /// Binned distribution of maximal CHSH values.
    Hist(HistArgs),
    /// Run the invariant suite; exits 2 if any check fails.
    Check(CheckArgs),
    /// Re-run the experiment described by an output file's metadata.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct TrialArgs {
    /// Number of trials [default: 100; 100000 for curve and hist]
    #[arg(long)]
    trials: Option<u64>,
    /// Werner-state visibility V in [0, 1]
    #[arg(long, default_value_t = 1.0)]
    visibility: f64,
    /// Settings per party [default: fixed by the mode, else 5]
    #[arg(long)]
    m: Option<usize>,
    /// Margin δ of the shifted bound 2 + δ
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Root seed of all random streams
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    counts: CountsArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct CountsArgs {
    /// Detected pairs per second; enables photon-counting simulation
    #[arg(long)]
    counts_rate: Option<f64>,
    /// Counting time per setting pair in seconds (counts mode)
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    /// Accidental coincidences per second (counts mode)
    #[arg(long, default_value_t = 0.0)]
    accidental_rate: f64,
    /// Estimate correlators from raw counts
    #[arg(long, conflicts_with = "corrected")]
    raw: bool,
    /// Subtract delayed-window accidentals before estimating (default)
    #[arg(long)]
    corrected: bool,
    /// Poisson resamples for per-trial error bars; 0 disables them, otherwise at least 100
    #[arg(long, default_value_t = 0)]
    resamples: usize,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Write data to this file; without it data goes to stdout and the summary to stderr
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output encoding
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads [default: $RANDBELL_THREADS or available cores]
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RandomMode {
    Random,
    Voltages,
    UnbiasedPairs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AnyMode {
    Triads,
    Random,
    Voltages,
    UnbiasedPairs,
}

impl From<RandomMode> for SettingsMode {
    fn from(m: RandomMode) -> Self {
        match m {
            RandomMode::Random => SettingsMode::Random,
            RandomMode::Voltages => SettingsMode::Voltages,
            RandomMode::UnbiasedPairs => SettingsMode::UnbiasedPairs,
        }
    }
}

impl From<AnyMode> for SettingsMode {
    fn from(m: AnyMode) -> Self {
        match m {
            AnyMode::Triads => SettingsMode::Triads,
            AnyMode::Random => SettingsMode::Random,
            AnyMode::Voltages => SettingsMode::Voltages,
            AnyMode::UnbiasedPairs => SettingsMode::UnbiasedPairs,
        }
    }
}

#[derive(Debug, Args)]
struct RandomArgs {
    /// How directions are drawn
    #[arg(long, value_enum, default_value_t = RandomMode::Random)]
    mode: RandomMode,
    /// Maximum heater voltage in voltages mode
    #[arg(long, default_value_t = randbell_core::sampling::DEFAULT_VMAX)]
    vmax: f64,
    #[command(flatten)]
    common: TrialArgs,
}

#[derive(Debug, Args)]
struct CurveArgs {
    /// How settings are drawn
    #[arg(long, value_enum, default_value_t = AnyMode::Random)]
    mode: AnyMode,
    /// Sweep over these visibilities (comma-separated); default is the single --visibility point
    #[arg(long, value_delimiter = ',', conflicts_with = "m_grid")]
    v_grid: Vec<f64>,
    /// Sweep over these numbers of settings (comma-separated) at --visibility
    #[arg(long, value_delimiter = ',')]
    m_grid: Vec<usize>,
    /// Maximum heater voltage in voltages mode
    #[arg(long, default_value_t = randbell_core::sampling::DEFAULT_VMAX)]
    vmax: f64,
    #[command(flatten)]
    common: TrialArgs,
}

#[derive(Debug, Args)]
struct HistArgs {
    /// How settings are drawn
    #[arg(long, value_enum, default_value_t = AnyMode::Triads)]
    mode: AnyMode,
    /// Histogram bin width
    #[arg(long, default_value_t = 0.01)]
    bin_width: f64,
    /// Maximum heater voltage in voltages mode
    #[arg(long, default_value_t = randbell_core::sampling::DEFAULT_VMAX)]
    vmax: f64,
    #[command(flatten)]
    common: TrialArgs,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Samples per check
    #[arg(long, default_value_t = 2000)]
    trials: u64,
    /// Root seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads [default: $RANDBELL_THREADS or available cores]
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// CSV or JSON file written by an earlier run
    input: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

fn spec_from(kind: Kind, mode: SettingsMode, vmax: f64, default_trials: u64, a: &TrialArgs) -> RunSpec {
    let m = a.m.or(mode.fixed_settings()).unwrap_or(DEFAULT_M);
    let mut spec = RunSpec::new(kind, mode, m);
    spec.trials = a.trials.unwrap_or(default_trials);
    spec.visibility = a.visibility;
    spec.delta = a.delta;
    spec.seed = a.seed;
    spec.vmax = vmax;
    spec.counts = a.counts.counts_rate.map(|pair_rate| CountsSpec {
        pair_rate,
        duration: a.counts.duration,
        accidental_rate: a.counts.accidental_rate,
        corrected: !a.counts.raw,
        resamples: a.counts.resamples,
    });
    spec
}

fn executor(threads: Option<usize>) -> Result<Parallel, RunError> {
    let n = threads.unwrap_or_else(default_threads);
    if n == 0 {
        return Err(RunError::Config("--threads must be at least 1".into()));
    }
    Parallel::new(n).map_err(|e| RunError::Runtime(format!("cannot start {n} worker threads: {e}")))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Human-readable one-line summary of a finished run.
pub fn summary(spec: &RunSpec, table: &Table) -> String {
    let f = format_number;
    match table {
        Table::Trials(rows) => {
            let hits = rows.iter().filter(|r| r.violated).count();
            let min = rows.iter().map(|r| r.chsh).fold(f64::INFINITY, f64::min);
            let max = rows.iter().map(|r| r.chsh).fold(f64::NEG_INFINITY, f64::max);
            let mut line = format!(
                "{} trials ({}, m={}, V={}): mean CHSH {}, min {}, max {}, violations {}/{} above {}",
                rows.len(),
                spec.mode,
                spec.m,
                f(spec.visibility),
                f(mean(rows.iter().map(|r| r.chsh))),
                f(min),
                f(max),
                hits,
                rows.len(),
                f(2.0 + spec.delta)
            );
            if let Ok((lo, hi)) = wilson_interval_95(hits, rows.len()) {
                line.push_str(&format!(" (95% interval {}..{})", f(lo), f(hi)));
            }
            line
        }
        Table::Curve(rows) => {
            let points: Vec<String> =
                rows.iter().map(|r| format!("{}: {} ± {}", f(r.axis), f(r.probability), f(r.stderr))).collect();
            format!("violation probability ({}, {} trials per point) {}", spec.mode, spec.trials, points.join("; "))
        }
        Table::Hist(rows) => {
            let total: u64 = rows.iter().map(|r| r.count).sum();
            let below: u64 = rows.iter().filter(|r| r.bin_hi <= 2.0).map(|r| r.count).sum();
            let weighted = rows.iter().map(|r| 0.5 * (r.bin_lo + r.bin_hi) * r.count as f64).sum::<f64>();
            let peak = rows.iter().enumerate().max_by(|a, b| a.1.count.cmp(&b.1.count).then(b.0.cmp(&a.0)));
            let mode = peak.map_or(String::new(), |(_, r)| format!(", mode [{}, {})", f(r.bin_lo), f(r.bin_hi)));
            format!(
                "{} values ({}, m={}, V={}): binned mean {}, {} at or below 2{}",
                total,
                spec.mode,
                spec.m,
                f(spec.visibility),
                f(weighted / total.max(1) as f64),
                below,
                mode
            )
        }
    }
}

fn run_and_write(spec: &RunSpec, out: &OutArgs) -> Result<(), RunError> {
    let exec = executor(out.threads)?;
    let table = spec.execute(&exec)?;
    write_output(spec, &table, out.out.as_deref(), out.format).map_err(|e| {
        let target = out.out.as_ref().map_or("stdout".to_string(), |p| p.display().to_string());
        RunError::Runtime(format!("cannot write {target}: {e}"))
    })?;
    let line = summary(spec, &table);
    if out.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<i32, RunError> {
    match command {
        Command::Triads(a) => {
            let spec = spec_from(
                Kind::Trials,
                SettingsMode::Triads,
                randbell_core::sampling::DEFAULT_VMAX,
                DEFAULT_EXPERIMENT_TRIALS,
                &a,
            );
            run_and_write(&spec, &a.out)?;
        }
        Command::Random(a) => {
            let spec = spec_from(Kind::Trials, a.mode.into(), a.vmax, DEFAULT_EXPERIMENT_TRIALS, &a.common);
            run_and_write(&spec, &a.common.out)?;
        }
        Command::Curve(a) => {
            let mut spec = spec_from(Kind::Curve, a.mode.into(), a.vmax, DEFAULT_CURVE_TRIALS, &a.common);
            if !a.v_grid.is_empty() {
                spec.sweep = Some(Sweep::Visibility(a.v_grid));
            } else if !a.m_grid.is_empty() {
                spec.sweep = Some(Sweep::M(a.m_grid));
            }
            run_and_write(&spec, &a.common.out)?;
        }
        Command::Hist(a) => {
            let mut spec = spec_from(Kind::Hist, a.mode.into(), a.vmax, DEFAULT_CURVE_TRIALS, &a.common);
            spec.bin_width = Some(a.bin_width);
            run_and_write(&spec, &a.common.out)?;
        }
        Command::Check(a) => {
            let exec = executor(a.threads)?;
            let outcomes = run_suite(a.trials, a.seed, &exec);
            let mut stdout = std::io::stdout().lock();
            for o in &outcomes {
                let _ = writeln!(stdout, "{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            let _ = writeln!(stdout, "{} of {} checks passed", outcomes.len() - failed, outcomes.len());
            return Ok(if failed == 0 { EXIT_OK } else { EXIT_RUNTIME });
        }
        Command::Replay(a) => {
            let spec = read_spec(&a.input).map_err(|e| RunError::Runtime(e.to_string()))?;
            run_and_write(&spec, &a.out)?;
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("randbell: {e}");
            match e {
                RunError::Config(_) => EXIT_CONFIG,
                RunError::Runtime(_) => EXIT_RUNTIME,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::THREADS_ENV;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn env_var_is_documented() {
        assert!(Cli::command().render_long_help().to_string().contains(THREADS_ENV));
    }

    #[test]
    fn defaults_follow_mode() {
        let cli = Cli::try_parse_from(["randbell", "curve", "--mode", "triads"]).unwrap();
        let Command::Curve(a) = cli.command else { panic!() };
        let spec = spec_from(Kind::Curve, a.mode.into(), a.vmax, DEFAULT_CURVE_TRIALS, &a.common);
        assert_eq!((spec.m, spec.trials, spec.counts.clone()), (3, DEFAULT_CURVE_TRIALS, None));

        let cli = Cli::try_parse_from(["randbell", "random", "--counts-rate", "1000", "--raw"]).unwrap();
        let Command::Random(a) = cli.command else { panic!() };
        let spec = spec_from(Kind::Trials, a.mode.into(), a.vmax, DEFAULT_EXPERIMENT_TRIALS, &a.common);
        assert_eq!(spec.m, DEFAULT_M);
        assert!(!spec.counts.unwrap().corrected);
    }
}
