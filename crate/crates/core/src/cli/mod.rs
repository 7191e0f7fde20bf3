//! Command-line front end: load a configuration, run one experiment and
//! write a comma-separated table.

pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::error::{AoiError, Result};
use crate::metrics::{avg_peak_aoi, chernoff_tail_bound, peak_age_pmf, statistical_aoi, AoIReport};
use crate::model::{ChannelModel, SamplingPolicy, SystemConfig};
use crate::par::Execution;
use crate::sim::{empirical_stats, simulate, write_trace, RNG_NAME};
use crate::solvers::{baseline_avg_peak, baseline_max_peak, exhaustive_oracle_with, select_policy, sweep, SolveReport};
use crate::table::{fmt_f64, fmt_vec, Table};

pub use config::ConfigFile;

pub const DEFAULT_PACKETS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0;
/// Default exponent grid in units of `1/T`: 20 log-spaced points over `[1e-3, 10]`.
pub const DEFAULT_GRID_THETA_T: (f64, f64, usize) = (1e-3, 10.0, 20);
/// Tail offsets checked by `simulate`, in slots.
pub const SIM_SIGMA_SLOTS: [f64; 4] = [1.0, 2.0, 5.0, 10.0];
/// Exponents checked by `simulate` when none are given, in units of `1/T`.
pub const SIM_THETA_T: [f64; 3] = [0.01, 0.1, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Best policy at one exponent.
    Solve,
    /// Best policy across an exponent grid.
    Sweep,
    /// Proposed policy against the exhaustive optimum and both baselines.
    Compare,
    /// Monte-Carlo check of the analytic metrics.
    Simulate,
    /// Exhaustive search only.
    Oracle,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Compare => "compare",
            Command::Simulate => "simulate",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "aoi",
    version,
    about = "Statistical AoI optimization over block-fading channels"
)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output table.
    #[arg(long)]
    pub out: PathBuf,
    /// AoI exponent in 1/s.
    #[arg(long, conflicts_with = "theta_grid")]
    pub theta: Option<f64>,
    /// Log-spaced exponents `start,stop,points` in 1/s.
    #[arg(long)]
    pub theta_grid: Option<String>,
    /// Simulation seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulated deliveries [default: 100000].
    #[arg(long)]
    pub packets: Option<usize>,
    /// Also write the simulated peak trace here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Run on one thread.
    #[arg(long)]
    pub sequential: bool,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub config: ConfigFile,
    pub command: Command,
    /// Exponents in 1/s.
    pub thetas: Vec<f64>,
    /// Whether `thetas` came from the command line.
    pub thetas_given: bool,
    pub output_path: PathBuf,
    pub seed: Option<u64>,
    pub packets: Option<usize>,
    pub trace_path: Option<PathBuf>,
    pub exec: Execution,
}

/// `start,stop,points`, log-spaced with exact endpoints.
pub fn parse_theta_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || AoiError::Config(format!("theta grid must be `start,stop,points`, got `{text}`"));
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].parse().map_err(|_| bad())?;
    let points: usize = parts[2].parse().map_err(|_| bad())?;
    log_grid(start, stop, points)
}

pub fn log_grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop >= start && stop.is_finite()) || points == 0 {
        return Err(AoiError::Config(format!(
            "theta grid needs 0 < start <= stop and points >= 1, got {start},{stop},{points}"
        )));
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    let ratio = (stop / start).ln() / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                stop
            } else {
                start * (ratio * i as f64).exp()
            }
        })
        .collect())
}

impl ExperimentSpec {
    pub fn from_args(args: &Args) -> Result<Self> {
        let config = ConfigFile::load(&args.config)?;
        let cfg = config.system()?;
        let (thetas, given) = match (args.theta, &args.theta_grid) {
            (Some(t), _) => (vec![t], true),
            (None, Some(grid)) => (parse_theta_grid(grid)?, true),
            (None, None) => match args.command {
                Command::Sweep | Command::Compare => {
                    let (a, b, n) = DEFAULT_GRID_THETA_T;
                    let t = cfg.slot_duration;
                    (log_grid(a / t, b / t, n)?, false)
                }
                _ => (vec![0.0], false),
            },
        };
        let spec = Self {
            config,
            command: args.command,
            thetas,
            thetas_given: given,
            output_path: args.out.clone(),
            seed: args.seed,
            packets: args.packets,
            trace_path: args.trace.clone(),
            exec: if args.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.thetas.is_empty() {
            return Err(AoiError::Config("theta grid is empty".into()));
        }
        if let Some(t) = self.thetas.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(AoiError::Config(format!("theta must be finite and >= 0, got {t}")));
        }
        if matches!(self.command, Command::Sweep | Command::Compare) {
            if let Some(t) = self.thetas.iter().find(|&&t| t <= 0.0) {
                return Err(AoiError::Config(format!(
                    "{} needs theta > 0, got {t}",
                    self.command.name()
                )));
            }
        }
        if self.command == Command::Simulate {
            if self.thetas_given && self.thetas.len() > 1 {
                return Err(AoiError::Config("simulate takes a single --theta".into()));
            }
            if self.packets == Some(0) {
                return Err(AoiError::Config("packets must be at least 1".into()));
            }
        }
        Ok(())
    }
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| AoiError::Io(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(AoiError::Io(format!("cannot write {}: {e}", path.display())));
    }
    Ok(())
}

const POLICY_HEADER: [&str; 11] = [
    "theta",
    "theta_t",
    "branch",
    "iterations",
    "stat_aoi_norm",
    "avg_peak_norm",
    "max_peak_norm",
    "rounding_fallback",
    "slots",
    "powers",
    "continuous_slots",
];

fn policy_row(r: &SolveReport, cfg: &SystemConfig) -> Vec<String> {
    let t = cfg.slot_duration;
    vec![
        fmt_f64(r.achieved.theta),
        fmt_f64(r.achieved.theta * t),
        r.branch.label().to_string(),
        r.iterations.to_string(),
        fmt_f64(r.achieved.stat_aoi / t),
        fmt_f64(r.achieved.avg_peak / t),
        fmt_f64(r.achieved.max_peak / t),
        r.rounding_fallback.to_string(),
        fmt_vec(&r.policy.slots),
        fmt_vec(&r.policy.powers),
        fmt_vec(&r.continuous_policy.slots),
    ]
}

/// Exact statistical AoI, or average peak AoI below the θ threshold.
fn score(policy: &SamplingPolicy, ch: &ChannelModel, cfg: &SystemConfig, theta: f64) -> Result<f64> {
    Ok(AoIReport::evaluate(policy, ch, cfg, theta)?.stat_aoi)
}

fn compare_table(spec: &ExperimentSpec, ch: &ChannelModel, cfg: &SystemConfig) -> Result<Table> {
    let mut table = Table::new([
        "theta",
        "theta_t",
        "proposed_norm",
        "oracle_norm",
        "avg_baseline_norm",
        "max_baseline_norm",
        "proposed_slots",
        "oracle_slots",
        "avg_baseline_slots",
        "max_baseline_slots",
    ]);
    let avg_base = baseline_avg_peak(ch, cfg)?;
    let max_base = baseline_max_peak(ch, cfg)?;
    let proposed = sweep(ch, cfg, &spec.thetas, spec.exec)?;
    let t = cfg.slot_duration;
    for (&theta, p) in spec.thetas.iter().zip(&proposed) {
        let oracle = exhaustive_oracle_with(ch, cfg, theta, spec.exec)?;
        table.push(vec![
            fmt_f64(theta),
            fmt_f64(theta * t),
            fmt_f64(p.achieved.stat_aoi / t),
            fmt_f64(oracle.achieved.stat_aoi / t),
            fmt_f64(score(&avg_base, ch, cfg, theta)? / t),
            fmt_f64(score(&max_base, ch, cfg, theta)? / t),
            fmt_vec(&p.policy.slots),
            fmt_vec(&oracle.policy.slots),
            fmt_vec(&avg_base.slots),
            fmt_vec(&max_base.slots),
        ]);
    }
    Ok(table)
}

fn simulate_table(spec: &ExperimentSpec, ch: &ChannelModel, cfg: &SystemConfig) -> Result<(Table, String)> {
    let theta = spec.thetas[0];
    let seed = spec.seed.unwrap_or(DEFAULT_SEED);
    let packets = spec.packets.unwrap_or(DEFAULT_PACKETS);
    let policy = select_policy(ch, cfg, theta)?.policy;
    let trace = simulate(&policy, ch, cfg, packets, seed)?;

    let t = cfg.slot_duration;
    let check_thetas: Vec<f64> = if theta > 0.0 {
        vec![theta]
    } else {
        SIM_THETA_T.iter().map(|x| x / t).collect()
    };
    let mut thresholds = Vec::new();
    let mut analytic = Vec::new();
    for &th in &check_thetas {
        let stat = statistical_aoi(&policy, ch, cfg, th)?;
        analytic.push(stat);
        for s in SIM_SIGMA_SLOTS {
            thresholds.push((th, s * t, stat));
        }
    }
    let levels: Vec<f64> = thresholds.iter().map(|&(_, sigma, stat)| stat + sigma).collect();
    let stats = empirical_stats(&trace, &check_thetas, &levels)?;
    let pmf = peak_age_pmf(&policy, ch, cfg)?;

    let mut table = Table::new(["quantity", "parameter", "empirical", "analytic"]);
    table
        .meta("seed", seed)
        .meta("packets", packets)
        .meta("rng", RNG_NAME)
        .meta("theta", fmt_f64(theta))
        .meta("slots", fmt_vec(&policy.slots));
    for (k, (e, a)) in stats.state_freq.iter().zip(&pmf.mass).enumerate() {
        table.push(vec!["state_freq".into(), k.to_string(), fmt_f64(*e), fmt_f64(*a)]);
    }
    let avg = avg_peak_aoi(&policy, ch, cfg)?;
    table.push(vec![
        "mean_peak".into(),
        String::new(),
        fmt_f64(stats.mean_peak),
        fmt_f64(avg),
    ]);
    for ((th, e), a) in stats.lmgf_at.iter().zip(&analytic) {
        table.push(vec!["stat_aoi".into(), fmt_f64(*th), fmt_f64(*e), fmt_f64(*a)]);
    }
    for ((th, sigma, stat), (_, e)) in thresholds.iter().zip(&stats.tail_freq) {
        let bound = chernoff_tail_bound(*stat, *th, *sigma)?;
        table.push(vec![
            "tail".into(),
            fmt_vec(&[*th, *sigma]),
            fmt_f64(*e),
            fmt_f64(bound),
        ]);
    }

    let mut trace_text = Vec::new();
    if spec.trace_path.is_some() {
        write_trace(&trace, &spec.config.hash(), &mut trace_text)?;
    }
    Ok((table, String::from_utf8(trace_text).expect("trace rows are UTF-8")))
}

/// Runs the experiment and writes its output files.
pub fn run(spec: &ExperimentSpec) -> Result<()> {
    spec.validate()?;
    let cfg = spec.config.system()?;
    let ch = spec.config.channel()?;
    let mut trace_text = None;
    let mut table = match spec.command {
        Command::Solve | Command::Sweep => {
            let mut table = Table::new(POLICY_HEADER);
            let reports = if spec.command == Command::Solve && spec.thetas.len() == 1 {
                vec![select_policy(&ch, &cfg, spec.thetas[0])?]
            } else {
                sweep(&ch, &cfg, &spec.thetas, spec.exec)?
            };
            for r in &reports {
                table.push(policy_row(r, &cfg));
            }
            table
        }
        Command::Oracle => {
            let mut table = Table::new(POLICY_HEADER);
            for &theta in &spec.thetas {
                table.push(policy_row(&exhaustive_oracle_with(&ch, &cfg, theta, spec.exec)?, &cfg));
            }
            table
        }
        Command::Compare => compare_table(spec, &ch, &cfg)?,
        Command::Simulate => {
            let (table, text) = simulate_table(spec, &ch, &cfg)?;
            trace_text = Some(text);
            table
        }
    };
    table
        .meta("command", spec.command.name())
        .meta("config_hash", spec.config.hash());
    write_atomic(&spec.output_path, table.to_string_lossy().as_bytes())?;
    if let (Some(path), Some(text)) = (&spec.trace_path, trace_text) {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(())
}

/// Parses arguments, runs, and returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match ExperimentSpec::from_args(&args).and_then(|spec| run(&spec)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("aoi {}: {e}", args.command.name());
            e.exit_code()
        }
    }
}
