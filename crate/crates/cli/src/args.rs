use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "immse-lab",
    version,
    about = "I-MMSE under interference: sweeps, verification suites, codebook experiments and rate regions"
)]
pub struct Cli {
    /// key=value file of default flags; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for Monte Carlo estimators (results do not depend on it).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mutual information, its derivative and regime along a γ grid (Gaussian interference).
    SweepMi(SweepMiArgs),
    /// Check dI/dγ = ½·mmse by finite differences.
    VerifyImmse(VerifyImmseArgs),
    /// Incremental-channel identities for Gaussian inputs.
    IncrementalCheck(IncrementalArgs),
    /// Spectral deviation of random codebook covariances from the identity.
    CodebookEigs(CodebookEigsArgs),
    /// Gaussian-surrogate dependence between incremental observations.
    IndependenceBound(IndependenceArgs),
    /// Rate-region boundary points over a β sweep.
    RateRegion(RateRegionArgs),
    /// Block KL divergence of a matrix file, two ways.
    KlBlock(KlBlockArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Units {
    Nats,
    Bits,
}

impl Units {
    /// Factor applied to information quantities in nats.
    pub fn scale(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, value_enum, default_value = "nats")]
    pub units: Units,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    #[arg(long, default_value_t = 1.0)]
    pub snr1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub snr2: f64,
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 0.0)]
    pub gamma_min: f64,
    #[arg(long, default_value_t = 4.0)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 5)]
    pub steps: usize,
}

impl GridArgs {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        if self.steps < 2 {
            return Err(CliError::Usage(format!("--steps must be at least 2, got {}", self.steps)));
        }
        if !(self.gamma_min.is_finite() && self.gamma_max.is_finite()) || self.gamma_min >= self.gamma_max {
            return Err(CliError::Usage(format!(
                "need finite --gamma-min < --gamma-max, got {} and {}",
                self.gamma_min, self.gamma_max
            )));
        }
        if self.gamma_min < 0.0 {
            return Err(CliError::Usage("--gamma-min must be non-negative".into()));
        }
        let span = self.gamma_max - self.gamma_min;
        let last = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(
                |k| {
                    if k + 1 == self.steps {
                        self.gamma_max
                    } else {
                        self.gamma_min + span * k as f64 / last
                    }
                },
            )
            .collect())
    }
}

#[derive(Debug, Clone, Args)]
pub struct SeedArgs {
    /// First seed; multi-seed experiments use consecutive seeds from here.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepMiArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    Bpsk,
    Pam4,
    Asym3,
    Gaussian,
    Codebook,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyImmseArgs {
    #[arg(long, value_enum, default_value = "bpsk")]
    pub input: InputKind,
    #[arg(long, default_value_t = 0.0)]
    pub gamma_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    /// Fixed finite-difference step; 1e-3·max(1, γ) when absent.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Gauss–Hermite order (gated against order + 20).
    #[arg(long, default_value_t = 61)]
    pub order: usize,
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
    /// Codebook blocklength.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Codebook size.
    #[arg(long, default_value_t = 8)]
    pub codewords: usize,
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl VerifyImmseArgs {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        GridArgs { gamma_min: self.gamma_min, gamma_max: self.gamma_max, steps: self.steps }.grid()
    }
}

#[derive(Debug, Clone, Args)]
pub struct IncrementalArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = 0.1)]
    pub snr: f64,
    /// Single increment; otherwise `--steps` increments spread over the admissible range.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long, default_value_t = 0.95)]
    pub rate_fraction: f64,
    /// Comma-separated blocklengths.
    #[arg(long, value_delimiter = ',', default_value = "8,16,24")]
    pub n_list: Vec<usize>,
    /// Number of codebooks per blocklength.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[command(flatten)]
    pub seed: SeedArgs,
}

impl ExperimentArgs {
    pub fn seed_list(&self) -> Result<Vec<u64>, CliError> {
        if self.seeds == 0 {
            return Err(CliError::Usage("--seeds must be at least 1".into()));
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(CliError::Usage("--n-list needs positive blocklengths".into()));
        }
        if !(self.rate_fraction > 0.0 && self.rate_fraction <= 1.0) {
            return Err(CliError::Usage(format!(
                "--rate-fraction must lie in (0, 1], got {}",
                self.rate_fraction
            )));
        }
        Ok((0..self.seeds as u64).map(|k| self.seed.seed.wrapping_add(k)).collect())
    }
}

#[derive(Debug, Clone, Args)]
pub struct CodebookEigsArgs {
    #[arg(long, default_value_t = 1.0)]
    pub snr1: f64,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct IndependenceArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value_t = 0.1)]
    pub snr: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Mac,
    Intermediate,
    Cascade,
}

#[derive(Debug, Clone, Args)]
pub struct RateRegionArgs {
    #[arg(long, value_enum, default_value = "mac")]
    pub family: Family,
    #[arg(long, default_value_t = 1.0)]
    pub snr1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub snr2: f64,
    #[arg(long, default_value_t = 2.0)]
    pub snr_z: f64,
    #[arg(long, default_value_t = 4.0)]
    pub snr3: f64,
    /// Interference gain (mac) or per-hop decay (cascade).
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
    /// Gain of transmitter 2 at receiver 1 (intermediate); defaults to --a.
    #[arg(long)]
    pub a2: Option<f64>,
    /// Gain of transmitter 3 at receiver 2 (intermediate); defaults to --a.
    #[arg(long)]
    pub a3: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub beta_steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct KlBlockArgs {
    /// Text file: n, then n rows each of A, B and C.
    #[arg(long, value_name = "FILE")]
    pub matrix: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// The command definition with repeated flags resolved to the last value, at
/// every level.
pub fn command() -> clap::Command {
    Cli::command().args_override_self(true).mut_subcommands(|s| s.args_override_self(true))
}

/// Parses already merged arguments.
pub fn parse_from(args: Vec<OsString>) -> Result<Cli, clap::Error> {
    let matches = command().try_get_matches_from(args)?;
    <Cli as clap::FromArgMatches>::from_arg_matches(&matches)
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected key=value, got {line:?}",
                origin.display(),
                idx + 1
            )));
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("{}:{}: empty key", origin.display(), idx + 1)));
        }
        pairs.push((key, v.trim().to_string()));
    }
    Ok(pairs)
}

/// Finds `--config` in raw arguments (either `--config F` or `--config=F`).
fn find_config(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(rest));
        }
    }
    None
}

/// Inserts the config file's flags right after the subcommand so that flags
/// given on the command line, which come later, win.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = find_config(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let pairs = parse_config(&text, &path)?;

    let cmd = Cli::command();
    let sub_names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let Some(pos) = args.iter().position(|a| sub_names.iter().any(|n| a.to_string_lossy() == n.as_str()))
    else {
        // No subcommand: let clap report it.
        return Ok(args);
    };
    let sub_name = args[pos].to_string_lossy().into_owned();
    let sub = cmd.find_subcommand(&sub_name).expect("subcommand listed above");
    let known: Vec<String> = sub
        .get_arguments()
        .chain(cmd.get_arguments())
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect();

    let mut injected = Vec::new();
    for (key, value) in pairs {
        if key == "config" {
            return Err(CliError::Usage("config files cannot include other config files".into()));
        }
        if !known.contains(&key) {
            return Err(CliError::Usage(format!("config key {key:?} is not a flag of `{sub_name}`")));
        }
        injected.push(OsString::from(format!("--{key}")));
        injected.push(OsString::from(value));
    }
    let mut merged = args[..=pos].to_vec();
    merged.extend(injected);
    merged.extend_from_slice(&args[pos + 1..]);
    Ok(merged)
}
