//! Command-line front end.
//!
//! Every subcommand reads its inputs, writes sorted text outputs atomically,
//! and reports problems on stderr. Options may also come from a `key=value`
//! file passed with `--config`; flags on the command line win.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::graph::{Binning, DegreeSource};
use crate::ingest::{ErrorPolicy, Timestamp};
use crate::path::AsSetPolicy;
use crate::reset::{Baseline, ResetParams};
use crate::temporal::NlMode;

mod files;
mod ingest;
mod metrics;
mod synth;

pub use ingest::cmd_ingest;
pub use metrics::{cmd_diff, cmd_metrics};
pub use synth::cmd_synth;

#[derive(Debug, Parser)]
#[command(name = "astopo", version, about = "AS-level topology discovery from BGP update streams")]
pub struct Cli {
    /// key=value file supplying defaults for the subcommand's options.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay update streams into a link-event log and edge lists.
    Ingest(IngestArgs),
    /// Compute the metric suite from ingest outputs.
    Metrics(MetricsArgs),
    /// Compare two edge lists.
    Diff(DiffArgs),
    /// Generate a synthetic scenario with known ground truth.
    Synth(SynthArgs),
    /// Ingest and compute metrics in one step.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// Sniff each file after decompression.
    Auto,
    Text,
    Mrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AsSetArg {
    Run,
    DropPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Held,
    EverSeen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ErrorArg {
    Abort,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NlModeArg {
    VisibleEnd,
    LastAnnounce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DegreeSourceArg {
    Union,
    Own,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BinningArg {
    Raw,
    Log10,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    /// Update stream files, replayed in the order given.
    #[arg(long, num_args = 1.., value_name = "FILE")]
    pub updates: Vec<PathBuf>,
    /// Table dump files; their union forms the BTD graph.
    #[arg(long, num_args = 1.., value_name = "FILE")]
    pub btd: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    /// Drop records before this time.
    #[arg(long)]
    pub t_start: Option<Timestamp>,
    /// Drop records after this time and close intervals here. Defaults to the
    /// last record's time.
    #[arg(long)]
    pub t_end: Option<Timestamp>,
    #[arg(long, value_enum, default_value_t = OnOff::Off)]
    pub reset_detect: OnOff,
    /// Surge window in seconds.
    #[arg(long, default_value_t = 4)]
    pub reset_s: u64,
    /// Surge fraction of the baseline.
    #[arg(long, default_value_t = 0.8)]
    pub reset_p: f64,
    /// Inactivity threshold in seconds.
    #[arg(long, default_value_t = 240)]
    pub reset_t: u64,
    /// Smallest baseline that can trigger a surge.
    #[arg(long, default_value_t = 10)]
    pub reset_floor: usize,
    #[arg(long, value_enum, default_value_t = BaselineArg::Held)]
    pub reset_baseline: BaselineArg,
    #[arg(long, value_enum, default_value_t = AsSetArg::Run)]
    pub asset_policy: AsSetArg,
    #[arg(long, value_enum, default_value_t = ErrorArg::Abort)]
    pub on_error: ErrorArg,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MetricOptions {
    #[arg(long, value_enum, default_value_t = NlModeArg::VisibleEnd)]
    pub nl_mode: NlModeArg,
    /// Degrees used for the ratio matrix.
    #[arg(long, value_enum, default_value_t = DegreeSourceArg::Union)]
    pub degree_source: DegreeSourceArg,
    #[arg(long, value_enum, default_value_t = BinningArg::Log10)]
    pub binning: BinningArg,
    /// Log10 bin width.
    #[arg(long, default_value_t = 0.1)]
    pub bin_width: f64,
    /// Spacing of cumulative-curve samples in seconds.
    #[arg(long, default_value_t = 86_400)]
    pub sample_step: u64,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    /// Directory written by `ingest`.
    #[arg(long, value_name = "DIR")]
    pub input: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub options: MetricOptions,
}

#[derive(Debug, Clone, Args)]
pub struct DiffArgs {
    #[arg(long, value_name = "FILE")]
    pub a: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub b: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Mrt,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 101)]
    pub nodes: usize,
    #[arg(long, default_value_t = 2.2)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.43)]
    pub backup_fraction: f64,
    #[arg(long, default_value_t = 86)]
    pub episodes: usize,
    #[arg(long, default_value_t = 1)]
    pub peers: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1_064_016_000)]
    pub t_start: Timestamp,
    /// Run length in seconds.
    #[arg(long, default_value_t = 14 * 86_400)]
    pub duration: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub ingest: IngestArgs,
    #[command(flatten)]
    pub options: MetricOptions,
}

impl IngestArgs {
    pub fn reset_params(&self) -> Option<ResetParams> {
        (self.reset_detect == OnOff::On).then_some(ResetParams {
            window_s: self.reset_s,
            surge_fraction: self.reset_p,
            inactivity_t: self.reset_t,
            min_baseline: self.reset_floor,
            baseline: match self.reset_baseline {
                BaselineArg::Held => Baseline::CurrentlyHeld,
                BaselineArg::EverSeen => Baseline::EverSeen,
            },
        })
    }

    pub fn asset_policy(&self) -> AsSetPolicy {
        match self.asset_policy {
            AsSetArg::Run => AsSetPolicy::Run,
            AsSetArg::DropPath => AsSetPolicy::DropPath,
        }
    }

    pub fn error_policy(&self) -> ErrorPolicy {
        match self.on_error {
            ErrorArg::Abort => ErrorPolicy::Abort,
            ErrorArg::Skip => ErrorPolicy::Skip,
        }
    }
}

impl MetricOptions {
    pub fn nl_mode(&self) -> NlMode {
        match self.nl_mode {
            NlModeArg::VisibleEnd => NlMode::VisibleEnd,
            NlModeArg::LastAnnounce => NlMode::LastAnnounce,
        }
    }

    pub fn degree_source(&self) -> DegreeSource {
        match self.degree_source {
            DegreeSourceArg::Union => DegreeSource::Union,
            DegreeSourceArg::Own => DegreeSource::Own,
        }
    }

    pub fn binning(&self) -> Result<Binning> {
        match self.binning {
            BinningArg::Raw => Ok(Binning::Raw),
            BinningArg::Log10 if self.bin_width > 0.0 && self.bin_width.is_finite() => {
                Ok(Binning::Log10 { width: self.bin_width })
            }
            BinningArg::Log10 => bail!("--bin-width must be positive, got {}", self.bin_width),
        }
    }
}

/// Parses `key=value` lines. Blank lines and `#` comments are ignored; a
/// repeated key supplies several values.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .with_context(|| format!("config line {}: expected key=value", i + 1))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            bail!("config line {}: empty key", i + 1);
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Appends config entries for options the subcommand has and the command
/// line does not set. Keys the subcommand lacks are ignored, so one file can
/// serve several subcommands.
fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let given: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let Some(pos) = given.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match given[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => given.get(pos + 1).cloned().context("--config needs a file")?,
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let entries = parse_config(&text)?;

    let cmd = Cli::command();
    let Some(sub) = given.iter().skip(1).find_map(|a| cmd.find_subcommand(a)) else {
        return Ok(args);
    };
    let known: Vec<String> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .filter(|l| l != "config")
        .collect();
    let on_cli = |key: &str| {
        given.iter().any(|a| a == &format!("--{key}") || a.starts_with(&format!("--{key}=")))
    };
    let mut out = args;
    for (key, value) in entries {
        if known.contains(&key) && !on_cli(&key) {
            out.push(format!("--{key}").into());
            out.push(value.into());
        }
    }
    Ok(out)
}

pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = merge_config(args.into_iter().map(Into::into).collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version; a closed pipe is not an error
            let _ = e.print();
            return Ok(());
        }
        Err(e) => bail!("{}", e.render().to_string().trim_end()),
    };
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&a).map(|_| ()),
        Command::Metrics(a) => cmd_metrics(&a.input, &a.out, &a.options),
        Command::Diff(a) => cmd_diff(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Report(a) => {
            cmd_ingest(&a.ingest)?;
            cmd_metrics(&a.ingest.out, &a.ingest.out, &a.options)
        }
    }
}
