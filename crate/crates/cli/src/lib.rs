//! `stampede-lab`: one entry point for the whole pipeline.
//!
//! Every subcommand writes its data to stdout (or to `--out-dir`) and its
//! diagnostics to stderr. Exit codes are 0 on success, 1 on internal errors
//! and 2 on input or validation errors, with a JSON error object on stderr.
//!
//! Settings resolve in the order built-in defaults, then config files
//! (`--params`, `--config`), then command-line flags; later sources win.

use std::ffi::OsString;
use std::fmt::Debug;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use stampede_core::crowdsim::SimError;
use stampede_core::dataset::DatasetError;
use stampede_core::regression::RegressionError;
use stampede_core::risk::RiskError;
use stampede_core::textmine::TextError;

mod commands;
mod report;

pub use commands::{cmd_ingest, cmd_mine, cmd_regress, cmd_risk, cmd_simulate, Artifact};
pub use report::cmd_report;

/// Environment variable naming the default data directory.
pub const DATA_DIR_ENV: &str = "STAMPEDE_DATA_DIR";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "stampede-lab",
    version,
    about = "Crowd-disaster analytics pipeline"
)]
pub struct Cli {
    /// Directory holding incidents.csv, inquiries.csv and venues.csv.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,
    /// Write the artifact into this directory instead of stdout.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Random seed for the simulator (default 42).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override one simulation parameter, e.g. `--set base_desired_speed=5`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, validate and join the three tables.
    Ingest,
    /// Fit the fatality model or a temporal trend.
    Regress(RegressArgs),
    /// Run the crowd simulator on a preset venue or a scenario file.
    Simulate(SimulateArgs),
    /// TF-IDF and recurring phrases over the inquiry corpus.
    Mine(MineArgs),
    /// Crowd Risk Index timeline.
    Risk(RiskArgs),
    /// Markdown report combining every stage.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RegressArgs {
    /// Panel column used as the response.
    #[arg(long, default_value = "fatalities")]
    pub response: String,
    /// Comma-separated predictors: density, admin_score, injuries,
    /// chokepoint_width, exits, vip_routes, open_exits, trigger.
    #[arg(long, value_delimiter = ',', default_value = "density,admin_score")]
    pub predictors: Vec<String>,
    /// Min-max normalize every predictor to [0, 1] first.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long)]
    pub no_intercept: bool,
    /// Fit COLUMN against year instead of the multivariate model.
    #[arg(long, value_name = "COLUMN")]
    pub trend: Option<String>,
}

impl Default for RegressArgs {
    fn default() -> Self {
        Self {
            response: "fatalities".into(),
            predictors: vec!["density".into(), "admin_score".into()],
            normalize: false,
            no_intercept: false,
            trend: None,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    /// Venue year from venues.csv.
    #[arg(long)]
    pub preset: Option<i32>,
    /// Scenario JSON file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Simulation parameter JSON file (any subset of the fields).
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub agents: Option<usize>,
    /// Simulated seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Reopen exits reserved for VIP movement.
    #[arg(long)]
    pub no_vip_closure: bool,
    /// Ritual window `START:END:MULTIPLIER` in seconds; repeatable.
    #[arg(long = "ritual", value_name = "START:END:MULT")]
    pub rituals: Vec<String>,
    /// Write per-step positions to this CSV file.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Evaluate forces on one thread. Results are identical either way.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MineArgs {
    /// inquiries.csv-style file or a directory of YEAR.txt files.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Stopword list, one word per line (default: bundled English list).
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Skip Porter stemming.
    #[arg(long)]
    pub no_stem: bool,
    #[arg(long, default_value_t = 1)]
    pub ngram: usize,
    /// Terms listed per document.
    #[arg(long, default_value_t = 5)]
    pub top: usize,
}

impl Default for MineArgs {
    fn default() -> Self {
        Self {
            corpus: None,
            stopwords: None,
            no_stem: false,
            ngram: 1,
            top: 5,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RiskArgs {
    #[arg(long, default_value_t = 0.4)]
    pub w_density: f64,
    #[arg(long, default_value_t = 0.25)]
    pub w_choke: f64,
    #[arg(long, default_value_t = 0.2)]
    pub w_velocity: f64,
    #[arg(long, default_value_t = 0.15)]
    pub w_admin: f64,
    /// Chokepoints narrower than this count as narrow, m.
    #[arg(long, default_value_t = 4.0)]
    pub choke_threshold: f64,
}

impl Default for RiskArgs {
    fn default() -> Self {
        Self {
            w_density: 0.4,
            w_choke: 0.25,
            w_velocity: 0.2,
            w_admin: 0.15,
            choke_threshold: 4.0,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Agents per preset simulation.
    #[arg(long, default_value_t = 200)]
    pub agents: usize,
    /// Simulated seconds per preset.
    #[arg(long, default_value_t = 60.0)]
    pub duration: f64,
    #[arg(long)]
    pub serial: bool,
}

impl Default for ReportArgs {
    fn default() -> Self {
        Self {
            agents: 200,
            duration: 60.0,
            serial: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Regression(#[from] RegressionError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn variant<E: Debug>(e: &E) -> String {
    format!("{e:?}")
        .chars()
        .take_while(|c| c.is_alphanumeric() || *c == '_')
        .collect()
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Output { .. } => 1,
            _ => 2,
        }
    }

    /// Stable error tag for the JSON error object.
    pub fn kind(&self) -> String {
        match self {
            CliError::Dataset(e) => e.kind().to_string(),
            CliError::Sim(e) => e.kind().to_string(),
            CliError::Regression(e) => variant(e),
            CliError::Text(e) => variant(e),
            CliError::Risk(e) => variant(e),
            CliError::Usage(_) => "Usage".into(),
            CliError::Input { .. } => "Io".into(),
            CliError::Output { .. } => "Output".into(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
    }
}

/// Resolved settings shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub out_dir: Option<PathBuf>,
    pub format: Format,
    /// Explicit `--seed`; [`RunConfig::seed`] falls back to the default.
    pub seed: Option<u64>,
    /// `--set key=value` pairs in command-line order.
    pub overrides: Vec<(String, String)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            out_dir: None,
            format: Format::Json,
            seed: None,
            overrides: Vec::new(),
        }
    }
}

impl RunConfig {
    /// `--data-dir` (or `STAMPEDE_DATA_DIR`, which clap folds into the same
    /// flag), else `./data`.
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let overrides = cli
            .overrides
            .iter()
            .map(|kv| {
                kv.split_once('=')
                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                    .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got '{kv}'")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            data_dir: cli
                .data_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("data")),
            out_dir: cli.out_dir.clone(),
            format: cli.format,
            seed: cli.seed,
            overrides,
        })
    }

    pub fn with_data_dir(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            ..Self::default()
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

fn artifact_name(command: &Command) -> &'static str {
    match command {
        Command::Ingest => "panel",
        Command::Regress(_) => "regression",
        Command::Simulate(_) => "outcome",
        Command::Mine(_) => "mine",
        Command::Risk(_) => "risk",
        Command::Report(_) => "report",
    }
}

fn execute(
    cli: &Cli,
    cfg: &RunConfig,
    err: &mut dyn Write,
) -> Result<(String, &'static str), CliError> {
    let artifact = match &cli.command {
        Command::Ingest => cmd_ingest(cfg)?,
        Command::Regress(a) => cmd_regress(cfg, a)?,
        Command::Simulate(a) => cmd_simulate(cfg, a)?,
        Command::Mine(a) => cmd_mine(cfg, a)?,
        Command::Risk(a) => cmd_risk(cfg, a)?,
        Command::Report(a) => return Ok((cmd_report(cfg, a)?, "md")),
    };
    for note in &artifact.notes {
        let _ = writeln!(err, "{note}");
    }
    Ok(match cfg.format {
        Format::Json => (artifact.json_text(), "json"),
        Format::Csv => (artifact.csv.clone(), "csv"),
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses `args` (including the program name) and runs one subcommand.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let usage = CliError::Usage(rendered.trim_end().to_string());
                let _ = writeln!(err, "{}", usage.to_json());
            }
            return code;
        }
    };
    let result = RunConfig::from_cli(&cli).and_then(|cfg| {
        let (text, ext) = execute(&cli, &cfg, err)?;
        Ok((cfg, text, ext))
    });
    let result = result.and_then(|(cfg, text, ext)| match &cfg.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
                path: dir.clone(),
                source,
            })?;
            let path = dir.join(format!("{}.{ext}", artifact_name(&cli.command)));
            write_file(&path, &text)?;
            let _ = writeln!(err, "wrote {}", path.display());
            Ok(())
        }
        None => out
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Output {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit_code()
        }
    }
}
