//! Batch front end: config ingestion, subcommand dispatch and CSV/JSON output.

mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub use config::{ExperimentConfig, SUBCOMMANDS};
pub use output::{format_float, Cell, Sink, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] crate::Error),

    #[error("numeric guard tripped: {0}")]
    Guard(String),

    #[error("bound check failed: {0}")]
    Bound(String),
}

impl CliError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hvbench", version, about = "Bell correlations, hidden-variable models and pilot-wave numerics")]
pub struct Cli {
    /// TOML config file or a previous run's manifest.json
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// worker threads (results do not depend on it)
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// also write gnuplot .dat mirrors
    #[arg(long, global = true)]
    pub dat: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Singlet and mixture CHSH values over the Bell angle
    ChshScan(ChshArgs),
    /// Trial-by-trial outcome sampling
    Trials(TrialsArgs),
    /// Hidden-variable model estimates and the CHSH bound check
    LhvSim(LhvArgs),
    /// Smeared dispersion extrapolation and the trace-gap table
    DispersionCheck(DispersionArgs),
    /// Pilot-wave evolution, fields, trajectories and residuals
    BohmEvolve(BohmArgs),
}

#[derive(Debug, Args)]
pub struct ChshArgs {
    #[arg(long)]
    pub theta_steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrialsArgs {
    /// singlet or mixture
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_b: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LhvArgs {
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub theta_steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DispersionArgs {
    #[arg(long, value_delimiter = ',')]
    pub d: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BohmArgs {
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub p0: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub save_every: Option<usize>,
    #[arg(long)]
    pub fields: Option<bool>,
    #[arg(long)]
    pub trajectories: Option<bool>,
    #[arg(long)]
    pub residuals: Option<bool>,
    #[arg(long)]
    pub probes: Option<usize>,
}

impl Cli {
    /// The flag layer of the configuration.
    pub fn overrides(&self) -> ExperimentConfig {
        let mut c = ExperimentConfig {
            seed: self.seed,
            out: self.out.clone(),
            threads: self.threads.map(|t| t as usize),
            dat: self.dat.then_some(true),
            ..Default::default()
        };
        let Some(cmd) = &self.command else {
            return c;
        };
        match cmd {
            Command::ChshScan(a) => {
                c.subcommand = Some("chsh-scan".into());
                c.theta_steps = a.theta_steps;
            }
            Command::Trials(a) => {
                c.subcommand = Some("trials".into());
                c.model = a.model.clone();
                c.n = a.n;
                c.theta_a = a.theta_a;
                c.theta_b = a.theta_b;
            }
            Command::LhvSim(a) => {
                c.subcommand = Some("lhv-sim".into());
                c.models = a.models.clone();
                c.n = a.n;
                c.theta_steps = a.theta_steps;
            }
            Command::DispersionCheck(a) => {
                c.subcommand = Some("dispersion-check".into());
                c.d = a.d.clone();
                c.eps = a.eps.clone();
                c.x0 = a.x0;
                c.p0 = a.p0;
                c.t = a.t;
            }
            Command::BohmEvolve(a) => {
                c.subcommand = Some("bohm-evolve".into());
                c.preset = a.preset.clone();
                c.grid_points = a.grid_points;
                c.dim = a.dim;
                c.p0 = a.p0;
                c.dt = a.dt;
                c.t_end = a.t_end;
                c.particles = a.particles;
                c.save_every = a.save_every;
                c.fields = a.fields;
                c.trajectories = a.trajectories;
                c.residuals = a.residuals;
                c.probes = a.probes;
            }
        }
        c
    }

    /// Config file (if any) overlaid with flags, then resolved.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::from_path(p)?,
            None => ExperimentConfig::default(),
        };
        base.merged(&self.overrides()).resolve()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub out: PathBuf,
    pub files: Vec<String>,
    pub results: serde_json::Value,
}

/// Runs a resolved configuration and writes `manifest.json` last.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let job = || -> Result<RunReport, CliError> {
        let out = cfg.out.clone().expect("resolved config has an output directory");
        let mut sink = Sink::new(&out, cfg.dat.unwrap_or(false))?;
        let outcome = commands::dispatch(cfg, &mut sink);
        let (results, failure) = match outcome {
            Ok(r) => (r, None),
            Err(commands::Failed { results, error }) => (results, Some(error)),
        };
        let manifest = json!({
            "tool": "hvbench",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": cfg.subcommand,
            "config": cfg,
            "outputs": sink.written,
            "results": results,
            "status": if failure.is_some() { "failed" } else { "ok" },
        });
        let files = sink.written.clone();
        sink.json("manifest.json", &manifest)?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(RunReport { out, files, results })
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config("threads", e.to_string()))?
            .install(job),
        None => job(),
    }
}

/// Parses `args`, runs, and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = cli.resolve().and_then(|cfg| run(&cfg));
    match result {
        Ok(report) => {
            for (k, v) in report.results.as_object().into_iter().flatten() {
                println!("{k} = {v}");
            }
            println!("wrote {} files to {}", report.files.len() + 1, report.out.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
