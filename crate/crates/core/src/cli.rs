//! Command-line front end. Every subcommand reads one JSON config, runs a
//! batch experiment and writes its results into the output directory.
//!
//! Exit codes: 0 on success, 1 for bad arguments or configuration (nothing
//! is written), 2 when output cannot be written.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{default_epsilon, recurrence_matrix, rqa_metrics, write_pbm, write_rqa_csv};
use crate::coevo::{find_attractors, quiver_sample, AttractorSearch};
use crate::lob::write_tape_csv;
use crate::session::{run_session, SessionConfig};
use crate::stgp::{run_evolution, stgp_seats, template_genome, write_elites, write_gen_stats_csv, GpParams};

#[derive(Debug, Parser)]
#[command(name = "cdasim", version, about = "Continuous double auction experiments")]
pub struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one market session; writes tape.csv and profits.csv.
    Session,
    /// Sample the two-trader strategy drift field; writes quiver.csv.
    Quiver,
    /// Run a market of adaptive PRZI traders; writes the strategy log, its
    /// recurrence plot and RQA metrics.
    Coevolve,
    /// Evolve STGP traders; writes gen_stats.csv and elites.txt.
    Stgp,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuiverConfig {
    /// Market with exactly one adaptive buyer and one adaptive seller.
    pub template: SessionConfig,
    #[serde(default = "default_grid")]
    pub grid_res: usize,
    pub horizon: u64,
    #[serde(default = "default_reps")]
    pub reps: u32,
}

fn default_grid() -> usize {
    21
}
fn default_reps() -> u32 {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoevolveConfig {
    pub session: SessionConfig,
    /// Recurrence radius as a fraction of the largest pairwise distance.
    #[serde(default = "default_eps_fraction")]
    pub epsilon_fraction: f64,
    #[serde(default = "default_theiler")]
    pub theiler: usize,
    #[serde(default = "default_line")]
    pub l_min: usize,
    #[serde(default = "default_line")]
    pub v_min: usize,
}

fn default_eps_fraction() -> f64 {
    0.1
}
fn default_theiler() -> usize {
    1
}
fn default_line() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StgpConfig {
    /// Market whose STGP seats are filled by the evolving population.
    pub template: SessionConfig,
    #[serde(default)]
    pub gp: GpParams,
}

fn load<T: DeserializeOwned>(path: Option<&Path>) -> Result<T, CliError> {
    let path = path.ok_or_else(|| CliError::Config("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

/// Files are rendered in memory first, so a failed run leaves nothing behind.
struct Outputs(Vec<(&'static str, Vec<u8>)>);

impl Outputs {
    fn new() -> Self {
        Outputs(Vec::new())
    }

    fn add(&mut self, name: &'static str, f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.0.push((name, buf));
        Ok(())
    }

    fn write_to(self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        for (name, bytes) in self.0 {
            let mut w = BufWriter::new(File::create(dir.join(name))?);
            w.write_all(&bytes)?;
            w.flush()?;
        }
        Ok(())
    }
}

fn json_of<T: Serialize>(v: &T) -> impl FnOnce(&mut Vec<u8>) -> io::Result<()> + '_ {
    move |buf| {
        serde_json::to_writer_pretty(&mut *buf, v)?;
        buf.push(b'\n');
        Ok(())
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut out = Outputs::new();
    match cli.command {
        Command::Session => {
            let mut cfg: SessionConfig = load(cli.config.as_deref())?;
            cfg.seed = cli.seed.unwrap_or(cfg.seed);
            let r = run_session(&cfg).map_err(config_err)?;
            out.add("config.json", json_of(&cfg))?;
            out.add("tape.csv", |w| write_tape_csv(w, &r.tape))?;
            out.add("profits.csv", |w| r.write_profits_csv(w))?;
            if r.strategy_log.dim() > 0 {
                out.add("strategy_log.csv", |w| r.strategy_log.write_csv(w))?;
            }
        }
        Command::Quiver => {
            let mut cfg: QuiverConfig = load(cli.config.as_deref())?;
            cfg.template.seed = cli.seed.unwrap_or(cfg.template.seed);
            let field = quiver_sample(&cfg.template, cfg.grid_res, cfg.horizon, cfg.reps, cfg.template.seed)
                .map_err(config_err)?;
            let attractors = find_attractors(&field, &AttractorSearch::default());
            let plateau = field.plateau_around_origin(0.25);
            out.add("config.json", json_of(&cfg))?;
            out.add("quiver.csv", |w| field.write_csv(w))?;
            out.add("attractors.csv", |w| {
                writeln!(w, "s_b,s_s,basin")?;
                for a in &attractors {
                    writeln!(w, "{},{},{}", a.s_b, a.s_s, a.basin)?;
                }
                Ok(())
            })?;
            out.add("plateau.csv", |w| {
                writeln!(w, "s_b,s_s")?;
                for (ib, is) in &plateau {
                    let p = field.at(*ib, *is);
                    writeln!(w, "{},{}", p.s_b, p.s_s)?;
                }
                Ok(())
            })?;
        }
        Command::Coevolve => {
            let mut cfg: CoevolveConfig = load(cli.config.as_deref())?;
            cfg.session.seed = cli.seed.unwrap_or(cfg.session.seed);
            if cfg.session.roster.iter().all(|e| e.adaptive.is_none()) {
                return Err(CliError::Config("coevolve needs at least one adaptive trader".into()));
            }
            if !(cfg.epsilon_fraction > 0.0) {
                return Err(CliError::Config("epsilon_fraction must be positive".into()));
            }
            let r = run_session(&cfg.session).map_err(config_err)?;
            let series = &r.strategy_log;
            let eps = default_epsilon(series, cfg.epsilon_fraction);
            let m = recurrence_matrix(series, eps, cfg.theiler).map_err(config_err)?;
            let metrics = rqa_metrics(&m, cfg.l_min, cfg.v_min).map_err(config_err)?;
            out.add("config.json", json_of(&cfg))?;
            out.add("strategy_log.csv", |w| series.write_csv(w))?;
            out.add("recurrence.pbm", |w| write_pbm(w, &m))?;
            out.add("rqa.csv", |w| write_rqa_csv(w, &metrics))?;
        }
        Command::Stgp => {
            let mut cfg: StgpConfig = load(cli.config.as_deref())?;
            cfg.template.seed = cli.seed.unwrap_or(cfg.template.seed);
            cfg.template.validate().map_err(config_err)?;
            if template_genome(&cfg.template).is_none() || stgp_seats(&cfg.template).is_empty() {
                return Err(CliError::Config("template has no STGP traders".into()));
            }
            let stats = run_evolution(&cfg.template, &cfg.gp, cfg.template.seed).map_err(config_err)?;
            out.add("config.json", json_of(&cfg))?;
            out.add("gen_stats.csv", |w| write_gen_stats_csv(w, &stats))?;
            out.add("elites.txt", |w| write_elites(w, &stats))?;
        }
    }
    out.write_to(&cli.out)
}

/// Parses `argv` (including the program name), runs, reports errors on
/// stderr and returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cdasim: {e}");
            e.exit_code()
        }
    }
}
