//! `headarray`: database generation and the array-design experiments.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use headarray::experiments::ArrayType;

use crate::config::ExperimentConfig;

#[derive(Debug)]
pub struct CliError(String);

impl CliError {
    pub fn new(msg: impl Into<String>) -> Self {
        CliError(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<headarray::Error> for CliError {
    fn from(e: headarray::Error) -> Self {
        CliError(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError(format!("I/O error: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "headarray", version, about = "Microphone-array design by effective-rank maximization")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Database file to write (gen-db) or read (all other commands).
    #[arg(long, global = true)]
    db: Option<PathBuf>,

    /// Output directory for CSV, JSON and SVG files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Base seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Maximum worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a rigid-sphere GHRTF database.
    GenDb(GenDbArgs),
    /// Per-candidate effective rank for each direction set.
    RankMap(RankMapArgs),
    /// Optimize array placements for several sizes.
    Optimize(OptimizeArgs),
    /// Beamformer sensitivity ratios between array types.
    Sensitivity(SensitivityArgs),
    /// MUSIC Monte-Carlo sweep over frequency, size, SNR and array type.
    Music(MusicArgs),
}

#[derive(Debug, Args)]
struct GenDbArgs {
    /// start:step:stop or comma list, Hz.
    #[arg(long)]
    frequencies: Option<String>,
    /// Sphere radius in meters.
    #[arg(long)]
    radius: Option<f64>,
    /// Number of candidate positions (Fibonacci lattice).
    #[arg(long)]
    candidates: Option<usize>,
    /// Size of the uniform direction set.
    #[arg(long)]
    uniform_directions: Option<usize>,
    #[arg(long)]
    speed_of_sound: Option<f64>,
}

#[derive(Debug, Args)]
struct RankMapArgs {
    /// Frequencies to include (default: all).
    #[arg(long)]
    frequencies: Option<String>,
}

#[derive(Debug, Args)]
struct DesignArgs {
    /// Frequencies the designs are scored on (default: all).
    #[arg(long)]
    design_frequencies: Option<String>,
    /// Direction sets the designs are scored on: `all` or comma-separated names.
    #[arg(long)]
    design_directions: Option<String>,
    /// Genetic-algorithm population size.
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    max_generations: Option<usize>,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    /// Array sizes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Aim for this effective rank instead of the maximum.
    #[arg(long)]
    target_rank: Option<f64>,
    /// Enumerate every subset instead of running the GA (small problems only).
    #[arg(long)]
    exhaustive: bool,
    #[command(flatten)]
    design: DesignArgs,
}

#[derive(Debug, Args)]
struct SensitivityArgs {
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Frequencies to evaluate (default: all above 0 Hz).
    #[arg(long)]
    frequencies: Option<String>,
    /// Direction sets forming the coherence matrix and look directions.
    #[arg(long)]
    directions: Option<String>,
    /// Array types, e.g. MER,MER-1,MER-5,random.
    #[arg(long, value_delimiter = ',')]
    array_types: Option<Vec<ArrayType>>,
    #[command(flatten)]
    design: DesignArgs,
}

#[derive(Debug, Args)]
struct MusicArgs {
    #[arg(long)]
    frequencies: Option<String>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snrs: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    array_types: Option<Vec<ArrayType>>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Trials per true direction.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    snapshots: Option<usize>,
    /// Direction sets used as true directions and search grid.
    #[arg(long)]
    directions: Option<String>,
    #[command(flatten)]
    design: DesignArgs,
}

fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

fn set_opt<T: Clone>(slot: &mut Option<T>, value: &Option<T>) {
    if value.is_some() {
        *slot = value.clone();
    }
}

impl DesignArgs {
    fn apply(&self, c: &mut config::DesignConfig) {
        set_opt(&mut c.frequencies, &self.design_frequencies);
        set(&mut c.directions, &self.design_directions);
        set(&mut c.ga.population_size, &self.population);
        set(&mut c.ga.max_generations, &self.max_generations);
    }
}

/// File values first, then flags on top.
fn effective_config(common: &Common, command: &Command) -> Result<ExperimentConfig, CliError> {
    let mut c = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    set_opt(&mut c.db, &common.db);
    set_opt(&mut c.output_dir, &common.out);
    set(&mut c.seed, &common.seed);
    set_opt(&mut c.thread_count, &common.threads);
    match command {
        Command::GenDb(a) => {
            let g = &mut c.gen_db;
            set(&mut g.frequencies, &a.frequencies);
            set(&mut g.radius, &a.radius);
            set(&mut g.candidates, &a.candidates);
            set(&mut g.uniform_directions, &a.uniform_directions);
            set(&mut g.speed_of_sound, &a.speed_of_sound);
        }
        Command::RankMap(a) => set_opt(&mut c.rank_map.frequencies, &a.frequencies),
        Command::Optimize(a) => {
            let o = &mut c.optimize;
            set(&mut o.sizes, &a.sizes);
            set(&mut o.realizations, &a.realizations);
            set_opt(&mut o.target_rank, &a.target_rank);
            o.exhaustive |= a.exhaustive;
            a.design.apply(&mut c.design);
        }
        Command::Sensitivity(a) => {
            let s = &mut c.sensitivity;
            set(&mut s.sizes, &a.sizes);
            set(&mut s.realizations, &a.realizations);
            set_opt(&mut s.frequencies, &a.frequencies);
            set(&mut s.directions, &a.directions);
            set(&mut s.array_types, &a.array_types);
            a.design.apply(&mut c.design);
        }
        Command::Music(a) => {
            let m = &mut c.music;
            set(&mut m.frequencies, &a.frequencies);
            set(&mut m.sizes, &a.sizes);
            set(&mut m.snrs_db, &a.snrs);
            set(&mut m.array_types, &a.array_types);
            set(&mut m.realizations, &a.realizations);
            set(&mut m.trials, &a.trials);
            set(&mut m.snapshots, &a.snapshots);
            set(&mut m.directions, &a.directions);
            a.design.apply(&mut c.design);
        }
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = effective_config(&cli.common, &cli.command)?;
    headarray::par::with_threads(config.thread_count, || match cli.command {
        Command::GenDb(_) => commands::gen_db(&config),
        Command::RankMap(_) => commands::rank_map(&config),
        Command::Optimize(_) => commands::optimize(&config),
        Command::Sensitivity(_) => commands::sensitivity(&config),
        Command::Music(_) => commands::music(&config),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
