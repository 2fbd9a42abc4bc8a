//! Command-line front end shared by the `elrc` binary.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::analysis::compute_metrics;
use crate::engine::run_scenario;
use crate::error::{GraphError, SimError};
use crate::graph::{generate_r_robust_digraph, is_f_local_attack, Digraph, RobustnessOracle, VertexSet};
use crate::output::write_run;
use crate::scenario::{Overrides, ScenarioError, ScenarioFile};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "elrc", version, about = "Resilient event-triggered consensus of Euler-Lagrange agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario file (or a bundled scenario by name) and write its artifacts.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        f: Option<usize>,
        #[arg(long)]
        decimation: Option<usize>,
    },
    /// Graph utilities.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum GraphCommand {
    /// Check r-robustness and, optionally, f-locality of a Byzantine set.
    Check {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        r: usize,
        /// Comma-separated 1-based Byzantine agent ids.
        #[arg(long, value_delimiter = ',')]
        byzantine: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        f: usize,
    },
    /// Print the largest r for which the graph is r-robust.
    Maxr {
        #[arg(long)]
        file: PathBuf,
    },
    /// Generate a certified r-robust digraph.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let code = if matches!(e, ScenarioError::Io { .. }) { EXIT_IO } else { EXIT_USAGE };
        Self::new(code, e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = if matches!(e, SimError::Diverged { .. }) { EXIT_DIVERGED } else { EXIT_USAGE };
        Self::new(code, e.to_string())
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        Self::new(EXIT_USAGE, e.to_string())
    }
}

fn read_graph(path: &Path) -> Result<Digraph, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?;
    text.parse().map_err(|e: GraphError| Failure::new(EXIT_USAGE, format!("{}: {e}", path.display())))
}

/// Executes a parsed command, returning the text for stdout.
pub fn execute(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Run { scenario, out, dt, horizon, seed, f, decimation } => {
            let overrides = Overrides { dt, horizon, seed, f, decimation };
            run(&scenario, &out, &overrides)
        }
        Command::Graph { command } => graph(command),
    }
}

fn run(scenario: &Path, out_dir: &Path, overrides: &Overrides) -> Result<String, Failure> {
    let (mut file, base) = ScenarioFile::load(scenario)?;
    overrides.apply(&mut file);
    let sc = file.build(base.as_deref())?;
    for w in sc.validate()? {
        tracing::warn!("{w}");
        eprintln!("warning: {w}");
    }
    let graph = sc.graph.clone();
    let output = run_scenario(sc)?;
    let metrics = compute_metrics(&output, &graph).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let source = scenario.display().to_string();
    write_run(out_dir, &source, overrides, &output, &metrics)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", out_dir.display())))?;
    let summary = if metrics.all_settled() { "settled" } else { "not converged" };
    Ok(format!("wrote {} ({summary})\n", out_dir.display()))
}

fn graph(cmd: GraphCommand) -> Result<String, Failure> {
    match cmd {
        GraphCommand::Check { file, r, byzantine, f } => {
            let g = read_graph(&file)?;
            let robust = RobustnessOracle::default().is_r_robust(&g, r)?;
            let mut text = format!("r-robust: {robust}\n");
            if !byzantine.is_empty() {
                if let Some(bad) = byzantine.iter().find(|&&b| b == 0 || b > g.n()) {
                    return Err(Failure::new(EXIT_USAGE, format!("byzantine id {bad} out of range 1..={}", g.n())));
                }
                let set: VertexSet = byzantine.iter().map(|b| b - 1).collect();
                text.push_str(&format!("f-local: {}\n", is_f_local_attack(&g, &set, f)?));
            }
            Ok(text)
        }
        GraphCommand::Maxr { file } => {
            let g = read_graph(&file)?;
            Ok(format!("{}\n", RobustnessOracle::default().max_robustness(&g)?))
        }
        GraphCommand::Generate { n, r, seed, out } => {
            let g = generate_r_robust_digraph(n, r, seed)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, g.to_string())
                        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?;
                    Ok(String::new())
                }
                None => Ok(g.to_string()),
            }
        }
    }
}

/// Parses `std::env::args`, runs, prints and maps failures to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
