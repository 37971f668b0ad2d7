mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "lasercon", version, about = "Space-based laser constellation design and debris engagement scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Place platforms on the slot grid by maximal covering (MCLP).
    Design(Common),
    /// Schedule engagements for a fixed placement, step by step.
    Schedule {
        #[command(flatten)]
        common: Common,
        /// placement.csv written by `design` or `walker`.
        #[arg(long)]
        placement: PathBuf,
    },
    /// Design then schedule.
    Run(Common),
    /// Solve the joint location-scheduling problem exactly on a small instance.
    Clsp {
        #[command(flatten)]
        common: Common,
        /// Read a relocation tree (JSON) instead of expanding the scenario.
        #[arg(long, conflicts_with = "illustrative")]
        topology: Option<PathBuf>,
        /// Use the built-in three-slot illustrative instance.
        #[arg(long)]
        illustrative: bool,
        /// Declare every same-debris arc between consecutive steps, not just tree edges.
        #[arg(long)]
        full_declaration: bool,
    },
    /// Design and schedule for several platform counts.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Platform counts, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        p_values: Vec<usize>,
    },
    /// Brute-force Walker-Delta baseline search.
    Walker {
        #[command(flatten)]
        common: Common,
        /// Number of (sma, inclination) pairs drawn from the slot grid.
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        /// Restrict to these O/F patterns, e.g. `1/0,5/2`.
        #[arg(long, value_delimiter = ',')]
        patterns: Vec<String>,
        /// Also schedule engagements on the best constellation.
        #[arg(long)]
        schedule: bool,
    },
    /// List bundled scenario presets, or print one.
    Preset { name: Option<String> },
}

#[derive(Args, Clone)]
pub struct Common {
    /// Scenario JSON, or `preset:NAME` for a bundled one.
    #[arg(long)]
    config: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = SolverArg::Exact)]
    solver: SolverArg,
    /// Largest engager subset per candidate slot.
    #[arg(long)]
    engager_cap: Option<usize>,
    /// Worker threads; 1 runs serially.
    #[arg(long)]
    threads: Option<usize>,
    /// Truncates the horizon to this many steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Overrides the platform count.
    #[arg(long)]
    platforms: Option<usize>,
    /// Solution file (`name value` lines) from an external solver for the exported model.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverArg {
    Exact,
    Heuristic,
    ExportOnly,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design(c) => commands::design(&c),
        Command::Schedule { common, placement } => commands::schedule(&common, &placement),
        Command::Run(c) => commands::run(&c),
        Command::Clsp { common, topology, illustrative, full_declaration } => {
            commands::clsp(&common, topology.as_deref(), illustrative, full_declaration)
        }
        Command::Sweep { common, p_values } => commands::sweep(&common, &p_values),
        Command::Walker { common, pairs, patterns, schedule } => commands::walker(&common, pairs, &patterns, schedule),
        Command::Preset { name } => commands::preset(name.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().skip(1).map(|c| c.to_string()).collect();
            let body = serde_json::json!({ "error": { "message": e.to_string(), "causes": chain } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
