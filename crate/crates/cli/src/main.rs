use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Stallings graphs, constellations and universal extensions of finite groups.
#[derive(Debug, Parser)]
#[command(name = "arbor", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Seed for every randomized step; recorded in the report.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Maximum number of elements enumerated per group.
    #[arg(long, global = true)]
    pub budget_enum: Option<u64>,
    /// Maximum number of homomorphisms tried by exact equality checks.
    #[arg(long, global = true)]
    pub budget_homs: Option<u64>,
    /// Highest tower level.
    #[arg(long, global = true)]
    pub max_level: Option<usize>,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GraphInput {
    /// Graph JSON file.
    pub file: Option<PathBuf>,
    /// Build the bouquet of these generator words instead of reading a file.
    #[arg(long, num_args = 1.., conflicts_with = "file")]
    pub gens: Vec<String>,
    /// Comma-separated alphabet for --gens.
    #[arg(long, default_value = "a,b")]
    pub alphabet: String,
    /// Write Graphviz DOT here.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// Write the resulting graph JSON (alone) here.
    #[arg(long)]
    pub graph_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, Args)]
pub struct ModeArgs {
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub mode: ModeArg,
    /// Edge budget for exhaustive enumeration.
    #[arg(long, default_value_t = arbor::constellations::DEFAULT_EDGE_BUDGET)]
    pub edge_budget: usize,
    /// Sampled constellations (default 10000, or the config value).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Maximum length of sampled words (default 12, or the config value).
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fold a graph (or the bouquet of --gens).
    Fold(GraphInput),
    /// Core graph of a folded graph or of the subgroup generated by --gens.
    Core(GraphInput),
    /// Membership of words in the subgroup given by a core graph file.
    Member {
        graph: PathBuf,
        #[arg(required = true)]
        words: Vec<String>,
    },
    /// Order, exponent and properties of a group; emits its JSON.
    Group {
        /// Builtin name, group JSON file, or `SPEC^Cp` for a universal extension.
        group: String,
        #[arg(long)]
        json_out: Option<PathBuf>,
        /// Write the Cayley graph as DOT here.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// The universal extension of a group by C_p or by a simple group.
    Extend {
        group: String,
        #[arg(long, conflicts_with = "simple")]
        p: Option<u32>,
        #[arg(long = "S", id = "simple")]
        simple: Option<String>,
        /// Decide equality of two words.
        #[arg(long, num_args = 2, value_names = ["U", "V"], action = clap::ArgAction::Append)]
        eq: Vec<String>,
        /// Evaluate words (C_p only).
        #[arg(long)]
        word: Vec<String>,
        /// Exhaustive homomorphism check instead of random witnesses (--S).
        #[arg(long)]
        exact: bool,
        /// Random assignments per equality in witness mode.
        #[arg(long, default_value_t = 2_000)]
        witness_samples: usize,
    },
    /// Tree-likeness campaign along a tower of universal extensions.
    Tower {
        #[command(flatten)]
        tower: TowerArgs,
        /// Number of levels to check (default: all configured).
        #[arg(long)]
        levels: Option<usize>,
        /// Negative control: use G_{n+1} = G_n.
        #[arg(long)]
        identity: bool,
        #[command(flatten)]
        mode: ModeArgs,
    },
    /// Does H dissolve every constellation of G?
    Dissolve {
        #[arg(long = "H")]
        h: String,
        #[arg(long = "G")]
        g: String,
        #[command(flatten)]
        mode: ModeArgs,
    },
    /// Product membership ground truth and separation along the tower.
    Rz {
        #[command(flatten)]
        tower: TowerArgs,
        /// Generators of the first factor, comma separated.
        #[arg(long)]
        h1: String,
        #[arg(long)]
        h2: Option<String>,
        #[arg(long)]
        h3: Option<String>,
        #[arg(long = "w")]
        word: String,
    },
}

#[derive(Debug, Clone, Args)]
pub struct TowerArgs {
    /// Flat TOML config (keys: base, primes, max_level, budget_enum,
    /// budget_homs, samples, max_len, seed, identity).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub base: Option<String>,
    /// Comma-separated primes, one per level.
    #[arg(long)]
    pub primes: Option<String>,
}

fn main() -> ExitCode {
    // Usage errors are input errors (3); clap's own code 2 means "budget" here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match commands::run(&cli) {
        Ok(outcome) => ExitCode::from(outcome as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e) as u8)
        }
    }
}
