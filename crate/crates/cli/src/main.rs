use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod error;
mod output;

#[derive(Parser)]
#[command(
    name = "scmkit",
    version,
    about = "Generate, sample and evaluate structural causal models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a set of distinct random causal graphs.
    GenGraphs(GenGraphsArgs),
    /// Generate random SCMs, from graph files or from scratch.
    GenScms(GenScmsArgs),
    /// Draw samples from an SCM file into CSV.
    Sample(SampleArgs),
    /// Run interaction episodes against an SCM.
    EnvRun(EnvRunArgs),
    /// Score a predicted structure against the true one.
    Eval(EvalArgs),
    /// Run the structure-recovery benchmark end to end.
    Usecase(UsecaseArgs),
}

#[derive(Args, Clone)]
pub struct GraphShape {
    #[arg(long, default_value_t = 4)]
    pub n_endo: usize,
    #[arg(long, default_value_t = 4)]
    pub n_exo: usize,
    /// Let exogenous nodes feed several endogenous nodes.
    #[arg(long)]
    pub confounders: bool,
    #[arg(long, default_value_t = 0.5)]
    pub edge_prob: f64,
    #[arg(long, default_value_t = 0.5)]
    pub confounder_child_prob: f64,
}

#[derive(Args)]
pub struct GenGraphsArgs {
    #[command(flatten)]
    pub shape: GraphShape,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Consecutive duplicates tolerated; defaults to 100 x count.
    #[arg(long)]
    pub max_retries: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct GenScmsArgs {
    /// Directory of `.graph.json` files; otherwise graphs are generated.
    #[arg(long)]
    pub from_graphs: Option<PathBuf>,
    #[command(flatten)]
    pub shape: GraphShape,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Require generated graphs to be pairwise distinct.
    #[arg(long)]
    pub unique: bool,
    /// Comma-separated function classes: linear, interaction.
    #[arg(long, default_value = "linear")]
    pub functions: String,
    /// Exogenous distribution as `kind:p1,p2`, e.g. `gauss:0,1`.
    #[arg(long, default_value = "gauss:0,1")]
    pub exo_dist: String,
    /// Linear weight magnitude range `low,high`.
    #[arg(long, default_value = "0.5,2")]
    pub weight_range: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub bias: f64,
    #[arg(long)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub scm: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Intervention `Var=EXPR`, held for the whole run. Repeatable.
    #[arg(long = "do", value_name = "VAR=EXPR")]
    pub interventions: Vec<String>,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
pub enum Policy {
    /// Uniform over valid intervention subsets.
    Random,
    /// Always the empty action.
    None,
}

#[derive(Args)]
pub struct EnvRunArgs {
    #[arg(long)]
    pub scm: PathBuf,
    /// JSON list of `{"target": ..., "expr": ...}`.
    #[arg(long)]
    pub interventions: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub episodes: u64,
    #[arg(long, default_value_t = 10)]
    pub horizon: u64,
    #[arg(long, value_enum, default_value_t = Policy::Random)]
    pub policy: Policy,
    #[arg(long)]
    pub seed: u64,
    /// JSONL path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Adjacency or graph JSON.
    #[arg(long)]
    pub pred: PathBuf,
    /// Adjacency or graph JSON.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct UsecaseArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub n_endo: usize,
    #[arg(long, default_value_t = 4)]
    pub n_exo: usize,
    #[arg(long, default_value_t = 30)]
    pub scm_count: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value = "linear,interaction")]
    pub functions: String,
    /// Comma-separated: corr_threshold, oracle.
    #[arg(long, default_value = "corr_threshold")]
    pub algorithms: String,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Metrics JSON path; the text table goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenGraphs(a) => commands::gen_graphs(a),
        Command::GenScms(a) => commands::gen_scms(a),
        Command::Sample(a) => commands::sample(a),
        Command::EnvRun(a) => commands::env_run(a),
        Command::Eval(a) => commands::eval(a),
        Command::Usecase(a) => commands::usecase(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
