use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

#[derive(Parser)]
#[command(name = "qpchain", version, about = "Quasiperiodic spin-chain simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inflate a seed word and write the letters one per line.
    Sequence(SequenceArgs),
    /// Generate a coupling chain as CSV or JSON.
    Couplings(CouplingsArgs),
    /// Run a parameter sweep described by a JSON config.
    Scan(ScanArgs),
    /// Central-charge fit of an entropy profile CSV.
    Fit(FitArgs),
    /// Inspect the built-in inflation rules.
    Rules {
        #[command(subcommand)]
        action: RulesAction,
    },
}

#[derive(Args)]
struct SequenceArgs {
    /// Preset name or path to a JSON rule file.
    #[arg(long)]
    rule: String,
    /// Seed word; defaults to the rule's own seed.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    steps: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorKind {
    Mqa,
    LastLayer,
    Aah,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct CouplingsArgs {
    #[arg(long, value_enum, default_value = "mqa")]
    generator: GeneratorKind,
    #[arg(long, default_value = "3,7")]
    rule: String,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, default_value_t = 3)]
    steps: usize,
    /// Coupling ratio `j_b / j_a`.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// AAH amplitude `D`.
    #[arg(long, default_value_t = 0.0)]
    amplitude: f64,
    /// AAH chain length.
    #[arg(long, default_value_t = 58)]
    length: usize,
    /// Random chain sites.
    #[arg(long, default_value_t = 58)]
    sites: usize,
    #[arg(long, default_value_t = 1.0)]
    mean: f64,
    #[arg(long, default_value_t = 0.0)]
    variance: f64,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Tune the control parameter until the chain has this standard deviation.
    #[arg(long)]
    match_sigma: Option<f64>,
    /// Search `r > 1` instead of `r < 1` when matching.
    #[arg(long)]
    above: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    /// Sweep configuration JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Sweep CSV; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Manifest JSON; defaults to the output path with a `.manifest.json` suffix.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Directory for per-point entropy profiles.
    #[arg(long)]
    profiles: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Profile CSV with columns `ell,S_avg`.
    #[arg(long)]
    profile: PathBuf,
    /// Chain length; defaults to the largest `ell` in the file.
    #[arg(long)]
    sites: Option<usize>,
    /// Fit window as `lo:hi`; defaults to `2:L/2`.
    #[arg(long)]
    range: Option<String>,
    /// Fit the running-maximum envelope instead of every point.
    #[arg(long)]
    envelope: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RulesAction {
    List {
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sequence(a) => commands::sequence(a),
        Command::Couplings(a) => commands::couplings(a),
        Command::Scan(a) => commands::scan(a),
        Command::Fit(a) => commands::fit(a),
        Command::Rules { action: RulesAction::List { json } } => commands::rules_list(json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, json) = output::error_json(&e);
            eprintln!("{json}");
            ExitCode::from(code)
        }
    }
}
