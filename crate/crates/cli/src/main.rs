use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod range;

use range::Range;

#[derive(Parser, Debug)]
#[command(name = "nc2ent", version, about = "Convert non-classicality into entanglement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the conversion for a classical state set and convert one input.
    Convert(ConvertArgs),
    /// GCNOT output entanglement over a (theta, mu) grid, as CSV.
    Sweep(SweepArgs),
    /// Monte-Carlo runs of the tunneling + number-measurement protocol.
    Modesplit(ModesplitArgs),
    /// Pull an output entanglement witness back to a non-classicality witness.
    Witness(WitnessArgs),
    /// Run the acceptance suites.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("input_source").required(true))]
pub struct ConvertArgs {
    /// State-set JSON file.
    #[arg(long)]
    pub states: PathBuf,
    /// Splitting parameter; defaults to half the feasible maximum.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Input vector as JSON, e.g. '[1,0]' or '[[0.6,0],[0,0.8]]'.
    #[arg(long, group = "input_source", allow_hyphen_values = true)]
    pub input: Option<String>,
    /// File holding the input vector as JSON.
    #[arg(long, group = "input_source")]
    pub input_file: Option<PathBuf>,
    /// Rescale unnormalized states instead of rejecting them.
    #[arg(long)]
    pub normalize: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Theta grid A:B:n; endpoints may use pi, e.g. pi/2.
    #[arg(long, default_value = "pi/2:pi-0.01:64", value_parser = Range::parse)]
    pub theta_range: Range,
    /// mu = 1/(1+epsilon) grid A:B:n.
    #[arg(long, default_value = "0.01:1:100", value_parser = Range::parse)]
    pub mu_range: Range,
    /// Computational basis input.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub input: u8,
    /// Theta range is in degrees.
    #[arg(long)]
    pub degrees: bool,
    /// Only the grid cells, without each row's refined optimum.
    #[arg(long)]
    pub grid_only: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    /// A Haar-random coherent state.
    Coherent,
    /// Equal-weight superposition of two Haar-random coherent states.
    Superposition,
}

#[derive(Args, Debug)]
pub struct ModesplitArgs {
    /// Internal levels.
    #[arg(long = "K", default_value_t = 2)]
    pub k: usize,
    /// Particles.
    #[arg(long = "N")]
    pub n: usize,
    /// Target sector NX:NY.
    #[arg(long, required_unless_present = "config", value_parser = parse_split)]
    pub target: Option<(usize, usize)>,
    /// Real reflection amplitude.
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2, conflicts_with = "config")]
    pub r: f64,
    /// Transmission magnitude; defaults to sqrt(1 - r^2).
    #[arg(long, conflicts_with = "config")]
    pub t: Option<f64>,
    /// Transmission phase.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true, conflicts_with = "config")]
    pub phi: f64,
    #[arg(long, default_value_t = 1, conflicts_with = "config")]
    pub max_rounds: usize,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, env = "NC2ENT_SEED", default_value_t = 0, conflicts_with = "config")]
    pub seed: u64,
    /// Protocol config JSON (r, t, phi, target, max_rounds, seed).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputKind::Coherent, conflicts_with = "input_file")]
    pub input: InputKind,
    /// Dicke-basis amplitudes of the input as JSON.
    #[arg(long)]
    pub input_file: Option<PathBuf>,
    #[arg(long)]
    pub normalize: bool,
    /// JSON-lines trace output, one line per round.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct WitnessArgs {
    #[arg(long)]
    pub states: PathBuf,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// State whose converted output defines the entanglement witness.
    #[arg(long, allow_hyphen_values = true)]
    pub target_state: String,
    /// States to evaluate the input-space witness on (repeatable).
    #[arg(long, allow_hyphen_values = true)]
    pub test_state: Vec<String>,
    #[arg(long)]
    pub normalize: bool,
    /// Write the input-space witness as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all", value_parser = clap::builder::PossibleValuesParser::new(nc2ent::verify::Suite::NAMES))]
    pub suite: String,
    #[arg(long, env = "NC2ENT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Override every trial count (smaller is faster).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_split(text: &str) -> Result<(usize, usize), String> {
    let (a, b) = text.split_once(':').ok_or_else(|| format!("expected NX:NY, got '{text}'"))?;
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("bad count '{s}'"));
    Ok((parse(a)?, parse(b)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Convert(a) => commands::convert(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Modesplit(a) => commands::modesplit(a),
        Command::Witness(a) => commands::witness(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
