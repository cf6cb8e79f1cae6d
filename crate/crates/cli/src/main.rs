use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "stickydiff",
    about = "Sticky diffusions on star graphs: simulation, estimation, verification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted-path config overrides, e.g. `numerics.dt=1e-5` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths and export them as CSV.
    Simulate(CommonArgs),
    /// Exit-time statistics from the vertex ball.
    ExitStats(CommonArgs),
    /// Elliptic Feynman-Kac Monte Carlo estimate.
    FkElliptic(CommonArgs),
    /// Parabolic Feynman-Kac Monte Carlo estimate.
    FkParabolic(CommonArgs),
    /// Closed-form vertex-ball solve with residual report.
    Bvp(CommonArgs),
    /// Mean change-of-variables residual over a path ensemble.
    ItoTest(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::ExitStats(a) => ("exit-stats", a),
        Command::FkElliptic(a) => ("fk-elliptic", a),
        Command::FkParabolic(a) => ("fk-parabolic", a),
        Command::Bvp(a) => ("bvp", a),
        Command::ItoTest(a) => ("ito-test", a),
    };
    let code = stickydiff_cli::run(name, &args.config, args.seed, args.out.clone(), &args.set);
    ExitCode::from(code as u8)
}
