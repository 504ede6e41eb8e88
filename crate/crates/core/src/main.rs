use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use viscowave::cli::{self, ExperimentSpec, SweepAxis};

/// Simulation and verification driver for the viscoelastic transmission wave
/// system.
#[derive(Parser)]
#[command(name = "viscowave", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Problem configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Steps between diagnostic rows.
    #[arg(long, default_value_t = 20)]
    stride: usize,
    /// Dump field snapshots every N steps.
    #[arg(long)]
    snapshots: Option<usize>,
    /// Evaluate the operator identities at every step.
    #[arg(long)]
    checks: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the decay-theorem hypotheses and search the Lyapunov weights.
    Validate(CommonArgs),
    /// Integrate one configuration and emit run.csv plus the decay fit.
    Run(CommonArgs),
    /// Run one experiment per value of a swept parameter.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Axis as PARAM=v1,v2,... (e.g. mu2=0,0.5,1.0).
        #[arg(long)]
        sweep: String,
    },
    /// Refinement study against the standing-wave control solution.
    Converge {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of dx-halving levels.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Operator-identity residuals on synthetic smooth fields.
    #[command(name = "identity-check")]
    IdentityCheck(CommonArgs),
}

fn build_spec(sub: cli::Subcommand, common: &CommonArgs) -> ExperimentSpec {
    ExperimentSpec {
        subcommand: sub,
        config_path: common.config.clone(),
        out_dir: common.out.clone(),
        stride: common.stride,
        sweep: None,
        levels: 3,
        snapshots: common.snapshots,
        operator_checks: common.checks,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Validate(common) => cli::execute(&build_spec(cli::Subcommand::Validate, common)),
        Command::Run(common) => cli::execute(&build_spec(cli::Subcommand::Run, common)),
        Command::Sweep { common, sweep } => match SweepAxis::parse(sweep) {
            Some(axis) => {
                let mut spec = build_spec(cli::Subcommand::Sweep, common);
                spec.sweep = Some(axis);
                cli::execute(&spec)
            }
            None => {
                eprintln!("error: malformed sweep axis '{sweep}' (expected PARAM=v1,v2,...)");
                cli::EXIT_USAGE
            }
        },
        Command::Converge { common, levels } => {
            let mut spec = build_spec(cli::Subcommand::Converge, common);
            spec.levels = *levels;
            cli::execute(&spec)
        }
        Command::IdentityCheck(common) => {
            cli::execute(&build_spec(cli::Subcommand::IdentityCheck, common))
        }
    };
    ExitCode::from(code as u8)
}
