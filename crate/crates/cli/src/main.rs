use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mfgnet_cli::{
    cmd_calibrate, cmd_check, cmd_demo_braess, cmd_edge_cost, cmd_solve, cmd_transform, parse_grid, CalibrateArgs,
    Code, ModelSource, RunConfig, SolverChoice,
};

/// Stationary network mean field games and Wardrop equilibria.
#[derive(Parser)]
#[command(name = "mfgnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Directory for CSV/TOML artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Absolute VI-gap tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// auto, exact or iterative.
    #[arg(long, default_value = "auto")]
    solver: SolverChoice,
    /// Seed for randomized starting flows.
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep limit of the path-equilibration engine.
    #[arg(long)]
    max_iter: Option<usize>,
}

impl Common {
    fn config(&self, input: Option<PathBuf>) -> RunConfig {
        RunConfig {
            input,
            out: self.out.clone(),
            tol: self.tol,
            solver: self.solver,
            seed: self.seed,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a network file.
    Check {
        network: PathBuf,
        /// Require strict triangle inequalities for switching costs.
        #[arg(long)]
        strict_triangle: bool,
    },
    /// Tabulate the travel costs of one edge model.
    EdgeCost {
        /// TOML file with one model table, or a network with --model.
        file: Option<PathBuf>,
        /// Model name inside a network file.
        #[arg(long)]
        model: Option<String>,
        /// quadratic, constant:V, affine:A,B or separable:GAMMA.
        #[arg(long, conflicts_with = "file")]
        builtin: Option<String>,
        /// Currents: `0.5,1,2` or `start:stop:count`.
        #[arg(long, default_value = "0.5,1,2")]
        grid: String,
        #[command(flatten)]
        common: Common,
    },
    /// Build the directed Wardrop network.
    Transform {
        network: PathBuf,
        /// Short vertex names in the DOT output.
        #[arg(long)]
        relabel: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Solve for the equilibrium, recover values and check the MFG equations.
    Solve {
        network: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Build an MFG edge model that reproduces a prescribed cost.
    Calibrate {
        /// TOML calibration recipe; overrides the flags below.
        #[arg(value_name = "RECIPE")]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// affine:A,B, power:A,B,P or constant:V.
        #[arg(long, default_value = "affine:1,1")]
        cost: String,
        /// Also match the travel time m/j to the cost.
        #[arg(long)]
        travel_time: bool,
        /// Kinetic term scale·|v|^exponent/exponent for the fixed mode.
        #[arg(long, default_value_t = 1.0)]
        kinetic_scale: f64,
        #[arg(long, default_value_t = 2.0)]
        kinetic_exponent: f64,
        #[arg(long, default_value = "0.1:10:25")]
        grid: String,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the Braess network with and without the bridge.
    DemoBraess {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[command(flatten)]
        common: Common,
    },
}

fn grid(s: &str) -> Result<Vec<f64>, mfgnet_cli::CliError> {
    parse_grid(s).map_err(|e| mfgnet_cli::CliError::new(Code::Validation, e))
}

fn run(cli: Cli, out: &mut dyn Write) -> mfgnet_cli::CliResult {
    match cli.command {
        Command::Check {
            network,
            strict_triangle,
        } => cmd_check(&network, strict_triangle, out),
        Command::EdgeCost {
            file,
            model,
            builtin,
            grid: g,
            common,
        } => {
            let src = match (builtin, file, model) {
                (Some(b), _, _) => ModelSource::Builtin(b),
                (None, Some(path), Some(model)) => ModelSource::Network { path, model },
                (None, Some(path), None) => ModelSource::File(path),
                (None, None, _) => {
                    return Err(mfgnet_cli::CliError::new(
                        Code::Validation,
                        "edge-cost needs a model file or --builtin",
                    ))
                }
            };
            cmd_edge_cost(&src, &grid(&g)?, &common.config(None), out)
        }
        Command::Transform {
            network,
            relabel,
            common,
        } => cmd_transform(&network, relabel, &common.config(Some(network.clone())), out),
        Command::Solve { network, common } => cmd_solve(&network, &common.config(Some(network.clone())), out),
        Command::Calibrate {
            spec,
            alpha,
            cost,
            travel_time,
            kinetic_scale,
            kinetic_exponent,
            grid: g,
            common,
        } => {
            let args = CalibrateArgs {
                spec: spec.clone(),
                alpha,
                cost,
                travel_time,
                kinetic_scale,
                kinetic_exponent,
            };
            cmd_calibrate(&args, &grid(&g)?, &common.config(spec), out)
        }
        Command::DemoBraess { alpha, epsilon, common } => cmd_demo_braess(alpha, epsilon, &common.config(None), out),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match run(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.code
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
