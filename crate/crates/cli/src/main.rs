//! `walsh-filter`: build control sequences, evaluate their filter functions,
//! optimize Walsh amplitudes and run noise simulations.

mod commands;
mod error;
mod input;
mod parse;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "walsh-filter", version, about = "Walsh-synthesized qubit control and filter-transfer functions")]
struct Cli {
    /// Worker threads for grid, map and ensemble evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct SequenceArgs {
    /// Sequence spec: a JSON file or inline JSON object.
    #[arg(long, conflicts_with_all = ["family", "params"])]
    spec: Option<String>,
    /// Catalog family (primitive, wamf03, wamf07, wpmf, bb1, wrse, uwmf1, uwmf2).
    #[arg(long)]
    family: Option<String>,
    /// Family parameters, e.g. `X0=3pi,X3=pi`.
    #[arg(long, default_value = "")]
    params: String,
    /// Total duration.
    #[arg(long, default_value = "1")]
    tau: String,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output file (default: stdout).
    #[arg(long, short)]
    out: Option<std::path::PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureArg {
    Dephasing,
    Amplitude,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    NelderMead,
    Bisect,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Gaussian,
    Trapezoid,
    Butterworth,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Csv,
    Sequence,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the segments of a sequence as JSON triples `(Omega, tau, phi)`.
    Catalog {
        #[command(flatten)]
        seq: SequenceArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write `omega_tau,F_z,F_omega` on a log grid.
    Eval {
        #[command(flatten)]
        seq: SequenceArgs,
        /// `lo:hi:points_per_decade` in units of 1/tau.
        #[arg(long, default_value = "1e-4:1e2:50")]
        grid: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Band cost `A = int F d omega`.
    Cost {
        #[command(flatten)]
        seq: SequenceArgs,
        /// `lo:hi` in units of 1/tau; `lo` may be 0.
        #[arg(long, default_value = "0:1e-1")]
        band: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fitted filter order and Taylor coefficients.
    Order {
        #[command(flatten)]
        seq: SequenceArgs,
        /// `lo:hi` in units of 1/tau for the power-law fit.
        #[arg(long, default_value = "1e-4:1e-2")]
        band: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Tune family parameters: Nelder-Mead on the band cost, or bisection on `C_2`.
    Optimize {
        /// Catalog family.
        #[arg(long)]
        family: String,
        /// Fixed parameters and starting values of the varied ones.
        #[arg(long, default_value = "")]
        params: String,
        /// Comma-separated names of the varied parameters.
        #[arg(long, default_value = "")]
        vary: String,
        #[arg(long, default_value = "1")]
        tau: String,
        #[arg(long, value_enum, default_value = "nelder-mead")]
        method: Method,
        /// Band `lo:hi` for the cost, in units of 1/tau.
        #[arg(long, default_value = "0:1e-1")]
        band: String,
        #[arg(long, value_enum, default_value = "dephasing")]
        quadrature: QuadratureArg,
        /// Bisection bracket `lo:hi` for the single varied parameter.
        #[arg(long)]
        bracket: Option<String>,
        #[arg(long, default_value_t = 3)]
        restarts: usize,
        #[arg(long, default_value_t = 5000)]
        max_iter: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// `log10 A` on a grid of two family parameters.
    Map {
        #[arg(long)]
        family: String,
        /// Parameters held fixed.
        #[arg(long, default_value = "")]
        params: String,
        /// Row axis `name=lo:hi:points`.
        #[arg(long)]
        rows: String,
        /// Column axis `name=lo:hi:points`.
        #[arg(long)]
        cols: String,
        #[arg(long, default_value = "1")]
        tau: String,
        #[arg(long, default_value = "0:1e-1")]
        band: String,
        #[arg(long, value_enum, default_value = "dephasing")]
        quadrature: QuadratureArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Band-limited version of a Walsh amplitude-modulated sequence.
    Shape {
        /// Walsh amplitudes `X_0, X_1, ...`.
        #[arg(long)]
        amplitudes: String,
        #[arg(long, value_enum)]
        kind: ShapeKind,
        /// Gaussian width in units of the segment duration.
        #[arg(long, default_value = "1/6")]
        width: String,
        /// Trapezoid factor; 1 is the square pulse.
        #[arg(long, default_value = "0.5")]
        factor: String,
        /// Butterworth cutoff as a fraction of the sampling rate.
        #[arg(long, default_value = "0.25")]
        cutoff: String,
        #[arg(long, default_value_t = walsh_filter::shaping::DEFAULT_SUBSEGMENTS)]
        subsegments: usize,
        #[arg(long, default_value_t = walsh_filter::shaping::DEFAULT_FILTER_SAMPLES)]
        samples: usize,
        #[arg(long, default_value = "1")]
        tau: String,
        #[arg(long, value_enum, default_value = "csv")]
        emit: Emit,
        #[arg(long, default_value = "1e-4:1e2:50")]
        grid: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo ensemble infidelity next to the filter-function prediction.
    Simulate {
        /// Experiment spec (JSON file or inline) with `sequence`, `noise`, `realizations`, `seed`.
        #[arg(long, conflicts_with_all = ["family", "params"])]
        spec: Option<String>,
        #[arg(long)]
        family: Option<String>,
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long, default_value = "1")]
        tau: String,
        /// Smallness `tau^2 int S d omega` of a flat-band spectrum.
        #[arg(long, default_value = "1e-2")]
        xi2: String,
        /// Flat-band support `lo:hi` in units of 1/tau.
        #[arg(long, default_value = "0:10")]
        noise_band: String,
        #[arg(long, value_enum, default_value = "dephasing")]
        noise: QuadratureArg,
        #[arg(long, default_value_t = input::default_realizations())]
        realizations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Integration steps per segment (default: from the step-angle limit).
        #[arg(long)]
        substeps: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::parse("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::io(format!("thread pool: {e}")))?;
    }
    let threads = rayon::current_num_threads();
    match cli.command {
        Command::Catalog { seq, out } => commands::catalog(&seq, &out, threads),
        Command::Eval { seq, grid, out } => commands::eval(&seq, &grid, &out, threads),
        Command::Cost { seq, band, out } => commands::cost(&seq, &band, &out, threads),
        Command::Order { seq, band, out } => commands::order(&seq, &band, &out, threads),
        Command::Optimize { family, params, vary, tau, method, band, quadrature, bracket, restarts, max_iter, seed, out } => {
            commands::optimize(
                commands::OptimizeArgs {
                    family,
                    params,
                    vary,
                    tau,
                    method,
                    band,
                    quadrature,
                    bracket,
                    restarts,
                    max_iter,
                    seed,
                },
                &out,
                threads,
            )
        }
        Command::Map { family, params, rows, cols, tau, band, quadrature, out } => {
            commands::map(&family, &params, &rows, &cols, &tau, &band, quadrature, &out, threads)
        }
        Command::Shape { amplitudes, kind, width, factor, cutoff, subsegments, samples, tau, emit, grid, out } => {
            commands::shape(
                commands::ShapeArgs { amplitudes, kind, width, factor, cutoff, subsegments, samples, tau, emit, grid },
                &out,
                threads,
            )
        }
        Command::Simulate { spec, family, params, tau, xi2, noise_band, noise, realizations, seed, substeps, out } => {
            commands::simulate(
                commands::SimulateArgs { spec, family, params, tau, xi2, noise_band, noise, realizations, seed, substeps },
                &out,
                threads,
            )
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_PARSE } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code);
    }
}
