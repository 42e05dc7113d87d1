use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod checks;
mod commands;
mod output;

#[derive(Parser)]
#[command(name = "qcirc", version, about = "Quantize superconducting circuits and analyse their spectra, networks and dynamics")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "qcirc-out")]
    pub out: PathBuf,
    /// Number of levels to report.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Per-variable truncation: n_max for charge variables, Fock dimension otherwise.
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<usize>,
    /// Convergence tolerance in GHz.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Use the rounded kT/h = T/25 GHz per mK temperature conversion.
    #[arg(long)]
    pub paper_units: bool,
    /// Run the invariant suite of the module and exit non-zero on a violation.
    #[arg(long)]
    pub check: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Spectral,
    #[value(name = "4")]
    Four,
    #[value(name = "6")]
    Six,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmpKind {
    Dpa,
    Jrm,
}

#[derive(Subcommand)]
enum Command {
    /// Build the Hamiltonian of a netlist and write it as spec.qhs.
    Quantize {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Lowest levels of a netlist.
    Spectrum {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Levels over a parameter grid: `--param ng 0:1:101` or `--param flux:TAG 0:1:51`.
    Sweep {
        input: PathBuf,
        #[arg(long, num_args = 2, value_names = ["NAME", "START:STOP:COUNT"], required = true)]
        param: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Foster fit of a netlist (with --ports) or sampled impedance CSV.
    Network {
        input: PathBuf,
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Black-box quantization of a fitted network with junctions on its ports.
    Blackbox {
        input: PathBuf,
        /// Josephson energy per port, e.g. 16.35GHz.
        #[arg(long, value_delimiter = ',')]
        ej: Vec<String>,
        #[arg(long, value_enum, default_value = "spectral")]
        order: Order,
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Driven, damped Duffing transmon under the Lindblad equation.
    Dynamics {
        #[command(flatten)]
        dyn_args: DynArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Steady-state gain and noise of a parametric amplifier.
    Amp {
        #[arg(value_enum)]
        kind: AmpKind,
        #[command(flatten)]
        amp: AmpArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Run every invariant suite, on the built-in reference cases and an optional netlist.
    Check {
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone, Debug)]
pub struct NetArgs {
    /// Branch ids used as ports (netlist input).
    #[arg(long, value_delimiter = ',')]
    pub ports: Vec<String>,
    /// Frequency window LO:HI in GHz; defaults to the sample range for CSV input.
    #[arg(long)]
    pub window: Option<String>,
    /// Reference capacitance of the Cauer model, fF.
    #[arg(long, default_value_t = 100.0)]
    pub c0: f64,
    /// Reference impedance, ohm.
    #[arg(long, default_value_t = 50.0)]
    pub z0: f64,
}

#[derive(Args, Clone, Debug)]
pub struct DynArgs {
    /// Qubit frequency, GHz.
    #[arg(long, default_value_t = 5.0)]
    pub omega: f64,
    /// Anharmonicity, GHz.
    #[arg(long, default_value_t = -0.3, allow_hyphen_values = true)]
    pub delta: f64,
    /// Drive capacitance, fF.
    #[arg(long, default_value_t = 0.1)]
    pub cd: f64,
    /// Drive voltage amplitude, V.
    #[arg(long, default_value_t = 20e-6)]
    pub vmax: f64,
    /// Drive carrier, GHz; defaults to the qubit frequency.
    #[arg(long)]
    pub drive: Option<f64>,
    /// Energy decay rate, 1/ns.
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
    /// Bath temperature, mK.
    #[arg(long, default_value_t = 0.0)]
    pub temp_mk: f64,
    /// Duration, ns.
    #[arg(long, default_value_t = 50.0)]
    pub t_max: f64,
    /// Number of recorded times.
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    /// Largest integration step, ns.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
}

#[derive(Args, Clone, Debug)]
pub struct AmpArgs {
    /// DPA pump strength.
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// DPA decay rate.
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// JRM pump strength.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa_s: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa_i: f64,
    /// Idler occupation.
    #[arg(long, default_value_t = 0.0)]
    pub nbar: f64,
}

/// Error carrying the process exit code: 1 for input, 2 for numerical failure.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError { code: 1, msg: msg.into() }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }
}

impl From<qcirc::Error> for CliError {
    fn from(e: qcirc::Error) -> Self {
        CliError { code: if e.is_input_error() { 1 } else { 2 }, msg: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(format!("io: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Command::Quantize { input, common } => commands::quantize(&input, &common),
        Command::Spectrum { input, common } => commands::spectrum(&input, &common),
        Command::Sweep { input, param, common } => commands::sweep(&input, &param[0], &param[1], &common),
        Command::Network { input, net, common } => commands::network(&input, &net, &common),
        Command::Blackbox { input, ej, order, net, common } => commands::blackbox(&input, &ej, order, &net, &common),
        Command::Dynamics { dyn_args, common } => commands::dynamics(&dyn_args, &common),
        Command::Amp { kind, amp, common } => commands::amp(kind, &amp, &common),
        Command::Check { input, common } => commands::check(input.as_deref(), &common),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qcirc: {}", e.msg.replace('\n', " "));
            ExitCode::from(e.code)
        }
    }
}
