//! `spectator-bench`: scenario runner for spectator-induced CZ errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spectator_core::error::ErrorKind;

#[derive(Debug, Parser)]
#[command(
    name = "spectator-bench",
    version,
    about = "Spectator-qubit phase errors in CZ gates"
)]
pub struct Cli {
    /// Device file (JSON); the bundled seven-qubit example when omitted.
    #[arg(long, global = true)]
    pub device: Option<PathBuf>,
    /// Output directory for CSV/SVG files; tables go to stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for shot noise.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Levels per transmon in the exact oracle and pair simulation.
    #[arg(long, global = true, default_value_t = 4)]
    pub dims: usize,
    /// Distance from a pole (MHz) inside which shifts are flagged divergent.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub pole_eps: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

/// Gate qubits, spectators and timing.
#[derive(Debug, Args)]
pub struct GateArgs {
    /// Gate qubit that stays in the computational subspace.
    #[arg(long, default_value = "Q4")]
    pub g1: String,
    /// Gate qubit whose |2⟩ level is used.
    #[arg(long, default_value = "Q2")]
    pub g2: String,
    /// Spectators coupled to G1 (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = ["Q1".to_string(), "Q6".to_string(), "Q7".to_string()])]
    pub s1: Vec<String>,
    /// Spectators coupled to G2 (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub s2: Vec<String>,
    /// Flux-pulse duration, ns.
    #[arg(long, default_value_t = 80.0)]
    pub tg: f64,
    /// Buffer on each side of the flux pulse, ns.
    #[arg(long, default_value_t = 5.0)]
    pub tb: f64,
    /// Single-qubit gate duration, ns.
    #[arg(long, default_value_t = 53.0)]
    pub ts: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dispersive shifts of one gate/spectator pair, perturbative and exact.
    Shifts(ShiftsArgs),
    /// Closed-form errors along a detuning, δ or ζ1,tot sweep.
    Sweep(SweepArgs),
    /// Errors for every spectator configuration of a gate.
    Budget(GateArgs),
    /// Time-domain simulation of the CZ with a static spectator shift.
    Simulate(SimulateArgs),
    /// Process matrix and infidelity of a CZ with phase errors.
    Tomo(TomoArgs),
    /// Synthetic Ramsey fringes and the fitted conditional phase.
    Ramsey(RamseyArgs),
    /// Reproduce a figure's data and chart.
    Fig {
        #[arg(value_parser = ["fig1c", "fig2", "fig3", "fig4"])]
        name: String,
    },
}

#[derive(Debug, Args)]
pub struct ShiftsArgs {
    /// Gate qubit id in the device.
    #[arg(long, requires = "spectator")]
    pub gate: Option<String>,
    /// Spectator qubit id in the device.
    #[arg(long, requires = "gate")]
    pub spectator: Option<String>,
    /// Δ = ω_S − ω_G in MHz (raw mode).
    #[arg(long, conflicts_with = "gate", allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = -300.0, allow_hyphen_values = true)]
    pub anh_g: f64,
    #[arg(long, default_value_t = -300.0, allow_hyphen_values = true)]
    pub anh_s: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub beta_g: f64,
    #[arg(long, default_value_t = 4.5)]
    pub j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    SpectatorDetuning,
    GateDetuningDelta,
    Zeta1Tot,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = SweepParam::SpectatorDetuning)]
    pub parameter: SweepParam,
    #[arg(long, allow_hyphen_values = true)]
    pub start: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub stop: f64,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Spectator swept in `spectator-detuning` mode (first spectator when omitted).
    #[arg(long)]
    pub spectator: Option<String>,
    #[command(flatten)]
    pub gate: GateArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// {|11⟩, |02⟩} with √2·J coupling and an ideal rectangular pulse.
    TwoLevel,
    /// Two transmons with a calibrated filtered pulse.
    Pair,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Model::TwoLevel)]
    pub model: Model,
    /// Static detuning δ from spectators, MHz.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta: f64,
    /// Exchange coupling for the two-level model, MHz.
    #[arg(long, default_value_t = 4.5)]
    pub j: f64,
    /// Gate qubit kept in the computational subspace (pair model).
    #[arg(long, default_value = "Q4")]
    pub g1: String,
    /// Gate qubit visiting |2⟩ (pair model).
    #[arg(long, default_value = "Q2")]
    pub g2: String,
    /// Gaussian filter width of the pulse edges, ns (pair model).
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Integrator step, ns.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Record the |11⟩-block trajectory every N steps into trajectory.csv.
    #[arg(long)]
    pub trajectory: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TomoArgs {
    /// Dynamical phase on G1, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub d1: f64,
    /// Dynamical phase on G2, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub d2: f64,
    /// Conditional phase error, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub dc: f64,
    /// Also report the error of this many gates in series.
    #[arg(long)]
    pub repeat: Option<u32>,
}

#[derive(Debug, Args)]
pub struct RamseyArgs {
    /// Injected conditional phase error, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub phi_c: f64,
    #[arg(long, default_value_t = 0.9)]
    pub contrast: f64,
    /// Shots per phase point; noiseless when omitted.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long, default_value_t = 8)]
    pub points: usize,
    /// Phase offset of the control-in-|0⟩ fringe, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub offset: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Validation => 2,
                ErrorKind::Numerical => 3,
            })
        }
    }
}
