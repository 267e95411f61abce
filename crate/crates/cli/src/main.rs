mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Scattering, spectra and pulse propagation on microwave-network quantum graphs.
#[derive(Debug, Parser)]
#[command(name = "qgraph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file (written atomically); stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also write an SVG line plot to this path.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphArg {
    /// Graph description (JSON).
    #[arg(long)]
    pub graph: PathBuf,
    /// Length unit `l` for `kl` axes and `7l`-style bounds, meters.
    /// Defaults to the shortest edge.
    #[arg(long)]
    pub unit_length: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Polygon {
    Triangle,
    Square,
}

/// Seed for every random choice; falls back to `QGRAPH_SEED`.
#[derive(Debug, Args)]
pub struct SeedArg {
    #[arg(long, env = "QGRAPH_SEED", default_value_t = 0x5eed)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-port S-matrix on a uniform kl grid.
    Spectrum {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 0.01)]
        kl_min: f64,
        #[arg(long, default_value_t = 6.2831)]
        kl_max: f64,
        #[arg(long, default_value_t = 20_000)]
        points: usize,
        /// Absorption coefficient, m^(-1/2).
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Minimum prominence of peaks listed in the JSON report.
        #[arg(long, default_value_t = 0.1)]
        prominence: f64,
        /// Also write the scan as a Touchstone `.s2p` file (GHz, RI).
        #[arg(long)]
        touchstone: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Eigenvalues of the closed graph (leads removed).
    Eigs {
        #[command(flatten)]
        graph: GraphArg,
        /// Number of levels above `k-min`.
        #[arg(long, conflicts_with = "k_max", required_unless_present = "k_max")]
        count: Option<usize>,
        /// Every level up to this wave number, rad/m.
        #[arg(long)]
        k_max: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        k_min: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Nearest-neighbour spacing statistics and the Berry-Robnik fit.
    Stats {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 1811)]
        levels: usize,
        #[arg(long, default_value_t = 1000)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0.25)]
        bin_width: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        output: Output,
    },
    /// Spectral rigidity against Poisson, GOE and Berry-Robnik models.
    Delta3 {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 1811)]
        levels: usize,
        #[arg(long, default_value_t = 2.0)]
        l_min: f64,
        #[arg(long, default_value_t = 20.0)]
        l_max: f64,
        #[arg(long, default_value_t = 1.0)]
        l_step: f64,
        /// Model mixing parameter; fitted from the spacings if omitted.
        #[arg(long)]
        rho1: Option<f64>,
        /// Monte-Carlo spectra for the Berry-Robnik band (0 disables it).
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        output: Output,
    },
    /// Gaussian pulse propagated through the network.
    Pulse {
        #[command(flatten)]
        graph: GraphArg,
        /// Volts.
        #[arg(long, default_value_t = 0.41)]
        amplitude: f64,
        /// Seconds.
        #[arg(long, default_value_t = 125e-12)]
        fwhm: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Fixed record length in seconds; chosen automatically if omitted.
        #[arg(long)]
        duration: Option<f64>,
        /// Peaks above this fraction of the amplitude are listed in JSON.
        #[arg(long, default_value_t = 0.01)]
        threshold: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Lead-to-lead walks up to a length bound and their amplitudes.
    Paths {
        #[command(flatten)]
        graph: GraphArg,
        /// Bound in meters (`1.75`, `1.75m`) or unit lengths (`7l`).
        #[arg(long)]
        max_length: String,
        #[arg(long)]
        lead_in: Option<String>,
        #[arg(long)]
        lead_out: Option<String>,
        #[arg(long, default_value_t = qgraph::timedomain::DEFAULT_NODE_BUDGET)]
        budget: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Measured Touchstone data against the simulated network.
    Compare {
        #[command(flatten)]
        graph: GraphArg,
        /// Touchstone v1 `.s2p` file.
        #[arg(long)]
        measured: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.1)]
        prominence: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Engine against independent reference solutions.
    Oracle {
        /// Single polygon against its closed-form transmission.
        #[arg(long, value_enum, conflicts_with = "graph", required_unless_present = "graph")]
        polygon: Option<Polygon>,
        /// Any two-lead graph against the vertex-value solver at random k.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        points: usize,
        /// Polygon edge length, meters.
        #[arg(long, default_value_t = 0.25)]
        length: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Largest wave number sampled with `--graph`, rad/m.
        #[arg(long, default_value_t = 100.0)]
        k_max: f64,
        /// Exit with status 1 if the deviation exceeds this.
        #[arg(long)]
        tolerance: Option<f64>,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        output: Output,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum {
            graph,
            kl_min,
            kl_max,
            points,
            beta,
            prominence,
            touchstone,
            output,
        } => commands::spectrum(&graph, kl_min, kl_max, points, beta, prominence, touchstone.as_deref(), &output),
        Command::Eigs {
            graph,
            count,
            k_max,
            k_min,
            tol,
            output,
        } => commands::eigs(&graph, count, k_max, k_min, tol, &output),
        Command::Stats {
            graph,
            levels,
            bootstrap,
            bin_width,
            seed,
            output,
        } => commands::stats(&graph, levels, bootstrap, bin_width, seed.seed, &output),
        Command::Delta3 {
            graph,
            levels,
            l_min,
            l_max,
            l_step,
            rho1,
            samples,
            seed,
            output,
        } => commands::delta3(&graph, levels, (l_min, l_max, l_step), rho1, samples, seed.seed, &output),
        Command::Pulse {
            graph,
            amplitude,
            fwhm,
            beta,
            duration,
            threshold,
            output,
        } => commands::pulse(&graph, amplitude, fwhm, beta, duration, threshold, &output),
        Command::Paths {
            graph,
            max_length,
            lead_in,
            lead_out,
            budget,
            output,
        } => commands::paths(&graph, &max_length, lead_in, lead_out, budget, &output),
        Command::Compare {
            graph,
            measured,
            beta,
            prominence,
            output,
        } => commands::compare(&graph, &measured, beta, prominence, &output),
        Command::Oracle {
            polygon,
            graph,
            points,
            length,
            beta,
            k_max,
            tolerance,
            seed,
            output,
        } => match (polygon, graph) {
            (Some(p), _) => commands::oracle_polygon(p, points, length, tolerance, &output),
            (None, Some(g)) => commands::oracle_graph(&g, points, beta, k_max, tolerance, seed.seed, &output),
            (None, None) => unreachable!("clap requires one of --polygon, --graph"),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Defect(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
