//! `diracbands`: band diagrams, Dirac-point reports, asymptotic-accuracy
//! tables and Green's-function probes for honeycomb lattices of circular
//! obstacles.
//!
//! Exit codes: 0 success, 1 computation failure or missed tolerance,
//! 2 usage or configuration error.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diracbands_core::bie::BoundaryCondition;

use commands::{Failure, ProbeArgs};
use config::{parse_pair, ConfigError, Format, PathPoint, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "diracbands", version, about = "Bands and Dirac points of honeycomb obstacle lattices")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file (`key = value` lines under `[section]` headers).
    #[arg(long, global = true)]
    config: Option<String>,
    /// Boundary condition on the obstacles.
    #[arg(long, global = true, value_parser = ["dirichlet", "neumann"])]
    bc: Option<String>,
    /// Obstacle radius ε (same length unit as the lattice constant).
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Retained Fourier modes N (modes −N..=N).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Output format.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Emit frequencies in raw units instead of ω a/2π.
    #[arg(long, global = true)]
    raw: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Band diagram along a Brillouin path.
    Bands {
        /// Path vertices, e.g. `M,G,K,M` or explicit `kx:ky` in units of 2π/a.
        #[arg(long)]
        path: Option<String>,
        /// Samples per path segment.
        #[arg(long)]
        samples: Option<usize>,
        /// Number of band columns.
        #[arg(long)]
        bands: Option<usize>,
        /// Upper end of the frequency window (ω a/2π).
        #[arg(long)]
        omega_max: Option<f64>,
    },
    /// Dirac point at K and cone fit for a band pair.
    Dirac {
        /// Band pair: 1,2 or 4,5 or 10,11.
        #[arg(long)]
        pair: Option<String>,
        /// Number of probe directions.
        #[arg(long)]
        directions: Option<usize>,
    },
    /// Numeric against asymptotic first Dirac values.
    Table1 {
        /// Comma-separated ε/a values.
        #[arg(long)]
        eps_list: Option<String>,
    },
    /// Evaluates the quasi-periodic Green's function at one point.
    GreensProbe {
        /// Bloch vector x component; κ = K when both components are absent.
        #[arg(long, allow_hyphen_values = true)]
        kx: Option<f64>,
        /// Bloch vector y component.
        #[arg(long, allow_hyphen_values = true)]
        ky: Option<f64>,
        /// Frequency ω (raw units).
        #[arg(long)]
        omega: f64,
        /// Evaluation point x.
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        /// Evaluation point y.
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        /// Run the quasi-periodicity, conjugation and rotation checks.
        #[arg(long)]
        check: bool,
        /// Compare values across splitting parameters η.
        #[arg(long)]
        eta_scan: bool,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| ConfigError(format!("{p}: {e}")))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(bc) = &c.bc {
        cfg.bc = bc.parse::<BoundaryCondition>()?;
    }
    if let Some(e) = c.eps {
        cfg.epsilon = e;
    }
    if let Some(n) = c.n {
        cfg.n = n;
        cfg.quad_points = None;
    }
    if let Some(o) = &c.out {
        cfg.out = Some(o.clone());
    }
    if let Some(f) = &c.format {
        cfg.format = Some(f.parse::<Format>()?);
    }
    match &cli.command {
        Command::Bands { path, samples, bands, omega_max } => {
            if let Some(p) = path {
                cfg.path = p.split(',').map(str::parse::<PathPoint>).collect::<Result<_, _>>()?;
            }
            if let Some(s) = samples {
                cfg.samples = *s;
            }
            if let Some(b) = bands {
                cfg.n_bands = *b;
            }
            if let Some(w) = omega_max {
                cfg.sweep.omega_window.1 = *w;
            }
        }
        Command::Dirac { pair, directions } => {
            if let Some(p) = pair {
                cfg.band_pair = parse_pair(p)?;
            }
            if let Some(d) = directions {
                cfg.directions = *d;
            }
        }
        Command::Table1 { eps_list } => {
            if let Some(l) = eps_list {
                cfg.eps_list = l
                    .split(',')
                    .map(|s| s.trim().parse().map_err(|_| ConfigError(format!("bad ε value '{s}'"))))
                    .collect::<Result<_, _>>()?;
            }
        }
        Command::GreensProbe { .. } => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = build_config(cli)?;
    if let Some(j) = cli.common.jobs {
        if j == 0 {
            return Err(Failure::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let raw = cli.common.raw;
    match &cli.command {
        Command::Bands { .. } => commands::cmd_bands(&cfg, raw),
        Command::Dirac { .. } => commands::cmd_dirac(&cfg, raw),
        Command::Table1 { .. } => commands::cmd_table1(&cfg, raw),
        Command::GreensProbe { kx, ky, omega, x, y, check, eta_scan } => {
            let kappa = match (kx, ky) {
                (Some(a), Some(b)) => Some((*a, *b)),
                (None, None) => None,
                _ => return Err(Failure::Usage("give both --kx and --ky, or neither for κ = K".into())),
            };
            let args = ProbeArgs { kappa, omega: *omega, x: *x, y: *y, check: *check, eta_scan: *eta_scan };
            commands::cmd_greens_probe(&cfg, &args)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DIRACBANDS_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
