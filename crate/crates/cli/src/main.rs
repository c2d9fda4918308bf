mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use monodromy_lab::{IntegralValue, SystemParams};

use output::Artifact;

#[derive(Parser, Debug)]
#[command(name = "monodromy-lab", version, about = "Singular-fibration analysis of the two-spin Tavis-Cummings system")]
struct Cli {
    /// System parameters `d1,d2,w,g`.
    #[arg(long, global = true, value_parser = parse_params, default_value = "0.5,1.5,1,1")]
    params: SystemParams,
    /// Seed for every random choice made by a command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance override; its meaning depends on the command.
    #[arg(long, global = true, value_parser = parse_positive)]
    tol: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, alias = "report", value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Critical values in slices of constant K, rank-1 threads and fixed points.
    Bifdiag {
        /// Comma-separated K values.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        k: Vec<f64>,
        /// Samples per rank-2 piece and per rank-1 thread.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Hamiltonian monodromy from period-lattice continuation.
    Monodromy {
        #[arg(long = "loop", value_enum, default_value_t = LoopChoice::All)]
        which: LoopChoice,
        /// Base point `h1,h2,k`.
        #[arg(long, value_parser = parse_value, default_value = "2,1,1.8", allow_hyphen_values = true)]
        base: IntegralValue,
        /// Radius of the circle around the focus-focus value.
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        /// Continuation steps per waypoint segment.
        #[arg(long, default_value_t = 4)]
        steps: usize,
        /// JSON array of `[h1, h2, k]` waypoints for `--loop custom`.
        #[arg(long)]
        waypoints: Option<PathBuf>,
    },
    /// Picard-Lefschetz monodromy of the A2 unfolding and the normal-form audit.
    A2 {
        /// Loop index 1..4; all four when absent.
        #[arg(long = "loop", value_parser = clap::value_parser!(u8).range(1..=4))]
        which: Option<u8>,
        #[arg(long)]
        verify_normal_form: bool,
    },
    /// Lax-equation audit along the flow of H = H1 + H2 + wK, and the triple root at c*.
    LaxCheck {
        #[arg(long, default_value_t = 5.0)]
        trajectory_time: f64,
        #[arg(long, default_value_t = 2001)]
        samples: usize,
        /// Starting point; random (from `--seed`) when absent.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: Option<[f64; 8]>,
    },
    /// Integrates a combination of the commuting flows.
    Flow {
        /// Coefficients `a,b,c` of `a X_H1 + b X_H2 + c X_K`.
        #[arg(long, value_parser = parse_triple, default_value = "1,0,0", allow_hyphen_values = true)]
        coeffs: [f64; 3],
        #[arg(long, default_value_t = 10.0)]
        time: f64,
        /// Number of output samples after the start point.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Starting point `u1,u2,u3,v1,v2,v3,q,p`; random when absent.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: Option<[f64; 8]>,
    },
    /// Reduced space at K = k and its moment polygon.
    Reduce {
        #[arg(long, allow_hyphen_values = true)]
        k: f64,
        /// Check that the polygon is Delzant.
        #[arg(long)]
        delzant: bool,
    },
    /// Local fibre type and spectral-curve data over a value.
    Fiber {
        /// Value `h1,h2,k`; the central value c* when absent.
        #[arg(long, value_parser = parse_value, allow_hyphen_values = true)]
        value: Option<IntegralValue>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LoopChoice {
    Gamma1,
    Gamma2,
    Gamma3,
    Gamma4,
    All,
    Custom,
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", v.len()));
    }
    Ok(v)
}

fn parse_params(s: &str) -> Result<SystemParams, String> {
    let v = parse_floats(s, 4)?;
    SystemParams::new(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string())
}

fn parse_value(s: &str) -> Result<IntegralValue, String> {
    let v = parse_floats(s, 3)?;
    Ok(IntegralValue::new(v[0], v[1], v[2]))
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v = parse_floats(s, 3)?;
    Ok([v[0], v[1], v[2]])
}

fn parse_point(s: &str) -> Result<[f64; 8], String> {
    let v = parse_floats(s, 8)?;
    Ok(std::array::from_fn(|i| v[i]))
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(x) => Err(format!("tolerance must be positive, got {x}")),
        Err(e) => Err(e.to_string()),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("MONODROMY_LAB_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("MONODROMY_LAB_THREADS = `{v}`"))?;
    if n == 0 {
        bail!("MONODROMY_LAB_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<Artifact> {
    configure_threads()?;
    let ctx = commands::Context { params: cli.params, seed: cli.seed, tol: cli.tol, format: cli.format };
    match cli.command {
        Command::Bifdiag { k, samples } => commands::bifdiag(&ctx, &k, samples),
        Command::Monodromy { which, base, radius, steps, waypoints } => {
            commands::monodromy(&ctx, which, base, radius, steps, waypoints.as_deref())
        }
        Command::A2 { which, verify_normal_form } => commands::a2(&ctx, which, verify_normal_form),
        Command::LaxCheck { trajectory_time, samples, point } => commands::lax_check(&ctx, trajectory_time, samples, point),
        Command::Flow { coeffs, time, samples, point } => commands::flow(&ctx, coeffs, time, samples, point),
        Command::Reduce { k, delzant } => commands::reduce(&ctx, k, delzant),
        Command::Fiber { value } => commands::fiber(&ctx, value),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let result = run(cli).and_then(|a| {
        a.write(out.as_deref())?;
        Ok(a.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("monodromy-lab: one or more audits failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("monodromy-lab: {e:#}");
            ExitCode::from(2)
        }
    }
}
