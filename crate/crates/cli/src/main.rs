//! `chanres`: command-line front end for the channel resource toolkit.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when the solver fails.

mod commands;
mod render;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use render::Format;

/// Environment variable overriding the default solver tolerance.
pub const TOLERANCE_ENV: &str = "CHANRES_TOLERANCE";

#[derive(Parser, Debug)]
#[command(name = "chanres", version, about = "Resource measures and protocols for quantum channels")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Seed for the randomized verbs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct FreeArg {
    /// Free set: constant, mio, mmp (maximally-mixed preserving), or a path
    /// to a free-set JSON document.
    #[arg(long = "free")]
    pub free: String,
}

#[derive(Subcommand, Debug)]
pub enum Verb {
    /// Max-relative entropy between two channels, optionally smoothed.
    Dmax {
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        /// Smoothing radius in half diamond distance.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Robustness and log-robustness with respect to a free set.
    Robust {
        channel: PathBuf,
        #[command(flatten)]
        free: FreeArg,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Write the optimal free channel to this file.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Max-information of a channel.
    Imax { channel: PathBuf },
    /// Half diamond distance between two channels.
    Diamond {
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
    },
    /// Half diamond distance from a channel to the free set.
    DistFree {
        channel: PathBuf,
        #[command(flatten)]
        free: FreeArg,
    },
    /// Generating or increasing power of a channel (heuristic lower bound).
    Power {
        channel: PathBuf,
        #[arg(long, value_enum, default_value_t = commands::MonotoneArg::Coherence)]
        monotone: commands::MonotoneArg,
        /// Free set providing the Hamiltonian of the free-energy monotone.
        #[arg(long)]
        free: Option<String>,
        #[arg(long, value_enum, default_value_t = commands::PowerKind::Generating)]
        kind: commands::PowerKind,
        /// Allow an ancilla of the input dimension.
        #[arg(long)]
        complete: bool,
        #[arg(long, default_value_t = 20)]
        starts: usize,
    },
    /// Convex-split mixture of `alpha` into `n − 1` copies of `beta`.
    ConvexSplit {
        #[arg(long)]
        alpha: PathBuf,
        #[arg(long)]
        beta: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Catalytic erasure of a channel's resource.
    Erasure {
        channel: PathBuf,
        #[command(flatten)]
        free: FreeArg,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        eta: f64,
    },
    /// Check a simulation triple: free pre/post-processing and the distance
    /// of the simulated channel to the target.
    SimulateCheck {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        pre: PathBuf,
        #[arg(long)]
        post: PathBuf,
        #[command(flatten)]
        free: FreeArg,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Sample-based check of the free-set axioms.
    Axioms {
        #[command(flatten)]
        free: FreeArg,
        #[arg(long, default_value_t = 2)]
        dim_in: usize,
        #[arg(long, default_value_t = 2)]
        dim_out: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Randomized checks of the monotone properties of the log-robustness.
    MonotoneSuite {
        #[command(flatten)]
        free: FreeArg,
        #[arg(long, default_value_t = 2)]
        dim_in: usize,
        #[arg(long, default_value_t = 2)]
        dim_out: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Whether the distribution `p` majorizes `q`.
    Majorize {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        q: Vec<f64>,
    },
    /// Asymptotic MIO cost of a classical-quantum channel.
    CqCost { channel: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(doc) => {
            let text = render::emit(&doc, cli.format);
            let mut out = std::io::stdout().lock();
            if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
