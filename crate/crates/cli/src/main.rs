//! `ncf`: reproducible experiments on N-continued fractions.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncf_core::NcfError;

use crate::output::Report;

#[derive(Debug, Parser)]
#[command(name = "ncf", version, about = "Experiments on N-continued fractions")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Func {
    /// f(x) = x
    X,
    /// f(x) = x^2
    X2,
    /// f(x) = cos(3x)
    Cos,
    /// f(x) = 1
    One,
}

impl Func {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Func::X => x,
            Func::X2 => x * x,
            Func::Cos => (3.0 * x).cos(),
            Func::One => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::X => "x",
            Func::X2 => "x2",
            Func::Cos => "cos",
            Func::One => "one",
        }
    }
}

#[derive(Debug, Args)]
pub struct NArg {
    /// The parameter N >= 1.
    #[arg(long, default_value_t = 1)]
    n: u32,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Digits of x (exact for p/q input).
    Expand {
        #[command(flatten)]
        n: NArg,
        /// A rational p/q or a decimal in (0, 1].
        #[arg(long)]
        x: String,
        /// Digit cap for decimal input.
        #[arg(long, default_value_t = 64)]
        max_len: usize,
    },
    /// Exact value and convergents of a digit sequence.
    Eval {
        #[command(flatten)]
        n: NArg,
        /// Comma-separated positive digits.
        #[arg(long, value_delimiter = ',', required = true)]
        digits: Vec<u64>,
    },
    /// Law of the first digit under G_N.
    DigitLaw {
        #[command(flatten)]
        n: NArg,
        /// Number of digits listed before the tail.
        #[arg(long, default_value_t = 20)]
        nmax: u64,
    },
    /// Invariance of G_N under the one-step kernel.
    Invariance {
        #[command(flatten)]
        n: NArg,
        /// Number of probe points u = k/grid.
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Iterates of the transfer operator on a grid function.
    Transfer {
        #[command(flatten)]
        n: NArg,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        /// Number of applications.
        #[arg(long, default_value_t = 1)]
        nmax: usize,
        #[arg(long, value_enum, default_value_t = Func::X)]
        func: Func,
    },
    /// Geometric rate of U^n f toward its G_N mean.
    Gap {
        #[command(flatten)]
        n: NArg,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[arg(long, default_value_t = 30)]
        nmax: usize,
        #[arg(long, value_enum, default_value_t = Func::X)]
        func: Func,
    },
    /// Gauss–Kuzmin experiment for an initial measure.
    Gk {
        #[command(flatten)]
        n: NArg,
        /// lebesgue, gauss, linear or shifted.
        #[arg(long, default_value = "lebesgue")]
        mu: String,
        #[arg(long, default_value_t = 40)]
        nmax: usize,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        /// Number of x points, endpoints included.
        #[arg(long, default_value_t = 257)]
        xpoints: usize,
        /// Monte Carlo samples per spot check.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The two-state Mealy chain.
    RsccMealy {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Emit the transition diagram as GraphViz DOT.
        #[arg(long)]
        dot: bool,
        /// Largest listed matrix power.
        #[arg(long, default_value_t = 10)]
        nmax: usize,
    },
    /// Contraction coefficients r_k and R.
    Contraction {
        #[command(flatten)]
        n: NArg,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        /// Largest k.
        #[arg(long, default_value_t = 2)]
        nmax: usize,
        #[arg(long, default_value_t = 256)]
        word_cap: u64,
    },
    /// Support orbit toward the fixed point.
    Regularity {
        #[command(flatten)]
        n: NArg,
        #[arg(long, default_value_t = 200)]
        nmax: usize,
        /// Number of equally spaced starts in [0, 1].
        #[arg(long, default_value_t = 8)]
        starts: usize,
    },
}

fn exit_code(e: &NcfError) -> u8 {
    match e {
        NcfError::Budget { .. } | NcfError::Quadrature { .. } => 3,
        NcfError::Fit(_) => 4,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<Report, NcfError> {
    use commands as c;
    match &cli.command {
        Command::Expand { n, x, max_len } => c::expand(n.n, x, *max_len),
        Command::Eval { n, digits } => c::eval(n.n, digits),
        Command::DigitLaw { n, nmax } => c::digit_law(n.n, *nmax),
        Command::Invariance { n, grid } => c::invariance(n.n, *grid),
        Command::Transfer {
            n,
            grid,
            nmax,
            func,
        } => c::transfer(n.n, *grid, *nmax, *func),
        Command::Gap {
            n,
            grid,
            nmax,
            func,
        } => c::gap(n.n, *grid, *nmax, *func),
        Command::Gk {
            n,
            mu,
            nmax,
            grid,
            xpoints,
            samples,
            seed,
        } => c::gk(n.n, mu, *nmax, *grid, *xpoints, *samples, *seed),
        Command::RsccMealy {
            alpha,
            beta,
            dot,
            nmax,
        } => c::mealy(*alpha, *beta, *dot, *nmax),
        Command::Contraction {
            n,
            grid,
            nmax,
            word_cap,
        } => c::contraction(n.n, *grid, *nmax, *word_cap),
        Command::Regularity { n, nmax, starts } => c::regularity(n.n, *nmax, *starts),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(report) => {
            if let Err(e) = report.write(cli.format, cli.out.as_deref()) {
                eprintln!("ncf: cannot write output: {e}");
                return ExitCode::from(2);
            }
            match report.failure {
                Some(e) => {
                    eprintln!("ncf: {e}");
                    ExitCode::from(exit_code(&e))
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("ncf: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
