use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use roundoff::experiment::{
    gallery_listing, run, scalar_csv, scalar_demo, scalar_grid, sweep, sweep_csv, ExperimentConfig,
    Grid, OutputFormat, Solver, Spacing,
};
use roundoff::extprec::rounding_probe;
use roundoff::{Error, Norm, ResidualMode};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "roundoff",
    version,
    about = "Backward errors of linear solvers next to their model bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and report backward errors, model quantities and bounds
    Run(RunArgs),
    /// Refine once over a log-spaced parameter grid and tabulate ω₀, ω₁ and the premise
    Sweep(SweepArgs),
    /// Compare naive and stable evaluation of log²(1+x)
    ScalarDemo(ScalarArgs),
    /// List the gallery families
    GalleryList,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResidualArg {
    Working,
    Dd,
}

impl From<ResidualArg> for ResidualMode {
    fn from(r: ResidualArg) -> Self {
        match r {
            ResidualArg::Working => ResidualMode::Working,
            ResidualArg::Dd => ResidualMode::DoubleDouble,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    Inf,
    Two,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Gallery spec such as hilbert:m=20 or skeel3:eps=1e-4, or file:PATH
    #[arg(long)]
    instance: String,
    /// naive, ge-nopivot, ge-partial or cholesky
    #[arg(long, default_value = "ge-partial", value_parser = parse_solver)]
    solver: Solver,
    /// Residual precision; defaults to dd for measured backward errors and
    /// working for refinement corrections
    #[arg(long, value_enum)]
    residual: Option<ResidualArg>,
    /// Seed for gallery right-hand sides drawn at random
    #[arg(long)]
    seed: Option<u64>,
    /// Write to this file instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Number of refinement steps after the solve
    #[arg(long, default_value_t = 0)]
    refine: usize,
    /// Norm for the normwise quantities; inf unless the solver is cholesky
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1)]
    refine: usize,
    /// Smallest parameter value
    #[arg(long)]
    from: f64,
    /// Largest parameter value
    #[arg(long)]
    to: f64,
    #[arg(long, default_value_t = 24)]
    points: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct ScalarArgs {
    #[arg(long, default_value_t = 2f64.powi(-40), allow_negative_numbers = true)]
    xmin: f64,
    #[arg(long, default_value_t = 2f64.powi(-20), allow_negative_numbers = true)]
    xmax: f64,
    #[arg(long, default_value_t = 41)]
    points: usize,
    /// Place points in the middle of equal cells instead of on their edges
    #[arg(long)]
    centered: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

fn parse_solver(s: &str) -> Result<Solver, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn config_from(common: &Common, refine: usize, norm: Option<NormArg>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(common.instance.clone(), common.solver);
    cfg.refinement_steps = refine;
    cfg.residual_mode = common.residual.map(Into::into);
    cfg.norm = norm.map(|n| match n {
        NormArg::Inf => Norm::Inf,
        NormArg::Two => Norm::Two,
    });
    cfg.seed = common.seed;
    cfg
}

enum Failure {
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => {
            let mut cfg = config_from(&args.common, args.refine, args.norm);
            cfg.output = match args.format {
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Csv => OutputFormat::Csv,
            };
            let report = run(&cfg)?;
            let text = match cfg.output {
                OutputFormat::Json => report.to_json() + "\n",
                OutputFormat::Csv => report.to_csv(),
            };
            emit(args.common.out.as_ref(), &text)
        }
        Command::Sweep(args) => {
            let cfg = config_from(&args.common, args.refine, None);
            let grid = Grid::log(args.from, args.to, args.points);
            let rows = sweep(&args.common.instance, &grid, &cfg)?;
            let text = match args.format {
                FormatArg::Csv => sweep_csv(&rows),
                FormatArg::Json => {
                    let rows: Vec<_> = rows
                        .iter()
                        .map(|r| {
                            format!(
                                "{{\"parameter\":{},\"omega_0\":{},\"omega_1\":{},\"premise_value\":{},\"premise_holds\":{}}}",
                                json_num(r.parameter),
                                json_num(r.omega_0),
                                json_num(r.omega_1),
                                json_num(r.premise_value),
                                r.premise_holds
                            )
                        })
                        .collect();
                    format!("[{}]\n", rows.join(",\n "))
                }
            };
            emit(args.common.out.as_ref(), &text)
        }
        Command::ScalarDemo(args) => {
            let grid = scalar_grid(args.xmin, args.xmax, args.points, args.centered)?;
            let rows = scalar_demo(&grid)?;
            let text = match args.format {
                FormatArg::Csv => scalar_csv(&rows),
                FormatArg::Json => {
                    let spacing = match grid.spacing {
                        Spacing::Log => "log",
                        Spacing::Linear => "linear",
                    };
                    let rows: Vec<_> = rows
                        .iter()
                        .map(|r| {
                            format!(
                                "{{\"x\":{},\"err_naive\":{},\"err_stable\":{}}}",
                                json_num(r.x),
                                json_num(r.err_naive),
                                json_num(r.err_stable)
                            )
                        })
                        .collect();
                    format!(
                        "{{\"measure\":\"relative forward error\",\"spacing\":\"{spacing}\",\"rows\":[{}]}}\n",
                        rows.join(",")
                    )
                }
            };
            emit(args.out.as_ref(), &text)
        }
        Command::GalleryList => emit(None, &gallery_listing()),
    }
}

fn json_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        format!("\"{}\"", roundoff::experiment::fmt_num(v))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if !rounding_probe() {
        eprintln!("error: floating-point arithmetic does not round to nearest even");
        return ExitCode::from(EXIT_NUMERIC);
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() {
                EXIT_NUMERIC
            } else {
                EXIT_CONFIG
            })
        }
    }
}
