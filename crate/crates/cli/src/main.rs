//! `ppmm`: experiment runner and estimation front end.
//!
//! Errors are reported on stderr as a single line
//! `error: kind=<kind> msg=<message>`; the exit code is 2 for usage errors
//! and 1 for everything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ppmm::experiments::{
    plot_summary, run_convergence_experiment, run_extension_experiment, run_k_vs_d_experiment,
    run_timing_experiment, ExperimentKind, ExperimentSpec, Settings,
};
use ppmm::{
    apply_map, closed_form_w2, empirical_wasserstein, exact_discrete_w2, fit, load_sample,
    read_estimate, save_sample, write_estimate, write_trace_csv, EngineConfig, Error, GaussianSpec,
    Strategy,
};

#[derive(Parser)]
#[command(
    name = "ppmm",
    version,
    about = "Projection pursuit Monge map experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence curves: traces per replication plus summary.csv
    Simulate(Shared),
    /// Per-iteration and time-to-converge wall times
    Timing(Shared),
    /// Iterations to converge against dimension
    Kvd(Shared),
    /// Unequal sizes and random weights against the exact discrete oracle
    Extension(Shared),
    /// Fit a map between two CSV samples
    Fit(FitArgs),
    /// Apply a fitted map to a CSV sample and report the displacement cost
    Eval(EvalArgs),
    /// Reference Wasserstein distances
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// SVG line chart of a summary.csv
    Plot(PlotArgs),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Closed-form W2 between two AR(1) Gaussians, one line per dimension
    Gaussian(Box<Shared>),
    /// Exact W_p between two small CSV samples
    Discrete(DiscreteArgs),
}

/// Flags shared by the experiment subcommands. All of them can also be
/// given as `key=value` lines in `--config`; flags win.
#[derive(Args, Default)]
struct Shared {
    /// Comma-separated methods: ppmm, ppmm+mean, random, sliced, slicedL
    #[arg(long)]
    method: Option<String>,
    /// Slice count for a bare `sliced` method
    #[arg(long)]
    slices: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// Relative change stopping threshold
    #[arg(long)]
    tol: Option<String>,
    /// Cost exponent (positive integer)
    #[arg(long)]
    p: Option<String>,
    /// Base seed; replication r uses seed + r
    #[arg(long)]
    seed: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<String>,
    /// Comma-separated dimensions
    #[arg(long)]
    dims: Option<String>,
    /// Sample size of both samples
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    n_x: Option<String>,
    #[arg(long)]
    n_y: Option<String>,
    /// uniform or random
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mean_x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mean_y: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    rho_x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    rho_y: Option<String>,
    #[arg(long)]
    ridge: Option<String>,
    /// parallel or sequential
    #[arg(long)]
    execution: Option<String>,
}

impl Shared {
    fn settings(&self) -> ppmm::Result<Settings> {
        let file = match &self.config {
            Some(path) => Settings::load_config(path)?,
            None => Settings::default(),
        };
        let mut flags = Settings::default();
        let pairs = [
            ("method", &self.method),
            ("slices", &self.slices),
            ("max_iter", &self.max_iter),
            ("tol", &self.tol),
            ("p", &self.p),
            ("seed", &self.seed),
            ("out", &self.out),
            ("reps", &self.reps),
            ("dims", &self.dims),
            ("n", &self.n),
            ("n_x", &self.n_x),
            ("n_y", &self.n_y),
            ("weights", &self.weights),
            ("mean_x", &self.mean_x),
            ("mean_y", &self.mean_y),
            ("rho_x", &self.rho_x),
            ("rho_y", &self.rho_y),
            ("ridge", &self.ridge),
            ("execution", &self.execution),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                flags.set(key, v).map_err(|e| match e {
                    Error::InvalidParameter(m) => {
                        Error::InvalidParameter(format!("--{}: {m}", key.replace('_', "-")))
                    }
                    other => other,
                })?;
            }
        }
        Ok(file.overlay(&flags))
    }

    fn spec(&self, kind: ExperimentKind) -> ppmm::Result<(ExperimentSpec, PathBuf)> {
        let settings = self.settings()?;
        let mut spec = ExperimentSpec::preset(kind);
        settings.apply(&mut spec)?;
        let out = settings
            .out
            .unwrap_or_else(|| PathBuf::from("results").join(kind.as_str()));
        Ok((spec, out))
    }
}

#[derive(Args)]
struct FitArgs {
    /// Source sample CSV
    x: PathBuf,
    /// Target sample CSV
    y: PathBuf,
    /// Name of the weight column (default: `weight` when present)
    #[arg(long)]
    weight_column: Option<String>,
    #[arg(long, default_value = "ppmm")]
    method: String,
    #[arg(long)]
    slices: Option<usize>,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = ppmm::directions::DEFAULT_RIDGE)]
    ridge: f64,
    /// Estimate directory (manifest, directions, maps, trace.csv)
    #[arg(long, default_value = "estimate")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Estimate directory written by `fit`
    estimate: PathBuf,
    /// Sample CSV to push through the map
    x: PathBuf,
    #[arg(long)]
    weight_column: Option<String>,
    /// Cost exponent (default: the one used for fitting)
    #[arg(long)]
    p: Option<f64>,
    /// Write the transported sample here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiscreteArgs {
    x: PathBuf,
    y: PathBuf,
    #[arg(long)]
    weight_column: Option<String>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

#[derive(Args)]
struct PlotArgs {
    /// summary.csv, or a directory containing one
    input: PathBuf,
    /// Output SVG (default: plot.svg next to the summary)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprintln!("error: kind=usage msg=missing subcommand (see --help)");
                return ExitCode::from(2);
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ")
                .trim();
            eprintln!("error: kind=usage msg={first}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: kind={} msg={msg}", e.kind());
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> ppmm::Result<()> {
    match command {
        Command::Simulate(shared) => {
            let (spec, out) = shared.spec(ExperimentKind::Convergence)?;
            let report = run_convergence_experiment(&spec, &out)?;
            for method in &spec.methods {
                for &d in &spec.dims {
                    let last = report
                        .summary
                        .iter()
                        .rfind(|r| r.method == method.to_string() && r.d == d && r.status == "ok");
                    let failed = report.cells_for(method, d).filter(|c| !c.ok()).count();
                    match last {
                        Some(r) => println!(
                            "method={method} d={d} iterations={} mean_w_hat={} ground_truth={} failed={failed}",
                            r.iteration, r.mean_w_hat, r.ground_truth
                        ),
                        None => println!("method={method} d={d} failed={failed}"),
                    }
                }
            }
            println!("wrote {}", out.display());
        }
        Command::Timing(shared) => {
            let (spec, out) = shared.spec(ExperimentKind::Timing)?;
            let report = run_timing_experiment(&spec, &out)?;
            for r in &report.rows {
                println!(
                    "method={} d={} per_iteration_ms={:.4} total_ms={:.3} failed={}",
                    r.method,
                    r.d,
                    r.per_iteration_mean(),
                    r.total_mean(),
                    r.failures.len()
                );
            }
            println!("wrote {}", out.join("timing.csv").display());
        }
        Command::Kvd(shared) => {
            let (spec, out) = shared.spec(ExperimentKind::KVersusD)?;
            let report = run_k_vs_d_experiment(&spec, &out)?;
            for r in &report.rows {
                let (m, s) = r.mean_sd();
                println!("method={} d={} mean_k={m} sd_k={s}", r.method, r.d);
            }
            for (method, f) in &report.fits {
                println!(
                    "method={method} slope={} intercept={} r_squared={}",
                    f.slope, f.intercept, f.r_squared
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Extension(shared) => {
            let (spec, out) = shared.spec(ExperimentKind::Extension)?;
            let report = run_extension_experiment(&spec, &out)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for c in &report.cells {
                match c.oracle {
                    Some(o) => println!(
                        "method={} d={} rep={} final_w_hat={} oracle_w2={o} status={}",
                        c.method,
                        c.d,
                        c.rep,
                        c.final_w_hat(),
                        c.status
                    ),
                    None => println!(
                        "method={} d={} rep={} final_w_hat={} status={}",
                        c.method,
                        c.d,
                        c.rep,
                        c.final_w_hat(),
                        c.status
                    ),
                }
            }
            println!("wrote {}", out.display());
        }
        Command::Fit(args) => run_fit(args)?,
        Command::Eval(args) => {
            let (estimate, _) = read_estimate(&args.estimate)?;
            let x = load_sample(&args.x, args.weight_column.as_deref())?;
            let mapped = apply_map(&estimate, &x)?;
            let p = args.p.unwrap_or(estimate.config.p);
            let w = empirical_wasserstein(&mapped, &x, p)?;
            if let Some(out) = &args.out {
                save_sample(&mapped, out)?;
            }
            println!("w_hat={w}");
        }
        Command::Oracle(OracleCommand::Gaussian(shared)) => {
            let (spec, _) = shared.spec(ExperimentKind::Convergence)?;
            for &d in &spec.dims {
                let a = GaussianSpec::ar1(d, spec.pair.mean_x, spec.pair.rho_x)?;
                let b = GaussianSpec::ar1(d, spec.pair.mean_y, spec.pair.rho_y)?;
                println!("d={d} w2={}", closed_form_w2(&a, &b)?);
            }
        }
        Command::Oracle(OracleCommand::Discrete(args)) => {
            let x = load_sample(&args.x, args.weight_column.as_deref())?;
            let y = load_sample(&args.y, args.weight_column.as_deref())?;
            println!("w_p={}", exact_discrete_w2(&x, &y, args.p)?);
        }
        Command::Plot(args) => {
            let summary = if args.input.is_dir() {
                args.input.join("summary.csv")
            } else {
                args.input.clone()
            };
            let out = args
                .out
                .unwrap_or_else(|| summary.parent().unwrap_or(Path::new(".")).join("plot.svg"));
            plot_summary(&summary, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn run_fit(args: FitArgs) -> ppmm::Result<()> {
    let x = load_sample(&args.x, args.weight_column.as_deref())?;
    let y = load_sample(&args.y, args.weight_column.as_deref())?;
    let mut strategy = Strategy::parse(&args.method)?;
    if let Some(l) = args.slices {
        if args.method.trim().eq_ignore_ascii_case("sliced") {
            strategy = Strategy::sliced(l);
        }
    }
    let config = EngineConfig {
        max_iterations: args.max_iter,
        tolerance: args.tol,
        p: args.p,
        seed: args.seed,
        ridge: args.ridge,
        record_timing: true,
    };
    let outcome = fit(&x, &y, strategy, &config)?;
    write_estimate(
        &outcome.estimate,
        Some(outcome.trace.termination),
        &args.out,
    )?;
    let trace_path = args.out.join("trace.csv");
    let mut buf = Vec::new();
    write_trace_csv(&outcome.trace, &mut buf).map_err(|e| Error::Io {
        path: trace_path.clone(),
        source: e,
    })?;
    std::fs::write(&trace_path, buf).map_err(|e| Error::Io {
        path: trace_path.clone(),
        source: e,
    })?;
    println!(
        "iterations={} termination={} w_hat={}",
        outcome.trace.iterations(),
        outcome.trace.termination.as_str(),
        outcome.trace.final_displacement()
    );
    println!("wrote {}", args.out.display());
    Ok(())
}
