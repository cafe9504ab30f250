use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mmwave_blockage::probability::{sweep_preemption_mc, sweep_preemption_probability, PreemptionInputs};
use mmwave_blockage::simulate::{simulate_chain_binned, simulate_events_with, EventOptions, DEFAULT_BIN};
use mmwave_blockage::sweep::{run_sweep, SweepMode, SweepParameter, SweepSpec, SweepValues};
use mmwave_blockage::trace::{extract_levels, load_trace, DEFAULT_BLOCKAGE_THRESHOLD};
use mmwave_blockage::scenario::validate;
use mmwave_blockage::{analyze, build_chain, Error, ScenarioConfig};

/// Throughput of a mm-wave link under transient blockage.
#[derive(Parser)]
#[command(name = "mmblock", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a parameter grid and write one CSV row per point.
    Sweep(SweepArgs),
    /// Simulate one scenario and write its throughput series.
    Simulate(SimulateArgs),
    /// Fit throughput levels and recovery probabilities to a trace.
    TraceFit(TraceFitArgs),
    /// Print the sweep-preemption probability and a Monte Carlo estimate.
    Pc(PcArgs),
    /// Print the analytic summary of one scenario.
    Analyze(ConfigArg),
    /// Dump the transition matrix as CSV.
    Chain(ChainArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Scenario config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Analytic,
    Simulate,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Parameter to vary: a_factor, ssi, v or mu.
    #[arg(long)]
    sweep: SweepParameter,
    /// Explicit grid, `a,b,c`.
    #[arg(long, conflicts_with = "range", required_unless_present = "range", allow_hyphen_values = true)]
    values: Option<String>,
    /// Generated grid, `min:max:count[:log]`.
    #[arg(long)]
    range: Option<String>,
    /// μ values for the second axis, `a,b,c`.
    #[arg(long)]
    mu_list: Option<String>,
    #[arg(long, value_enum, default_value = "analytic")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Simulated seconds per grid point (simulate mode).
    #[arg(long)]
    duration: Option<f64>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    /// Frame-by-frame event simulation.
    Events,
    /// Slot-by-slot walk on the Markov chain.
    Chain,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, default_value_t = 100.0)]
    duration: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "events")]
    engine: Engine,
    /// Series bin width in seconds.
    #[arg(long, default_value_t = DEFAULT_BIN)]
    bin: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceFitArgs {
    /// Trace CSV with header `time_s,throughput_bps`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    max_levels: usize,
    /// Samples below this share of the maximum count as blockage dips.
    #[arg(long, default_value_t = DEFAULT_BLOCKAGE_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PcArgs {
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    sigma: f64,
    /// Sweep interval in seconds, or `inf`.
    #[arg(long)]
    ssi: String,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ChainArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(arg: &ConfigArg) -> Result<ScenarioConfig, Error> {
    match &arg.config {
        Some(path) => ScenarioConfig::from_path(path),
        None => Ok(ScenarioConfig::default()),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn number(raw: &str) -> Result<f64, Error> {
    mmwave_blockage::config::parse_number(raw)
        .ok_or_else(|| Error::domain(format!("`{raw}` is not a number")))
}

fn sweep(args: SweepArgs) -> Result<(), Error> {
    let base = load_config(&args.config)?;
    let values = match (&args.values, &args.range) {
        (Some(v), _) => SweepValues::parse_list(v)?,
        (None, Some(r)) => SweepValues::parse_range(r)?,
        (None, None) => return Err(Error::domain("one of --values or --range is required")),
    };
    let cross_mu = args
        .mu_list
        .as_deref()
        .map(|s| s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(number).collect())
        .transpose()?;
    let spec = SweepSpec {
        parameter: args.sweep,
        values,
        cross_mu,
    };
    let mode = match args.mode {
        Mode::Analytic => SweepMode::Analytic,
        Mode::Simulate => SweepMode::Simulate {
            duration_s: args.duration,
        },
    };
    let result = run_sweep(&base, &spec, mode, args.seed)?;
    result.write_csv(output(args.out.as_deref())?)
}

fn simulate(args: SimulateArgs) -> Result<(), Error> {
    let scenario = validate(&load_config(&args.config)?)?;
    let result = match args.engine {
        Engine::Events => {
            let opts = EventOptions {
                bin_s: args.bin,
                ..EventOptions::new(args.duration, args.seed)
            };
            simulate_events_with(&scenario, &opts)?
        }
        Engine::Chain => {
            let chain = build_chain(&scenario)?;
            if !(args.duration > 0.0 && args.duration.is_finite()) {
                return Err(Error::domain("duration must be positive and finite"));
            }
            let slots = (args.duration / chain.slot).round() as u64;
            simulate_chain_binned(&chain, slots, args.seed, args.bin)?
        }
    };
    eprintln!(
        "mean {:.6e} bps, std {:.6e} bps over {} s",
        result.empirical_mean,
        result.empirical_variance.sqrt(),
        result.duration_s
    );
    result.write_series_csv(output(args.out.as_deref())?)
}

fn trace_fit(args: TraceFitArgs) -> Result<(), Error> {
    let trace = load_trace(File::open(&args.input)?)?;
    let model = extract_levels(&trace, args.max_levels, args.threshold)?;
    let mut out = output(args.out.as_deref())?;
    out.write_all(model.to_config_fragment().as_bytes())?;
    out.flush()?;
    Ok(())
}

fn pc(args: PcArgs) -> Result<(), Error> {
    let inputs = PreemptionInputs::new(args.mu, args.sigma, number(&args.ssi)?)?;
    let closed = sweep_preemption_probability(&inputs);
    let mc = sweep_preemption_mc(&inputs, args.samples, args.seed)?;
    println!("closed_form {closed:.10e}");
    println!("monte_carlo {:.10e} +- {:.3e} ({} samples)", mc.estimate, mc.std_error, args.samples);
    Ok(())
}

fn analyze_cmd(arg: ConfigArg) -> Result<(), Error> {
    let scenario = validate(&load_config(&arg)?)?;
    let a = analyze(&scenario)?;
    println!("load_bps {}", scenario.load);
    println!("p_C {}", a.p_c);
    for ((label, pi), thp) in a.chain.labels.iter().zip(&a.stationary.pi).zip(&a.chain.throughput) {
        println!("state {label} pi {pi} throughput_bps {thp}");
    }
    println!("mean_bps {}", a.summary.mean);
    println!("std_bps {}", a.summary.std_dev);
    Ok(())
}

fn chain(args: ChainArgs) -> Result<(), Error> {
    let chain = build_chain(&validate(&load_config(&args.config)?)?)?;
    chain.write_csv(output(args.out.as_deref())?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Simulate(a) => simulate(a),
        Command::TraceFit(a) => trace_fit(a),
        Command::Pc(a) => pc(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Chain(a) => chain(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
