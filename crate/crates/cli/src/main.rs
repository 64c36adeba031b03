use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sca_core::cca::{cca_evolve, DEFAULT_EPSILON};
use sca_core::decompose::{greedy_decompose_with, TieBreak};
use sca_core::experiments::{
    aca_report, aca_report_for, alpha_grid, c3_density_traces, default_step_cap, run_c3_convergence, run_dalpha,
    run_totalistic_grid, AcaThresholds, C3Params, GridParams, Metric, Mode,
};
use sca_core::lattice::{config_random, Configuration, Geometry, InitMode, LocalRule};
use sca_core::output::{diagram_csv, diagram_pbm, diagram_pgm, trajectory_csv, trajectory_pgm, write_records, write_table, Metadata};
use sca_core::rules::{EcaNumber, RuleSpec};
use sca_core::sca::sca_evolve;
use sca_core::{RngSeed, StateId};

/// Stochastic and continuous cellular automata experiments.
#[derive(Parser)]
#[command(name = "sca", version)]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output file; standard output if omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one space-time diagram of a stochastic rule.
    Simulate(EvolveArgs),
    /// Evolve cell-wise state probabilities exactly.
    CcaRun(EvolveArgs),
    /// Greedy decomposition of a rule into deterministic tables (JSON).
    Decompose {
        /// eca:N, aaca:N:ALPHA, c3:ETA, totalistic:P1:P2 or file:PATH.
        #[arg(long)]
        rule: String,
        /// Break ties in favor of the highest state instead of the lowest.
        #[arg(long)]
        highest: bool,
    },
    /// Distance between synchronous and alpha-asynchronous evolutions.
    Dalpha {
        /// ECA rule number.
        #[arg(long)]
        rule: u32,
        #[command(flatten)]
        curve: CurveArgs,
    },
    /// Classify alpha-asynchronous ECAs from their D(alpha) curves.
    ClassifyAca {
        /// ECA rule numbers; all 256 if omitted.
        #[arg(long = "rule", value_delimiter = ',')]
        rules: Vec<u32>,
        #[command(flatten)]
        curve: CurveArgs,
        /// Class I if D stays below this everywhere.
        #[arg(long, default_value_t = AcaThresholds::default().flat)]
        flat: f64,
        /// Sudden drop if the last step exceeds this fraction of the range.
        #[arg(long, default_value_t = AcaThresholds::default().drop_fraction)]
        drop_fraction: f64,
        /// Non-monotonic if the slope changes sign at least this many times.
        #[arg(long, default_value_t = AcaThresholds::default().noise)]
        noise: usize,
    },
    /// Density classification with the noisy traffic rule.
    C3Convergence {
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 29)]
        cells: usize,
        /// Number of initial conditions.
        #[arg(long, default_value_t = 1000)]
        ensemble: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Cca)]
        mode: ModeArg,
        /// Stochastic runs per initial condition (sca mode).
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// Step cap; 50 times the cell count if omitted.
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
    },
    /// Density traces of the continuous noisy traffic rule.
    C3Trace {
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 29)]
        cells: usize,
        #[arg(long, default_value_t = 20)]
        ensemble: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Pairwise Hamming distances over the totalistic parameter square.
    TotalisticGrid {
        /// Points per axis.
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        /// Diagrams per grid point.
        #[arg(long)]
        runs: Option<usize>,
        /// Start from the 101 x 101, 100-run setting instead of 21 x 21, 30 runs.
        #[arg(long, alias = "paper-scale")]
        full_scale: bool,
    },
}

#[derive(Args)]
struct EvolveArgs {
    /// eca:N, aaca:N:ALPHA, c3:ETA, totalistic:P1:P2 or file:PATH.
    #[arg(long)]
    rule: String,
    #[arg(long, default_value_t = 69)]
    cells: usize,
    #[arg(long, default_value_t = 69)]
    steps: usize,
    /// Initial states as digits, e.g. 0010110; overrides --cells.
    #[arg(long)]
    init: Option<String>,
    /// Draw the binary initial density uniformly before drawing cells.
    #[arg(long)]
    density_balanced: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// State shown in probability images.
    #[arg(long, default_value_t = 1)]
    state: usize,
}

#[derive(Args)]
struct CurveArgs {
    /// Lower end of the synchrony grid; the upper end is 1.
    #[arg(long, default_value_t = 0.9)]
    lo: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long, default_value_t = 69)]
    cells: usize,
    #[arg(long, default_value_t = 69)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::Tv)]
    metric: MetricArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Pbm,
    Pgm,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Cca,
    Sca,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Tv,
    Euclidean,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Cca => Mode::Cca,
            ModeArg::Sca => Mode::Sca,
        }
    }
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Tv => Metric::Tv,
            MetricArg::Euclidean => Metric::Euclidean,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e
                .chain()
                .any(|c| c.downcast_ref::<sca_core::Error>().is_some_and(sca_core::Error::is_validation));
            ExitCode::from(if validation { 2 } else { 3 })
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.threads {
        Some(0) => Err(sca_core::Error::Validation("--threads must be positive".into()).into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("starting thread pool")?
            .install(|| run(&cli)),
        None => run(&cli),
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn initial(args: &EvolveArgs, n_states: usize, radius: usize, seed: &RngSeed) -> Result<Configuration> {
    if let Some(text) = &args.init {
        let digits = text
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as usize))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| sca_core::Error::Validation(format!("--init must be digits, got '{text}'")))?;
        let geometry = Geometry::new(digits.len(), radius)?;
        return Ok(Configuration::from_indices(geometry, n_states, &digits)?);
    }
    let mode = if args.density_balanced { InitMode::DensityBalanced } else { InitMode::Uniform };
    Ok(config_random(Geometry::new(args.cells, radius)?, n_states, mode, &seed.experiment("init"))?)
}

fn evolve_meta(cli: &Cli, args: &EvolveArgs, init: &Configuration) -> Metadata {
    Metadata::new(Some(cli.seed))
        .with("rule", &args.rule)
        .with("cells", init.len())
        .with("steps", args.steps)
}

fn run(cli: &Cli) -> Result<()> {
    let seed = RngSeed::new(cli.seed);
    match &cli.command {
        Command::Simulate(args) => {
            let plut = args.rule.parse::<RuleSpec>()?.to_plut()?;
            let init = initial(args, plut.n_states(), plut.radius(), &seed)?;
            let diagram = sca_evolve(&plut, &init, args.steps, &seed.experiment("simulate"))?;
            let mut w = sink(&cli.out)?;
            match args.format {
                Format::Csv => diagram_csv(&mut w, &evolve_meta(cli, args, &init), &diagram)?,
                Format::Pbm => diagram_pbm(&mut w, &diagram)?,
                Format::Pgm => diagram_pgm(&mut w, &diagram)?,
            }
            w.flush()?;
        }
        Command::CcaRun(args) => {
            let plut = args.rule.parse::<RuleSpec>()?.to_plut()?;
            let init = initial(args, plut.n_states(), plut.radius(), &seed)?;
            let traj = cca_evolve(&plut, &init, args.steps)?;
            let mut w = sink(&cli.out)?;
            match args.format {
                Format::Csv => trajectory_csv(&mut w, &evolve_meta(cli, args, &init), &traj)?,
                Format::Pgm => trajectory_pgm(&mut w, &traj, StateId::new(args.state, plut.n_states())?)?,
                Format::Pbm => bail!(sca_core::Error::Validation(
                    "probability trajectories are grayscale; use --format pgm".into()
                )),
            }
            w.flush()?;
        }
        Command::Decompose { rule, highest } => {
            let plut = rule.parse::<RuleSpec>()?.to_plut()?;
            let tie = if *highest { TieBreak::Highest } else { TieBreak::Lowest };
            let d = greedy_decompose_with(&plut, tie)?;
            let mut w = sink(&cli.out)?;
            serde_json::to_writer_pretty(&mut w, &d.to_records())?;
            writeln!(w)?;
            w.flush()?;
        }
        Command::Dalpha { rule, curve } => {
            let alphas = alpha_grid(curve.lo, curve.points)?;
            let metric = Metric::from(curve.metric);
            let c = run_dalpha(EcaNumber::new(*rule)?, &alphas, curve.cells, curve.steps, &seed, metric)?;
            let meta = Metadata::new(Some(cli.seed))
                .with("rule", rule)
                .with("cells", curve.cells)
                .with("steps", curve.steps)
                .with("metric", metric);
            let header = ["alpha", "d"].map(String::from);
            let rows = c.alphas.iter().zip(&c.values).map(|(a, v)| vec![a.to_string(), v.to_string()]);
            let mut w = sink(&cli.out)?;
            write_table(&mut w, &meta, &header, rows)?;
            w.flush()?;
        }
        Command::ClassifyAca {
            rules,
            curve,
            flat,
            drop_fraction,
            noise,
        } => {
            let thresholds = AcaThresholds {
                flat: *flat,
                drop_fraction: *drop_fraction,
                noise: *noise,
            };
            let alphas = alpha_grid(curve.lo, curve.points)?;
            let metric = Metric::from(curve.metric);
            let report = if rules.is_empty() {
                aca_report(&alphas, curve.cells, curve.steps, &seed, metric, &thresholds)?
            } else {
                let rules = rules.iter().map(|&r| EcaNumber::new(r)).collect::<Result<Vec<_>, _>>()?;
                aca_report_for(&rules, &alphas, curve.cells, curve.steps, &seed, metric, &thresholds)?
            };
            let meta = Metadata::new(Some(cli.seed))
                .with("cells", curve.cells)
                .with("steps", curve.steps)
                .with("alpha_lo", curve.lo)
                .with("points", curve.points)
                .with("metric", metric)
                .with("flat", thresholds.flat)
                .with("drop_fraction", thresholds.drop_fraction)
                .with("noise", thresholds.noise)
                .with("agreement", format!("{}/{}", report.iter().filter(|r| r.agrees).count(), report.len()));
            let mut w = sink(&cli.out)?;
            write_records(&mut w, &meta, &report)?;
            w.flush()?;
        }
        Command::C3Convergence {
            eta,
            cells,
            ensemble,
            mode,
            runs,
            max_steps,
            epsilon,
        } => {
            let mut params = C3Params::new(*eta, *cells, *ensemble, Mode::from(*mode), *runs);
            params.max_steps = max_steps.unwrap_or_else(|| default_step_cap(*cells));
            params.epsilon = *epsilon;
            let (records, summary) = run_c3_convergence(&params, &seed)?;
            let meta = Metadata::new(Some(cli.seed))
                .with("eta", params.eta)
                .with("cells", params.cells)
                .with("ensemble", params.ensemble)
                .with("mode", params.mode)
                .with("runs_per_ic", params.runs_per_ic)
                .with("max_steps", params.max_steps)
                .with("epsilon", params.epsilon)
                .with("converged", format!("{}/{}", summary.converged, summary.runs))
                .with("mean_time", summary.mean_time)
                .with("success_rate", summary.success_rate);
            let mut w = sink(&cli.out)?;
            write_records(&mut w, &meta, &records)?;
            w.flush()?;
        }
        Command::C3Trace {
            eta,
            cells,
            ensemble,
            steps,
        } => {
            let traces = c3_density_traces(*eta, *cells, *ensemble, *steps, &seed)?;
            let meta = Metadata::new(Some(cli.seed))
                .with("eta", eta)
                .with("cells", cells)
                .with("ensemble", ensemble)
                .with("steps", steps);
            let header = ["ic", "t", "density"].map(String::from);
            let rows = traces.iter().enumerate().flat_map(|(k, trace)| {
                trace
                    .iter()
                    .enumerate()
                    .map(move |(t, d)| vec![k.to_string(), t.to_string(), d.to_string()])
            });
            let mut w = sink(&cli.out)?;
            write_table(&mut w, &meta, &header, rows)?;
            w.flush()?;
        }
        Command::TotalisticGrid {
            resolution,
            cells,
            steps,
            runs,
            full_scale,
        } => {
            let base = if *full_scale { GridParams::full() } else { GridParams::desk() };
            let params = GridParams {
                resolution: resolution.unwrap_or(base.resolution),
                cells: cells.unwrap_or(base.cells),
                steps: steps.unwrap_or(base.steps),
                runs: runs.unwrap_or(base.runs),
            };
            let stats = run_totalistic_grid(&params, &seed)?;
            let meta = Metadata::new(Some(cli.seed))
                .with("resolution", params.resolution)
                .with("cells", params.cells)
                .with("steps", params.steps)
                .with("runs", params.runs);
            let mut w = sink(&cli.out)?;
            write_records(&mut w, &meta, &stats)?;
            w.flush()?;
        }
    }
    Ok(())
}
