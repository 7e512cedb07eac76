use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qps_core::grover::{self, OracleSpec, SearchMode};
use qps_core::operator::{self, SymbolTransition};
use qps_core::probabilistic::{expand_tree, sample_run, StochasticControl};
use qps_core::reversible::{log_to_csv, run_reversible};
use qps_core::sysfile::{read_system_file, SystemFile};
use qps_core::{check_deterministic, check_reversible, perf, run_forward, ProductionSystemDef};

#[derive(Parser)]
#[command(
    name = "qps",
    version,
    about = "Run production systems classically, reversibly, stochastically and under Grover search"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// System file.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Maximum number of firings per run.
    #[arg(long, global = true, default_value_t = 10_000)]
    step_limit: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Check determinism and reversibility and report encoding widths.
    Validate,
    /// Forward run as a trace CSV.
    Run {
        /// Starting memory; defaults to the first initial state.
        #[arg(long)]
        initial: Option<String>,
        /// Pick rules from the file's `prob` lines instead of the conflict strategy.
        #[arg(long)]
        stochastic: bool,
    },
    /// Reversible run as a log CSV.
    Reverse {
        #[arg(long)]
        initial: Option<String>,
        /// Human-readable table with head markers instead of CSV.
        #[arg(long)]
        pretty: bool,
    },
    /// Computation tree as CSV; uniform over conflict sets without `prob` lines.
    Tree {
        #[arg(long)]
        initial: Option<String>,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Unitary control operator as a `lambda,omega` map or a dense matrix.
    BuildOp {
        #[arg(long)]
        dense: bool,
    },
    /// Grover search over the initial states; JSON-lines report.
    Grover {
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long, default_value = "uncompute")]
        mode: String,
        /// Iteration count, or `auto` for the optimal count.
        #[arg(long, default_value = "auto")]
        iterations: String,
        /// Shorthand for `--iterations auto`.
        #[arg(long)]
        auto: bool,
        #[arg(long, default_value_t = 0)]
        shots: usize,
        /// Also dump the final amplitudes as CSV.
        #[arg(long)]
        amplitudes: Option<PathBuf>,
        /// Add depth-1 neighbours when there is a single initial state.
        #[arg(long)]
        neighbours: bool,
    },
    /// Classical/quantum ratio surface as CSV.
    Perf {
        #[arg(long, default_value_t = 1 << 13)]
        si_max: u64,
        #[arg(long, default_value_t = 1)]
        depth: u64,
    },
}

/// First line of the `grover` report, one per iteration including 0.
#[derive(Debug, Serialize)]
struct IterationLine {
    iteration: usize,
    success_probability: f64,
}

#[derive(Debug, Serialize)]
struct SampleLine {
    state: String,
    x: usize,
    z: u64,
    f: bool,
}

#[derive(Debug, Serialize)]
struct SummaryLine {
    mode: String,
    states: usize,
    solutions: usize,
    depth: usize,
    n: u32,
    p: u32,
    m: u32,
    iterations: usize,
    oracle_calls: usize,
    success_probability: f64,
    seed: u64,
    samples: Vec<SampleLine>,
}

#[derive(Debug)]
struct UsageError(String);

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(UsageError(msg)) = e.downcast_ref::<UsageError>() {
                eprintln!("usage error: {msg}");
                return ExitCode::from(2);
            }
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn load(common: &Common) -> anyhow::Result<SystemFile> {
    let path = common.input.as_ref().ok_or_else(|| usage("--input is required"))?;
    read_system_file(path).with_context(|| format!("reading {}", path.display()))
}

fn initial_state(system: &ProductionSystemDef, initial: Option<String>) -> String {
    initial.unwrap_or_else(|| system.initial_states()[0].clone())
}

fn emit(common: &Common, text: &str) -> anyhow::Result<()> {
    match &common.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn yes_no(ok: bool) -> &'static str {
    if ok {
        "yes"
    } else {
        "no"
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let common = &cli.common;
    match cli.command {
        Command::Validate => {
            let file = load(common)?;
            let system = &file.system;
            let det = check_deterministic(system.rules());
            let rev = check_reversible(system.rules());
            let enc = operator::compute_encoding(system);
            let mut out = format!(
                "deterministic: {}, reversible: {}, α={} β={} δ={}\n",
                yes_no(det.ok),
                yes_no(rev.ok),
                enc.alpha,
                enc.beta,
                enc.delta
            );
            for (a, b) in &det.offending {
                out.push_str(&format!("overlapping preconditions: {a} {b}\n"));
            }
            for (a, b) in &rev.offending {
                out.push_str(&format!("overlapping actions: {a} {b}\n"));
            }
            if let Some(control) = file.control()? {
                let report = qps_core::probabilistic::validate_normalization(&control);
                out.push_str(&format!("control normalized: {}\n", yes_no(report.ok)));
            }
            emit(common, &out)
        }
        Command::Run { initial, stochastic } => {
            let file = load(common)?;
            let start = initial_state(&file.system, initial);
            let trace = if stochastic {
                let control = file
                    .control()?
                    .ok_or_else(|| usage("--stochastic needs `prob` lines in the system file"))?;
                sample_run(&file.system, &control, &start, common.seed, common.step_limit)?
            } else {
                run_forward(&file.system, &start, common.step_limit)?
            };
            emit(common, &trace.to_csv())
        }
        Command::Reverse { initial, pretty } => {
            let file = load(common)?;
            let start = initial_state(&file.system, initial);
            let log = run_reversible(&file.system, &start, common.step_limit)?;
            if pretty {
                let mut out = String::new();
                let width = log.rows.iter().map(|r| r.memory.len()).max().unwrap_or(0).max(6);
                for row in &log.rows {
                    out.push_str(&format!(
                        "{:>3}  {:<14} {:<width$}  {:<7} {}  {}\n",
                        row.iteration,
                        row.phase.as_str(),
                        row.memory,
                        row.rule.as_deref().unwrap_or("-"),
                        row.history,
                        row.output,
                    ));
                }
                emit(common, &out)
            } else {
                emit(common, &log_to_csv(&log.rows))
            }
        }
        Command::Tree { initial, depth } => {
            let file = load(common)?;
            let start = initial_state(&file.system, initial);
            let control = match file.control()? {
                Some(c) => c,
                None => StochasticControl::uniform(&file.system, std::slice::from_ref(&start), depth)?,
            };
            let tree = expand_tree(&file.system, &control, &start, depth)?;
            emit(common, &tree.to_csv())
        }
        Command::BuildOp { dense } => {
            let file = load(common)?;
            let transition = SymbolTransition::from_system(&file.system)?;
            let op = operator::build_operator(&file.system, &transition)?;
            let report = operator::verify_bijection(&op);
            if !report.ok {
                bail!("operator is not a bijection: {report:?}");
            }
            if dense {
                emit(common, &operator::export_dense(&op)?)
            } else {
                emit(common, &operator::export_map(&op))
            }
        }
        Command::Grover {
            depth,
            mode,
            iterations,
            auto,
            shots,
            amplitudes,
            neighbours,
        } => {
            let file = load(common)?;
            let mode: SearchMode = mode.parse().map_err(|_| usage(format!("unknown mode {mode:?}")))?;
            let mut states = file.system.initial_states().to_vec();
            if neighbours && states.len() == 1 {
                states = grover::with_neighbours(&file.system, &states)?;
            }
            let spec = OracleSpec::with_states(&file.system, depth, states)?;
            let k = if auto || iterations == "auto" {
                match spec.solutions() {
                    0 => 0,
                    m => grover::optimal_iterations(spec.states().len(), m),
                }
            } else {
                iterations
                    .parse()
                    .map_err(|_| usage(format!("--iterations must be a count or `auto`, got {iterations:?}")))?
            };
            let run = grover::grover_search(&spec, mode, k, common.seed, shots)?;
            if let Some(path) = &amplitudes {
                let csv = grover::amplitudes_to_csv(&run.final_state)?;
                fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
            }
            let layout = spec.layout()?;
            let mut out = String::new();
            for (iteration, &p) in run.success_per_iteration.iter().enumerate() {
                out.push_str(&serde_json::to_string(&IterationLine {
                    iteration,
                    success_probability: p,
                })?);
                out.push('\n');
            }
            let summary = SummaryLine {
                mode: mode.as_str().to_string(),
                states: spec.states().len(),
                solutions: spec.solutions(),
                depth,
                n: layout.x_bits,
                p: layout.z_bits,
                m: layout.total_bits(),
                iterations: k,
                oracle_calls: run.oracle_calls,
                success_probability: run.success_probability,
                seed: common.seed,
                samples: run
                    .samples
                    .iter()
                    .map(|s| SampleLine {
                        state: s.state.clone(),
                        x: s.x,
                        z: s.z,
                        f: s.f,
                    })
                    .collect(),
            };
            out.push_str(&serde_json::to_string(&summary)?);
            out.push('\n');
            emit(common, &out)
        }
        Command::Perf { si_max, depth } => {
            if !(1..=1 << 13).contains(&si_max) {
                return Err(usage("--si-max must lie in [1, 8192]"));
            }
            if depth == 0 {
                return Err(usage("--depth must be at least 1"));
            }
            let rows = perf::ratio_surface(1..=si_max, depth);
            emit(common, &perf::surface_to_csv(&rows))
        }
    }
}
