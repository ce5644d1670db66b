//! `tabular-pg`: run, compare and sweep policy-gradient optimizers on
//! tabular MDPs and write their traces.
//!
//! Exit status is 0 on success, 1 when a run fails or a file cannot be read
//! or is invalid, and 2 on usage errors. Usage errors are detected before
//! any output file is touched.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use tabular_pg::harness::{
    builtin_environment, compare, encode_trace, format_number, gap_series, lambda_sweep,
    read_mdp_definition, run, workers_from_env, write_atomically, write_mdp_file, BuiltinEnv,
    ExperimentConfig, GradientMode, InitSpec, RunTrace, TraceFormat, WORKERS_ENV,
};
use tabular_pg::mdp::{validate, TabularMdp};
use tabular_pg::optimizers::OptimizerKind;
use tabular_pg::Error;

#[derive(Parser)]
#[command(
    name = "tabular-pg",
    version,
    about = "Exact policy-gradient experiments on tabular MDPs",
    long_about = None
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimizer and write its trace.
    #[command(allow_negative_numbers = true)]
    Run(RunArgs),
    /// Run several optimizers on one environment; one trace each plus summary.csv.
    #[command(allow_negative_numbers = true)]
    Compare(CompareArgs),
    /// Run SPG-NM once per lambda; one trace each plus summary.csv.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Write the per-iteration sub-optimality gap of several optimizers to one CSV.
    #[command(allow_negative_numbers = true)]
    Gap(GapArgs),
    /// Check an MDP file or built-in environment and print the report.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Uniform,
    Hard,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GradientArg {
    Exact,
    Sampled,
}

/// Flags shared by every experiment subcommand. Each one overrides the
/// matching field of `--config` when both are given.
#[derive(Args, Clone)]
struct ExperimentArgs {
    /// Built-in environment (bandit-uniform, bandit-hard, mdp-uniform, mdp-hard) or MDP file path.
    #[arg(long)]
    env: Option<String>,
    /// Experiment config file (TOML, or JSON when the extension is .json).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Step size.
    #[arg(long)]
    eta: Option<f64>,
    /// Heavy-ball momentum.
    #[arg(long)]
    beta: Option<f64>,
    /// Adam first-moment decay.
    #[arg(long)]
    beta1: Option<f64>,
    /// Adam second-moment decay.
    #[arg(long)]
    beta2: Option<f64>,
    /// Adam denominator offset.
    #[arg(long)]
    epsilon: Option<f64>,
    /// SPG-NM extrapolation weight.
    #[arg(long)]
    lambda: Option<f64>,
    /// Discount override.
    #[arg(long)]
    gamma: Option<f64>,
    /// Number of iterations T.
    #[arg(long)]
    iters: Option<usize>,
    /// Initial logits; built-in names imply one.
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Record every n-th iteration (the last one is always recorded).
    #[arg(long)]
    record_every: Option<usize>,
    /// Gradient oracle.
    #[arg(long, value_enum)]
    gradient: Option<GradientArg>,
    /// Trajectories per sampled gradient.
    #[arg(long)]
    batch: Option<usize>,
    /// Trajectory length for sampled gradients.
    #[arg(long)]
    horizon: Option<usize>,
    /// Subtract V(s) as a baseline in sampled gradients.
    #[arg(long)]
    baseline: bool,
    /// Seed for sampled gradients.
    #[arg(long)]
    seed: Option<u64>,
    /// Record wall-clock milliseconds (traces are then not reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Optimizer id: pg, pg-hb, apg, pg-adam, spg-nm.
    #[arg(long, value_parser = parse_optimizer)]
    opt: Option<OptimizerKind>,
    /// Trace destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace format; defaults to json for .json destinations, csv otherwise.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Comma-separated optimizer ids.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_optimizer)]
    opts: Vec<OptimizerKind>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Report the first iteration whose objective reaches threshold * V*.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Comma-separated lambda values.
    #[arg(long, value_delimiter = ',', required = true)]
    lambdas: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct GapArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_optimizer)]
    opts: Vec<OptimizerKind>,
    /// CSV destination.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// MDP file path or built-in environment name.
    #[arg(long)]
    env: String,
    /// Also write the definition to this file when it is valid.
    #[arg(long)]
    export: Option<PathBuf>,
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, String> {
    s.parse::<OptimizerKind>().map_err(|e| e.to_string())
}

struct Failure {
    status: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            status: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure {
            status: 1,
            message: message.into(),
        }
    }
}

// Anything the user could fix by changing flags or the config is a usage
// error; file and numerical problems are runtime failures.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io(_)
            | Error::Json(_)
            | Error::InvalidMdp(_)
            | Error::NumericalFailure { .. }
            | Error::NotConverged(_) => 1,
            _ => 2,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

type CliResult = Result<(), Failure>;

impl ExperimentArgs {
    fn config(&self, optimizer: Option<OptimizerKind>) -> Result<ExperimentConfig, Failure> {
        if let Some(g) = self.gamma.filter(|g| !(0.0..1.0).contains(g)) {
            return Err(Failure::usage(format!("--gamma {g} must satisfy 0 <= gamma < 1")));
        }
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)
                .map_err(|e| Failure::usage(format!("cannot load config {}: {e}", path.display())))?,
            None => {
                let env = self
                    .env
                    .clone()
                    .ok_or_else(|| Failure::usage("--env is required unless --config is given"))?;
                let optimizer = optimizer
                    .ok_or_else(|| Failure::usage("--opt is required unless --config is given"))?;
                ExperimentConfig::new(env, optimizer)
            }
        };
        if let Some(env) = &self.env {
            config.environment = env.clone();
        }
        if let Some(opt) = optimizer {
            config.optimizer = opt;
        }
        let h = &mut config.hyper;
        h.eta = self.eta.or(h.eta);
        h.beta = self.beta.or(h.beta);
        h.beta1 = self.beta1.or(h.beta1);
        h.beta2 = self.beta2.or(h.beta2);
        h.epsilon = self.epsilon.or(h.epsilon);
        h.lambda = self.lambda.or(h.lambda);
        config.discount = self.gamma.or(config.discount);
        config.iterations = self.iters.or(config.iterations);
        config.record_every = self.record_every.unwrap_or(config.record_every);
        config.seed = self.seed.unwrap_or(config.seed);
        config.timing |= self.timing;
        match self.init {
            Some(InitArg::Uniform) => config.init = Some(InitSpec::Uniform),
            Some(InitArg::Hard) => config.init = Some(InitSpec::Hard),
            None => {}
        }
        let sampling_flags = self.batch.is_some() || self.horizon.is_some() || self.baseline;
        match self.gradient {
            Some(GradientArg::Sampled) => {
                let (Some(batch), Some(horizon)) = (self.batch, self.horizon) else {
                    return Err(Failure::usage("--gradient sampled needs --batch and --horizon"));
                };
                config.gradient = GradientMode::Sampled {
                    batch,
                    horizon,
                    baseline: self.baseline,
                };
            }
            Some(GradientArg::Exact) if sampling_flags => {
                return Err(Failure::usage("--batch, --horizon and --baseline need --gradient sampled"));
            }
            Some(GradientArg::Exact) => config.gradient = GradientMode::Exact,
            None if sampling_flags => {
                return Err(Failure::usage("--batch, --horizon and --baseline need --gradient sampled"));
            }
            None => {}
        }
        config.resolved()?;
        Ok(config)
    }
}

fn trace_format(explicit: Option<FormatArg>, dest: Option<&Path>) -> TraceFormat {
    match explicit {
        Some(FormatArg::Csv) => TraceFormat::Csv,
        Some(FormatArg::Json) => TraceFormat::Json,
        None if dest.is_some_and(|p| p.extension().is_some_and(|e| e == "json")) => TraceFormat::Json,
        None => TraceFormat::Csv,
    }
}

fn check_threshold(threshold: Option<f64>) -> CliResult {
    match threshold {
        Some(x) if !x.is_finite() => Err(Failure::usage(format!("--threshold {x} is not finite"))),
        _ => Ok(()),
    }
}

fn summary_line(label: &str, trace: &RunTrace) -> String {
    let mut line = format!("{label} on {}:", trace.config.environment);
    match trace.final_record() {
        Some(r) => {
            write!(line, " t={} objective={:.10}", r.t, r.reported_objective()).unwrap();
            if let Some(gap) = r.gap {
                write!(line, " gap={gap:.3e}").unwrap();
            }
        }
        None => line.push_str(" no records"),
    }
    if let Some(reason) = &trace.failed {
        write!(line, " FAILED ({reason})").unwrap();
    }
    line
}

fn failed_runs(traces: &[(String, RunTrace)]) -> CliResult {
    let failed: Vec<&str> = traces
        .iter()
        .filter(|(_, t)| t.is_failed())
        .map(|(label, _)| label.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::runtime(format!("failed runs: {}", failed.join(", "))))
    }
}

fn cmd_run(args: RunArgs) -> CliResult {
    let config = args.experiment.config(args.opt)?;
    let trace = run(&config)?;
    let format = trace_format(args.format, args.out.as_deref());
    let text = encode_trace(&trace, format)?;
    let summary = summary_line(config.optimizer.id(), &trace);
    match &args.out {
        Some(path) => {
            write_atomically(path, text.as_bytes())?;
            println!("{summary}");
        }
        None => {
            print!("{text}");
            eprintln!("{summary}");
        }
    }
    match trace.failed {
        Some(reason) => Err(Failure::runtime(format!("run failed: {reason}"))),
        None => Ok(()),
    }
}

/// `summary.csv` for a set of labelled traces.
fn summary_csv(key: &str, traces: &[(String, RunTrace)], threshold: Option<f64>) -> String {
    let mut out = format!("{key},final_t,final_objective,final_gap,iterations_to_threshold,failed\n");
    for (label, trace) in traces {
        let last = trace.final_record();
        let reach = match (threshold, trace.optimal_objective) {
            (Some(x), Some(v)) => trace.first_reaching(x * v).map(|t| t.to_string()),
            _ => None,
        };
        writeln!(
            out,
            "{label},{},{},{},{},{}",
            last.map(|r| r.t.to_string()).unwrap_or_default(),
            last.map(|r| format_number(r.reported_objective())).unwrap_or_default(),
            last.and_then(|r| r.gap).map(format_number).unwrap_or_default(),
            reach.unwrap_or_default(),
            trace.is_failed(),
        )
        .unwrap();
    }
    out
}

fn write_traces(
    dir: &Path,
    traces: &[(String, RunTrace)],
    format: TraceFormat,
    key: &str,
    threshold: Option<f64>,
) -> CliResult {
    std::fs::create_dir_all(dir).map_err(Error::from)?;
    for (label, trace) in traces {
        let path = dir.join(format!("{label}.{}", format.extension()));
        write_atomically(&path, encode_trace(trace, format)?.as_bytes())?;
        println!("{}", summary_line(label, trace));
    }
    write_atomically(&dir.join("summary.csv"), summary_csv(key, traces, threshold).as_bytes())?;
    Ok(())
}

fn distinct_optimizers(opts: &[OptimizerKind]) -> CliResult {
    let mut seen = HashSet::new();
    match opts.iter().find(|o| !seen.insert(**o)) {
        Some(dup) => Err(Failure::usage(format!("optimizer `{dup}` listed twice"))),
        None => Ok(()),
    }
}

fn per_optimizer_configs(
    experiment: &ExperimentArgs,
    opts: &[OptimizerKind],
) -> Result<Vec<ExperimentConfig>, Failure> {
    distinct_optimizers(opts)?;
    opts.iter()
        .map(|&opt| {
            let mut c = experiment.config(Some(opt))?;
            c.compute_gap = true;
            Ok(c)
        })
        .collect()
}

fn cmd_compare(args: CompareArgs) -> CliResult {
    check_threshold(args.threshold)?;
    let configs = per_optimizer_configs(&args.experiment, &args.opts)?;
    let traces = compare(&configs, workers_from_env())?;
    let labelled: Vec<_> = args
        .opts
        .iter()
        .map(|o| o.id().to_string())
        .zip(traces)
        .collect();
    let format = trace_format(args.format, None);
    write_traces(&args.out, &labelled, format, "optimizer", args.threshold)?;
    failed_runs(&labelled)
}

fn lambda_label(lambda: f64) -> String {
    format!("lambda_{lambda:e}")
}

fn cmd_sweep(args: SweepArgs) -> CliResult {
    check_threshold(args.threshold)?;
    if args.experiment.lambda.is_some() {
        return Err(Failure::usage("use --lambdas, not --lambda, with sweep"));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = args.lambdas.iter().find(|l| !seen.insert(l.to_bits())) {
        return Err(Failure::usage(format!("lambda {dup} listed twice")));
    }
    let mut base = args.experiment.config(Some(OptimizerKind::SpgNm))?;
    base.compute_gap = true;
    for &lambda in &args.lambdas {
        let mut probe = base.clone();
        probe.hyper.lambda = Some(lambda);
        probe.hyper.resolve(OptimizerKind::SpgNm)?;
    }
    let traces = lambda_sweep(&base, &args.lambdas, workers_from_env())?;
    let labelled: Vec<_> = args.lambdas.iter().map(|&l| lambda_label(l)).zip(traces).collect();
    let format = trace_format(args.format, None);
    write_traces(&args.out, &labelled, format, "lambda", args.threshold)?;
    failed_runs(&labelled)
}

fn cmd_gap(args: GapArgs) -> CliResult {
    let configs = per_optimizer_configs(&args.experiment, &args.opts)?;
    let mdp: TabularMdp = configs[0].load_environment()?.mdp;
    let traces = compare(&configs, workers_from_env())?;
    let mut series = Vec::with_capacity(traces.len());
    for trace in &traces {
        series.push(gap_series(trace, &mdp)?);
    }
    let iterations = series
        .iter()
        .map(|s| &s.iterations)
        .max_by_key(|i| i.len())
        .cloned()
        .unwrap_or_default();
    let mut out = String::from("t");
    for opt in &args.opts {
        write!(out, ",gap_{}", opt.id()).unwrap();
    }
    out.push('\n');
    for (row, t) in iterations.iter().enumerate() {
        write!(out, "{t}").unwrap();
        for s in &series {
            let cell = s.gaps.get(row).map(|&g| format_number(g)).unwrap_or_default();
            write!(out, ",{cell}").unwrap();
        }
        out.push('\n');
    }
    write_atomically(&args.out, out.as_bytes())?;
    for (opt, s) in args.opts.iter().zip(&series) {
        match s.last() {
            Some(g) => println!("{opt}: final gap {g:.6e}"),
            None => println!("{opt}: no records"),
        }
    }
    let labelled: Vec<_> = args.opts.iter().map(|o| o.id().to_string()).zip(traces).collect();
    failed_runs(&labelled)
}

fn cmd_validate(args: ValidateArgs) -> CliResult {
    let def = match args.env.parse::<BuiltinEnv>() {
        Ok(env) => builtin_environment(env.name())?.mdp.to_definition(),
        Err(_) => read_mdp_definition(Path::new(&args.env))
            .map_err(|e| Failure::runtime(format!("cannot read {}: {e}", args.env)))?,
    };
    let report = validate(&def);
    if !report.is_valid() {
        println!("{}: invalid", args.env);
        println!("{report}");
        return Err(Failure::runtime(format!(
            "{} violation(s) in {}",
            report.violations.len(),
            args.env
        )));
    }
    println!(
        "{}: valid ({} states, {} actions, gamma {})",
        args.env, def.n_states, def.n_actions, def.gamma
    );
    if let Some(path) = &args.export {
        let mdp = TabularMdp::try_from(def)?;
        write_mdp_file(&mdp, path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Every long flag of every subcommand, wrapped for the top-level help.
fn flag_index(cmd: &clap::Command) -> String {
    let mut out = String::from("Flags by subcommand:\n");
    for sub in cmd.get_subcommands() {
        let mut line = format!("  {:<9}", sub.get_name());
        let indent = line.len();
        let mut width = indent;
        for flag in sub.get_arguments().filter_map(|a| a.get_long()) {
            if width + flag.len() + 3 > 88 {
                write!(line, "\n{:indent$}", "").unwrap();
                width = indent;
            }
            write!(line, " --{flag}").unwrap();
            width += flag.len() + 3;
        }
        writeln!(out, "{line}").unwrap();
    }
    write!(
        out,
        "\nExit status: 0 success, 1 failed run or bad MDP file, 2 usage error.\n\
         {WORKERS_ENV} sets the worker count for compare, sweep and gap (default 1)."
    )
    .unwrap();
    out
}

fn main() -> ExitCode {
    let cmd = Cli::command();
    let index = flag_index(&cmd);
    let matches = cmd.after_help(index).get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Gap(a) => cmd_gap(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let prefix = if f.status == 2 { "usage error" } else { "error" };
            eprintln!("{prefix}: {}", f.message);
            ExitCode::from(f.status)
        }
    }
}
