//! The `stepwise` command line: dataset generation, perturbation, solving,
//! scoring and benchmarking over JSONL files.
//!
//! Exit codes: 0 on success, 1 for invalid input or arguments, 2 for I/O
//! failures.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use stepwise_core::datagen::{
    emit_training_records, generate_dataset, instance_rng, parse_depths, perturb, read_jsonl, write_jsonl,
    DatasetError, EquivalenceRecord, GenConfig, Instance, InstanceRecord, PerturbMode, TrainingRecords,
};

use stepwise_core::eval::{
    budget_curve, build_report, consistency_over, render_bench_table, render_report_table, run_bench, score_items,
    Prediction,
};
use stepwise_core::lang::{Parser as SentenceParser, Vocabulary};
use stepwise_core::par::{configure_threads, execution_for_jobs, try_map_ordered, Execution};
use stepwise_core::pipeline::{solve_instances_traced, SolveOptions};
use stepwise_core::reasoner::TraceRecord;
use stepwise_core::strategy::StrategyKind;

pub const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (dataset schema 1, prediction schema 1, report schema 1)"
);

#[derive(Debug, Parser)]
#[command(name = "stepwise", version = VERSION, about = "Stepwise rule-based reasoning over natural-language theories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with gold labels and proofs.
    Gen(GenArgs),
    /// Build equivalence sets by renaming subjects and/or attributes.
    Perturb(PerturbArgs),
    /// Solve every question of a dataset.
    Solve(SolveArgs),
    /// Score predictions against gold.
    Eval(EvalArgs),
    /// Decompose gold proofs into selector and composer records.
    EmitTraining(EmitArgs),
    /// Compare strategies, with and without budgets.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct Jobs {
    /// Worker threads; 0 uses one per core, 1 runs sequentially.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Target depths: `0..5`, `3,5` or `N/A`, comma separated.
    #[arg(long, default_value = "0..5")]
    depths: String,
    #[arg(long, default_value_t = 100)]
    theories: usize,
    #[arg(long, env = "STEPWISE_SEED", default_value_t = 0)]
    seed: u64,
    /// Let one distractor chain share the question's predicates.
    #[arg(long)]
    cone_overlap: bool,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Debug, Args)]
struct PerturbArgs {
    #[arg(long)]
    mode: PerturbMode,
    /// Variants per base instance.
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, env = "STEPWISE_SEED", default_value_t = 0)]
    seed: u64,
    /// Only perturb the first LIMIT instances.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, default_value = "goal")]
    strategy: StrategyKind,
    /// Maximum number of inference steps per question.
    #[arg(long)]
    budget: Option<usize>,
    /// Visit candidates in a seeded random order.
    #[arg(long)]
    shuffle_seed: Option<u64>,
    /// A dataset or an equivalence-set file.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write one inference trace per question.
    #[arg(long)]
    traces: Option<PathBuf>,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Prediction files; may be repeated.
    #[arg(long = "pred", required = true)]
    preds: Vec<PathBuf>,
    #[arg(long)]
    gold: PathBuf,
    /// Equivalence sets whose predictions are among `--pred`.
    #[arg(long)]
    equiv: Option<PathBuf>,
    /// Budgets for an accuracy curve, e.g. `1,3,5`.
    #[arg(long)]
    budgets: Option<String>,
    /// Strategy re-run for the budget curve.
    #[arg(long, default_value = "goal")]
    strategy: StrategyKind,
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Debug, Args)]
struct EmitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "goal,exhaustive")]
    strategies: String,
    #[arg(long, default_value = "1,3,5,7,10")]
    budgets: String,
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Serialize)]
struct TraceLine {
    question_id: String,
    #[serde(flatten)]
    trace: TraceRecord,
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

fn invalid(e: impl fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Perturb(a) => perturb_cmd(a),
        Command::Solve(a) => solve(a),
        Command::Eval(a) => eval(a),
        Command::EmitTraining(a) => emit(a),
        Command::Bench(a) => bench(a),
    }
}

fn execution(jobs: &Jobs) -> Result<Execution, CliError> {
    // Only the first pool in a process can be sized; later requests keep it.
    let _ = configure_threads(jobs.jobs);
    Ok(execution_for_jobs(jobs.jobs))
}

fn load_instances(path: &Path, exec: Execution) -> Result<Vec<Instance>, CliError> {
    let records: Vec<InstanceRecord> = read_jsonl(path)?;
    if records.is_empty() {
        return Err(invalid(format!("{}: no instances", path.display())));
    }
    let parser = SentenceParser::default();
    let instances = try_map_ordered(exec, &records, |_, r| r.to_instance(&parser))?;
    let mut seen = HashSet::new();
    for q in instances.iter().flat_map(|i| &i.questions) {
        if !seen.insert(q.id.as_str()) {
            return Err(invalid(format!("{}: duplicate question id {}", path.display(), q.id)));
        }
    }
    Ok(instances)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(invalid)?;
    fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_list<T: std::str::FromStr<Err = String>>(text: &str) -> Result<Vec<T>, CliError> {
    let items: Vec<T> = text
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse())
        .collect::<Result<_, _>>()
        .map_err(invalid)?;
    if items.is_empty() {
        return Err(invalid(format!("empty list `{text}`")));
    }
    Ok(items)
}

fn parse_budgets(text: &str) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for s in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(
            s.parse::<usize>()
                .map_err(|e| invalid(format!("bad budget `{s}`: {e}")))?,
        );
    }
    if out.is_empty() {
        return Err(invalid(format!("empty budget list `{text}`")));
    }
    Ok(out)
}

fn gen(a: GenArgs) -> Result<(), CliError> {
    let exec = execution(&a.jobs)?;
    let cfg = GenConfig {
        target_depths: parse_depths(&a.depths).map_err(invalid)?,
        theories: a.theories,
        seed: a.seed,
        cone_disjoint: !a.cone_overlap,
        ..GenConfig::default()
    };
    let instances = generate_dataset(&cfg, exec).map_err(invalid)?;
    let records: Vec<InstanceRecord> = instances.iter().map(InstanceRecord::from).collect();
    write_jsonl(&a.out, &records)?;
    let questions: usize = instances.iter().map(|i| i.questions.len()).sum();
    eprintln!(
        "wrote {} theories, {questions} questions to {}",
        records.len(),
        a.out.display()
    );
    Ok(())
}

fn perturb_cmd(a: PerturbArgs) -> Result<(), CliError> {
    let exec = execution(&a.jobs)?;
    let mut bases = load_instances(&a.input, exec)?;
    if let Some(limit) = a.limit {
        bases.truncate(limit);
    }
    let pools = Vocabulary::robustness();
    let sets = try_map_ordered(exec, &bases, |i, base| {
        perturb(base, a.mode, &mut instance_rng(a.seed, i), a.n, &pools).map_err(|e| format!("{}: {e}", base.id()))
    })
    .map_err(invalid)?;
    let records: Vec<EquivalenceRecord> = sets
        .iter()
        .flat_map(|set| {
            set.variants
                .iter()
                .enumerate()
                .map(|(k, (v, map))| EquivalenceRecord::new(v, set.base.id(), k + 1, map))
        })
        .collect();
    write_jsonl(&a.out, &records)?;
    eprintln!(
        "wrote {} variants of {} instances to {}",
        records.len(),
        sets.len(),
        a.out.display()
    );
    Ok(())
}

fn solve(a: SolveArgs) -> Result<(), CliError> {
    let exec = execution(&a.jobs)?;
    let instances = load_instances(&a.input, exec)?;
    let opts = SolveOptions {
        strategy: a.strategy,
        budget: a.budget,
        shuffle_seed: a.shuffle_seed,
    };
    let (preds, traces): (Vec<Prediction>, Vec<TraceRecord>) = solve_instances_traced(&instances, opts, exec)
        .map_err(invalid)?
        .into_iter()
        .unzip();
    write_jsonl(&a.out, &preds)?;
    if let Some(path) = &a.traces {
        let lines: Vec<TraceLine> = preds
            .iter()
            .zip(traces)
            .map(|(p, trace)| TraceLine {
                question_id: p.question_id.clone(),
                trace,
            })
            .collect();
        write_jsonl(path, &lines)?;
    }
    eprintln!("wrote {} predictions to {}", preds.len(), a.out.display());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<(), CliError> {
    let exec = execution(&a.jobs)?;
    let gold = load_instances(&a.gold, exec)?;
    let mut by_id: HashMap<String, Prediction> = HashMap::new();
    for path in &a.preds {
        for p in read_jsonl::<Prediction>(path)? {
            let id = p.question_id.clone();
            if by_id.insert(id.clone(), p).is_some() {
                return Err(invalid(format!("{}: duplicate prediction for {id}", path.display())));
            }
        }
    }
    let gold_preds: Vec<Prediction> = gold
        .iter()
        .flat_map(|i| &i.questions)
        .filter_map(|q| by_id.get(&q.id).cloned())
        .collect();
    let items = score_items(&gold, &gold_preds, exec).map_err(invalid)?;
    let consistency = match &a.equiv {
        Some(path) => {
            let records: Vec<EquivalenceRecord> = read_jsonl(path)?;
            Some(consistency_over(&gold, &records, &by_id).map_err(invalid)?)
        }
        None => None,
    };
    let curve = match &a.budgets {
        Some(b) => budget_curve(&gold, a.strategy, &parse_budgets(b)?, |_| true, exec).map_err(invalid)?,
        None => Default::default(),
    };
    let report = build_report(&items, consistency, curve);
    write_json(&a.report, &report)?;
    print!("{}", render_report_table(&report));
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn emit(a: EmitArgs) -> Result<(), CliError> {
    let instances = load_instances(&a.input, Execution::Sequential)?;
    let mut all = TrainingRecords::default();
    for inst in &instances {
        all.extend(emit_training_records(inst).map_err(invalid)?);
    }
    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", a.out_dir.display())))?;
    write_jsonl(&a.out_dir.join("rs.jsonl"), &all.rs)?;
    write_jsonl(&a.out_dir.join("fs.jsonl"), &all.fs)?;
    write_jsonl(&a.out_dir.join("kc.jsonl"), &all.kc)?;
    eprintln!(
        "wrote {} rule-selector, {} fact-selector, {} composer records to {}",
        all.rs.len(),
        all.fs.len(),
        all.kc.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), CliError> {
    let exec = execution(&a.jobs)?;
    let instances = load_instances(&a.input, exec)?;
    let strategies: Vec<StrategyKind> = parse_list(&a.strategies)?;
    let budgets = parse_budgets(&a.budgets)?;
    let report = run_bench(&instances, &strategies, &budgets, exec).map_err(invalid)?;
    write_json(&a.report, &report)?;
    print!("{}", render_bench_table(&report));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use stepwise_core::datagen::SCHEMA_VERSION;

    #[test]
    fn version_names_the_core_schema() {
        assert!(VERSION.contains(&format!("dataset schema {SCHEMA_VERSION}")));
    }

    #[test]
    fn budget_lists() {
        assert_eq!(parse_budgets("1, 3,5").unwrap(), vec![1, 3, 5]);
        assert!(parse_budgets("1,x").is_err());
        assert!(parse_budgets("").is_err());
        let s: Vec<StrategyKind> = parse_list("goal,exhaustive").unwrap();
        assert_eq!(s, vec![StrategyKind::Goal, StrategyKind::Exhaustive]);
    }

    #[test]
    fn argument_errors_exit_with_one() {
        assert_eq!(run_command(["stepwise", "gen"]), 1);
        assert_eq!(
            run_command(["stepwise", "solve", "--strategy", "magic", "--in", "a", "--out", "b"]),
            1
        );
        assert_eq!(run_command(["stepwise", "--version"]), 0);
    }
}
