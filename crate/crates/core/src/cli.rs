//! Command-line front end.
//!
//! File arguments are used as given; when one is omitted it defaults to the
//! pipeline artifact of the same role inside `--out-dir`. Settings not
//! exposed as flags come from `--config` (or the built-in defaults). Logs go
//! to standard error. Exit status: 0 success, 1 invalid input or config, 2
//! runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::curate::{FilterRules, OrmRecord, PrmRecord};
use crate::error::{Error, Result};
use crate::evalkit::{self, Scorers, Selector, SelectorKind};
use crate::label::{self, CostLedger, LabelOptions, LabeledStepRecord};
use crate::pipeline::{self as pl, JudgeLabels, PipelineConfig, ScorerBundle};
use crate::rng::{derive_path, tags};
use crate::score::{AggregationStrategy, TrainConfig, TrainPhase};
use crate::simulate;
use crate::types::{CompleterConfig, Problem, Solution};
use crate::verify;

#[derive(Debug, Parser)]
#[command(name = "prmkit", version, about = "Process-reward data toolkit")]
pub struct Cli {
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (overrides the config).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Directory for default input and output files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Pipeline config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate training and held-out problems.
    Gen(GenArgs),
    /// Sample policy solutions for a problem file.
    Sample(SampleArgs),
    /// Monte Carlo step labeling.
    #[command(subcommand)]
    Label(LabelCmd),
    /// Filter, dedup and export training records.
    #[command(subcommand)]
    Curate(CurateCmd),
    /// Train the step and outcome scorers.
    Train(TrainArgs),
    /// Best-of-N and step-judgment evaluation.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Reward-ranked fine-tuning data selection.
    #[command(subcommand)]
    Raft(RaftCmd),
    /// Run every stage and write a manifest.
    Pipeline,
    /// Summarize a manifest.
    Report {
        /// Manifest path (default: <out-dir>/manifest.json).
        manifest: Option<PathBuf>,
    },
    /// Answer utilities.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub count: Option<usize>,
    /// Number of held-out problems (0 skips the file).
    #[arg(long)]
    pub heldout: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub problems: Option<PathBuf>,
    #[arg(long)]
    pub n_per_problem: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum LabelCmd {
    Run(LabelArgs),
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub problems: Option<PathBuf>,
    #[arg(long = "in")]
    pub solutions: Option<PathBuf>,
    /// Weak completer config (JSON CompleterConfig).
    #[arg(long)]
    pub weak: Option<PathBuf>,
    /// Strong completer config (JSON CompleterConfig).
    #[arg(long)]
    pub strong: Option<PathBuf>,
    /// Rollouts per step.
    #[arg(long)]
    pub t: Option<u32>,
    #[arg(long)]
    pub retention_min: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub ledger: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CurateCmd {
    Run(CurateArgs),
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    /// Filter rules (JSON FilterRules).
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub problems: Option<PathBuf>,
    #[arg(long = "in")]
    pub solutions: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<PathBuf>,
    #[arg(long)]
    pub out_prm: Option<PathBuf>,
    #[arg(long)]
    pub out_orm: Option<PathBuf>,
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    Single,
    #[value(alias = "two-phase")]
    Two,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// PRM export.
    #[arg(long = "in")]
    pub prm: Option<PathBuf>,
    /// ORM export (outcome phase).
    #[arg(long)]
    pub orm: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub phase: Option<PhaseArg>,
    #[arg(long)]
    pub upsample: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCmd {
    Bon(BonArgs),
    Judge(JudgeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectorArg {
    ZeroShot,
    #[value(alias = "sc")]
    SelfConsistency,
    #[value(alias = "orm-rank")]
    Orm,
    #[value(alias = "prm-rank")]
    Prm,
    PassAtN,
    /// Every selector, on the same samples.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggArg {
    Min,
    Last,
    Product,
}

impl From<AggArg> for AggregationStrategy {
    fn from(a: AggArg) -> Self {
        match a {
            AggArg::Min => AggregationStrategy::Minimum,
            AggArg::Last => AggregationStrategy::Last,
            AggArg::Product => AggregationStrategy::Product,
        }
    }
}

#[derive(Debug, Args)]
pub struct BonArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub selector: SelectorArg,
    #[arg(long, value_enum, default_value = "min")]
    pub agg: AggArg,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Problems to evaluate on (default: held-out problems).
    #[arg(long)]
    pub problems: Option<PathBuf>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Use ground-truth step rewards instead of the trained scorer.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct JudgeArgs {
    /// Without --pred/--truth and with no judge files in the output
    /// directory, a judge set is sampled from the held-out problems and
    /// labeled with the trained scorer first.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Held-out problems for a sampled judge set.
    #[arg(long)]
    pub problems: Option<PathBuf>,
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum RaftCmd {
    Select(RaftArgs),
}

#[derive(Debug, Args)]
pub struct RaftArgs {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub problems: Option<PathBuf>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// Compare two answers under the equivalence rules.
    Check { a: String, b: String },
}

struct Ctx {
    cfg: PipelineConfig,
    out_dir: PathBuf,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Self> {
        let mut cfg = match &cli.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = cli.seed {
            cfg.run.master_seed = s;
        }
        if let Some(w) = cli.workers {
            cfg.run.worker_count = w;
        }
        cfg.check()?;
        let out_dir = cli
            .out_dir
            .clone()
            .or_else(|| cfg.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("prmkit-out"));
        Ok(Self { cfg, out_dir })
    }

    fn file(&self, given: &Option<PathBuf>, default: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.out_dir.join(default))
    }

    fn seed(&self) -> u64 {
        self.cfg.run.master_seed
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    pl::write_file(path, &pl::json_bytes(value)?)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_jsonl<T: serde::Serialize>(path: &Path, records: &[T]) -> Result<()> {
    pl::write_file(path, &pl::jsonl_bytes(records)?)?;
    log::info!("wrote {} ({} records)", path.display(), records.len());
    Ok(())
}

fn positive(name: &str, v: usize) -> Result<usize> {
    if v == 0 {
        return Err(Error::InvalidConfig(vec![format!("--{name}: must be >= 1")]));
    }
    Ok(v)
}

fn cmd_gen(ctx: &Ctx, a: &GenArgs) -> Result<()> {
    let count = positive("count", a.count.unwrap_or(ctx.cfg.data.train_problems))?;
    let sim = &ctx.cfg.simulator;
    let problems = simulate::generate_problems(derive_path(ctx.seed(), &[tags::TRAIN_PROBLEMS]), count, sim);
    write_jsonl(&ctx.file(&a.out, pl::PROBLEMS), &problems)?;
    let heldout = a.heldout.unwrap_or(ctx.cfg.data.heldout_problems);
    if heldout > 0 {
        let h = simulate::generate_problems(derive_path(ctx.seed(), &[tags::HELDOUT_PROBLEMS]), heldout, sim);
        write_jsonl(&ctx.out_dir.join(pl::HELDOUT), &h)?;
    }
    Ok(())
}

fn cmd_sample(ctx: &Ctx, a: &SampleArgs) -> Result<()> {
    let problems: Vec<Problem> = pl::read_jsonl(&ctx.file(&a.problems, pl::PROBLEMS))?;
    let n = positive("n-per-problem", a.n_per_problem.unwrap_or(ctx.cfg.data.samples_per_problem))?;
    let solutions = pl::sample_solutions(&problems, &ctx.cfg.simulator, n, derive_path(ctx.seed(), &[tags::SAMPLE]));
    write_jsonl(&ctx.file(&a.out, pl::SOLUTIONS), &solutions)
}

fn load_completer(path: &Option<PathBuf>, fallback: &CompleterConfig, field: &str) -> Result<CompleterConfig> {
    let c = match path {
        Some(p) => pl::read_json(p)?,
        None => fallback.clone(),
    };
    let mut v = Vec::new();
    c.validate(field, &mut v);
    if v.is_empty() {
        Ok(c)
    } else {
        Err(Error::InvalidConfig(v))
    }
}

fn cmd_label(ctx: &Ctx, a: &LabelArgs) -> Result<()> {
    let problems: Vec<Problem> = pl::read_jsonl(&ctx.file(&a.problems, pl::PROBLEMS))?;
    let solutions: Vec<Solution> = pl::read_jsonl(&ctx.file(&a.solutions, pl::SOLUTIONS))?;
    let weak = load_completer(&a.weak, &ctx.cfg.weak, "weak")?;
    let strong = load_completer(&a.strong, &ctx.cfg.strong, "strong")?;
    let t = a.t.unwrap_or(ctx.cfg.run.num_rollouts_t);
    positive("t", t as usize)?;
    let opts = LabelOptions {
        rollouts: t,
        truncate_after_first_zero: ctx.cfg.labeling.truncate_after_first_zero,
    };
    let data = label::build_filtered_dataset(
        &problems,
        &solutions,
        &weak,
        &strong,
        opts,
        a.retention_min.unwrap_or(ctx.cfg.labeling.retention_min),
        label::label_stream(ctx.seed()),
        ctx.cfg.run.worker_count,
    )?;
    if let Ok(r) = label::accuracy_report(&data, &solutions, &weak.name, &strong.name) {
        log::info!("label accuracy: weak {:.4} strong {:.4} filtered {:.4}", r.weak, r.strong, r.filtered);
    }
    write_jsonl(&ctx.file(&a.out, pl::STEPS), &data.records)?;
    write_json(&ctx.file(&a.ledger, pl::LEDGER), &data.ledger)
}

fn cmd_curate(ctx: &Ctx, a: &CurateArgs) -> Result<()> {
    let rules: FilterRules = match &a.rules {
        Some(p) => pl::read_json(p)?,
        None => ctx.cfg.rules.clone(),
    };
    let mut v = Vec::new();
    rules.validate("rules", &mut v);
    if !v.is_empty() {
        return Err(Error::InvalidConfig(v));
    }
    let problems: Vec<Problem> = pl::read_jsonl(&ctx.file(&a.problems, pl::PROBLEMS))?;
    let solutions: Vec<Solution> = pl::read_jsonl(&ctx.file(&a.solutions, pl::SOLUTIONS))?;
    let records: Vec<LabeledStepRecord> = pl::read_jsonl(&ctx.file(&a.steps, pl::STEPS))?;
    let c = pl::curate(&problems, &solutions, &records, &rules, ctx.cfg.upsample_rate)?;
    write_jsonl(&ctx.file(&a.out_prm, pl::PRM), &c.prm)?;
    write_jsonl(&ctx.file(&a.out_orm, pl::ORM), &c.orm)?;
    write_json(&ctx.file(&a.stats, pl::CURATE_STATS), &c.stats)
}

fn cmd_train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let prm = crate::curate::import_prm_training(&pl::read_text(&ctx.file(&a.prm, pl::PRM))?)?;
    let orm: Vec<OrmRecord> = pl::read_jsonl(&ctx.file(&a.orm, pl::ORM))?;
    let mut config = TrainConfig {
        seed: derive_path(ctx.seed(), &[tags::TRAIN]),
        ..ctx.cfg.train.clone()
    };
    if let Some(p) = a.phase {
        config.phase = match p {
            PhaseArg::Single => TrainPhase::Single,
            PhaseArg::Two => TrainPhase::TwoPhase,
        };
    }
    let rate = positive("upsample", a.upsample.unwrap_or(ctx.cfg.upsample_rate))?;
    let dim = prm
        .first()
        .and_then(|r: &PrmRecord| r.features.first())
        .map_or(ctx.cfg.simulator.feature_dim, Vec::len);
    let bundle = pl::train_bundle(&prm, &orm, &config, rate, dim)?;
    log::info!(
        "step loss {:.4} -> {:.4}",
        bundle.prm_loss_trace.first().copied().unwrap_or(f64::NAN),
        bundle.prm_loss_trace.last().copied().unwrap_or(f64::NAN)
    );
    write_json(&ctx.file(&a.out, pl::PARAMS), &bundle)
}

fn cmd_bon(ctx: &Ctx, a: &BonArgs) -> Result<()> {
    let problems: Vec<Problem> = pl::read_jsonl(&ctx.file(&a.problems, pl::HELDOUT))?;
    let selectors = match a.selector {
        SelectorArg::ZeroShot => vec![Selector::ZERO_SHOT],
        SelectorArg::SelfConsistency => vec![Selector::SELF_CONSISTENCY],
        SelectorArg::Orm => vec![Selector::ORM_RANK],
        SelectorArg::Prm => vec![Selector::prm(a.agg.into())],
        SelectorArg::PassAtN => vec![Selector::PASS_AT_N],
        SelectorArg::All => {
            let mut all = Selector::all();
            for s in &mut all {
                if s.kind == SelectorKind::PrmRank {
                    *s = Selector::prm(a.agg.into());
                }
            }
            all
        }
    };
    let needs_params = selectors.iter().any(|s| match s.kind {
        SelectorKind::OrmRank => true,
        SelectorKind::PrmRank => !a.oracle,
        _ => false,
    });
    let bundle: Option<ScorerBundle> = if needs_params {
        Some(pl::read_json(&ctx.file(&a.params, pl::PARAMS))?)
    } else {
        None
    };
    let oracle = evalkit::TruthRewards::default();
    let scorers = Scorers {
        prm: if a.oracle {
            Some(&oracle)
        } else {
            bundle.as_ref().map(|b| &b.prm as _)
        },
        orm: bundle.as_ref().map(|b| &b.orm as _),
    };
    let mut run = ctx.cfg.run.clone();
    run.bon_n = positive("n", a.n.unwrap_or(run.bon_n))?;
    run.num_eval_runs = positive("runs", a.runs.unwrap_or(run.num_eval_runs))?;
    let reports = evalkit::evaluate_selectors(&problems, &ctx.cfg.simulator, &selectors, &run, scorers, derive_path(ctx.seed(), &[tags::EVAL]))?;
    for r in &reports {
        log::info!("{:<20} {:.4} +/- {:.4}", r.selector, r.mean, r.stddev);
    }
    let ledger_path = ctx.file(&a.ledger, pl::LEDGER);
    let ledger: Option<CostLedger> = ledger_path.exists().then(|| pl::read_json(&ledger_path)).transpose()?;
    let report = json!({
        "n": run.bon_n,
        "runs": run.num_eval_runs,
        "problems": problems.len(),
        "oracle_rewards": a.oracle,
        "selectors": reports,
        "ledger": ledger,
    });
    write_json(&ctx.file(&a.report, pl::BON), &report)
}

fn cmd_judge(ctx: &Ctx, a: &JudgeArgs) -> Result<()> {
    let (pred_path, truth_path) = (ctx.file(&a.pred, pl::JUDGE_PRED), ctx.file(&a.truth, pl::JUDGE_TRUTH));
    if a.pred.is_none() && a.truth.is_none() && !pred_path.exists() && !truth_path.exists() {
        let heldout: Vec<Problem> = pl::read_jsonl(&ctx.file(&a.problems, pl::HELDOUT))?;
        let bundle: ScorerBundle = pl::read_json(&ctx.file(&a.params, pl::PARAMS))?;
        let d = &ctx.cfg.data;
        let (pred, truth) = pl::judge_set(&heldout, &ctx.cfg.simulator, d.judge_samples_per_problem, d.difficulty_bins, &bundle.prm, derive_path(ctx.seed(), &[tags::JUDGE]))?;
        write_jsonl(&pred_path, &pred)?;
        write_jsonl(&truth_path, &truth)?;
    }
    let pred: Vec<JudgeLabels> = pl::read_jsonl(&pred_path)?;
    let truth: Vec<JudgeLabels> = pl::read_jsonl(&truth_path)?;
    let report = evalkit::judge_report(&pl::judge_examples(&pred, &truth)?)?;
    log::info!("macro F1 {:.4}, micro F1 {:.4}", report.macro_f1, report.micro_f1);
    write_json(&ctx.file(&a.report, pl::JUDGE), &report)
}

fn cmd_raft(ctx: &Ctx, a: &RaftArgs) -> Result<()> {
    let problems: Vec<Problem> = pl::read_jsonl(&ctx.file(&a.problems, pl::PROBLEMS))?;
    let bundle: ScorerBundle = pl::read_json(&ctx.file(&a.params, pl::PARAMS))?;
    let mut run = ctx.cfg.run.clone();
    run.raft_m = positive("m", a.m.unwrap_or(run.raft_m))?;
    let sft = evalkit::raft_dataset(&problems, &ctx.cfg.simulator, &bundle.prm, &ctx.cfg.rules, &ctx.cfg.raft, &run, derive_path(ctx.seed(), &[tags::RAFT]))?;
    log::info!("selected {} of {} queries", sft.len(), problems.len());
    write_jsonl(&ctx.file(&a.out, pl::SFT), &sft)
}

fn cmd_verify(a: &str, b: &str) -> String {
    let ca = verify::canonicalize(a);
    let cb = verify::canonicalize(b);
    let kind = |c: &verify::CanonicalAnswer| {
        serde_json::to_value(c.kind())
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    };
    format!(
        "{} ({}) vs {} ({}): {}",
        ca,
        kind(&ca),
        cb,
        kind(&cb),
        if verify::answers_equal(a, b) { "equal" } else { "not equal" }
    )
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    if let Command::Verify(VerifyCmd::Check { a, b }) = &cli.command {
        println!("{}", cmd_verify(a, b));
        return Ok(());
    }
    let ctx = Ctx::new(cli)?;
    match &cli.command {
        Command::Gen(a) => cmd_gen(&ctx, a),
        Command::Sample(a) => cmd_sample(&ctx, a),
        Command::Label(LabelCmd::Run(a)) => cmd_label(&ctx, a),
        Command::Curate(CurateCmd::Run(a)) => cmd_curate(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Eval(EvalCmd::Bon(a)) => cmd_bon(&ctx, a),
        Command::Eval(EvalCmd::Judge(a)) => cmd_judge(&ctx, a),
        Command::Raft(RaftCmd::Select(a)) => cmd_raft(&ctx, a),
        Command::Pipeline => {
            let m = pl::run_pipeline(&ctx.cfg, &ctx.out_dir)?;
            log::info!(
                "{} stages, {} completions; manifest at {}",
                m.stages.len(),
                m.ledger.completions_total,
                ctx.out_dir.join(pl::MANIFEST).display()
            );
            Ok(())
        }
        Command::Report { manifest } => {
            print!("{}", pl::report(&ctx.file(manifest, pl::MANIFEST))?);
            Ok(())
        }
        Command::Verify(_) => unreachable!("handled above"),
    }
}

pub fn exit_code(result: &Result<()>) -> u8 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_validation() => 1,
        Err(_) => 2,
    }
}

/// Entry point used by the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.quiet {
            log::LevelFilter::Warn
        } else {
            log::LevelFilter::Info
        })
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    let result = execute(&cli);
    if let Err(e) = &result {
        match e {
            Error::InvalidConfig(msgs) => {
                for m in msgs {
                    log::error!("{m}");
                }
            }
            other => log::error!("{other}"),
        }
    }
    ExitCode::from(exit_code(&result))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_spec_style_invocations() {
        for argv in [
            "prmkit gen --count 5 --seed 3",
            "prmkit sample --n-per-problem 8",
            "prmkit label run --t 8 --out steps.jsonl --ledger ledger.json",
            "prmkit curate run --in s.jsonl --steps st.jsonl --out-prm prm.txt --out-orm orm.txt --stats stats.json",
            "prmkit train --in prm.txt --phase two --out params.json",
            "prmkit eval bon --selector prm --agg min --n 8 --runs 5 --seed 4 --report report.json",
            "prmkit eval judge --pred p.jsonl --truth t.jsonl",
            "prmkit raft select --m 8 --out sft.jsonl",
            "prmkit --workers 4 --out-dir o pipeline",
            "prmkit report o/manifest.json",
            "prmkit verify check 1/2 0.5",
        ] {
            let args: Vec<&str> = argv.split_whitespace().collect();
            Cli::try_parse_from(args).unwrap_or_else(|e| panic!("{argv}: {e}"));
        }
    }

    #[test]
    fn verify_check_output() {
        assert!(cmd_verify("1/2", "0.5").ends_with(": equal"));
        assert!(cmd_verify("2", "3").ends_with("not equal"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(())), 0);
        assert_eq!(exit_code(&Err(Error::InvalidConfig(vec![]))), 1);
        assert_eq!(exit_code(&Err(Error::EmptyInput("x"))), 2);
    }
}
