//! The staged pipeline: gen, sample, label, curate, train, eval, raft.
//!
//! Stages communicate only through files in the output directory, so any
//! stage can be re-run on its own once its inputs exist. Every stochastic
//! choice is drawn from a stream derived from `run.master_seed`; worker
//! count and output location never affect artifact bytes.
//!
//! | stage  | reads                                   | writes |
//! |--------|-----------------------------------------|--------|
//! | gen    | -                                       | `problems.jsonl`, `heldout.jsonl` |
//! | sample | `problems.jsonl`                        | `solutions.jsonl` |
//! | label  | `problems.jsonl`, `solutions.jsonl`     | `steps.jsonl`, `ledger.json`, `label_report.json` |
//! | curate | `problems.jsonl`, `solutions.jsonl`, `steps.jsonl` | `prm.jsonl`, `orm.jsonl`, `curate_stats.json` |
//! | train  | `prm.jsonl`, `orm.jsonl`                | `params.json` |
//! | eval   | `heldout.jsonl`, `params.json`, `ledger.json` | `bon.json`, `judge_pred.jsonl`, `judge_truth.jsonl`, `judge.json` |
//! | raft   | `problems.jsonl`, `params.json`         | `sft.jsonl`, `raft.json` |
//!
//! A finished run also writes `manifest.json` with the master seed, a
//! digest of the config, per-artifact SHA-256 digests, stage summaries and
//! the labeling cost ledger.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::curate::{self, FilterRules, OrmRecord, PrmRecord};
use crate::error::{Error, Result};
use crate::evalkit::{self, JudgeExample, RaftConfig, Scorers, Selector};
use crate::label::{self, CostLedger, LabelOptions, LabeledStepRecord};
use crate::rng::{derive_path, tags};
use crate::score::{self, AggregationStrategy, ScorerParams, TrainConfig, TrainPhase, TrainingSet};
use crate::simulate::{self, SimulatorConfig};
use crate::types::{CompleterConfig, Problem, RunConfig, Solution};

pub const PROBLEMS: &str = "problems.jsonl";
pub const HELDOUT: &str = "heldout.jsonl";
pub const SOLUTIONS: &str = "solutions.jsonl";
pub const STEPS: &str = "steps.jsonl";
pub const LEDGER: &str = "ledger.json";
pub const LABEL_REPORT: &str = "label_report.json";
pub const PRM: &str = "prm.jsonl";
pub const ORM: &str = "orm.jsonl";
pub const CURATE_STATS: &str = "curate_stats.json";
pub const PARAMS: &str = "params.json";
pub const BON: &str = "bon.json";
pub const JUDGE_PRED: &str = "judge_pred.jsonl";
pub const JUDGE_TRUTH: &str = "judge_truth.jsonl";
pub const JUDGE: &str = "judge.json";
pub const SFT: &str = "sft.jsonl";
pub const RAFT: &str = "raft.json";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Gen,
    Sample,
    Label,
    Curate,
    Train,
    Eval,
    Raft,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Gen,
        Stage::Sample,
        Stage::Label,
        Stage::Curate,
        Stage::Train,
        Stage::Eval,
        Stage::Raft,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Gen => "gen",
            Stage::Sample => "sample",
            Stage::Label => "label",
            Stage::Curate => "curate",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Raft => "raft",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub train_problems: usize,
    pub heldout_problems: usize,
    /// Policy samples per training problem (the labeling pool).
    pub samples_per_problem: usize,
    /// Solutions per held-out problem in the judge set.
    pub judge_samples_per_problem: usize,
    /// Judge subsets are equal-width difficulty bins.
    pub difficulty_bins: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            train_problems: 100,
            heldout_problems: 100,
            samples_per_problem: 4,
            judge_samples_per_problem: 2,
            difficulty_bins: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelingConfig {
    pub retention_min: usize,
    pub truncate_after_first_zero: bool,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        Self {
            retention_min: 1,
            truncate_after_first_zero: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub selectors: Vec<Selector>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            selectors: default_selectors(),
        }
    }
}

fn default_selectors() -> Vec<Selector> {
    vec![
        Selector::ZERO_SHOT,
        Selector::SELF_CONSISTENCY,
        Selector::ORM_RANK,
        Selector::prm(AggregationStrategy::Minimum),
        Selector::prm(AggregationStrategy::Last),
        Selector::prm(AggregationStrategy::Product),
        Selector::PASS_AT_N,
    ]
}

/// Training settings used by the pipeline: two-phase, three epochs at
/// learning rate 0.1. The bare [`TrainConfig`] default (one epoch at 1e-2)
/// barely moves the outcome phase on a few thousand solutions.
pub fn pipeline_train_config() -> TrainConfig {
    TrainConfig {
        learning_rate: 0.1,
        epochs: 3,
        phase: TrainPhase::TwoPhase,
        ..TrainConfig::default()
    }
}

/// The whole pipeline in one JSON document. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub run: RunConfig,
    pub simulator: SimulatorConfig,
    pub data: DataConfig,
    pub weak: CompleterConfig,
    pub strong: CompleterConfig,
    pub labeling: LabelingConfig,
    pub rules: FilterRules,
    pub upsample_rate: usize,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub raft: RaftConfig,
    /// Output directory; the CLI `--out-dir` flag takes precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            run: RunConfig::default(),
            simulator: SimulatorConfig::default(),
            data: DataConfig::default(),
            weak: CompleterConfig::weak(),
            strong: CompleterConfig::strong(),
            labeling: LabelingConfig::default(),
            rules: FilterRules::default(),
            upsample_rate: curate::DEFAULT_UPSAMPLE_RATE,
            train: pipeline_train_config(),
            eval: EvalConfig::default(),
            raft: RaftConfig::default(),
            out_dir: None,
        }
    }
}

impl PipelineConfig {
    /// Parses and validates. Both syntax and invariant failures come back
    /// as [`Error::InvalidConfig`].
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(vec![e.to_string()]))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::InvalidConfig(msgs) => Error::InvalidConfig(
                msgs.into_iter().map(|m| format!("{}: {m}", path.display())).collect(),
            ),
            other => other,
        })
    }

    /// Field-path diagnostics for every violated invariant.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.run.validate("run", &mut out);
        self.simulator.validate("simulator", &mut out);
        self.weak.validate("weak", &mut out);
        self.strong.validate("strong", &mut out);
        if self.weak.name == self.strong.name {
            out.push("strong.name: must differ from weak.name".into());
        }
        self.rules.validate("rules", &mut out);
        self.train.validate("train", &mut out);
        let d = &self.data;
        for (name, v) in [
            ("train_problems", d.train_problems),
            ("heldout_problems", d.heldout_problems),
            ("samples_per_problem", d.samples_per_problem),
            ("judge_samples_per_problem", d.judge_samples_per_problem),
            ("difficulty_bins", d.difficulty_bins),
        ] {
            if v == 0 {
                out.push(format!("data.{name}: must be >= 1"));
            }
        }
        if self.upsample_rate == 0 {
            out.push("upsample_rate: must be >= 1".into());
        }
        if self.eval.selectors.is_empty() {
            out.push("eval.selectors: must not be empty".into());
        }
        for (i, s) in self.eval.selectors.iter().enumerate() {
            if let Err(e) = s.validate() {
                out.push(format!("eval.selectors[{i}]: {e}"));
            }
        }
        if self.raft.min_correct > self.raft.max_correct {
            out.push("raft.max_correct: must be >= raft.min_correct".into());
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    fn seed(&self) -> u64 {
        self.run.master_seed
    }

    fn label_options(&self) -> LabelOptions {
        LabelOptions {
            rollouts: self.run.num_rollouts_t,
            truncate_after_first_zero: self.labeling.truncate_after_first_zero,
        }
    }

    /// Digest of the settings that determine artifact bytes (worker count
    /// and output directory excluded).
    pub fn digest(&self) -> Result<String> {
        let mut c = self.clone();
        c.run.worker_count = 1;
        c.out_dir = None;
        Ok(sha256_hex(serde_json::to_string(&c)?.as_bytes()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    curate::from_jsonl(&read_text(path)?).map_err(|e| with_path(e, path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Parse {
        path: path.into(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { line, message, .. } => Error::Parse {
            path: path.into(),
            line,
            message,
        },
        other => other,
    }
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

pub fn jsonl_bytes<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    Ok(curate::to_jsonl(records)?.into_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageRecord {
    pub stage: Stage,
    pub artifacts: Vec<Artifact>,
    pub summary: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub master_seed: u64,
    pub config_sha256: String,
    pub stages: Vec<StageRecord>,
    pub ledger: CostLedger,
}

impl Manifest {
    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == stage)
    }
}

/// Output directory plus the list of files written so far, so a failed run
/// can remove what it produced.
pub struct Workspace {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Workspace {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            written: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<Artifact> {
        let path = self.path(name);
        write_file(&path, bytes)?;
        self.written.push(path);
        Ok(Artifact {
            path: name.to_owned(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        })
    }

    fn cleanup(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(p);
        }
    }
}

fn read_ws<T: DeserializeOwned>(ws: &Workspace, name: &str) -> Result<Vec<T>> {
    read_jsonl(&ws.path(name))
}

/// Trained step scorer and the outcome scorer used by `orm-rank`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerBundle {
    pub phase: TrainPhase,
    pub prm: ScorerParams,
    pub orm: ScorerParams,
    pub prm_loss_trace: Vec<f64>,
    pub orm_loss_trace: Vec<f64>,
}

/// Trains the step scorer (single or two-phase) and an outcome scorer. In
/// two-phase mode the outcome scorer is the phase-1 result; otherwise it is
/// trained separately on the same outcome examples.
pub fn train_bundle(prm: &[PrmRecord], orm: &[OrmRecord], config: &TrainConfig, upsample_rate: usize, feature_dim: usize) -> Result<ScorerBundle> {
    let set = TrainingSet {
        outcome: score::orm_examples(orm, config.outcome_broadcast)?,
        steps: score::prm_examples(prm, upsample_rate)?,
    };
    let trained = score::train(&set, config, feature_dim)?;
    let (orm_params, orm_trace) = match trained.outcome_params {
        Some(p) => (p, trained.outcome_trace),
        None => score::descend(ScorerParams::zeros(feature_dim), &set.outcome, config, config.seed)?,
    };
    Ok(ScorerBundle {
        phase: config.phase,
        prm: trained.params,
        orm: orm_params,
        prm_loss_trace: trained.loss_trace,
        orm_loss_trace: orm_trace,
    })
}

/// One line of a judge prediction or truth file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeLabels {
    #[serde(default = "default_subset")]
    pub subset: String,
    pub labels: Vec<u8>,
}

fn default_subset() -> String {
    "all".into()
}

/// Pairs prediction and truth lines; subsets come from the truth file.
pub fn judge_examples(pred: &[JudgeLabels], truth: &[JudgeLabels]) -> Result<Vec<JudgeExample>> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    pred.iter()
        .zip(truth)
        .map(|(p, t)| {
            if p.labels.len() != t.labels.len() {
                return Err(Error::LengthMismatch {
                    left: p.labels.len(),
                    right: t.labels.len(),
                });
            }
            Ok(JudgeExample {
                subset: t.subset.clone(),
                truth: t.labels.clone(),
                predicted: p.labels.clone(),
            })
        })
        .collect()
}

fn difficulty_subset(difficulty: f64, bins: usize) -> (usize, String) {
    let b = ((difficulty * bins as f64).floor() as usize).min(bins - 1);
    (b, format!("difficulty-{}/{}", b + 1, bins))
}

fn ledger_summary(ledger: &CostLedger) -> Value {
    json!({
        "completions_total": ledger.completions_total,
        "completions_by_completer": ledger.completions_by_completer,
    })
}

fn stage_gen(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<(Vec<Artifact>, Value)> {
    let train = simulate::generate_problems(derive_path(cfg.seed(), &[tags::TRAIN_PROBLEMS]), cfg.data.train_problems, &cfg.simulator);
    let heldout = simulate::generate_problems(derive_path(cfg.seed(), &[tags::HELDOUT_PROBLEMS]), cfg.data.heldout_problems, &cfg.simulator);
    let arts = vec![
        ws.write(PROBLEMS, &jsonl_bytes(&train)?)?,
        ws.write(HELDOUT, &jsonl_bytes(&heldout)?)?,
    ];
    Ok((arts, json!({ "train_problems": train.len(), "heldout_problems": heldout.len() })))
}

/// Labeling pool: `n` samples per problem, problem `i` on stream
/// `(stream, i)`.
pub fn sample_solutions(problems: &[Problem], config: &SimulatorConfig, n: usize, stream: u64) -> Vec<Solution> {
    problems
        .iter()
        .enumerate()
        .flat_map(|(i, p)| simulate::sample_pool(p, config, n, derive_path(stream, &[i as u64])))
        .collect()
}

fn stage_sample(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<(Vec<Artifact>, Value)> {
    let problems: Vec<Problem> = read_ws(ws, PROBLEMS)?;
    let solutions = sample_solutions(&problems, &cfg.simulator, cfg.data.samples_per_problem, derive_path(cfg.seed(), &[tags::SAMPLE]));
    let correct = solutions.iter().filter(|s| s.outcome_label == Some(1)).count();
    let steps: usize = solutions.iter().map(|s| s.steps.len()).sum();
    let arts = vec![ws.write(SOLUTIONS, &jsonl_bytes(&solutions)?)?];
    Ok((arts, json!({ "solutions": solutions.len(), "steps": steps, "correct": correct })))
}

fn stage_label(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<(Vec<Artifact>, Value)> {
    let problems: Vec<Problem> = read_ws(ws, PROBLEMS)?;
    let solutions: Vec<Solution> = read_ws(ws, SOLUTIONS)?;
    let data = label::build_filtered_dataset(
        &problems,
        &solutions,
        &cfg.weak,
        &cfg.strong,
        cfg.label_options(),
        cfg.labeling.retention_min,
        label::label_stream(cfg.seed()),
        cfg.run.worker_count,
    )?;
    let accuracy = match label::accuracy_report(&data, &solutions, &cfg.weak.name, &cfg.strong.name) {
        Ok(r) => Some(r),
        Err(Error::GroundTruthUnavailable | Error::EmptyInput(_)) => None,
        Err(e) => return Err(e),
    };
    let report = json!({
        "accuracy": accuracy,
        "kept_steps": data.records.len(),
        "total_steps": solutions.iter().map(|s| s.steps.len()).sum::<usize>(),
        "rollouts_per_step": cfg.run.num_rollouts_t,
    });
    let arts = vec![
        ws.write(STEPS, &jsonl_bytes(&data.records)?)?,
        ws.write(LEDGER, &json_bytes(&data.ledger)?)?,
        ws.write(LABEL_REPORT, &json_bytes(&report)?)?,
    ];
    let mut summary = report;
    summary["ledger"] = ledger_summary(&data.ledger);
    Ok((arts, summary))
}

/// Result of filtering, dedup and outcome labeling on a labeled pool.
pub struct Curated {
    pub prm: Vec<PrmRecord>,
    pub orm: Vec<OrmRecord>,
    pub stats: Value,
}

/// Filter, dedup, outcome-label and export. Counts never grow from one
/// step to the next.
pub fn curate(problems: &[Problem], solutions: &[Solution], records: &[LabeledStepRecord], rules: &FilterRules, upsample_rate: usize) -> Result<Curated> {
    let filtered = curate::filter_responses(solutions, rules);
    let subset: Vec<Solution> = filtered.kept.iter().map(|&i| solutions[i].clone()).collect();
    let deduped: Vec<usize> = curate::ngram_dedup(&subset, rules)
        .into_iter()
        .map(|k| filtered.kept[k])
        .collect();
    let pool: Vec<Solution> = deduped.iter().map(|&i| solutions[i].clone()).collect();
    let labeling = curate::assign_outcome_labels(problems, &pool)?;
    let labeled: Vec<(usize, Solution)> = labeling
        .labeled
        .into_iter()
        .map(|(k, s)| (deduped[k], s))
        .collect();
    let keep: std::collections::HashSet<usize> = labeled.iter().map(|(i, _)| *i).collect();
    let kept_records: Vec<LabeledStepRecord> = records
        .iter()
        .filter(|r| keep.contains(&r.solution_index))
        .cloned()
        .collect();
    let prm = curate::export_prm_training(&kept_records, problems, solutions)?;
    let orm = curate::export_orm_training(problems, &labeled)?;

    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    for r in filtered.rejected.iter().chain(&labeling.rejected) {
        *reasons.entry(r.reason.to_string()).or_default() += 1;
    }
    let distribution = (!kept_records.is_empty())
        .then(|| curate::label_distribution(&kept_records))
        .transpose()?;
    let upsampled = curate::upsample_negatives(&kept_records, upsample_rate)?;
    let upsampled_distribution = (!upsampled.is_empty())
        .then(|| curate::label_distribution(&upsampled))
        .transpose()?;
    let stats = json!({
        "input_solutions": solutions.len(),
        "after_filter": filtered.kept.len(),
        "after_dedup": deduped.len(),
        "outcome_labeled": labeled.len(),
        "outcome_correct": labeled.iter().filter(|(_, s)| s.outcome_label == Some(1)).count(),
        "rejections": reasons,
        "prm_records": prm.len(),
        "orm_records": orm.len(),
        "step_records": kept_records.len(),
        "label_distribution": distribution,
        "upsample_rate": upsample_rate,
        "upsampled_label_distribution": upsampled_distribution,
    });
    Ok(Curated { prm, orm, stats })
}

fn stage_curate(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<(Vec<Artifact>, Value)> {
    let problems: Vec<Problem> = read_ws(ws, PROBLEMS)?;
    let solutions: Vec<Solution> = read_ws(ws, SOLUTIONS)?;
    let records: Vec<LabeledStepRecord> = read_ws(ws, STEPS)?;
    let c = curate(&problems, &solutions, &records, &cfg.rules, cfg.upsample_rate)?;
    let arts = vec![
        ws.write(PRM, &jsonl_bytes(&c.prm)?)?,
        ws.write(ORM, &jsonl_bytes(&c.orm)?)?,
        ws.write(CURATE_STATS, &json_bytes(&c.stats)?)?,
    ];
    Ok((arts, c.stats))
}

fn stage_train(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<(Vec<Artifact>, Value)> {
    let prm: Vec<PrmRecord> = read_ws(ws, PRM)?;
    let orm: Vec<OrmRecord> = read_ws(ws, ORM)?;
    let config = TrainConfig {
        seed: derive_path(cfg.seed(), &[tags::TRAIN]),
        ..cfg.train.clone()
    };
    let bundle = train_bundle(&prm, &orm, &config, cfg.upsample_rate, cfg.simulator.feature_dim)?;
    let summary = json!({
        "phase": bundle.phase,
        "prm_records": prm.len(),
        "orm_records": orm.len(),
        "prm_loss_first": bundle.prm_loss_trace.first(),
        "prm_loss_last": bundle.prm_loss_trace.last(),
        "orm_loss_first": bundle.orm_loss_trace.first(),
        "orm_loss_last": bundle.orm_loss_trace.last(),
    });
    let arts = vec![ws.write(PARAMS, &json_bytes(&bundle)?)?];
    Ok((arts, summary))
}

/// Judge set: `per_problem` fresh samples per held-out problem, predicted
/// with `params`, grouped into difficulty bins (ordered by bin).
pub fn judge_set(problems: &[Problem], config: &SimulatorConfig, per_problem: usize, bins: usize, params: &ScorerParams, stream: u64) -> Result<(Vec<JudgeLabels>, Vec<JudgeLabels>)> {
    let mut rows = Vec::new();
    for (i, p) in problems.iter().enumerate() {
        let (bin, subset) = difficulty_subset(p.difficulty, bins);
        for s in simulate::sample_pool(p, config, per_problem, derive_path(stream, &[i as u64])) {
            let truth = s
                .steps
                .iter()
                .map(|st| st.truth_label.map(|t| t.as_bit()).ok_or(Error::GroundTruthUnavailable))
                .collect::<Result<Vec<u8>>>()?;
            let pred = score::predict_labels(params, &s)?;
            rows.push((bin, subset.clone(), pred, truth));
        }
    }
    rows.sort_by_key(|r| r.0);
    Ok(rows
        .into_iter()
        .map(|(_, subset, pred, truth)| {
            (
                JudgeLabels { subset: subset.clone(), labels: pred },
                JudgeLabels { subset, labels: truth },
            )
        })
        .unzip())
}

fn stage_eval(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<(Vec<Artifact>, Value)> {
    let heldout: Vec<Problem> = read_ws(ws, HELDOUT)?;
    let bundle: ScorerBundle = read_json(&ws.path(PARAMS))?;
    let ledger: Option<CostLedger> = {
        let p = ws.path(LEDGER);
        p.exists().then(|| read_json(&p)).transpose()?
    };
    let reports = evalkit::evaluate_selectors(
        &heldout,
        &cfg.simulator,
        &cfg.eval.selectors,
        &cfg.run,
        Scorers {
            prm: Some(&bundle.prm),
            orm: Some(&bundle.orm),
        },
        derive_path(cfg.seed(), &[tags::EVAL]),
    )?;
    let bon = json!({
        "n": cfg.run.bon_n,
        "runs": cfg.run.num_eval_runs,
        "problems": heldout.len(),
        "selectors": reports,
        "ledger": ledger,
    });
    let (pred, truth) = judge_set(
        &heldout,
        &cfg.simulator,
        cfg.data.judge_samples_per_problem,
        cfg.data.difficulty_bins,
        &bundle.prm,
        derive_path(cfg.seed(), &[tags::JUDGE]),
    )?;
    let judge = evalkit::judge_report(&judge_examples(&pred, &truth)?)?;
    let arts = vec![
        ws.write(BON, &json_bytes(&bon)?)?,
        ws.write(JUDGE_PRED, &jsonl_bytes(&pred)?)?,
        ws.write(JUDGE_TRUTH, &jsonl_bytes(&truth)?)?,
        ws.write(JUDGE, &json_bytes(&judge)?)?,
    ];
    Ok((arts, json!({ "bon": bon["selectors"], "n": cfg.run.bon_n, "judge": judge })))
}

fn stage_raft(cfg: &PipelineConfig, ws: &mut Workspace) -> Result<(Vec<Artifact>, Value)> {
    let problems: Vec<Problem> = read_ws(ws, PROBLEMS)?;
    let bundle: ScorerBundle = read_json(&ws.path(PARAMS))?;
    let sft = evalkit::raft_dataset(
        &problems,
        &cfg.simulator,
        &bundle.prm,
        &cfg.rules,
        &cfg.raft,
        &cfg.run,
        derive_path(cfg.seed(), &[tags::RAFT]),
    )?;
    let summary = json!({
        "queries": problems.len(),
        "candidates_per_query": cfg.run.raft_m,
        "window": [cfg.raft.min_correct, cfg.raft.max_correct],
        "selected": sft.len(),
    });
    let arts = vec![
        ws.write(SFT, &jsonl_bytes(&sft)?)?,
        ws.write(RAFT, &json_bytes(&summary)?)?,
    ];
    Ok((arts, summary))
}

/// Runs one stage against the files already in the workspace.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig, ws: &mut Workspace) -> Result<StageRecord> {
    log::info!("stage {}", stage.name());
    let (artifacts, summary) = match stage {
        Stage::Gen => stage_gen(cfg, ws),
        Stage::Sample => stage_sample(cfg, ws),
        Stage::Label => stage_label(cfg, ws),
        Stage::Curate => stage_curate(cfg, ws),
        Stage::Train => stage_train(cfg, ws),
        Stage::Eval => stage_eval(cfg, ws),
        Stage::Raft => stage_raft(cfg, ws),
    }?;
    Ok(StageRecord {
        stage,
        artifacts,
        summary,
    })
}

/// Validates the config, runs the given stages in order and writes the
/// manifest. On failure every file written by this call is removed.
pub fn run_stages(cfg: &PipelineConfig, out_dir: &Path, stages: &[Stage]) -> Result<Manifest> {
    cfg.check()?;
    let created_dir = !out_dir.exists();
    let mut ws = Workspace::new(out_dir);
    let result = (|| {
        let mut records = Vec::with_capacity(stages.len());
        for &stage in stages {
            records.push(run_stage(stage, cfg, &mut ws)?);
        }
        let ledger_path = ws.path(LEDGER);
        let ledger = if ledger_path.exists() {
            read_json(&ledger_path)?
        } else {
            CostLedger::default()
        };
        let manifest = Manifest {
            master_seed: cfg.seed(),
            config_sha256: cfg.digest()?,
            stages: records,
            ledger,
        };
        ws.write(MANIFEST, &json_bytes(&manifest)?)?;
        Ok(manifest)
    })();
    if let Err(e) = &result {
        log::error!("pipeline failed: {e}; removing partial outputs");
        ws.cleanup();
        if created_dir {
            let _ = fs::remove_dir(out_dir);
        }
    }
    result
}

pub fn run_pipeline(cfg: &PipelineConfig, out_dir: &Path) -> Result<Manifest> {
    run_stages(cfg, out_dir, &Stage::ALL)
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    read_json(path)
}

fn fmt_f(v: &Value) -> String {
    v.as_f64().map_or_else(|| "-".into(), |f| format!("{f:.4}"))
}

/// Human-readable summary of a manifest.
pub fn report(path: &Path) -> Result<String> {
    use std::fmt::Write;
    let m = load_manifest(path)?;
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "master_seed: {}", m.master_seed);
    let _ = writeln!(w, "config_sha256: {}", m.config_sha256);
    let _ = writeln!(w, "stages: {}", m.stages.iter().map(|s| s.stage.name()).collect::<Vec<_>>().join(", "));

    let _ = writeln!(w, "\n[label accuracy]");
    match m.stage(Stage::Label).map(|s| &s.summary["accuracy"]) {
        Some(a) if a.is_object() => {
            for k in ["weak", "strong", "filtered"] {
                let _ = writeln!(w, "  {k:<9} {}", fmt_f(&a[k]));
            }
        }
        Some(_) => {
            let _ = writeln!(w, "  ground truth unavailable");
        }
        None => {
            let _ = writeln!(w, "  not run");
        }
    }

    let _ = writeln!(w, "\n[label distribution]");
    match m.stage(Stage::Curate) {
        Some(s) => {
            for (name, key) in [("kept", "label_distribution"), ("upsampled", "upsampled_label_distribution")] {
                let d = &s.summary[key];
                let _ = writeln!(w, "  {name:<9} good {} bad {} (bad {})", d["good"], d["bad"], fmt_f(&d["bad_fraction"]));
            }
        }
        None => {
            let _ = writeln!(w, "  not run");
        }
    }

    let _ = writeln!(w, "\n[best-of-n]");
    match m.stage(Stage::Eval).and_then(|s| s.summary["bon"].as_array().map(|a| (s, a))) {
        Some((s, rows)) => {
            let _ = writeln!(w, "  N = {}", s.summary["n"]);
            for r in rows {
                let _ = writeln!(
                    w,
                    "  {:<20} {} +/- {}",
                    r["selector"].as_str().unwrap_or("?"),
                    fmt_f(&r["mean"]),
                    fmt_f(&r["stddev"])
                );
            }
        }
        None => {
            let _ = writeln!(w, "  not run");
        }
    }

    let _ = writeln!(w, "\n[judge]");
    match m.stage(Stage::Eval).map(|s| &s.summary["judge"]).filter(|j| j.is_object()) {
        Some(j) => {
            if let Some(subsets) = j["subsets"].as_array() {
                for s in subsets {
                    let _ = writeln!(w, "  {:<20} f1 {} ({} steps)", s["subset"].as_str().unwrap_or("?"), fmt_f(&s["f1"]), s["steps"]);
                }
            }
            let _ = writeln!(w, "  macro_f1 {}", fmt_f(&j["macro_f1"]));
            let _ = writeln!(w, "  micro_f1 {}", fmt_f(&j["micro_f1"]));
        }
        None => {
            let _ = writeln!(w, "  not run");
        }
    }

    if let Some(s) = m.stage(Stage::Raft) {
        let _ = writeln!(w, "\n[raft]\n  selected {} of {} queries", s.summary["selected"], s.summary["queries"]);
    }

    let _ = writeln!(w, "\n[ledger]");
    let _ = writeln!(w, "  completions_total: {}", m.ledger.completions_total);
    for (name, n) in &m.ledger.completions_by_completer {
        let _ = writeln!(w, "  {name}: {n}");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PipelineConfig {
        let mut c = PipelineConfig::default();
        c.data.train_problems = 12;
        c.data.heldout_problems = 6;
        c.run.num_eval_runs = 2;
        c
    }

    #[test]
    fn default_config_round_trips_and_validates() {
        let c = PipelineConfig::default();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(PipelineConfig::from_json(&text).unwrap(), c);
        assert!(c.validate().is_empty());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = PipelineConfig::from_json(r#"{"run": {"master_seed": 1, "bogus": 2}}"#).unwrap_err();
        assert!(e.is_validation());
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn diagnostics_carry_field_paths() {
        let mut c = PipelineConfig::default();
        c.rules.max_tokens = 3;
        c.weak.p_recover = 2.0;
        let v = c.validate();
        assert!(v.iter().any(|m| m.starts_with("rules.max_tokens")), "{v:?}");
        assert!(v.iter().any(|m| m.starts_with("weak.")), "{v:?}");
    }

    #[test]
    fn invalid_config_runs_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let mut c = small();
        c.rules.max_tokens = 1;
        let e = run_pipeline(&c, &out).unwrap_err();
        assert!(e.is_validation());
        assert!(!out.exists());
    }

    #[test]
    fn failure_removes_partial_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        // labeling needs solutions.jsonl, which only the skipped sample stage writes
        let e = run_stages(&small(), &out, &[Stage::Gen, Stage::Label]).unwrap_err();
        assert!(matches!(e, Error::Io { .. }), "{e}");
        assert!(!out.exists());
    }

    #[test]
    fn seven_stages_and_report() {
        let dir = tempfile::tempdir().unwrap();
        let m = run_pipeline(&small(), dir.path()).unwrap();
        assert_eq!(m.stages.len(), 7);
        assert!(m.ledger.is_consistent());
        for s in &m.stages {
            for a in &s.artifacts {
                let bytes = fs::read(dir.path().join(&a.path)).unwrap();
                assert_eq!(sha256_hex(&bytes), a.sha256);
            }
        }
        let text = report(&dir.path().join(MANIFEST)).unwrap();
        assert!(text.contains("completions_total"));
        assert!(text.contains("macro_f1"));
    }

    #[test]
    fn report_marks_missing_judge() {
        let dir = tempfile::tempdir().unwrap();
        run_stages(&small(), dir.path(), &Stage::ALL[..5]).unwrap();
        let text = report(&dir.path().join(MANIFEST)).unwrap();
        let judge = text.split("[judge]").nth(1).unwrap();
        assert!(judge.trim_start().starts_with("not run"), "{text}");
    }

    #[test]
    fn corrupted_manifest_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(MANIFEST);
        fs::write(&p, "{\n  \"master_seed\": 1,\n  \"stages\": [oops]\n}\n").unwrap();
        match report(&p).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn stages_rerun_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let full = run_pipeline(&small(), dir.path()).unwrap();
        let again = run_stages(&small(), dir.path(), &[Stage::Train]).unwrap();
        assert_eq!(again.stages[0], *full.stage(Stage::Train).unwrap());
    }
}
