//! Best-of-N selection, direct step-judgment metrics and reward-ranked
//! fine-tuning data selection.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::curate::{ngram_dedup, FilterRules};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::derive_path;
use crate::score::{aggregate, AggregationStrategy, StepRewarder};
use crate::simulate::{sample_pool, SimulatorConfig};
use crate::types::{Problem, RunConfig, Solution};
use crate::verify::{self, EqualityKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectorKind {
    ZeroShot,
    SelfConsistency,
    OrmRank,
    PrmRank,
    PassAtN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selector {
    pub kind: SelectorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<AggregationStrategy>,
}

impl Selector {
    pub const ZERO_SHOT: Selector = Selector::plain(SelectorKind::ZeroShot);
    pub const SELF_CONSISTENCY: Selector = Selector::plain(SelectorKind::SelfConsistency);
    pub const ORM_RANK: Selector = Selector::plain(SelectorKind::OrmRank);
    pub const PASS_AT_N: Selector = Selector::plain(SelectorKind::PassAtN);

    const fn plain(kind: SelectorKind) -> Self {
        Self {
            kind,
            aggregation: None,
        }
    }

    pub const fn prm(aggregation: AggregationStrategy) -> Self {
        Self {
            kind: SelectorKind::PrmRank,
            aggregation: Some(aggregation),
        }
    }

    pub fn all() -> Vec<Selector> {
        vec![
            Selector::ZERO_SHOT,
            Selector::SELF_CONSISTENCY,
            Selector::ORM_RANK,
            Selector::prm(AggregationStrategy::Minimum),
            Selector::PASS_AT_N,
        ]
    }

    pub fn name(&self) -> String {
        match self.kind {
            SelectorKind::ZeroShot => "zero-shot".into(),
            SelectorKind::SelfConsistency => "self-consistency".into(),
            SelectorKind::OrmRank => "orm-rank".into(),
            SelectorKind::PrmRank => format!("prm-rank-{}", self.strategy().name()),
            SelectorKind::PassAtN => "pass-at-n".into(),
        }
    }

    fn strategy(&self) -> AggregationStrategy {
        self.aggregation.unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        let has = self.aggregation.is_some();
        if has != (self.kind == SelectorKind::PrmRank) {
            return Err(Error::InvalidArgument(format!(
                "aggregation is only meaningful for prm-rank ({:?})",
                self.kind
            )));
        }
        Ok(())
    }
}

/// Representative of the largest answer-equivalence class; ties go to the
/// class that occurs first.
pub fn majority_vote<S: AsRef<str>>(answers: &[S]) -> Result<String> {
    if answers.is_empty() {
        return Err(Error::EmptyInput("answers"));
    }
    let mut classes: Vec<(EqualityKey, usize, usize)> = Vec::new();
    let mut slot: HashMap<EqualityKey, usize> = HashMap::new();
    for (i, a) in answers.iter().enumerate() {
        let key = verify::canonicalize(a.as_ref()).equality_key();
        match slot.get(&key) {
            Some(&c) => classes[c].2 += 1,
            None => {
                slot.insert(key.clone(), classes.len());
                classes.push((key, i, 1));
            }
        }
    }
    let mut best = &classes[0];
    for c in &classes[1..] {
        if c.2 > best.2 {
            best = c;
        }
    }
    Ok(answers[best.1].as_ref().to_owned())
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Index of the chosen solution.
pub fn best_of_n(
    problem: &Problem,
    solutions: &[Solution],
    selector: Selector,
    scorer: Option<&dyn StepRewarder>,
) -> Result<usize> {
    if solutions.is_empty() {
        return Err(Error::EmptyInput("candidate solutions"));
    }
    match selector.kind {
        SelectorKind::ZeroShot => Ok(0),
        SelectorKind::SelfConsistency => {
            let answers: Vec<&str> = solutions.iter().map(|s| s.final_answer.as_str()).collect();
            let winner = majority_vote(&answers)?;
            Ok(solutions
                .iter()
                .position(|s| verify::answers_equal(&s.final_answer, &winner))
                .unwrap_or(0))
        }
        SelectorKind::PassAtN => Ok(solutions
            .iter()
            .position(|s| verify::answers_equal(&s.final_answer, &problem.golden_answer))
            .unwrap_or(0)),
        SelectorKind::OrmRank | SelectorKind::PrmRank => {
            let scorer = scorer.ok_or(Error::MissingScorer(match selector.kind {
                SelectorKind::OrmRank => "orm-rank",
                _ => "prm-rank",
            }))?;
            let strategy = match selector.kind {
                SelectorKind::OrmRank => AggregationStrategy::Last,
                _ => selector.strategy(),
            };
            let scores = solutions
                .iter()
                .map(|s| aggregate(&scorer.step_rewards(s)?, strategy))
                .collect::<Result<Vec<_>>>()?;
            Ok(argmax(&scores))
        }
    }
}

/// Rewards from ground-truth step labels; the oracle-reward PRM.
#[derive(Debug, Clone, Copy)]
pub struct TruthRewards {
    pub correct: f64,
    pub incorrect: f64,
}

impl Default for TruthRewards {
    fn default() -> Self {
        Self {
            correct: 0.99,
            incorrect: 0.01,
        }
    }
}

impl StepRewarder for TruthRewards {
    fn step_rewards(&self, solution: &Solution) -> Result<Vec<f64>> {
        solution
            .steps
            .iter()
            .map(|s| match s.truth_label {
                Some(t) if t.is_correct() => Ok(self.correct),
                Some(_) => Ok(self.incorrect),
                None => Err(Error::GroundTruthUnavailable),
            })
            .collect()
    }
}

/// Scorers available to the ranking selectors.
#[derive(Clone, Copy, Default)]
pub struct Scorers<'a> {
    pub prm: Option<&'a dyn StepRewarder>,
    pub orm: Option<&'a dyn StepRewarder>,
}

impl<'a> Scorers<'a> {
    fn for_selector(&self, selector: Selector) -> Option<&'a dyn StepRewarder> {
        match selector.kind {
            SelectorKind::OrmRank => self.orm,
            SelectorKind::PrmRank => self.prm,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorReport {
    pub selector: String,
    pub per_run: Vec<f64>,
    pub mean: f64,
    pub stddev: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Accuracy of several selectors on identical samples.
///
/// For run `r` and problem `p`, candidate `j` is drawn from stream
/// `(stream, r, p, j)`, so every selector sees the same pool and a pool of
/// size `N` is a prefix of any larger one.
pub fn evaluate_selectors(
    problems: &[Problem],
    config: &SimulatorConfig,
    selectors: &[Selector],
    run: &RunConfig,
    scorers: Scorers<'_>,
    stream: u64,
) -> Result<Vec<SelectorReport>> {
    for s in selectors {
        s.validate()?;
    }
    let mut per_run = vec![Vec::with_capacity(run.num_eval_runs); selectors.len()];
    for r in 0..run.num_eval_runs {
        let hits = par::map_indexed(run.worker_count, problems, |pi, problem| {
            let pool = sample_pool(
                problem,
                config,
                run.bon_n,
                derive_path(stream, &[r as u64, pi as u64]),
            );
            selectors
                .iter()
                .map(|&sel| {
                    let chosen = best_of_n(problem, &pool, sel, scorers.for_selector(sel))?;
                    Ok(verify::answers_equal(&pool[chosen].final_answer, &problem.golden_answer))
                })
                .collect::<Result<Vec<bool>>>()
        })?;
        for (k, acc) in per_run.iter_mut().enumerate() {
            let correct = hits.iter().filter(|h| h[k]).count();
            acc.push(correct as f64 / problems.len().max(1) as f64);
        }
    }
    Ok(selectors
        .iter()
        .zip(per_run)
        .map(|(sel, runs)| {
            let (mean, stddev) = mean_std(&runs);
            SelectorReport {
                selector: sel.name(),
                per_run: runs,
                mean,
                stddev,
            }
        })
        .collect())
}

/// Single-selector form of [`evaluate_selectors`].
pub fn evaluate(
    problems: &[Problem],
    config: &SimulatorConfig,
    selector: Selector,
    run: &RunConfig,
    scorers: Scorers<'_>,
    stream: u64,
) -> Result<SelectorReport> {
    evaluate_selectors(problems, config, &[selector], run, scorers, stream)
        .map(|mut v| v.remove(0))
}

/// Confusion counts for the positive ("correct step") class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_labels(predicted: &[u8], truth: &[u8]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(Error::LengthMismatch {
                left: predicted.len(),
                right: truth.len(),
            });
        }
        let mut c = Confusion::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p == 1, t == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn add(&mut self, other: Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if self.tp == 0 || denom == 0 {
            return 0.0;
        }
        2.0 * self.tp as f64 / denom as f64
    }
}

/// F1 of the positive class; 0 when precision + recall is 0.
pub fn judge_f1(predicted: &[u8], truth: &[u8]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::EmptyInput("judge labels"));
    }
    Confusion::from_labels(predicted, truth).map(|c| c.f1())
}

/// Unweighted mean of per-subset F1 scores.
pub fn macro_f1(per_subset: &[f64]) -> Result<f64> {
    if per_subset.is_empty() {
        return Err(Error::EmptyInput("subset scores"));
    }
    Ok(per_subset.iter().sum::<f64>() / per_subset.len() as f64)
}

/// Predicted and true step labels for one solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeExample {
    pub subset: String,
    pub truth: Vec<u8>,
    pub predicted: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    pub subset: String,
    pub f1: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeReport {
    pub subsets: Vec<SubsetScore>,
    pub macro_f1: f64,
    /// F1 of the pooled confusion matrix over all subsets.
    pub micro_f1: f64,
}

/// Per-subset F1 (subsets in first-seen order) plus macro and micro F1.
pub fn judge_report(examples: &[JudgeExample]) -> Result<JudgeReport> {
    if examples.is_empty() {
        return Err(Error::EmptyInput("judge examples"));
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_subset: HashMap<String, (Confusion, usize)> = HashMap::new();
    let mut pooled = Confusion::default();
    for ex in examples {
        let c = Confusion::from_labels(&ex.predicted, &ex.truth)?;
        pooled.add(c);
        let slot = by_subset.entry(ex.subset.clone()).or_insert_with(|| {
            order.push(ex.subset.clone());
            (Confusion::default(), 0)
        });
        slot.0.add(c);
        slot.1 += ex.truth.len();
    }
    let subsets: Vec<SubsetScore> = order
        .into_iter()
        .map(|name| {
            let (c, steps) = by_subset[&name];
            SubsetScore {
                subset: name,
                f1: c.f1(),
                steps,
            }
        })
        .collect();
    let f1s: Vec<f64> = subsets.iter().map(|s| s.f1).collect();
    Ok(JudgeReport {
        macro_f1: macro_f1(&f1s)?,
        micro_f1: pooled.f1(),
        subsets,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RaftConfig {
    /// Inclusive window on the number of correct candidates (pre-dedup).
    pub min_correct: usize,
    pub max_correct: usize,
    pub aggregation: AggregationStrategy,
}

impl Default for RaftConfig {
    fn default() -> Self {
        Self {
            min_correct: 2,
            max_correct: 6,
            aggregation: AggregationStrategy::Minimum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaftPick {
    pub index: usize,
    pub reward: f64,
    pub correct_count: usize,
}

/// Picks the highest-reward correct candidate of a query whose correct
/// count lies in the window; `None` for queries that are too easy or too
/// hard. Correct candidates are deduplicated before ranking.
pub fn raft_select(
    problem: &Problem,
    solutions: &[Solution],
    scorer: &dyn StepRewarder,
    rules: &FilterRules,
    config: &RaftConfig,
) -> Result<Option<RaftPick>> {
    let correct: Vec<usize> = solutions
        .iter()
        .enumerate()
        .filter(|(_, s)| verify::answers_equal(&s.final_answer, &problem.golden_answer))
        .map(|(i, _)| i)
        .collect();
    let count = correct.len();
    if count < config.min_correct || count > config.max_correct {
        return Ok(None);
    }
    let subset: Vec<Solution> = correct.iter().map(|&i| solutions[i].clone()).collect();
    let kept: Vec<usize> = ngram_dedup(&subset, rules).into_iter().map(|k| correct[k]).collect();
    let scores = kept
        .iter()
        .map(|&i| aggregate(&scorer.step_rewards(&solutions[i])?, config.aggregation))
        .collect::<Result<Vec<_>>>()?;
    let best = argmax(&scores);
    Ok(Some(RaftPick {
        index: kept[best],
        reward: scores[best],
        correct_count: count,
    }))
}

/// A selected fine-tuning example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SftRecord {
    pub problem_id: String,
    pub prompt: String,
    pub response: String,
    pub final_answer: String,
    pub reward: f64,
    pub correct_count: usize,
}

/// Samples `run.raft_m` candidates per problem (stream `(stream, p)`) and
/// keeps the RAFT pick of every query inside the window.
pub fn raft_dataset(
    problems: &[Problem],
    config: &SimulatorConfig,
    scorer: &dyn StepRewarder,
    rules: &FilterRules,
    raft: &RaftConfig,
    run: &RunConfig,
    stream: u64,
) -> Result<Vec<SftRecord>> {
    let picks = par::map_indexed(run.worker_count, problems, |pi, problem| {
        let pool = sample_pool(problem, config, run.raft_m, derive_path(stream, &[pi as u64]));
        Ok(raft_select(problem, &pool, scorer, rules, raft)?.map(|pick| {
            let s = &pool[pick.index];
            SftRecord {
                problem_id: problem.id.clone(),
                prompt: problem.prompt.clone(),
                response: s.response_text(),
                final_answer: s.final_answer.clone(),
                reward: pick.reward,
                correct_count: pick.correct_count,
            }
        }))
    })?;
    Ok(picks.into_iter().flatten().collect())
}
