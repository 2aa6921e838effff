//! Monte Carlo step labels, weak/strong consistency filtering and rollout
//! cost accounting.
//!
//! A step is estimated by finishing the solution `T` times from the prefix
//! ending at that step. The soft estimate is the fraction of finishes that
//! reach the golden answer; the hard estimate is 1 iff at least one does.
//! Labeling a solution of `K` steps therefore costs `T * K` completions per
//! completer, and the [`CostLedger`] records every one of them.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::rng::{derive_path, derive_rng_stream};
use crate::simulate::{self, RolloutOutcome};
use crate::types::{CompleterConfig, Problem, Solution, Step, StepLabelEstimate};

/// Anything that can finish a solution from a step prefix.
pub trait Completer: Sync {
    fn name(&self) -> &str;
    /// Mixed into the stream so two completers never share random draws.
    fn stream_offset(&self) -> u64 {
        0
    }
    fn rollout(&self, problem: &Problem, prefix: &[Step], stream: u64) -> Result<RolloutOutcome>;
}

impl Completer for CompleterConfig {
    fn name(&self) -> &str {
        &self.name
    }

    fn stream_offset(&self) -> u64 {
        self.seed_offset
    }

    fn rollout(&self, problem: &Problem, prefix: &[Step], stream: u64) -> Result<RolloutOutcome> {
        simulate::completer_rollout(problem, prefix, self, stream)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostLedger {
    pub completions_total: u64,
    pub completions_by_completer: BTreeMap<String, u64>,
}

impl CostLedger {
    pub fn record(&mut self, completer: &str, completions: u64) {
        self.completions_total += completions;
        *self
            .completions_by_completer
            .entry(completer.to_owned())
            .or_default() += completions;
    }

    pub fn merge(&mut self, other: &CostLedger) {
        for (name, n) in &other.completions_by_completer {
            self.record(name, *n);
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.completions_by_completer.values().sum::<u64>() == self.completions_total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelSource {
    SingleCompleter,
    ConsistencyKept,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledStepRecord {
    pub problem_id: String,
    /// Position of the solution in the labeled solution list.
    pub solution_index: usize,
    pub step_index: usize,
    pub label: u8,
    pub source: LabelSource,
    pub completer_names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelOptions {
    pub rollouts: u32,
    /// Stop rolling out after the first hard-0 step and label the rest 0.
    /// Off by default: every step is estimated independently.
    pub truncate_after_first_zero: bool,
}

impl Default for LabelOptions {
    fn default() -> Self {
        Self {
            rollouts: 8,
            truncate_after_first_zero: false,
        }
    }
}

impl LabelOptions {
    pub fn with_rollouts(rollouts: u32) -> Self {
        Self {
            rollouts,
            ..Self::default()
        }
    }
}

/// Runs `t` rollouts from the prefix ending at `step_index` and returns the
/// estimate together with every recorded outcome.
pub fn mc_estimate_recorded(
    problem: &Problem,
    solution: &Solution,
    step_index: usize,
    completer: &dyn Completer,
    t: u32,
    stream: u64,
    ledger: &mut CostLedger,
) -> Result<(StepLabelEstimate, Vec<bool>)> {
    if t == 0 {
        return Err(Error::NonPositiveRollouts);
    }
    if step_index >= solution.steps.len() {
        return Err(Error::InvalidArgument(format!(
            "step {step_index} out of range for {} steps",
            solution.steps.len()
        )));
    }
    let prefix = &solution.steps[..=step_index];
    let base = derive_rng_stream(stream, completer.stream_offset());
    let outcomes = (0..u64::from(t))
        .map(|j| {
            completer
                .rollout(problem, prefix, derive_rng_stream(base, j))
                .map(|o| o.correct)
        })
        .collect::<Result<Vec<_>>>()?;
    ledger.record(completer.name(), u64::from(t));
    Ok((StepLabelEstimate::from_outcomes(&outcomes)?, outcomes))
}

pub fn mc_estimate(
    problem: &Problem,
    solution: &Solution,
    step_index: usize,
    completer: &dyn Completer,
    t: u32,
    stream: u64,
    ledger: &mut CostLedger,
) -> Result<StepLabelEstimate> {
    mc_estimate_recorded(problem, solution, step_index, completer, t, stream, ledger).map(|(e, _)| e)
}

/// Hard labels for every step. Step `i` uses stream `(stream, i)`.
pub fn label_solution(
    problem: &Problem,
    solution: &Solution,
    completer: &dyn Completer,
    options: LabelOptions,
    stream: u64,
    ledger: &mut CostLedger,
) -> Result<Vec<u8>> {
    if options.rollouts == 0 {
        return Err(Error::NonPositiveRollouts);
    }
    let mut labels = Vec::with_capacity(solution.steps.len());
    for i in 0..solution.steps.len() {
        if options.truncate_after_first_zero && labels.last() == Some(&0) {
            labels.push(0);
            continue;
        }
        let est = mc_estimate(
            problem,
            solution,
            i,
            completer,
            options.rollouts,
            derive_rng_stream(stream, i as u64),
            ledger,
        )?;
        labels.push(est.hard);
    }
    Ok(labels)
}

/// Keeps position `i` only where both label lists agree.
pub fn consistency_filter(weak: &[u8], strong: &[u8]) -> Result<Vec<Option<u8>>> {
    if weak.len() != strong.len() {
        return Err(Error::LengthMismatch {
            left: weak.len(),
            right: strong.len(),
        });
    }
    Ok(weak
        .iter()
        .zip(strong)
        .map(|(&w, &s)| (w == s).then_some(w))
        .collect())
}

/// Output of dual-completer labeling.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredDataset {
    /// Consistency-kept step records of retained solutions.
    pub records: Vec<LabeledStepRecord>,
    /// Hard labels per solution for each completer.
    pub weak_labels: Vec<Vec<u8>>,
    pub strong_labels: Vec<Vec<u8>>,
    pub ledger: CostLedger,
}

impl FilteredDataset {
    pub fn weak_records(&self, solutions: &[Solution], name: &str) -> Vec<LabeledStepRecord> {
        single_records(solutions, &self.weak_labels, name)
    }

    pub fn strong_records(&self, solutions: &[Solution], name: &str) -> Vec<LabeledStepRecord> {
        single_records(solutions, &self.strong_labels, name)
    }
}

fn single_records(solutions: &[Solution], labels: &[Vec<u8>], name: &str) -> Vec<LabeledStepRecord> {
    solutions
        .iter()
        .zip(labels)
        .enumerate()
        .flat_map(|(si, (s, ls))| {
            ls.iter().enumerate().map(move |(i, &label)| LabeledStepRecord {
                problem_id: s.problem_id.clone(),
                solution_index: si,
                step_index: i,
                label,
                source: LabelSource::SingleCompleter,
                completer_names: vec![name.to_owned()],
            })
        })
        .collect()
}

fn problem_index(problems: &[Problem]) -> HashMap<&str, &Problem> {
    problems.iter().map(|p| (p.id.as_str(), p)).collect()
}

fn lookup<'a>(index: &HashMap<&str, &'a Problem>, id: &str) -> Result<&'a Problem> {
    index
        .get(id)
        .copied()
        .ok_or_else(|| Error::UnknownReference(format!("problem {id:?}")))
}

/// Labels each solution with one completer. Solution `s` uses stream
/// `(stream, s)`; results are merged in solution order.
pub fn label_dataset(
    problems: &[Problem],
    solutions: &[Solution],
    completer: &dyn Completer,
    options: LabelOptions,
    stream: u64,
    workers: usize,
) -> Result<(Vec<Vec<u8>>, CostLedger)> {
    let index = problem_index(problems);
    let per_solution = par::map_indexed(workers, solutions, |si, s| {
        let problem = lookup(&index, &s.problem_id)?;
        let mut ledger = CostLedger::default();
        let labels = label_solution(
            problem,
            s,
            completer,
            options,
            derive_rng_stream(stream, si as u64),
            &mut ledger,
        )?;
        Ok((labels, ledger))
    })?;
    let mut ledger = CostLedger::default();
    let labels = per_solution
        .into_iter()
        .map(|(l, led)| {
            ledger.merge(&led);
            l
        })
        .collect();
    Ok((labels, ledger))
}

/// Single-completer step records with no filtering.
pub fn build_single_dataset(
    problems: &[Problem],
    solutions: &[Solution],
    completer: &dyn Completer,
    options: LabelOptions,
    stream: u64,
    workers: usize,
) -> Result<(Vec<LabeledStepRecord>, CostLedger)> {
    let (labels, ledger) = label_dataset(problems, solutions, completer, options, stream, workers)?;
    Ok((single_records(solutions, &labels, completer.name()), ledger))
}

/// Labels every solution with both completers, keeps agreeing steps and
/// drops solutions with fewer than `retention_min` of them.
///
/// Both completers see the same per-solution stream; their draws differ
/// through [`Completer::stream_offset`].
pub fn build_filtered_dataset(
    problems: &[Problem],
    solutions: &[Solution],
    weak: &dyn Completer,
    strong: &dyn Completer,
    options: LabelOptions,
    retention_min: usize,
    stream: u64,
    workers: usize,
) -> Result<FilteredDataset> {
    let (weak_labels, mut ledger) = label_dataset(problems, solutions, weak, options, stream, workers)?;
    let (strong_labels, strong_ledger) =
        label_dataset(problems, solutions, strong, options, stream, workers)?;
    ledger.merge(&strong_ledger);

    let names = vec![weak.name().to_owned(), strong.name().to_owned()];
    let mut records = Vec::new();
    for (si, s) in solutions.iter().enumerate() {
        let kept = consistency_filter(&weak_labels[si], &strong_labels[si])?;
        if kept.iter().flatten().count() < retention_min {
            continue;
        }
        records.extend(kept.iter().enumerate().filter_map(|(i, l)| {
            l.map(|label| LabeledStepRecord {
                problem_id: s.problem_id.clone(),
                solution_index: si,
                step_index: i,
                label,
                source: LabelSource::ConsistencyKept,
                completer_names: names.clone(),
            })
        }));
    }
    Ok(FilteredDataset {
        records,
        weak_labels,
        strong_labels,
        ledger,
    })
}

/// Fraction of records whose label equals the step's ground truth.
pub fn label_accuracy(records: &[LabeledStepRecord], solutions: &[Solution]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("label records"));
    }
    let mut hits = 0usize;
    for r in records {
        let truth = solutions
            .get(r.solution_index)
            .and_then(|s| s.steps.get(r.step_index))
            .ok_or_else(|| {
                Error::UnknownReference(format!("step {}/{}", r.solution_index, r.step_index))
            })?
            .truth_label
            .ok_or(Error::GroundTruthUnavailable)?;
        hits += usize::from(truth.as_bit() == r.label);
    }
    Ok(hits as f64 / records.len() as f64)
}

/// Label accuracy of the weak, strong and filtered record sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub weak: f64,
    pub strong: f64,
    pub filtered: f64,
    pub kept_steps: usize,
    pub total_steps: usize,
}

pub fn accuracy_report(data: &FilteredDataset, solutions: &[Solution], weak: &str, strong: &str) -> Result<AccuracyReport> {
    Ok(AccuracyReport {
        weak: label_accuracy(&data.weak_records(solutions, weak), solutions)?,
        strong: label_accuracy(&data.strong_records(solutions, strong), solutions)?,
        filtered: label_accuracy(&data.records, solutions)?,
        kept_steps: data.records.len(),
        total_steps: solutions.iter().map(|s| s.steps.len()).sum(),
    })
}

/// Seeded dual labeling of a simulator benchmark: stream `(master, LABEL)`.
pub fn label_stream(master_seed: u64) -> u64 {
    derive_path(master_seed, &[crate::rng::tags::LABEL])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{synthetic_benchmark, SimulatorConfig};
    use crate::types::TruthLabel;

    fn fixed(p_solve: f64, p_recover: f64) -> CompleterConfig {
        CompleterConfig {
            name: "fixed".into(),
            p_solve_base: p_solve,
            difficulty_slope: 0.0,
            p_recover,
            seed_offset: 0,
        }
    }

    fn one(error_at: Option<usize>, k: usize) -> (Problem, Solution) {
        let (mut problems, mut solutions) = synthetic_benchmark(3, 1, 1, &SimulatorConfig {
            step_error_rate: 0.0,
            plan_length_range: [k as u32, k as u32],
            ..Default::default()
        });
        if let Some(e) = error_at {
            solutions[0].steps[e].truth_label = Some(TruthLabel::Incorrect);
        }
        (problems.remove(0), solutions.remove(0))
    }

    #[test]
    fn zero_rollouts_is_an_error() {
        let (p, s) = one(None, 3);
        let mut ledger = CostLedger::default();
        let err = mc_estimate(&p, &s, 0, &fixed(1.0, 0.0), 0, 1, &mut ledger);
        assert!(matches!(err, Err(Error::NonPositiveRollouts)));
    }

    #[test]
    fn estimate_concentrates_on_the_rate() {
        let (p, s) = one(None, 3);
        let mut ledger = CostLedger::default();
        let e = mc_estimate(&p, &s, 1, &fixed(0.5, 0.0), 10_000, 4, &mut ledger).unwrap();
        assert!((e.soft - 0.5).abs() <= 0.02, "{}", e.soft);
        assert_eq!(ledger.completions_total, 10_000);
    }

    #[test]
    fn label_solution_cost_is_t_times_k() {
        let (p, s) = one(None, 4);
        let mut ledger = CostLedger::default();
        label_solution(&p, &s, &CompleterConfig::weak(), LabelOptions::with_rollouts(8), 0, &mut ledger).unwrap();
        assert_eq!(ledger.completions_total, 32);
    }

    #[test]
    fn degenerate_completers_give_exact_labels() {
        let (p, s) = one(None, 5);
        let mut ledger = CostLedger::default();
        let labels = label_solution(&p, &s, &fixed(1.0, 0.0), LabelOptions::default(), 0, &mut ledger).unwrap();
        assert_eq!(labels, vec![1; 5]);

        // first error at step index 2: every later prefix contains it
        let (p, s) = one(Some(2), 5);
        let labels = label_solution(&p, &s, &fixed(1.0, 0.0), LabelOptions::default(), 0, &mut ledger).unwrap();
        assert_eq!(labels, vec![1, 1, 0, 0, 0]);
    }

    #[test]
    fn truncation_skips_rollouts() {
        let (p, s) = one(Some(1), 5);
        let mut ledger = CostLedger::default();
        let opts = LabelOptions {
            rollouts: 8,
            truncate_after_first_zero: true,
        };
        let labels = label_solution(&p, &s, &fixed(1.0, 0.0), opts, 0, &mut ledger).unwrap();
        assert_eq!(labels, vec![1, 0, 0, 0, 0]);
        assert_eq!(ledger.completions_total, 16);
    }

    #[test]
    fn filter_examples() {
        assert_eq!(
            consistency_filter(&[1, 1, 0], &[1, 0, 0]).unwrap(),
            vec![Some(1), None, Some(0)]
        );
        assert_eq!(
            consistency_filter(&[1, 0], &[1, 0]).unwrap(),
            vec![Some(1), Some(0)]
        );
        assert_eq!(consistency_filter(&[1, 0], &[0, 1]).unwrap(), vec![None, None]);
        assert!(consistency_filter(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn dual_labeling_ledger() {
        let (p, s) = one(None, 5);
        let data = build_filtered_dataset(
            &[p],
            &[s],
            &CompleterConfig::weak(),
            &CompleterConfig::strong(),
            LabelOptions::with_rollouts(8),
            1,
            0,
            1,
        )
        .unwrap();
        assert_eq!(data.ledger.completions_total, 80);
        assert_eq!(data.ledger.completions_by_completer["weak"], 40);
        assert!(data.ledger.is_consistent());
    }

    #[test]
    fn retention_at_k_keeps_only_fully_consistent_solutions() {
        let config = SimulatorConfig {
            plan_length_range: [4, 4],
            ..Default::default()
        };
        let (problems, solutions) = synthetic_benchmark(8, 40, 2, &config);
        let run = |retention| {
            build_filtered_dataset(
                &problems,
                &solutions,
                &CompleterConfig::weak(),
                &CompleterConfig::strong(),
                LabelOptions::default(),
                retention,
                5,
                2,
            )
            .unwrap()
        };
        let all = run(0);
        let strict = run(4);
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for r in &all.records {
            *counts.entry(r.solution_index).or_default() += 1;
        }
        let expected: Vec<&LabeledStepRecord> = all
            .records
            .iter()
            .filter(|r| counts[&r.solution_index] == 4)
            .collect();
        assert_eq!(strict.records.iter().collect::<Vec<_>>(), expected);
        assert!(strict.records.len() < all.records.len());
    }

    #[test]
    fn accuracy_extremes() {
        let (p, s) = one(Some(1), 3);
        let _ = p;
        let truth: Vec<u8> = s.steps.iter().map(|st| st.truth_label.unwrap().as_bit()).collect();
        let solutions = vec![s];
        let exact = single_records(&solutions, std::slice::from_ref(&truth), "x");
        assert_eq!(label_accuracy(&exact, &solutions).unwrap(), 1.0);
        let flipped: Vec<u8> = truth.iter().map(|b| 1 - b).collect();
        let wrong = single_records(&solutions, &[flipped], "x");
        assert_eq!(label_accuracy(&wrong, &solutions).unwrap(), 0.0);

        let mut unlabeled = solutions.clone();
        unlabeled[0].steps[0].truth_label = None;
        assert!(matches!(
            label_accuracy(&exact, &unlabeled),
            Err(Error::GroundTruthUnavailable)
        ));
    }
}
