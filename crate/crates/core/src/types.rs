//! Domain records shared by every pipeline stage.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verify;

pub const DEFAULT_FEATURE_DIM: usize = 8;
pub const STEP_DELIMITER: &str = "\n\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub id: String,
    pub prompt: String,
    pub golden_answer: String,
    pub difficulty: f64,
    pub plan_length: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthLabel {
    Correct,
    Incorrect,
}

impl TruthLabel {
    pub fn as_bit(self) -> u8 {
        match self {
            TruthLabel::Correct => 1,
            TruthLabel::Incorrect => 0,
        }
    }

    pub fn is_correct(self) -> bool {
        self == TruthLabel::Correct
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub text: String,
    pub features: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_label: Option<TruthLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimated_label: Option<StepLabelEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    pub problem_id: String,
    pub steps: Vec<Step>,
    pub final_answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome_label: Option<u8>,
    pub source_policy: String,
}

impl Solution {
    /// Full response text, steps joined by the blank-line delimiter.
    pub fn response_text(&self) -> String {
        self.steps
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(STEP_DELIMITER)
    }

    /// True when every step carries a ground-truth label.
    pub fn has_truth(&self) -> bool {
        self.steps.iter().all(|s| s.truth_label.is_some())
    }

    /// Index of the first step whose truth label is incorrect.
    pub fn first_error(&self) -> Option<usize> {
        self.steps
            .iter()
            .position(|s| s.truth_label == Some(TruthLabel::Incorrect))
    }
}

/// Parameters of a stochastic rollout agent.
///
/// From an error-free prefix the agent reaches the golden answer with
/// probability `clamp(p_solve_base - difficulty_slope * difficulty, 0, 1)`;
/// from a prefix containing any incorrect step it does so with `p_recover`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompleterConfig {
    pub name: String,
    pub p_solve_base: f64,
    pub difficulty_slope: f64,
    pub p_recover: f64,
    pub seed_offset: u64,
}

impl CompleterConfig {
    pub fn weak() -> Self {
        Self {
            name: "weak".into(),
            p_solve_base: 0.4,
            difficulty_slope: 0.3,
            p_recover: 0.05,
            seed_offset: 101,
        }
    }

    pub fn strong() -> Self {
        Self {
            name: "strong".into(),
            p_solve_base: 0.9,
            difficulty_slope: 0.2,
            p_recover: 0.6,
            seed_offset: 202,
        }
    }

    /// Probability of a correct finish from a clean prefix.
    pub fn p_solve(&self, difficulty: f64) -> f64 {
        (self.p_solve_base - self.difficulty_slope * difficulty).clamp(0.0, 1.0)
    }

    pub fn validate(&self, path: &str, out: &mut Vec<String>) {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.name.is_empty() {
            out.push(format!("{path}.name: must be non-empty"));
        }
        if !unit(self.p_solve_base) {
            out.push(format!("{path}.p_solve_base: must lie in [0, 1]"));
        }
        if !(self.difficulty_slope >= 0.0) {
            out.push(format!("{path}.difficulty_slope: must be >= 0"));
        }
        if !unit(self.p_recover) {
            out.push(format!("{path}.p_recover: must lie in [0, 1]"));
        }
        if self.p_recover > self.p_solve_base {
            out.push(format!("{path}.p_recover: must not exceed p_solve_base"));
        }
    }
}

/// Monte Carlo estimate of one step's quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepLabelEstimate {
    pub soft: f64,
    pub hard: u8,
    pub rollouts: u32,
    pub correct_rollouts: u32,
}

impl StepLabelEstimate {
    pub fn from_counts(rollouts: u32, correct_rollouts: u32) -> Result<Self> {
        if rollouts == 0 {
            return Err(Error::NonPositiveRollouts);
        }
        if correct_rollouts > rollouts {
            return Err(Error::InvalidArgument(format!(
                "{correct_rollouts} correct of {rollouts} rollouts"
            )));
        }
        Ok(Self {
            soft: f64::from(correct_rollouts) / f64::from(rollouts),
            hard: u8::from(correct_rollouts >= 1),
            rollouts,
            correct_rollouts,
        })
    }

    pub fn from_outcomes(outcomes: &[bool]) -> Result<Self> {
        let correct = outcomes.iter().filter(|&&c| c).count();
        Self::from_counts(outcomes.len() as u32, correct as u32)
    }

    pub fn is_consistent(&self) -> bool {
        self.rollouts >= 1
            && self.correct_rollouts <= self.rollouts
            && self.soft == f64::from(self.correct_rollouts) / f64::from(self.rollouts)
            && self.hard == u8::from(self.correct_rollouts >= 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub master_seed: u64,
    pub num_rollouts_t: u32,
    pub bon_n: usize,
    pub raft_m: usize,
    pub num_eval_runs: usize,
    pub worker_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            num_rollouts_t: 8,
            bon_n: 8,
            raft_m: 8,
            num_eval_runs: 5,
            worker_count: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self, path: &str, out: &mut Vec<String>) {
        for (name, v) in [
            ("num_rollouts_t", self.num_rollouts_t as usize),
            ("bon_n", self.bon_n),
            ("raft_m", self.raft_m),
            ("num_eval_runs", self.num_eval_runs),
            ("worker_count", self.worker_count),
        ] {
            if v == 0 {
                out.push(format!("{path}.{name}: must be >= 1"));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub record: String,
    pub message: String,
}

/// Every invariant violation in a problem/solution set. Empty iff valid.
pub fn validate_dataset(
    problems: &[Problem],
    solutions: &[Solution],
    feature_dim: usize,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |record: String, message: String| out.push(Violation { record, message });

    let mut ids = HashSet::new();
    for p in problems {
        if !ids.insert(p.id.as_str()) {
            push(p.id.clone(), "duplicate problem id".into());
        }
        if p.plan_length < 1 {
            push(p.id.clone(), "plan_length must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&p.difficulty) {
            push(p.id.clone(), "difficulty outside [0, 1]".into());
        }
        if p.golden_answer.trim().is_empty() {
            push(p.id.clone(), "golden_answer does not parse".into());
        }
    }

    let by_id: HashMap<&str, &Problem> = problems.iter().map(|p| (p.id.as_str(), p)).collect();
    for (si, s) in solutions.iter().enumerate() {
        let rec = format!("solution[{si}]");
        let problem = by_id.get(s.problem_id.as_str());
        if problem.is_none() {
            push(rec.clone(), format!("dangling problem_id {:?}", s.problem_id));
        }
        if s.steps.is_empty() {
            push(rec.clone(), "solution has no steps".into());
        }
        for (i, step) in s.steps.iter().enumerate() {
            if step.text.trim().is_empty() {
                push(rec.clone(), format!("step {i} has empty text"));
            }
            if step.features.len() != feature_dim {
                push(
                    rec.clone(),
                    format!(
                        "step {i} has {} features, expected {feature_dim}",
                        step.features.len()
                    ),
                );
            }
            if let Some(est) = &step.estimated_label {
                if !est.is_consistent() {
                    push(rec.clone(), format!("step {i} label estimate is inconsistent"));
                }
            }
        }
        if let (Some(label), Some(p)) = (s.outcome_label, problem) {
            let expected = u8::from(verify::answers_equal(&s.final_answer, &p.golden_answer));
            if label != expected {
                push(
                    rec.clone(),
                    format!("outcome_label {label} disagrees with answer check ({expected})"),
                );
            }
        }
    }
    out
}
