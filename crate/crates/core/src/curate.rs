//! Response filtering, n-gram deduplication, outcome labels, label
//! statistics, negative up-sampling and ORM/PRM export.
//!
//! Export grammar (one JSON object per line, UTF-8, `\n` terminated, keys in
//! the order shown):
//!
//! ```text
//! PRM: {"problem_id","solution_index","prompt","response","labels","features"}
//!      response = step_1 "<step>" step_2 "<step>" ... step_k "<step>"
//!      labels   = one of '+' / '-' per step, same order
//! ORM: {"problem_id","solution_index","prompt","response","label","features"}
//!      response = steps joined by "\n\n", then a single "<step>"
//!      label    = "+" if the outcome is correct, else "-"
//! ```
//!
//! Steps whose weak and strong labels disagreed are omitted from PRM
//! records; the remaining steps keep their original order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{LabelSource, LabeledStepRecord};
use crate::types::{Problem, Solution};
use crate::verify;

pub const STEP_TOKEN: &str = "<step>";
pub const GOOD_TOKEN: char = '+';
pub const BAD_TOKEN: char = '-';
pub const DEFAULT_UPSAMPLE_RATE: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterRules {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub repetition_ngram: usize,
    pub repetition_max_count: usize,
    pub dedup_ngram: usize,
    pub dedup_jaccard_threshold: f64,
}

impl Default for FilterRules {
    fn default() -> Self {
        Self {
            min_tokens: 5,
            max_tokens: 2048,
            repetition_ngram: 10,
            repetition_max_count: 4,
            dedup_ngram: 3,
            dedup_jaccard_threshold: 0.8,
        }
    }
}

impl FilterRules {
    pub fn validate(&self, path: &str, out: &mut Vec<String>) {
        if self.min_tokens >= self.max_tokens {
            out.push(format!("{path}.max_tokens: must exceed {path}.min_tokens"));
        }
        if self.repetition_ngram < 1 {
            out.push(format!("{path}.repetition_ngram: must be >= 1"));
        }
        if self.dedup_ngram < 1 {
            out.push(format!("{path}.dedup_ngram: must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.dedup_jaccard_threshold) {
            out.push(format!("{path}.dedup_jaccard_threshold: must lie in [0, 1]"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    TooShort,
    TooLong,
    RepetitivePattern,
    NoAnswer,
    Custom(String),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::TooShort => f.write_str("too short"),
            RejectReason::TooLong => f.write_str("too long"),
            RejectReason::RepetitivePattern => f.write_str("repetitive pattern"),
            RejectReason::NoAnswer => f.write_str("no answer found"),
            RejectReason::Custom(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub index: usize,
    pub problem_id: String,
    pub reason: RejectReason,
}

/// Positions kept and rejected, both in input order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<usize>,
    pub rejected: Vec<Rejection>,
}

fn tokens(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

fn max_ngram_count(toks: &[&str], n: usize) -> usize {
    let mut counts: HashMap<&[&str], usize> = HashMap::new();
    for w in toks.windows(n) {
        *counts.entry(w).or_default() += 1;
    }
    counts.into_values().max().unwrap_or(0)
}

fn check_rules(s: &Solution, rules: &FilterRules) -> Option<RejectReason> {
    let text = s.response_text();
    let toks = tokens(&text);
    if toks.len() < rules.min_tokens {
        return Some(RejectReason::TooShort);
    }
    if toks.len() > rules.max_tokens {
        return Some(RejectReason::TooLong);
    }
    if max_ngram_count(&toks, rules.repetition_ngram.max(1)) > rules.repetition_max_count {
        return Some(RejectReason::RepetitivePattern);
    }
    None
}

pub fn filter_responses(solutions: &[Solution], rules: &FilterRules) -> FilterOutcome {
    filter_responses_with(solutions, rules, |_| None)
}

/// As [`filter_responses`], with an extra predicate applied after the
/// built-in rules (e.g. dropping proof or yes/no questions from real data).
pub fn filter_responses_with<F>(solutions: &[Solution], rules: &FilterRules, extra: F) -> FilterOutcome
where
    F: Fn(&Solution) -> Option<String>,
{
    let mut out = FilterOutcome::default();
    for (i, s) in solutions.iter().enumerate() {
        match check_rules(s, rules).or_else(|| extra(s).map(RejectReason::Custom)) {
            None => out.kept.push(i),
            Some(reason) => out.rejected.push(Rejection {
                index: i,
                problem_id: s.problem_id.clone(),
                reason,
            }),
        }
    }
    out
}

fn ngram_set(text: &str, n: usize) -> HashSet<Vec<&str>> {
    let toks = tokens(text);
    if toks.len() < n {
        return std::iter::once(toks).filter(|t| !t.is_empty()).collect();
    }
    toks.windows(n).map(<[&str]>::to_vec).collect()
}

pub fn jaccard<T: Eq + std::hash::Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Greedy near-duplicate removal within each problem. Returns kept
/// positions in input order.
pub fn ngram_dedup(solutions: &[Solution], rules: &FilterRules) -> Vec<usize> {
    let texts: Vec<String> = solutions.iter().map(Solution::response_text).collect();
    let sets: Vec<_> = texts.iter().map(|t| ngram_set(t, rules.dedup_ngram.max(1))).collect();
    let mut kept_by_problem: HashMap<&str, Vec<usize>> = HashMap::new();
    let mut kept = Vec::new();
    for (i, s) in solutions.iter().enumerate() {
        let group = kept_by_problem.entry(s.problem_id.as_str()).or_default();
        let duplicate = group
            .iter()
            .any(|&j| jaccard(&sets[i], &sets[j]) >= rules.dedup_jaccard_threshold);
        if !duplicate {
            group.push(i);
            kept.push(i);
        }
    }
    kept
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutcomeLabeling {
    /// `(input position, labeled solution)`.
    pub labeled: Vec<(usize, Solution)>,
    pub rejected: Vec<Rejection>,
}

/// Sets `outcome_label` (and `final_answer`) from the answer extracted from
/// the response text. Extraction failures are rejected, never guessed.
pub fn assign_outcome_labels(problems: &[Problem], solutions: &[Solution]) -> Result<OutcomeLabeling> {
    let golden: HashMap<&str, &str> = problems
        .iter()
        .map(|p| (p.id.as_str(), p.golden_answer.as_str()))
        .collect();
    let mut out = OutcomeLabeling::default();
    for (i, s) in solutions.iter().enumerate() {
        let gold = golden
            .get(s.problem_id.as_str())
            .ok_or_else(|| Error::UnknownReference(format!("problem {:?}", s.problem_id)))?;
        match verify::extract_final_answer(&s.response_text()) {
            Ok(answer) => {
                let mut s = s.clone();
                s.outcome_label = Some(u8::from(verify::answers_equal(&answer, gold)));
                s.final_answer = answer;
                out.labeled.push((i, s));
            }
            Err(_) => out.rejected.push(Rejection {
                index: i,
                problem_id: s.problem_id.clone(),
                reason: RejectReason::NoAnswer,
            }),
        }
    }
    Ok(out)
}

/// Every label-0 record appears `rate` times (copies adjacent to the
/// original), label-1 records once.
pub fn upsample_negatives(records: &[LabeledStepRecord], rate: usize) -> Result<Vec<LabeledStepRecord>> {
    if rate == 0 {
        return Err(Error::InvalidArgument("up-sample rate must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let copies = if r.label == 0 { rate } else { 1 };
        out.extend(std::iter::repeat_n(r, copies).cloned());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub good: usize,
    pub bad: usize,
    pub good_fraction: f64,
    pub bad_fraction: f64,
}

pub fn label_distribution(records: &[LabeledStepRecord]) -> Result<LabelDistribution> {
    if records.is_empty() {
        return Err(Error::EmptyInput("step records"));
    }
    let good = records.iter().filter(|r| r.label == 1).count();
    let bad = records.len() - good;
    let total = records.len() as f64;
    Ok(LabelDistribution {
        good,
        bad,
        good_fraction: good as f64 / total,
        bad_fraction: bad as f64 / total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrmRecord {
    pub problem_id: String,
    pub solution_index: usize,
    pub prompt: String,
    pub response: String,
    pub labels: String,
    pub features: Vec<Vec<f64>>,
}

impl PrmRecord {
    /// Steps recovered from the response (the text between `<step>` tokens).
    pub fn steps(&self) -> Vec<&str> {
        let mut parts: Vec<&str> = self.response.split(STEP_TOKEN).collect();
        // the response always ends with the token, leaving an empty tail
        if parts.last() == Some(&"") {
            parts.pop();
        }
        parts
    }

    pub fn label_bits(&self) -> Result<Vec<u8>> {
        self.labels.chars().map(label_bit).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrmRecord {
    pub problem_id: String,
    pub solution_index: usize,
    pub prompt: String,
    pub response: String,
    pub label: String,
    pub features: Vec<Vec<f64>>,
}

fn label_char(bit: u8) -> Option<char> {
    match bit {
        1 => Some(GOOD_TOKEN),
        0 => Some(BAD_TOKEN),
        _ => None,
    }
}

fn label_bit(c: char) -> Result<u8> {
    match c {
        GOOD_TOKEN => Ok(1),
        BAD_TOKEN => Ok(0),
        other => Err(Error::InvalidArgument(format!("unknown label character {other:?}"))),
    }
}

fn check_step_text(text: &str) -> Result<()> {
    if text.contains(STEP_TOKEN) {
        return Err(Error::InvalidArgument(format!(
            "step text contains the reserved token {STEP_TOKEN}"
        )));
    }
    Ok(())
}

/// One PRM record per solution that has step records, in solution order.
/// Labels other than 0/1 (e.g. neutral) are rejected.
pub fn export_prm_training(
    records: &[LabeledStepRecord],
    problems: &[Problem],
    solutions: &[Solution],
) -> Result<Vec<PrmRecord>> {
    let prompts: HashMap<&str, &str> = problems.iter().map(|p| (p.id.as_str(), p.prompt.as_str())).collect();
    let mut grouped: BTreeMap<usize, BTreeMap<usize, u8>> = BTreeMap::new();
    for r in records {
        let slot = grouped.entry(r.solution_index).or_default();
        if slot.insert(r.step_index, r.label).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate record for step {}/{}",
                r.solution_index, r.step_index
            )));
        }
    }
    grouped
        .into_iter()
        .map(|(si, steps)| {
            let solution = solutions
                .get(si)
                .ok_or_else(|| Error::UnknownReference(format!("solution {si}")))?;
            let prompt = prompts
                .get(solution.problem_id.as_str())
                .ok_or_else(|| Error::UnknownReference(format!("problem {:?}", solution.problem_id)))?;
            let mut response = String::new();
            let mut labels = String::new();
            let mut features = Vec::with_capacity(steps.len());
            for (i, bit) in steps {
                let step = solution
                    .steps
                    .get(i)
                    .ok_or_else(|| Error::UnknownReference(format!("step {si}/{i}")))?;
                let c = label_char(bit).ok_or(Error::UnlabeledStep {
                    solution_index: si,
                    step_index: i,
                })?;
                check_step_text(&step.text)?;
                response.push_str(&step.text);
                response.push_str(STEP_TOKEN);
                labels.push(c);
                features.push(step.features.clone());
            }
            Ok(PrmRecord {
                problem_id: solution.problem_id.clone(),
                solution_index: si,
                prompt: (*prompt).to_owned(),
                response,
                labels,
                features,
            })
        })
        .collect()
}

/// One ORM record per `(original position, solution)` pair, in input order.
pub fn export_orm_training(
    problems: &[Problem],
    solutions: &[(usize, Solution)],
) -> Result<Vec<OrmRecord>> {
    let prompts: HashMap<&str, &str> = problems.iter().map(|p| (p.id.as_str(), p.prompt.as_str())).collect();
    solutions
        .iter()
        .map(|(si, s)| {
            let outcome = s.outcome_label.ok_or(Error::MissingOutcomeLabel(*si))?;
            let c = label_char(outcome).ok_or(Error::MissingOutcomeLabel(*si))?;
            for step in &s.steps {
                check_step_text(&step.text)?;
            }
            let prompt = prompts
                .get(s.problem_id.as_str())
                .ok_or_else(|| Error::UnknownReference(format!("problem {:?}", s.problem_id)))?;
            Ok(OrmRecord {
                problem_id: s.problem_id.clone(),
                solution_index: *si,
                prompt: (*prompt).to_owned(),
                response: format!("{}{STEP_TOKEN}", s.response_text()),
                label: c.to_string(),
                features: s.steps.iter().map(|st| st.features.clone()).collect(),
            })
        })
        .collect()
}

/// Serializes records as JSON lines.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses JSON lines, reporting the 1-based line of the first bad record.
pub fn from_jsonl<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: "<jsonl>".into(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Parses and checks PRM export text: every record must carry exactly one
/// label per `<step>` token and one feature row per step.
pub fn import_prm_training(text: &str) -> Result<Vec<PrmRecord>> {
    let records: Vec<PrmRecord> = from_jsonl(text)?;
    for (i, r) in records.iter().enumerate() {
        let steps = r.response.matches(STEP_TOKEN).count();
        let labels = r.labels.chars().count();
        if steps != labels || r.features.len() != labels || !r.response.ends_with(STEP_TOKEN) {
            return Err(Error::Parse {
                path: "<prm>".into(),
                line: i + 1,
                message: format!("{steps} step tokens, {labels} labels, {} feature rows", r.features.len()),
            });
        }
        r.label_bits()?;
    }
    Ok(records)
}

/// Step records described by PRM export lines, one per labeled step.
pub fn step_records_from_prm(records: &[PrmRecord]) -> Result<Vec<LabeledStepRecord>> {
    let mut out = Vec::new();
    for r in records {
        for (i, bit) in r.label_bits()?.into_iter().enumerate() {
            out.push(LabeledStepRecord {
                problem_id: r.problem_id.clone(),
                solution_index: r.solution_index,
                step_index: i,
                label: bit,
                source: LabelSource::ConsistencyKept,
                completer_names: Vec::new(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Step;

    fn sol(problem: &str, text: &str) -> Solution {
        Solution {
            problem_id: problem.into(),
            steps: text
                .split("\n\n")
                .map(|t| Step {
                    text: t.into(),
                    features: vec![0.0],
                    truth_label: None,
                    estimated_label: None,
                })
                .collect(),
            final_answer: String::new(),
            outcome_label: None,
            source_policy: "test".into(),
        }
    }

    fn rec(si: usize, step: usize, label: u8) -> LabeledStepRecord {
        LabeledStepRecord {
            problem_id: "p".into(),
            solution_index: si,
            step_index: step,
            label,
            source: LabelSource::ConsistencyKept,
            completer_names: vec![],
        }
    }

    #[test]
    fn filter_examples() {
        let rules = FilterRules::default();
        let out = filter_responses(&[sol("p", "short")], &rules);
        assert_eq!(out.rejected[0].reason, RejectReason::TooShort);
        assert_eq!(out.rejected[0].reason.to_string(), "too short");

        let rules = FilterRules {
            repetition_ngram: 1,
            repetition_max_count: 4,
            min_tokens: 1,
            ..Default::default()
        };
        let out = filter_responses(&[sol("p", "go go go go go go")], &rules);
        assert_eq!(out.rejected[0].reason.to_string(), "repetitive pattern");

        let out = filter_responses(&[sol("p", "one two three four five six")], &FilterRules::default());
        assert_eq!(out.kept, vec![0]);

        let tight = FilterRules {
            max_tokens: 5,
            min_tokens: 1,
            ..Default::default()
        };
        let out = filter_responses(&[sol("p", "one two three four five six")], &tight);
        assert_eq!(out.rejected[0].reason, RejectReason::TooLong);
    }

    #[test]
    fn custom_predicate() {
        let out = filter_responses_with(
            &[sol("p", "Prove that the sum is even, and so on")],
            &FilterRules::default(),
            |s| s.response_text().starts_with("Prove").then(|| "proof problem".to_owned()),
        );
        assert_eq!(out.rejected[0].reason.to_string(), "proof problem");
    }

    #[test]
    fn dedup_examples() {
        let rules = FilterRules::default();
        let same = [sol("p", "a b c d e f"), sol("p", "a b c d e f")];
        assert_eq!(ngram_dedup(&same, &rules), vec![0]);
        let disjoint = [sol("p", "a b c d"), sol("p", "w x y z")];
        assert_eq!(ngram_dedup(&disjoint, &rules), vec![0, 1]);
        // {abc, bcd, cde} vs {bcd, cde, def}: 2 shared of 4 -> 0.5
        let half = [sol("p", "a b c d e"), sol("p", "b c d e f")];
        let at_half = FilterRules {
            dedup_jaccard_threshold: 0.5,
            ..Default::default()
        };
        assert_eq!(ngram_dedup(&half, &at_half), vec![0]);
        assert_eq!(ngram_dedup(&half, &rules), vec![0, 1]);
        // identical text under different problems is not a duplicate
        let cross = [sol("p", "a b c d"), sol("q", "a b c d")];
        assert_eq!(ngram_dedup(&cross, &rules), vec![0, 1]);
    }

    #[test]
    fn outcome_examples() {
        let problems: Vec<Problem> = [("a", "55"), ("b", "6"), ("c", "1/2")]
            .iter()
            .map(|(id, g)| Problem {
                id: (*id).into(),
                prompt: "q".into(),
                golden_answer: (*g).into(),
                difficulty: 0.0,
                plan_length: 1,
                seed: 0,
            })
            .collect();
        let solutions = vec![
            sol("a", "work\n\nAnswer: $\\boxed{60}$"),
            sol("b", "count\n\nwe have \\boxed{6}"),
            sol("c", "half\n\nAnswer: 0.5"),
            sol("c", "no marker at all"),
        ];
        let out = assign_outcome_labels(&problems, &solutions).unwrap();
        let labels: Vec<_> = out.labeled.iter().map(|(_, s)| s.outcome_label.unwrap()).collect();
        assert_eq!(labels, vec![0, 1, 1]);
        assert_eq!(out.rejected.len(), 1);
        assert_eq!(out.rejected[0].index, 3);
    }

    #[test]
    fn upsample_examples() {
        let recs = vec![rec(0, 0, 1), rec(0, 1, 1), rec(0, 2, 1), rec(0, 3, 0)];
        assert_eq!(upsample_negatives(&recs, 1).unwrap(), recs);
        let up = upsample_negatives(&recs, 2).unwrap();
        assert_eq!(up.iter().filter(|r| r.label == 1).count(), 3);
        assert_eq!(up.iter().filter(|r| r.label == 0).count(), 2);
        assert!(upsample_negatives(&recs, 0).is_err());
    }

    #[test]
    fn distribution_examples() {
        let mut recs: Vec<_> = (0..79).map(|i| rec(0, i, 1)).collect();
        recs.extend((0..21).map(|i| rec(1, i, 0)));
        let d = label_distribution(&recs).unwrap();
        assert_eq!((d.good_fraction, d.bad_fraction), (0.79, 0.21));
        let up = label_distribution(&upsample_negatives(&recs, 2).unwrap()).unwrap();
        assert_eq!((up.good, up.bad), (79, 42));
        assert_eq!(up.good_fraction, 79.0 / 121.0);
        let all_good = label_distribution(&recs[..79]).unwrap();
        assert_eq!((all_good.good_fraction, all_good.bad_fraction), (1.0, 0.0));
        assert!(label_distribution(&[]).is_err());
    }

    fn export_fixture() -> (Vec<Problem>, Vec<Solution>) {
        let problems = vec![Problem {
            id: "p".into(),
            prompt: "q?".into(),
            golden_answer: "1".into(),
            difficulty: 0.0,
            plan_length: 2,
            seed: 0,
        }];
        let mut s = sol("p", "first\n\nsecond");
        s.outcome_label = Some(1);
        (problems, vec![s])
    }

    #[test]
    fn prm_export_examples() {
        let (problems, solutions) = export_fixture();
        let out = export_prm_training(&[rec(0, 0, 1), rec(0, 1, 0)], &problems, &solutions).unwrap();
        assert_eq!(out[0].labels, "+-");
        assert_eq!(out[0].response, "first<step>second<step>");
        let one = export_prm_training(&[rec(0, 0, 1)], &problems, &solutions).unwrap();
        assert!(one[0].response.ends_with("<step>"));
        assert_eq!(one[0].labels, "+");

        let text = to_jsonl(&out).unwrap();
        assert_eq!(import_prm_training(&text).unwrap(), out);

        let neutral = export_prm_training(&[rec(0, 0, 2)], &problems, &solutions);
        assert!(matches!(neutral, Err(Error::UnlabeledStep { .. })));
        let dup = export_prm_training(&[rec(0, 0, 1), rec(0, 0, 1)], &problems, &solutions);
        assert!(dup.is_err());
    }

    #[test]
    fn orm_export_examples() {
        let (problems, mut solutions) = export_fixture();
        let mut bad = solutions[0].clone();
        bad.outcome_label = Some(0);
        solutions.push(bad);
        let indexed: Vec<_> = solutions.iter().cloned().enumerate().collect();
        let out = export_orm_training(&problems, &indexed).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].label, "+");
        assert_eq!(out[1].label, "-");
        assert_eq!(out[0].response, "first\n\nsecond<step>");

        let mut missing = indexed.clone();
        missing[0].1.outcome_label = None;
        assert!(matches!(
            export_orm_training(&problems, &missing),
            Err(Error::MissingOutcomeLabel(0))
        ));
    }

    #[test]
    fn import_rejects_misaligned_labels() {
        let bad = r#"{"problem_id":"p","solution_index":0,"prompt":"q","response":"a<step>b<step>","labels":"+","features":[[0.0]]}"#;
        assert!(matches!(import_prm_training(bad), Err(Error::Parse { line: 1, .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn texts() -> impl Strategy<Value = Vec<(u8, String)>> {
            prop::collection::vec((0u8..3, prop::collection::vec("[a-d]", 1..8)), 0..12)
                .prop_map(|v| v.into_iter().map(|(p, w)| (p, w.join(" "))).collect())
        }

        proptest! {
            #[test]
            fn dedup_is_idempotent(items in texts(), threshold in 0.0f64..=1.0) {
                let sols: Vec<Solution> = items.iter().map(|(p, t)| sol(&format!("p{p}"), t)).collect();
                let rules = FilterRules { dedup_jaccard_threshold: threshold, ..Default::default() };
                let once = ngram_dedup(&sols, &rules);
                let subset: Vec<Solution> = once.iter().map(|&i| sols[i].clone()).collect();
                let twice = ngram_dedup(&subset, &rules);
                prop_assert_eq!(twice, (0..subset.len()).collect::<Vec<_>>());
            }

            #[test]
            fn upsampling_only_changes_negative_multiplicity(labels in prop::collection::vec(0u8..2, 0..40), rate in 1usize..5) {
                let recs: Vec<_> = labels.iter().enumerate().map(|(i, &l)| rec(i, 0, l)).collect();
                let up = upsample_negatives(&recs, rate).unwrap();
                for r in &recs {
                    let n = up.iter().filter(|u| *u == r).count();
                    prop_assert_eq!(n, if r.label == 0 { rate } else { 1 });
                }
                let mut dedup = up.clone();
                dedup.dedup();
                prop_assert_eq!(dedup, recs);
            }

            #[test]
            fn prm_tokens_match_labels(labels in prop::collection::vec(0u8..2, 1..10)) {
                let problems = vec![Problem { id: "p".into(), prompt: "q".into(), golden_answer: "1".into(), difficulty: 0.0, plan_length: 1, seed: 0 }];
                let text: Vec<String> = (0..labels.len()).map(|i| format!("step {i}")).collect();
                let solutions = vec![sol("p", &text.join("\n\n"))];
                let recs: Vec<_> = labels.iter().enumerate().map(|(i, &l)| rec(0, i, l)).collect();
                let out = export_prm_training(&recs, &problems, &solutions).unwrap();
                prop_assert_eq!(out[0].response.matches(STEP_TOKEN).count(), out[0].labels.len());
                prop_assert_eq!(out[0].steps().len(), labels.len());
            }
        }
    }
}
