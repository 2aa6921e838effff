//! Synthetic multi-step arithmetic problems with known step correctness,
//! a sampling policy, and two-knob rollout completers.
//!
//! A problem hides a plan of `plan_length` integer operations. The golden
//! answer is the result of applying the plan to a start value. The policy
//! writes one step per operation; each step is independently wrong with
//! probability `step_error_rate`. Step features are the truth signal
//! (`+1` correct, `-1` incorrect) scaled by a fixed per-dimension profile,
//! plus Gaussian noise of spread `feature_noise`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_path, derive_rng_stream, stream_rng};
use crate::types::{
    CompleterConfig, Problem, Solution, Step, TruthLabel, DEFAULT_FEATURE_DIM,
};
use crate::verify;

/// Signal strength per feature dimension; dimensions past the profile carry
/// pure noise.
pub const SIGNAL_PROFILE: [f64; 3] = [1.0, 0.6, 0.3];

const PLAN_STREAM: u64 = 0x504c_414e;
const ANSWER_STREAM: u64 = 0x414e_5357;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulatorConfig {
    pub feature_dim: usize,
    pub feature_noise: f64,
    pub step_error_rate: f64,
    pub plan_length_range: [u32; 2],
    pub difficulty_range: [f64; 2],
    /// Wrong answers are the golden answer plus a non-zero offset in
    /// `[-wrong_answer_spread, wrong_answer_spread]`.
    pub wrong_answer_spread: i64,
    /// Finishing behaviour of the sampling policy.
    pub policy: CompleterConfig,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            feature_dim: DEFAULT_FEATURE_DIM,
            feature_noise: 1.0,
            step_error_rate: 0.2,
            plan_length_range: [3, 8],
            difficulty_range: [0.0, 1.0],
            wrong_answer_spread: 3,
            policy: CompleterConfig {
                name: "policy".into(),
                p_solve_base: 0.95,
                difficulty_slope: 0.15,
                p_recover: 0.1,
                seed_offset: 0,
            },
        }
    }
}

impl SimulatorConfig {
    pub fn validate(&self, path: &str, out: &mut Vec<String>) {
        if self.feature_dim == 0 {
            out.push(format!("{path}.feature_dim: must be >= 1"));
        }
        if !(self.feature_noise >= 0.0) {
            out.push(format!("{path}.feature_noise: must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.step_error_rate) {
            out.push(format!("{path}.step_error_rate: must lie in [0, 1]"));
        }
        let [lo, hi] = self.plan_length_range;
        if lo < 1 || lo > hi {
            out.push(format!("{path}.plan_length_range: need 1 <= min <= max"));
        }
        let [dlo, dhi] = self.difficulty_range;
        if !(0.0..=1.0).contains(&dlo) || !(0.0..=1.0).contains(&dhi) || dlo > dhi {
            out.push(format!("{path}.difficulty_range: need 0 <= lo <= hi <= 1"));
        }
        if self.wrong_answer_spread < 1 {
            out.push(format!("{path}.wrong_answer_spread: must be >= 1"));
        }
        self.policy.validate(&format!("{path}.policy"), out);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutOutcome {
    pub final_answer: String,
    pub correct: bool,
    pub steps_generated: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Add(i64),
    Sub(i64),
    Mul(i64),
}

impl Op {
    fn apply(self, v: i64) -> i64 {
        match self {
            Op::Add(k) => v + k,
            Op::Sub(k) => v - k,
            Op::Mul(k) => v * k,
        }
    }

    fn describe(self) -> String {
        match self {
            Op::Add(k) => format!("add {k}"),
            Op::Sub(k) => format!("subtract {k}"),
            Op::Mul(k) => format!("multiply by {k}"),
        }
    }

    fn symbol(self) -> (char, i64) {
        match self {
            Op::Add(k) => ('+', k),
            Op::Sub(k) => ('-', k),
            Op::Mul(k) => ('*', k),
        }
    }
}

struct Plan {
    start: i64,
    ops: Vec<Op>,
}

impl Plan {
    fn result(&self) -> i64 {
        self.ops.iter().fold(self.start, |v, op| op.apply(v))
    }
}

/// The hidden plan is a function of `(seed, plan_length)` only, so it can be
/// rebuilt from a [`Problem`] record.
fn hidden_plan(seed: u64, plan_length: u32) -> Plan {
    let mut rng = stream_rng(derive_rng_stream(seed, PLAN_STREAM));
    let start = rng.random_range(2..=20);
    let ops = (0..plan_length)
        .map(|_| match rng.random_range(0..3) {
            0 => Op::Add(rng.random_range(1..=9)),
            1 => Op::Sub(rng.random_range(1..=9)),
            _ => Op::Mul(rng.random_range(2..=3)),
        })
        .collect();
    Plan { start, ops }
}

pub fn generate_problem(seed: u64, config: &SimulatorConfig) -> Problem {
    let mut rng = stream_rng(seed);
    let [lo, hi] = config.plan_length_range;
    let plan_length = rng.random_range(lo..=hi);
    let [dlo, dhi] = config.difficulty_range;
    let difficulty = if dlo < dhi {
        rng.random_range(dlo..=dhi)
    } else {
        dlo
    };
    let plan = hidden_plan(seed, plan_length);
    let ops: Vec<String> = plan.ops.iter().map(|op| op.describe()).collect();
    Problem {
        id: format!("sim-{seed:016x}"),
        prompt: format!(
            "Start with {}. Then {}. What is the final value?",
            plan.start,
            ops.join(", then ")
        ),
        golden_answer: plan.result().to_string(),
        difficulty,
        plan_length,
        seed,
    }
}

/// `count` problems whose seeds derive from `(master_seed, i)`.
pub fn generate_problems(master_seed: u64, count: usize, config: &SimulatorConfig) -> Vec<Problem> {
    (0..count as u64)
        .map(|i| generate_problem(derive_rng_stream(master_seed, i), config))
        .collect()
}

fn wrong_answer(golden: &str, spread: i64, rng: &mut ChaCha8Rng) -> String {
    let spread = spread.max(1);
    let mut offset = rng.random_range(-spread..spread);
    if offset >= 0 {
        offset += 1;
    }
    match golden.parse::<i64>() {
        Ok(g) => (g + offset).to_string(),
        Err(_) => format!("{golden}{offset:+}"),
    }
}

fn step_features(truth: TruthLabel, config: &SimulatorConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let signal = if truth.is_correct() { 1.0 } else { -1.0 };
    (0..config.feature_dim)
        .map(|j| {
            let strength = SIGNAL_PROFILE.get(j).copied().unwrap_or(0.0);
            let z: f64 = StandardNormal.sample(rng);
            signal * strength + config.feature_noise * z
        })
        .collect()
}

fn step_text(index: usize, op: Op, before: i64, after: i64, variant: u32) -> String {
    let n = index + 1;
    let (sym, k) = op.symbol();
    match variant {
        0 => format!("Step {n}: we {} to {before}, which gives {after}.", op.describe()),
        1 => format!("Next, {before} {sym} {k} = {after}."),
        2 => format!("Applying operation {n} ({sym}{k}) to {before} yields {after}."),
        _ => format!("Now {} the current value {before}; the running total becomes {after}.", op.describe()),
    }
}

/// One policy response. Deterministic in `(problem, config, stream)`.
pub fn policy_sample(problem: &Problem, config: &SimulatorConfig, stream: u64) -> Solution {
    let mut rng = stream_rng(stream);
    let plan = hidden_plan(problem.seed, problem.plan_length);
    let mut value = plan.start;
    let mut steps = Vec::with_capacity(plan.ops.len());
    for (i, &op) in plan.ops.iter().enumerate() {
        let truth = if rng.random_bool(config.step_error_rate) {
            TruthLabel::Incorrect
        } else {
            TruthLabel::Correct
        };
        let before = value;
        let mut after = op.apply(value);
        if truth == TruthLabel::Incorrect {
            let slip = rng.random_range(1..=3) * if rng.random_bool(0.5) { 1 } else { -1 };
            after += slip;
        }
        value = after;
        let variant = rng.random_range(0..4);
        steps.push(Step {
            text: step_text(i, op, before, after, variant),
            features: step_features(truth, config, &mut rng),
            truth_label: Some(truth),
            estimated_label: None,
        });
    }
    let erred = steps
        .iter()
        .any(|s| s.truth_label == Some(TruthLabel::Incorrect));
    let p = if erred {
        config.policy.p_recover
    } else {
        config.policy.p_solve(problem.difficulty)
    };
    let correct = rng.random_bool(p);
    let final_answer = if correct {
        problem.golden_answer.clone()
    } else {
        wrong_answer(&problem.golden_answer, config.wrong_answer_spread, &mut rng)
    };
    if let Some(last) = steps.last_mut() {
        last.text
            .push_str(&format!(" The answer is $\\boxed{{{final_answer}}}$."));
    }
    let outcome_label = Some(u8::from(verify::answers_equal(
        &final_answer,
        &problem.golden_answer,
    )));
    Solution {
        problem_id: problem.id.clone(),
        steps,
        final_answer,
        outcome_label,
        source_policy: config.policy.name.clone(),
    }
}

/// `n` samples for one problem; sample `j` uses stream `(stream, j)` so a
/// pool of size `n` is a prefix of any larger pool.
pub fn sample_pool(problem: &Problem, config: &SimulatorConfig, n: usize, stream: u64) -> Vec<Solution> {
    (0..n as u64)
        .map(|j| policy_sample(problem, config, derive_rng_stream(stream, j)))
        .collect()
}

/// Finishes a solution from `prefix`. The prefix must carry truth labels.
pub fn completer_rollout(
    problem: &Problem,
    prefix: &[Step],
    completer: &CompleterConfig,
    stream: u64,
) -> Result<RolloutOutcome> {
    let mut erred = false;
    for step in prefix {
        match step.truth_label {
            None => return Err(Error::UnlabeledPrefix),
            Some(TruthLabel::Incorrect) => erred = true,
            Some(TruthLabel::Correct) => {}
        }
    }
    let p = if erred {
        completer.p_recover
    } else {
        completer.p_solve(problem.difficulty)
    };
    let mut rng = stream_rng(derive_rng_stream(stream, ANSWER_STREAM));
    let correct = rng.random_bool(p);
    let final_answer = if correct {
        problem.golden_answer.clone()
    } else {
        wrong_answer(&problem.golden_answer, 3, &mut rng)
    };
    Ok(RolloutOutcome {
        final_answer,
        correct,
        steps_generated: problem.plan_length.saturating_sub(prefix.len() as u32).max(1),
    })
}

/// Problems plus `per_problem` policy samples each, all seeded from
/// `master_seed`. Solutions are ordered by problem, then sample index.
pub fn synthetic_benchmark(
    master_seed: u64,
    problems: usize,
    per_problem: usize,
    config: &SimulatorConfig,
) -> (Vec<Problem>, Vec<Solution>) {
    let problems = generate_problems(derive_rng_stream(master_seed, 1), problems, config);
    let solutions = problems
        .iter()
        .enumerate()
        .flat_map(|(i, p)| sample_pool(p, config, per_problem, derive_path(master_seed, &[2, i as u64])))
        .collect();
    (problems, solutions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let c = SimulatorConfig::default();
        let a = serde_json::to_string(&generate_problem(7, &c)).unwrap();
        let b = serde_json::to_string(&generate_problem(7, &c)).unwrap();
        assert_eq!(a, b);
        assert_ne!(generate_problem(7, &c).id, generate_problem(8, &c).id);
    }

    #[test]
    fn degenerate_plan_range() {
        let c = SimulatorConfig {
            plan_length_range: [3, 3],
            ..Default::default()
        };
        for p in generate_problems(1, 50, &c) {
            assert_eq!(p.plan_length, 3);
        }
    }

    #[test]
    fn golden_answer_matches_the_plan() {
        let c = SimulatorConfig {
            step_error_rate: 0.0,
            ..Default::default()
        };
        for p in generate_problems(3, 20, &c) {
            let s = policy_sample(&p, &c, 5);
            // an error-free trace ends on the golden value
            let last = &s.steps.last().unwrap().text;
            let before_box = last.split(" The answer is").next().unwrap();
            assert!(before_box.ends_with(&format!("{}.", p.golden_answer)), "{last}");
        }
    }

    #[test]
    fn degenerate_error_rates() {
        let p = generate_problem(11, &SimulatorConfig::default());
        for (rate, want) in [(0.0, TruthLabel::Correct), (1.0, TruthLabel::Incorrect)] {
            let c = SimulatorConfig {
                step_error_rate: rate,
                ..Default::default()
            };
            for k in 0..20 {
                let s = policy_sample(&p, &c, k);
                assert!(s.steps.iter().all(|st| st.truth_label == Some(want)));
            }
        }
    }

    #[test]
    fn step_error_frequency_matches_rate() {
        let c = SimulatorConfig::default();
        let problems = generate_problems(5, 100, &c);
        let (mut bad, mut total) = (0usize, 0usize);
        let mut i = 0u64;
        while i < 10_000 {
            let p = &problems[(i % 100) as usize];
            let s = policy_sample(p, &c, derive_rng_stream(77, i));
            bad += s.steps.iter().filter(|st| st.truth_label == Some(TruthLabel::Incorrect)).count();
            total += s.steps.len();
            i += 1;
        }
        let rate = bad as f64 / total as f64;
        assert!((rate - c.step_error_rate).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn outcome_and_boxed_answer_agree() {
        let c = SimulatorConfig::default();
        let p = generate_problem(21, &c);
        for k in 0..50 {
            let s = policy_sample(&p, &c, k);
            let boxed = verify::extract_final_answer(&s.response_text()).unwrap();
            assert_eq!(boxed, s.final_answer);
            assert_eq!(
                s.outcome_label,
                Some(u8::from(verify::answers_equal(&s.final_answer, &p.golden_answer)))
            );
            assert!(s.has_truth());
        }
    }

    fn erroneous_prefix(p: &Problem) -> Vec<Step> {
        let c = SimulatorConfig {
            step_error_rate: 1.0,
            ..Default::default()
        };
        policy_sample(p, &c, 3).steps[..1].to_vec()
    }

    fn correct_rate(p: &Problem, prefix: &[Step], completer: &CompleterConfig, n: u64, seed: u64) -> f64 {
        (0..n)
            .filter(|&j| {
                completer_rollout(p, prefix, completer, derive_rng_stream(seed, j))
                    .unwrap()
                    .correct
            })
            .count() as f64
            / n as f64
    }

    #[test]
    fn degenerate_completers() {
        let p = generate_problem(9, &SimulatorConfig::default());
        let bad = erroneous_prefix(&p);
        let never = CompleterConfig {
            p_recover: 0.0,
            ..CompleterConfig::strong()
        };
        assert_eq!(correct_rate(&p, &bad, &never, 200, 1), 0.0);
        let always = CompleterConfig {
            p_solve_base: 1.0,
            difficulty_slope: 0.0,
            ..CompleterConfig::strong()
        };
        assert_eq!(correct_rate(&p, &[], &always, 200, 1), 1.0);
    }

    #[test]
    fn strong_recovers_where_weak_fails() {
        let p = generate_problem(9, &SimulatorConfig::default());
        let bad = erroneous_prefix(&p);
        let strong = correct_rate(&p, &bad, &CompleterConfig::strong(), 1000, 2);
        let weak = correct_rate(&p, &bad, &CompleterConfig::weak(), 1000, 2);
        assert!(strong - weak >= 0.4, "strong {strong} weak {weak}");
    }

    #[test]
    fn recovery_is_monotone() {
        let p = generate_problem(9, &SimulatorConfig::default());
        let bad = erroneous_prefix(&p);
        for seed in 0..5 {
            let mut last = -1.0;
            for rec in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9] {
                let c = CompleterConfig {
                    p_recover: rec,
                    ..CompleterConfig::strong()
                };
                // common random numbers across p_recover values
                let r = correct_rate(&p, &bad, &c, 2000, seed);
                assert!(r >= last, "seed {seed} rec {rec}: {r} < {last}");
                last = r;
            }
        }
    }

    #[test]
    fn rollout_needs_truth_labels() {
        let p = generate_problem(9, &SimulatorConfig::default());
        let mut prefix = erroneous_prefix(&p);
        prefix[0].truth_label = None;
        assert!(matches!(
            completer_rollout(&p, &prefix, &CompleterConfig::weak(), 0),
            Err(Error::UnlabeledPrefix)
        ));
    }

    #[test]
    fn pools_are_nested() {
        let c = SimulatorConfig::default();
        let p = generate_problem(4, &c);
        let small = sample_pool(&p, &c, 4, 99);
        let big = sample_pool(&p, &c, 16, 99);
        assert_eq!(&big[..4], &small[..]);
    }
}
