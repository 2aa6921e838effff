//! Outcome/process losses, reward aggregation and a logistic step scorer.
//!
//! The scorer maps step features to `sigmoid(w . x + b)`. A training example
//! is one solution; its loss is the sum of per-step cross-entropies and a
//! minibatch loss is the mean over examples.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::curate::{OrmRecord, PrmRecord};
use crate::error::{Error, Result};
use crate::rng::{derive_rng_stream, stream_rng};
use crate::types::Solution;

/// Rewards are clamped to `[REWARD_FLOOR, 1 - REWARD_FLOOR]` inside the
/// reward-space losses.
pub const REWARD_FLOOR: f64 = 1e-12;

/// Largest f64 below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

fn open_unit(x: f64) -> f64 {
    x.clamp(f64::MIN_POSITIVE, BELOW_ONE)
}

/// Logistic function, kept strictly inside (0, 1).
pub fn sigmoid(z: f64) -> f64 {
    let s = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    open_unit(s)
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn check_reward(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::RewardOutOfRange(r));
    }
    Ok(r.clamp(REWARD_FLOOR, 1.0 - REWARD_FLOOR))
}

fn cross_entropy(r: f64, label: u8) -> f64 {
    if label == 1 {
        -r.ln()
    } else {
        -(-r).ln_1p()
    }
}

/// Binary cross-entropy of one solution-level reward.
pub fn orm_loss(reward: f64, label: u8) -> Result<f64> {
    check_label(label)?;
    Ok(cross_entropy(check_reward(reward)?, label))
}

/// Sum of per-step cross-entropies.
pub fn prm_loss(rewards: &[f64], labels: &[u8]) -> Result<f64> {
    if rewards.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: rewards.len(),
            right: labels.len(),
        });
    }
    if rewards.is_empty() {
        return Err(Error::EmptyInput("step rewards"));
    }
    rewards
        .iter()
        .zip(labels)
        .map(|(&r, &l)| orm_loss(r, l))
        .sum()
}

fn check_label(label: u8) -> Result<()> {
    if label > 1 {
        return Err(Error::InvalidArgument(format!("label {label} is not binary")));
    }
    Ok(())
}

/// Probability of the "+" token from the pair of "+"/"-" logits.
pub fn logits_to_step_reward(logit_plus: f64, logit_minus: f64) -> Result<f64> {
    if !logit_plus.is_finite() || !logit_minus.is_finite() {
        return Err(Error::NonFinite("logit"));
    }
    Ok(sigmoid(logit_plus - logit_minus))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationStrategy {
    #[default]
    Minimum,
    Last,
    Product,
}

impl AggregationStrategy {
    pub fn name(self) -> &'static str {
        match self {
            AggregationStrategy::Minimum => "min",
            AggregationStrategy::Last => "last",
            AggregationStrategy::Product => "product",
        }
    }
}

pub fn aggregate(rewards: &[f64], strategy: AggregationStrategy) -> Result<f64> {
    let last = *rewards.last().ok_or(Error::EmptyInput("step rewards"))?;
    for &r in rewards {
        check_reward(r)?;
    }
    Ok(match strategy {
        AggregationStrategy::Minimum => rewards.iter().copied().fold(f64::INFINITY, f64::min),
        AggregationStrategy::Last => last,
        AggregationStrategy::Product => rewards.iter().product(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ScorerParams {
    pub fn zeros(feature_dim: usize) -> Self {
        Self {
            weights: vec![0.0; feature_dim],
            bias: 0.0,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    pub fn logit(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.weights.len() {
            return Err(Error::FeatureDim {
                expected: self.weights.len(),
                got: features.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(features)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias)
    }

    pub fn step_reward(&self, features: &[f64]) -> Result<f64> {
        self.logit(features).map(sigmoid)
    }
}

/// Per-step rewards for a solution.
pub trait StepRewarder: Sync {
    fn step_rewards(&self, solution: &Solution) -> Result<Vec<f64>>;
}

impl StepRewarder for ScorerParams {
    fn step_rewards(&self, solution: &Solution) -> Result<Vec<f64>> {
        score_solution(self, solution)
    }
}

pub fn score_solution(params: &ScorerParams, solution: &Solution) -> Result<Vec<f64>> {
    solution
        .steps
        .iter()
        .map(|s| params.step_reward(&s.features))
        .collect()
}

/// Hard step predictions: 1 iff the reward is at least 0.5.
pub fn predict_labels(params: &ScorerParams, solution: &Solution) -> Result<Vec<u8>> {
    Ok(score_solution(params, solution)?
        .into_iter()
        .map(|r| u8::from(r >= 0.5))
        .collect())
}

/// One solution's worth of supervision: a feature row and a label per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainExample {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl TrainExample {
    fn check(&self, dim: usize) -> Result<()> {
        if self.features.len() != self.labels.len() {
            return Err(Error::LengthMismatch {
                left: self.features.len(),
                right: self.labels.len(),
            });
        }
        for row in &self.features {
            if row.len() != dim {
                return Err(Error::FeatureDim {
                    expected: dim,
                    got: row.len(),
                });
            }
        }
        for &l in &self.labels {
            check_label(l)?;
        }
        Ok(())
    }
}

/// Outcome supervision for every step of every outcome-labeled solution.
/// With `broadcast` off only the final step is supervised.
pub fn outcome_examples(solutions: &[Solution], broadcast: bool) -> Vec<TrainExample> {
    solutions
        .iter()
        .filter_map(|s| {
            let label = s.outcome_label?;
            let steps: &[_] = if broadcast {
                &s.steps
            } else {
                s.steps.last().map(std::slice::from_ref)?
            };
            Some(TrainExample {
                features: steps.iter().map(|st| st.features.clone()).collect(),
                labels: vec![label; steps.len()],
            })
        })
        .collect()
}

/// Examples built from (possibly up-sampled) step records. Copy `c` of a
/// solution holds the steps whose multiplicity exceeds `c`, so copy 0 is
/// the full labeled solution and later copies carry the duplicated
/// negatives.
pub fn step_examples(
    records: &[crate::label::LabeledStepRecord],
    solutions: &[Solution],
) -> Result<Vec<TrainExample>> {
    use std::collections::BTreeMap;
    let mut copies: BTreeMap<(usize, usize), Vec<(usize, u8)>> = BTreeMap::new();
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for r in records {
        let c = seen.entry((r.solution_index, r.step_index)).or_default();
        copies
            .entry((r.solution_index, *c))
            .or_default()
            .push((r.step_index, r.label));
        *c += 1;
    }
    copies
        .into_iter()
        .map(|((si, _), steps)| {
            let s = solutions
                .get(si)
                .ok_or_else(|| Error::UnknownReference(format!("solution {si}")))?;
            let mut features = Vec::with_capacity(steps.len());
            let mut labels = Vec::with_capacity(steps.len());
            for (i, l) in steps {
                let step = s
                    .steps
                    .get(i)
                    .ok_or_else(|| Error::UnknownReference(format!("step {si}/{i}")))?;
                features.push(step.features.clone());
                labels.push(l);
            }
            Ok(TrainExample { features, labels })
        })
        .collect()
}

impl TryFrom<&PrmRecord> for TrainExample {
    type Error = Error;

    fn try_from(r: &PrmRecord) -> Result<Self> {
        Ok(TrainExample {
            features: r.features.clone(),
            labels: r.label_bits()?,
        })
    }
}

impl OrmRecord {
    fn bit(&self) -> Result<u8> {
        match self.label.as_str() {
            "+" => Ok(1),
            "-" => Ok(0),
            other => Err(Error::InvalidArgument(format!("unknown ORM label {other:?}"))),
        }
    }

    /// Outcome label broadcast to every step.
    pub fn broadcast_example(&self) -> Result<TrainExample> {
        let bit = self.bit()?;
        Ok(TrainExample {
            features: self.features.clone(),
            labels: vec![bit; self.features.len()],
        })
    }

    /// Outcome label on the final step only.
    pub fn last_step_example(&self) -> Result<TrainExample> {
        let bit = self.bit()?;
        let last = self
            .features
            .last()
            .ok_or(Error::EmptyInput("ORM record features"))?;
        Ok(TrainExample {
            features: vec![last.clone()],
            labels: vec![bit],
        })
    }
}

/// Phase-1 examples from ORM export lines.
pub fn orm_examples(records: &[OrmRecord], broadcast: bool) -> Result<Vec<TrainExample>> {
    records
        .iter()
        .map(|r| {
            if broadcast {
                r.broadcast_example()
            } else {
                r.last_step_example()
            }
        })
        .collect()
}

/// Step examples from PRM export lines with label-0 steps repeated `rate`
/// times. Grouping matches [`step_examples`] over
/// [`upsample_negatives`](crate::curate::upsample_negatives) output: the
/// full record first, then `rate - 1` copies holding only its negatives.
pub fn prm_examples(records: &[PrmRecord], rate: usize) -> Result<Vec<TrainExample>> {
    if rate == 0 {
        return Err(Error::InvalidArgument("up-sample rate must be at least 1".into()));
    }
    let mut out = Vec::new();
    for r in records {
        let full = TrainExample::try_from(r)?;
        let negatives = TrainExample {
            features: full
                .features
                .iter()
                .zip(&full.labels)
                .filter(|(_, &l)| l == 0)
                .map(|(f, _)| f.clone())
                .collect(),
            labels: full.labels.iter().copied().filter(|&l| l == 0).collect(),
        };
        out.push(full);
        if !negatives.labels.is_empty() {
            out.extend(std::iter::repeat_n(negatives, rate - 1));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainPhase {
    #[default]
    Single,
    TwoPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub phase: TrainPhase,
    pub seed: u64,
    /// Phase-1 supervision: broadcast the outcome to every step (default)
    /// or supervise only the final step.
    pub outcome_broadcast: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            epochs: 1,
            batch_size: 16,
            phase: TrainPhase::Single,
            seed: 0,
            outcome_broadcast: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, path: &str, out: &mut Vec<String>) {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            out.push(format!("{path}.learning_rate: must be a finite value >= 0"));
        }
        if self.epochs < 1 {
            out.push(format!("{path}.epochs: must be >= 1"));
        }
        if self.batch_size < 1 {
            out.push(format!("{path}.batch_size: must be >= 1"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        (self.weights.iter().map(|g| g * g).sum::<f64>() + self.bias * self.bias).sqrt()
    }
}

fn example_loss(params: &ScorerParams, ex: &TrainExample) -> Result<f64> {
    let mut total = 0.0;
    for (x, &y) in ex.features.iter().zip(&ex.labels) {
        let z = params.logit(x)?;
        total += softplus(z) - f64::from(y) * z;
    }
    Ok(total)
}

/// Mean over examples of the summed step cross-entropy, computed from
/// logits (no reward clamping).
pub fn batch_loss(params: &ScorerParams, batch: &[TrainExample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let mut total = 0.0;
    for ex in batch {
        total += example_loss(params, ex)?;
    }
    Ok(total / batch.len() as f64)
}

/// Analytic gradient of [`batch_loss`].
pub fn gradient(params: &ScorerParams, batch: &[TrainExample]) -> Result<Gradient> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let mut g = Gradient {
        weights: vec![0.0; params.feature_dim()],
        bias: 0.0,
    };
    for ex in batch {
        for (x, &y) in ex.features.iter().zip(&ex.labels) {
            let z = params.logit(x)?;
            // sigma(z) - y, unclamped
            let residual = if z >= 0.0 {
                1.0 / (1.0 + (-z).exp())
            } else {
                let e = z.exp();
                e / (1.0 + e)
            } - f64::from(y);
            for (gw, xi) in g.weights.iter_mut().zip(x) {
                *gw += residual * xi;
            }
            g.bias += residual;
        }
    }
    let n = batch.len() as f64;
    g.weights.iter_mut().for_each(|w| *w /= n);
    g.bias /= n;
    Ok(g)
}

/// Minibatch gradient descent from `init`. Example order is reshuffled each
/// epoch from `(seed, epoch)`. The returned trace holds the full training
/// loss before the first epoch and after each epoch.
pub fn descend(
    init: ScorerParams,
    examples: &[TrainExample],
    config: &TrainConfig,
    seed: u64,
) -> Result<(ScorerParams, Vec<f64>)> {
    if examples.is_empty() {
        return Err(Error::EmptyInput("training examples"));
    }
    for ex in examples {
        ex.check(init.feature_dim())?;
    }
    let mut params = init;
    let mut trace = vec![batch_loss(&params, examples)?];
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let batch_size = config.batch_size.max(1);
    for epoch in 0..config.epochs {
        order.sort_unstable();
        order.shuffle(&mut stream_rng(derive_rng_stream(seed, epoch as u64)));
        for chunk in order.chunks(batch_size) {
            let batch: Vec<TrainExample> = chunk.iter().map(|&i| examples[i].clone()).collect();
            let g = gradient(&params, &batch)?;
            for (w, gw) in params.weights.iter_mut().zip(&g.weights) {
                *w -= config.learning_rate * gw;
            }
            params.bias -= config.learning_rate * g.bias;
        }
        trace.push(batch_loss(&params, examples)?);
    }
    Ok((params, trace))
}

/// Supervision for [`train`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    /// Outcome-labeled examples (phase 1 of two-phase training).
    pub outcome: Vec<TrainExample>,
    /// Step-labeled examples.
    pub steps: Vec<TrainExample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trained {
    pub params: ScorerParams,
    /// Phase-1 parameters when two-phase training ran.
    pub outcome_params: Option<ScorerParams>,
    pub outcome_trace: Vec<f64>,
    pub loss_trace: Vec<f64>,
}

pub fn train(set: &TrainingSet, config: &TrainConfig, feature_dim: usize) -> Result<Trained> {
    let init = ScorerParams::zeros(feature_dim);
    match config.phase {
        TrainPhase::Single => {
            let (params, loss_trace) = descend(init, &set.steps, config, config.seed)?;
            Ok(Trained {
                params,
                outcome_params: None,
                outcome_trace: Vec::new(),
                loss_trace,
            })
        }
        TrainPhase::TwoPhase => {
            if set.steps.is_empty() {
                return Err(Error::EmptyInput("phase-2 step records"));
            }
            let (orm, outcome_trace) = descend(init, &set.outcome, config, config.seed)?;
            let (params, loss_trace) =
                descend(orm.clone(), &set.steps, config, derive_rng_stream(config.seed, 2))?;
            Ok(Trained {
                params,
                outcome_params: Some(orm),
                outcome_trace,
                loss_trace,
            })
        }
    }
}

/// Trains an outcome-only scorer (phase 1 alone).
pub fn train_outcome(examples: &[TrainExample], config: &TrainConfig, feature_dim: usize) -> Result<ScorerParams> {
    descend(ScorerParams::zeros(feature_dim), examples, config, config.seed).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loss_examples() {
        assert!(orm_loss(1.0 - 1e-15, 1).unwrap() < 1e-11);
        let ln2 = std::f64::consts::LN_2;
        assert!((orm_loss(0.5, 1).unwrap() - ln2).abs() < 1e-15);
        assert!((orm_loss(0.5, 0).unwrap() - ln2).abs() < 1e-15);
        assert!((orm_loss(0.3, 1).unwrap() - orm_loss(0.7, 0).unwrap()).abs() < 1e-15);
        assert!(matches!(orm_loss(1.0, 1), Err(Error::RewardOutOfRange(_))));
        assert!(matches!(orm_loss(0.0, 0), Err(Error::RewardOutOfRange(_))));

        assert_eq!(prm_loss(&[0.3], &[1]).unwrap(), orm_loss(0.3, 1).unwrap());
        assert!((prm_loss(&[0.5, 0.5], &[1, 0]).unwrap() - 2.0 * ln2).abs() < 1e-15);
        assert!(prm_loss(&[1.0 - 1e-15, 1e-15], &[1, 0]).unwrap() < 1e-11);
        assert!(matches!(prm_loss(&[0.5], &[1, 0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn reward_floor_is_applied() {
        // 1e-15 is clamped to 1e-12 before the log
        assert_eq!(orm_loss(1e-15, 1).unwrap(), -(1e-12f64).ln());
    }

    #[test]
    fn logit_examples() {
        assert_eq!(logits_to_step_reward(3.0, 3.0).unwrap(), 0.5);
        let r = logits_to_step_reward(10.0, -10.0).unwrap();
        assert!((r - 0.999_999_997_938_846_3).abs() < 1e-16, "{r}");
        assert!(logits_to_step_reward(f64::NAN, 0.0).is_err());
        for d in [-700.0, 700.0] {
            let r = logits_to_step_reward(d, 0.0).unwrap();
            assert!(r > 0.0 && r < 1.0);
        }
    }

    #[test]
    fn aggregate_examples() {
        let case = [0.90, 0.87, 0.96, 0.83, 0.34, 0.15, 0.04];
        assert_eq!(aggregate(&case, AggregationStrategy::Minimum).unwrap(), 0.04);
        assert_eq!(aggregate(&case, AggregationStrategy::Last).unwrap(), 0.04);
        assert_eq!(aggregate(&[0.5, 0.5], AggregationStrategy::Product).unwrap(), 0.25);
        assert!(aggregate(&[], AggregationStrategy::Minimum).is_err());
    }

    fn sol(rows: Vec<Vec<f64>>) -> Solution {
        Solution {
            problem_id: "p".into(),
            steps: rows
                .into_iter()
                .map(|features| crate::types::Step {
                    text: "s".into(),
                    features,
                    truth_label: None,
                    estimated_label: None,
                })
                .collect(),
            final_answer: "1".into(),
            outcome_label: None,
            source_policy: "t".into(),
        }
    }

    #[test]
    fn scoring_examples() {
        let zero = ScorerParams::zeros(2);
        assert_eq!(score_solution(&zero, &sol(vec![vec![1.0, 2.0], vec![-3.0, 0.5]])).unwrap(), vec![0.5, 0.5]);
        assert_eq!(score_solution(&zero, &sol(vec![vec![1.0, 2.0]])).unwrap().len(), 1);
        assert!(matches!(
            score_solution(&zero, &sol(vec![vec![1.0]])),
            Err(Error::FeatureDim { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn zero_learning_rate_leaves_params() {
        let ex = vec![TrainExample {
            features: vec![vec![1.0, 0.0]],
            labels: vec![1],
        }];
        let config = TrainConfig {
            learning_rate: 0.0,
            epochs: 3,
            ..Default::default()
        };
        let out = train(&TrainingSet { outcome: vec![], steps: ex }, &config, 2).unwrap();
        assert_eq!(out.params, ScorerParams::zeros(2));
    }

    #[test]
    fn two_phase_needs_step_records() {
        let ex = vec![TrainExample {
            features: vec![vec![1.0]],
            labels: vec![1],
        }];
        let config = TrainConfig {
            phase: TrainPhase::TwoPhase,
            ..Default::default()
        };
        let err = train(&TrainingSet { outcome: ex, steps: vec![] }, &config, 1);
        assert!(matches!(err, Err(Error::EmptyInput(_))));
    }

    #[test]
    fn bias_gradient_is_sum_of_residuals() {
        let params = ScorerParams {
            weights: vec![0.3, -0.2],
            bias: 0.1,
        };
        let ex = TrainExample {
            features: vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 0.0]],
            labels: vec![1, 0, 1],
        };
        let g = gradient(&params, std::slice::from_ref(&ex)).unwrap();
        let expected: f64 = ex
            .features
            .iter()
            .zip(&ex.labels)
            .map(|(x, &y)| params.step_reward(x).unwrap() - f64::from(y))
            .sum();
        assert!((g.bias - expected).abs() < 1e-15);
    }

    #[test]
    fn gradient_vanishes_at_a_separating_limit() {
        let params = ScorerParams {
            weights: vec![100.0],
            bias: 0.0,
        };
        let ex = TrainExample {
            features: vec![vec![1.0], vec![-1.0], vec![2.0]],
            labels: vec![1, 0, 1],
        };
        assert!(gradient(&params, &[ex]).unwrap().norm() < 1e-6);
    }

    #[test]
    fn outcome_broadcast_toggle() {
        let mut s = sol(vec![vec![1.0], vec![2.0], vec![3.0]]);
        s.outcome_label = Some(0);
        let full = outcome_examples(std::slice::from_ref(&s), true);
        assert_eq!(full[0].labels, vec![0, 0, 0]);
        let last = outcome_examples(&[s], false);
        assert_eq!(last[0].features, vec![vec![3.0]]);
    }

    #[test]
    fn upsampled_records_become_extra_examples() {
        use crate::label::{LabelSource, LabeledStepRecord};
        let s = sol(vec![vec![1.0], vec![2.0], vec![3.0]]);
        let rec = |i, label| LabeledStepRecord {
            problem_id: "p".into(),
            solution_index: 0,
            step_index: i,
            label,
            source: LabelSource::ConsistencyKept,
            completer_names: vec![],
        };
        let records = crate::curate::upsample_negatives(&[rec(0, 1), rec(1, 0), rec(2, 0)], 2).unwrap();
        let ex = step_examples(&records, &[s]).unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].labels, vec![1, 0, 0]);
        assert_eq!(ex[1].labels, vec![0, 0]);
        assert_eq!(ex[1].features, vec![vec![2.0], vec![3.0]]);

        let prm = PrmRecord {
            problem_id: "p".into(),
            solution_index: 0,
            prompt: "q".into(),
            response: "a<step>b<step>c<step>".into(),
            labels: "+--".into(),
            features: vec![vec![1.0], vec![2.0], vec![3.0]],
        };
        assert_eq!(prm_examples(std::slice::from_ref(&prm), 2).unwrap(), ex);
        assert_eq!(prm_examples(&[prm], 1).unwrap().len(), 1);
    }

    proptest! {
        #[test]
        fn aggregation_ordering(rewards in prop::collection::vec(0.001f64..0.999, 1..20)) {
            let min = aggregate(&rewards, AggregationStrategy::Minimum).unwrap();
            let last = aggregate(&rewards, AggregationStrategy::Last).unwrap();
            let prod = aggregate(&rewards, AggregationStrategy::Product).unwrap();
            prop_assert!(min <= last);
            prop_assert!(prod <= min);
        }

        #[test]
        fn prm_loss_is_permutation_equivariant(
            pairs in prop::collection::vec((0.001f64..0.999, 0u8..2), 1..12),
            rot in 0usize..12,
        ) {
            let (r, l): (Vec<f64>, Vec<u8>) = pairs.iter().copied().unzip();
            let mut rotated = pairs.clone();
            let k = rot % rotated.len();
            rotated.rotate_left(k);
            let (r2, l2): (Vec<f64>, Vec<u8>) = rotated.into_iter().unzip();
            let a = prm_loss(&r, &l).unwrap();
            let b = prm_loss(&r2, &l2).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            prop_assert!(a > 0.0);
        }

        #[test]
        fn logit_shift_invariance(plus in -50.0f64..50.0, minus in -50.0f64..50.0, c in -100.0f64..100.0) {
            let a = logits_to_step_reward(plus, minus).unwrap();
            let b = logits_to_step_reward(plus + c, minus + c).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
