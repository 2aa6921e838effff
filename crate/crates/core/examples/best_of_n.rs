//! Best-of-N selection: every selector on the same pools, then an N sweep
//! with ground-truth step rewards.

use prmkit::evalkit::{evaluate, evaluate_selectors, Scorers, Selector, TruthRewards};
use prmkit::score::{AggregationStrategy, ScorerParams};
use prmkit::simulate::{generate_problems, SimulatorConfig};
use prmkit::types::RunConfig;

fn main() -> prmkit::Result<()> {
    let sim = SimulatorConfig::default();
    let problems = generate_problems(11, 200, &sim);
    let oracle = TruthRewards::default();
    // a hand-set scorer that trusts the first feature
    let mut weights = vec![0.0; sim.feature_dim];
    weights[0] = 2.0;
    let handmade = ScorerParams { weights, bias: 0.5 };
    let run = RunConfig { worker_count: 4, ..RunConfig::default() };

    let mut selectors = Selector::all();
    selectors.push(Selector::prm(AggregationStrategy::Product));
    let scorers = Scorers { prm: Some(&handmade), orm: Some(&handmade) };
    for r in evaluate_selectors(&problems, &sim, &selectors, &run, scorers, 1)? {
        println!("{:<18} {:.3} +/- {:.3}", r.selector, r.mean, r.stddev);
    }

    println!("oracle prm-rank-min by N:");
    for n in [1, 2, 4, 8, 16, 32] {
        let run = RunConfig { bon_n: n, ..run.clone() };
        let r = evaluate(&problems, &sim, Selector::prm(AggregationStrategy::Minimum), &run, Scorers { prm: Some(&oracle), orm: None }, 1)?;
        println!("  N={n:<3} {:.3}", r.mean);
    }
    Ok(())
}
