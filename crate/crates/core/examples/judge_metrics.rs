//! Step-judgment F1 for a scorer on a held-out judge set.

use prmkit::evalkit::{judge_f1, judge_report};
use prmkit::pipeline::{judge_examples, judge_set};
use prmkit::score::ScorerParams;
use prmkit::simulate::{generate_problems, SimulatorConfig};

fn main() -> prmkit::Result<()> {
    println!("toy: F1 = {:.4}", judge_f1(&[1, 1, 0, 1], &[1, 0, 0, 1])?);

    let sim = SimulatorConfig::default();
    let heldout = generate_problems(21, 200, &sim);
    let mut weights = vec![0.0; sim.feature_dim];
    weights[0] = 2.0;
    for (name, params) in [
        ("all-positive", ScorerParams { weights: vec![0.0; sim.feature_dim], bias: 1.0 }),
        ("first-feature", ScorerParams { weights, bias: 0.5 }),
    ] {
        let (pred, truth) = judge_set(&heldout, &sim, 2, 5, &params, 3)?;
        let report = judge_report(&judge_examples(&pred, &truth)?)?;
        println!("{name}: macro {:.4} micro {:.4}", report.macro_f1, report.micro_f1);
        for s in &report.subsets {
            println!("  {:<16} F1 {:.4} over {} steps", s.subset, s.f1, s.steps);
        }
    }
    Ok(())
}
