//! The synthetic reasoning simulator: problems, policy samples and
//! completer rollouts.

use prmkit::simulate::{completer_rollout, generate_problems, sample_pool, SimulatorConfig};
use prmkit::types::CompleterConfig;

fn main() -> prmkit::Result<()> {
    let config = SimulatorConfig::default();
    let problems = generate_problems(7, 3, &config);
    for (i, p) in problems.iter().enumerate() {
        println!("{} difficulty {:.2}, {} steps, golden {}", p.id, p.difficulty, p.plan_length, p.golden_answer);
        for s in sample_pool(p, &config, 3, i as u64) {
            let truth: String = s
                .steps
                .iter()
                .map(|st| if st.truth_label.is_some_and(|t| t.is_correct()) { '+' } else { '-' })
                .collect();
            println!("  sample: steps {truth:<8} answer {:>6} outcome {:?}", s.final_answer, s.outcome_label);
        }
    }

    // how often each completer finishes correctly from the first step
    let p = &problems[0];
    let s = &sample_pool(p, &config, 1, 0)[0];
    for c in [CompleterConfig::weak(), CompleterConfig::strong()] {
        let hits = (0..1000)
            .map(|j| completer_rollout(p, &s.steps[..1], &c, j).map(|o| o.correct))
            .collect::<prmkit::Result<Vec<_>>>()?
            .into_iter()
            .filter(|&ok| ok)
            .count();
        println!("{} completer: {hits}/1000 correct finishes from step 0", c.name);
    }
    Ok(())
}
