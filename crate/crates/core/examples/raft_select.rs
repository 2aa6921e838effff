//! Reward-ranked selection of fine-tuning examples.

use prmkit::curate::FilterRules;
use prmkit::evalkit::{raft_dataset, raft_select, RaftConfig, TruthRewards};
use prmkit::simulate::{generate_problems, sample_pool, SimulatorConfig};
use prmkit::types::RunConfig;

fn main() -> prmkit::Result<()> {
    let sim = SimulatorConfig::default();
    let problems = generate_problems(31, 100, &sim);
    let (rules, raft, oracle) = (FilterRules::default(), RaftConfig::default(), TruthRewards::default());

    for p in &problems[..5] {
        let pool = sample_pool(p, &sim, 8, 9);
        match raft_select(p, &pool, &oracle, &rules, &raft)? {
            Some(pick) => println!("{}: {} of 8 correct, picked #{} (reward {:.4})", p.id, pick.correct_count, pick.index, pick.reward),
            None => println!("{}: outside the window, skipped", p.id),
        }
    }

    let run = RunConfig { worker_count: 4, ..RunConfig::default() };
    let sft = raft_dataset(&problems, &sim, &oracle, &rules, &raft, &run, 9)?;
    println!("{} of {} queries produced a fine-tuning example", sft.len(), problems.len());
    Ok(())
}
