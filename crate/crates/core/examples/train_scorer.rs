//! Loss functions and single- vs two-phase training of the step scorer.

use prmkit::curate::FilterRules;
use prmkit::label::{build_filtered_dataset, label_stream, LabelOptions};
use prmkit::pipeline::{curate, pipeline_train_config, train_bundle};
use prmkit::score::{logits_to_step_reward, orm_loss, prm_loss, TrainConfig, TrainPhase};
use prmkit::simulate::{synthetic_benchmark, SimulatorConfig};
use prmkit::types::CompleterConfig;

fn main() -> prmkit::Result<()> {
    println!("orm_loss(0.9, 1) = {:.6}", orm_loss(0.9, 1)?);
    println!("prm_loss([0.9, 0.2], [1, 0]) = {:.6}", prm_loss(&[0.9, 0.2], &[1, 0])?);
    println!("reward from logits (+2.0, -1.0) = {:.6}", logits_to_step_reward(2.0, -1.0)?);

    let sim = SimulatorConfig::default();
    let (problems, solutions) = synthetic_benchmark(5, 150, 2, &sim);
    let data = build_filtered_dataset(
        &problems, &solutions, &CompleterConfig::weak(), &CompleterConfig::strong(),
        LabelOptions::default(), 1, label_stream(5), 4,
    )?;
    let c = curate(&problems, &solutions, &data.records, &FilterRules::default(), 2)?;

    for phase in [TrainPhase::Single, TrainPhase::TwoPhase] {
        let config = TrainConfig { phase, ..pipeline_train_config() };
        let b = train_bundle(&c.prm, &c.orm, &config, 2, sim.feature_dim)?;
        println!(
            "{phase:?}: loss {:.4} -> {:.4}, weights {:?}",
            b.prm_loss_trace.first().unwrap_or(&f64::NAN),
            b.prm_loss_trace.last().unwrap_or(&f64::NAN),
            b.prm.weights.iter().map(|w| format!("{w:.2}")).collect::<Vec<_>>()
        );
    }
    Ok(())
}
