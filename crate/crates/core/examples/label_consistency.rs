use prmkit::label::{accuracy_report, build_filtered_dataset, label_stream, LabelOptions};
use prmkit::simulate::{synthetic_benchmark, SimulatorConfig};
use prmkit::types::CompleterConfig;

fn main() -> prmkit::Result<()> {
    let config = SimulatorConfig::default();
    let (weak, strong) = (CompleterConfig::weak(), CompleterConfig::strong());
    for seed in 0..5u64 {
        let (problems, solutions) = synthetic_benchmark(seed, 200, 2, &config);
        let data = build_filtered_dataset(
            &problems, &solutions, &weak, &strong, LabelOptions::default(), 1, label_stream(seed), 4,
        )?;
        let acc = accuracy_report(&data, &solutions, &weak.name, &strong.name)?;
        println!(
            "seed {seed}: weak {:.3} strong {:.3} filtered {:.3} kept {}/{} rollouts {}",
            acc.weak, acc.strong, acc.filtered, acc.kept_steps, acc.total_steps, data.ledger.completions_total
        );
    }
    Ok(())
}
