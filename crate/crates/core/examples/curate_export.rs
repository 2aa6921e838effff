//! Filtering, dedup, outcome labels, negative up-sampling and export.

use prmkit::curate::{label_distribution, to_jsonl, upsample_negatives, FilterRules};
use prmkit::label::{build_filtered_dataset, label_stream, LabelOptions};
use prmkit::pipeline::curate;
use prmkit::simulate::{synthetic_benchmark, SimulatorConfig};
use prmkit::types::CompleterConfig;

fn main() -> prmkit::Result<()> {
    let (problems, solutions) = synthetic_benchmark(1, 30, 2, &SimulatorConfig::default());
    let (weak, strong) = (CompleterConfig::weak(), CompleterConfig::strong());
    let data = build_filtered_dataset(&problems, &solutions, &weak, &strong, LabelOptions::default(), 1, label_stream(1), 2)?;

    let curated = curate(&problems, &solutions, &data.records, &FilterRules::default(), 2)?;
    println!("{}", serde_json::to_string_pretty(&curated.stats)?);

    // the weak completer alone gives plenty of negatives to up-sample
    let weak_records = data.weak_records(&solutions, &weak.name);
    for rate in [1, 2, 4] {
        let d = label_distribution(&upsample_negatives(&weak_records, rate)?)?;
        println!("x{rate}: good {} bad {} (bad fraction {:.3})", d.good, d.bad, d.bad_fraction);
    }

    print!("first PRM record:\n{}", to_jsonl(&curated.prm[..1])?);
    print!("first ORM record:\n{}", to_jsonl(&curated.orm[..1])?);
    Ok(())
}
