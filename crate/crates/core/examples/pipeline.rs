//! The whole pipeline from one config, then the text report.
//!
//! `cargo run --example pipeline -- [out-dir] [seed]`

use std::path::PathBuf;

use prmkit::pipeline::{report, run_pipeline, PipelineConfig, MANIFEST};

fn main() -> prmkit::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "prmkit-example-out".into()));
    let mut cfg = PipelineConfig::default();
    cfg.run.master_seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    cfg.run.worker_count = 4;
    let manifest = run_pipeline(&cfg, &out)?;
    println!("config sha256 {}", manifest.config_sha256);
    print!("{}", report(&out.join(MANIFEST))?);
    Ok(())
}
