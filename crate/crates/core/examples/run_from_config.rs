//! Loads a JSON experiment config and writes the regret and summary CSVs.
//!
//! cargo run --example run_from_config -- examples/configs/rsq_random.json /tmp/out

use std::path::PathBuf;

use riskrl::harness::{aggregate, emit_aggregate_csv, emit_csv, run, ExperimentConfig};

fn main() -> riskrl::Result<()> {
    let mut args = std::env::args().skip(1);
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let config = args.next().map(PathBuf::from).unwrap_or(manifest.join("examples/configs/rsq_random.json"));
    let out_dir = args.next().map(PathBuf::from).unwrap_or(std::env::temp_dir().join("riskrl"));
    let cfg = ExperimentConfig::load(&config)?;
    let records = run(&cfg)?;
    let raw = out_dir.join("regret.csv");
    let summary = out_dir.join("summary.csv");
    emit_csv(&records, &raw)?;
    emit_aggregate_csv(&aggregate(&records), &summary)?;
    println!("{} rows -> {}\nsummary -> {}", records.len(), raw.display(), summary.display());
    Ok(())
}
