//! A small benchmark grid run from Rust: two uniform problems, every
//! parameterization, two runs each, rendered as tables.

use stiefel_mcmc::bench::{emit_table, parse_config, run_experiment, Metric, RunOptions, TableFormat};

fn main() {
    let dir = std::env::temp_dir().join("stiefel-example-grid");
    let cfg = parse_config(
        r#"{
            "problems": [{"problem": "uniform", "J": 10, "K": [1, 3]}],
            "runs": 2,
            "sampler": {"iters_total": 400, "iters_keep": 200},
            "output": "records.csv"
        }"#,
        &dir,
    )
    .unwrap();
    let summary = run_experiment(&cfg, &RunOptions { workers: Some(1), resume: false, quiet: true }).unwrap();
    println!("{} records written to {}\n", summary.records.len(), cfg.output.display());
    print!("{}", emit_table(&summary.records, Metric::PerIter, TableFormat::Text));
    println!();
    print!("{}", emit_table(&summary.records, Metric::PerSec, TableFormat::Csv));
}
