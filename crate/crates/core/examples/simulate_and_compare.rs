// Config-driven runs with files on disk: two seeds of the Allen-Cahn
// simulation, then a KS comparison of their stored `u_obs` columns.

use spde_lab::config::RunConfig;
use spde_lab::runner::{run_compare, run_simulate, RunOptions, TestRecord};

pub fn run_example() -> spde_lab::Result<TestRecord> {
    let root = std::env::temp_dir().join(format!("spde-lab-example-{}", std::process::id()));
    let mut cfg: RunConfig =
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/simulate.conf")).parse()?;
    cfg.write_fields = false;

    let mut summaries = Vec::new();
    for seed in [1, 2] {
        cfg.seed = seed;
        cfg.out_dir = root.join(format!("seed{seed}"));
        let out = run_simulate(&cfg, &RunOptions::default())?;
        println!("seed {seed}: {} paths -> {}", out.summaries.len(), out.files[0].display());
        summaries.push(out.files[0].clone());
    }

    let record = run_compare(&summaries[0], &summaries[1], "u_obs", 500, 9)?;
    println!("{}", serde_json::to_string_pretty(&record)?);
    let _ = std::fs::remove_dir_all(&root);
    Ok(record)
}

#[allow(dead_code)]
fn main() -> spde_lab::Result<()> {
    run_example().map(|_| ())
}
