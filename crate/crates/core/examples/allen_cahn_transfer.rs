// Heat paths reweighted into Allen-Cahn paths, gamma = 1/2.
//
// Runs the transfer check in memory on a small ensemble and prints one row
// per localization level. `spde-lab transfer-check --config
// configs/transfer.conf` does the same at full size and writes files.

use spde_lab::config::RunConfig;
use spde_lab::runner::{transfer_check, RunOptions, TransferReport};

pub fn run_example() -> spde_lab::Result<TransferReport> {
    let mut cfg: RunConfig =
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/transfer.conf")).parse()?;
    cfg.ensemble_size = 1000;
    cfg.permutations = 200;
    let (report, _) = transfer_check(&cfg, &RunOptions::default())?;

    println!("n   surv(heat) surv(direct)  E[Xi 1]  z    E[f] reweighted  E[f] direct  z    ESS/N");
    for l in &report.levels {
        println!(
            "{:<3} {:<10.4} {:<13.4} {:<8.4} {:<4.2} {:<16.4} {:<12.4} {:<4.2} {:.3}",
            l.n,
            l.heat_survival,
            l.direct_survival,
            l.normalization.reweighted,
            l.normalization.z,
            l.functional.reweighted,
            l.functional.direct,
            l.functional.z,
            l.ess_fraction
        );
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    Ok(report)
}

#[allow(dead_code)]
fn main() -> spde_lab::Result<()> {
    run_example().map(|_| ())
}
