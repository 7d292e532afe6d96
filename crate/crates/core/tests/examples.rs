#[allow(dead_code)]
mod heat_oracle_convergence {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/heat_oracle_convergence.rs"));
}

#[allow(dead_code)]
mod girsanov_sde_reduction {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/girsanov_sde_reduction.rs"));
}

#[allow(dead_code)]
mod allen_cahn_transfer {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/allen_cahn_transfer.rs"));
}

#[allow(dead_code)]
mod support_dichotomy {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/support_dichotomy.rs"));
}

#[allow(dead_code)]
mod weighted_stats {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/weighted_stats.rs"));
}

#[allow(dead_code)]
mod simulate_and_compare {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/simulate_and_compare.rs"));
}

#[test]
fn heat_oracle_convergence_runs() {
    let ratio = heat_oracle_convergence::run_example().unwrap();
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn girsanov_sde_reduction_runs() {
    let r = girsanov_sde_reduction::run_example().unwrap();
    assert!(r.max_log_error < 1e-12);
}

#[test]
fn allen_cahn_transfer_runs() {
    let report = allen_cahn_transfer::run_example().unwrap();
    assert_eq!(report.levels.len(), 4);
}

#[test]
fn support_dichotomy_runs() {
    let report = support_dichotomy::run_example().unwrap();
    assert!(report.gammas[0].median_width < report.gammas[1].median_width);
}

#[test]
fn weighted_stats_runs() {
    let (good, bad) = weighted_stats::run_example().unwrap();
    assert!(good > bad);
}

#[test]
fn simulate_and_compare_runs() {
    let record = simulate_and_compare::run_example().unwrap();
    assert_eq!(record.n_a, 200);
}
