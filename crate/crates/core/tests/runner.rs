use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use spde_lab::config::RunConfig;
use spde_lab::runner::{run_simulate, run_support_scan, support_scan, transfer_check, RunOptions};
use spde_lab::{heat_oracle, Error};

fn config(text: &str) -> RunConfig {
    text.parse().unwrap()
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

const SMALL: &str = "
[grid]
t_end = 0.05
n_x = 16
[model]
preset = allen-cahn
gamma = 0.5
[ensemble]
size = 40
seed = 3
localization = 1, 2, 4, 8
permutations = 200
write_fields = true
";

#[test]
fn c_zero_is_rejected_naming_the_field() {
    let err = "[model]\nc = 0\n".parse::<RunConfig>().and_then(|c| c.validate()).unwrap_err();
    match err {
        Error::ConfigInvalid { field, .. } => assert_eq!(field, "model.c"),
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn unstable_grid_aborts_unless_allowed() {
    let mut cfg = RunConfig::parse_unvalidated("[grid]\nn_x = 64\nn_t = 10\n[ensemble]\nsize = 2\n").unwrap();
    cfg.out_dir = tempfile::tempdir().unwrap().path().join("x");
    assert!(matches!(
        run_simulate(&cfg, &RunOptions::serial()),
        Err(Error::ConfigInvalid { field, .. }) if field == "grid.n_t"
    ));
    assert!(!cfg.out_dir.exists());
    cfg.allow_unstable = true;
    cfg.t_end = 1e-3;
    assert!(run_simulate(&cfg, &RunOptions::serial()).is_ok());
}

#[test]
fn noiseless_heat_run_matches_oracle() {
    let mut cfg = config(
        "[grid]\nt_end = 0.02\nx_left = -4\nx_right = 4\nn_x = 128\n\
         [model]\npreset = heat-power\nnoise = false\nequation = heat\n\
         [initial]\nshape = gaussian\ncenter = 0\nsigma = 0.5\nheight = 1\n\
         [ensemble]\nsize = 1\nobserve_x = 0\n",
    );
    let dir = tempfile::tempdir().unwrap();
    cfg.out_dir = dir.path().to_path_buf();
    let out = run_simulate(&cfg, &RunOptions::serial()).unwrap();
    let grid = cfg.grid().unwrap();
    let x = grid.cell_center(grid.cell_of(0.0));
    let exact = heat_oracle(&cfg.initial_data(), cfg.t_end, x).unwrap();
    let tol = 5.0 * (grid.dx * grid.dx + grid.dt);
    assert!((out.summaries[0].u_obs - exact).abs() <= tol);
}

#[test]
fn simulate_is_byte_identical_and_worker_independent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let mut cfg = config(SMALL);
    cfg.out_dir = a.path().to_path_buf();
    run_simulate(&cfg, &RunOptions::serial()).unwrap();
    cfg.out_dir = b.path().to_path_buf();
    run_simulate(&cfg, &RunOptions::serial()).unwrap();
    cfg.out_dir = c.path().to_path_buf();
    run_simulate(&cfg, &RunOptions { workers: Some(4), deterministic: false }).unwrap();
    let ta = read_tree(a.path());
    assert!(ta.contains_key("summary.csv"));
    assert_eq!(ta.len(), 41);
    assert_eq!(ta, read_tree(b.path()));
    assert_eq!(ta, read_tree(c.path()));
}

#[test]
fn outputs_carry_hash_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(SMALL);
    cfg.out_dir = dir.path().to_path_buf();
    run_simulate(&cfg, &RunOptions::serial()).unwrap();
    for (name, bytes) in read_tree(dir.path()) {
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains(&format!("config_hash={}", cfg.config_hash())), "{name}");
        assert!(text.contains("base_seed=3"), "{name}");
    }
}

#[test]
fn self_transfer_has_unit_weights() {
    let mut cfg = config(SMALL);
    cfg.preset = "heat-power".parse().unwrap();
    cfg.ensemble_size = 300;
    let (report, data) = transfer_check(&cfg, &RunOptions::default()).unwrap();
    for recs in &data.records {
        assert!(recs.iter().all(|r| r.log_xi == 0.0 && r.survived));
    }
    for level in &report.levels {
        assert_eq!(level.normalization.reweighted, 1.0);
        assert!(level.ks.unwrap().p_value > 0.01);
        assert_eq!(level.ess, 300.0);
    }
}

#[test]
fn survival_is_nondecreasing_over_the_schedule() {
    let mut cfg = config(SMALL);
    cfg.t_end = 0.5;
    cfg.c = 0.5;
    cfg.ensemble_size = 200;
    let (report, _) = transfer_check(&cfg, &RunOptions::default()).unwrap();
    for w in report.levels.windows(2) {
        assert!(w[0].heat_survival <= w[1].heat_survival);
        assert!(w[0].direct_survival <= w[1].direct_survival);
    }
}

#[test]
fn transfer_rejects_the_splitting_scheme() {
    let mut cfg = config(SMALL);
    cfg.scheme = "splitting".parse().unwrap();
    assert!(transfer_check(&cfg, &RunOptions::serial()).is_err());
}

const SUPPORT: &str = "
[grid]
t_end = 0.02
x_left = -2
x_right = 2
n_x = 64
[model]
preset = allen-cahn
scheme = splitting
[initial]
shape = plateau
center = 0
width = 0.5
height = 1
ramp = 0.25
[ensemble]
size = 30
seed = 5
[support]
gammas = 0.5
";

#[test]
fn support_starts_at_the_support_of_h() {
    let cfg = config(SUPPORT);
    let (lo, hi) = cfg.initial_data().support_hint.unwrap();
    let (_, data) = support_scan(&cfg, &RunOptions::default()).unwrap();
    let dx = cfg.grid().unwrap().dx;
    for p in &data.profiles[0] {
        assert!((p.widths[0] - (hi - lo)).abs() <= dx + 1e-12, "{}", p.widths[0]);
    }
}

#[test]
fn support_scan_warns_when_the_domain_is_too_small() {
    let mut cfg = config(SUPPORT);
    cfg.x_left = -0.6;
    cfg.x_right = 0.6;
    cfg.n_x = 24;
    let (report, _) = support_scan(&cfg, &RunOptions::default()).unwrap();
    assert!(report.gammas[0].touched_fraction > 0.05);
    assert!(report.warnings.iter().any(|w| w.contains("domain too small")));
}

#[test]
fn support_scan_needs_compact_initial_data() {
    let mut cfg = config(SUPPORT);
    cfg.initial = "[initial]\nshape = gaussian\n".parse::<RunConfig>().unwrap().initial;
    assert!(matches!(
        run_support_scan(&cfg, &RunOptions::serial()),
        Err(Error::ConfigInvalid { .. })
    ));
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spde-lab"))
}

#[test]
fn cli_subcommands_are_deterministic_and_fail_loudly() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, SMALL).unwrap();
    let support = dir.path().join("support.conf");
    fs::write(&support, SUPPORT).unwrap();

    let run = |sub: &str, conf: &Path, out: &str| {
        let status = bin()
            .args([sub, "--config"])
            .arg(conf)
            .args(["--deterministic", "--seed", "11", "--out"])
            .arg(dir.path().join(out))
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        read_tree(&dir.path().join(out))
    };
    assert_eq!(run("simulate", &conf, "s1"), run("simulate", &conf, "s2"));
    assert_eq!(run("transfer-check", &conf, "t1"), run("transfer-check", &conf, "t2"));
    assert_eq!(run("support-scan", &support, "p1"), run("support-scan", &support, "p2"));

    let cmp = |out: &str| {
        bin()
            .arg("compare")
            .arg(dir.path().join("s1/summary.csv"))
            .arg(dir.path().join("t1/direct.csv"))
            .args(["--column", "value", "--seed", "4", "--out"])
            .arg(dir.path().join(out))
            .output()
            .unwrap()
    };
    // summary.csv has no `value` column
    assert!(!cmp("c0").status.success());
    let ok = bin()
        .arg("compare")
        .arg(dir.path().join("s1/summary.csv"))
        .arg(dir.path().join("s2/summary.csv"))
        .args(["--deterministic", "--seed", "4", "--out"])
        .arg(dir.path().join("c1"))
        .output()
        .unwrap();
    assert!(ok.status.success());
    let json = fs::read_to_string(dir.path().join("c1/compare.json")).unwrap();
    assert!(json.contains("\"statistic\": 0.0"));

    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "[model]\ngama = 0.5\n").unwrap();
    let o = bin().args(["simulate", "--config"]).arg(&bad).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("gama"));

    let unstable = dir.path().join("unstable.conf");
    fs::write(&unstable, "[grid]\nn_x = 64\nn_t = 10\n[ensemble]\nsize = 1\n").unwrap();
    let o = bin().args(["simulate", "--config"]).arg(&unstable).arg("--out").arg(dir.path().join("u")).output().unwrap();
    assert!(!o.status.success());
    let o = bin()
        .args(["simulate", "--allow-unstable-grid", "--config"])
        .arg(&unstable)
        .arg("--out")
        .arg(dir.path().join("u"))
        .output()
        .unwrap();
    // past validation, then the explicit scheme diverges
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("blew up"));
}
