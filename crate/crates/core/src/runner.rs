//! Subcommand drivers: ensemble execution and result files.
//!
//! Every output file carries the config hash and base seed. CSV files put
//! them in leading `#` comment lines; JSON reports carry them as fields.
//! Paths are dispatched to a worker pool but always collected in index
//! order, so outputs do not depend on the number of workers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::diagnostics::{integrability_functional, support_profile_thinned, SupportProfile};
use crate::error::{Error, Result};
use crate::grid::{derive_seed, sample_noise, SpaceTimeGrid};
use crate::solver::{solve_path_with, FieldPath, NoiseScheme};
use crate::stats::{
    ks_weighted, sign_test_less, sorted_quantile, KsResult, SignTest, WeightedSample,
};
use crate::transfer::{reweighted_estimate, shifted_weights, transfer_trace, TransferRecord};

pub const STREAM_SIMULATE: u64 = 0;
pub const STREAM_HEAT: u64 = 1;
pub const STREAM_TARGET: u64 = 2;
pub const STREAM_SUPPORT: u64 = 3;
const STREAM_TESTS: u64 = 0x7E57;

/// Fraction of paths touching the outer margin above which a support scan
/// warns that the domain is too small.
pub const BOUNDARY_WARNING_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses one per core.
    pub workers: Option<usize>,
    /// Run every path on the calling thread.
    pub deterministic: bool,
}

impl RunOptions {
    pub fn serial() -> Self {
        RunOptions {
            workers: Some(1),
            deterministic: true,
        }
    }

    fn map<T, F>(&self, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        if self.deterministic || self.workers == Some(1) {
            return (0..count).map(f).collect();
        }
        let run = || (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
        match self.workers {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?
                .install(run),
            None => run(),
        }
    }
}

/// One statistical test result as written to JSON reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub ess: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub seed: u64,
    pub config_hash: String,
}

fn header(kind: &str, cfg: &RunConfig) -> String {
    format!(
        "# spde-lab {kind}\n# config_hash={}\n# base_seed={}\n",
        cfg.config_hash(),
        cfg.seed
    )
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text)
}

fn path_error(index: usize, err: Error) -> Error {
    match err {
        Error::BlowUp { step, cell } => Error::InvalidArgument(format!(
            "path {index} blew up at time step {step}, cell {cell}"
        )),
        other => other,
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub path: usize,
    pub seed: u64,
    pub u_obs: f64,
    pub mass: f64,
    pub max_abs: f64,
    pub support_width: f64,
    pub integrability: f64,
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub summaries: Vec<PathSummary>,
    pub files: Vec<PathBuf>,
}

/// Solves `ensemble.size` paths of the configured equation and writes
/// `summary.csv` (plus thinned `fields/path_NNNNN.csv` when enabled).
pub fn run_simulate(cfg: &RunConfig, opts: &RunOptions) -> Result<SimulateOutput> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let spec = cfg.coefficients()?;
    let h = cfg.initial_data();
    let solve = cfg.solve_options(cfg.include_d);
    let obs = grid.cell_of(cfg.observe_x());
    let eps = cfg.epsilon();
    let stride = cfg.thin(grid.n_t);
    let power = spec.power_law().filter(|_| cfg.noise);

    let results = opts.map(cfg.ensemble_size, |k| {
        let seed = derive_seed(cfg.seed, STREAM_SIMULATE, k as u64);
        let noise = sample_noise(&grid, seed);
        let path = solve_path_with(&grid, &spec, &h, &noise, &solve).map_err(|e| path_error(k, e))?;
        let terminal = path.terminal();
        let support = support_profile_thinned(&path, eps, grid.n_t.max(1))?;
        let summary = PathSummary {
            path: k,
            seed,
            u_obs: terminal[obs],
            mass: path.mass(grid.n_t),
            max_abs: terminal.iter().fold(0.0, |m, v| m.max(v.abs())),
            support_width: *support.widths.last().unwrap_or(&0.0),
            integrability: match power {
                Some((c, gamma)) => integrability_functional(&path, c, gamma)?,
                None => f64::NAN,
            },
        };
        let field = cfg.write_fields.then(|| field_csv(cfg, &path, stride));
        Ok((summary, field))
    })?;

    log::info!("simulate: {} paths done", results.len());
    let mut files = Vec::new();
    let mut text = header("simulate", cfg);
    text.push_str("path,seed,u_obs,mass,max_abs,support_width,integrability\n");
    for (s, _) in &results {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            s.path, s.seed, s.u_obs, s.mass, s.max_abs, s.support_width, s.integrability
        );
    }
    let summary_path = cfg.out_dir.join("summary.csv");
    write_file(&summary_path, &text)?;
    files.push(summary_path);
    for (s, field) in &results {
        if let Some(csv) = field {
            let p = cfg.out_dir.join("fields").join(format!("path_{:05}.csv", s.path));
            write_file(&p, csv)?;
            files.push(p);
        }
    }
    Ok(SimulateOutput {
        summaries: results.into_iter().map(|(s, _)| s).collect(),
        files,
    })
}

/// Thinned field export: one row per kept time step, one column per cell.
pub fn field_csv(cfg: &RunConfig, path: &FieldPath, stride: usize) -> String {
    let grid = &path.grid;
    let mut text = header("field", cfg);
    let _ = writeln!(text, "# path_seed={}", path.noise.seed);
    text.push_str("step,t");
    for j in 0..grid.n_x {
        let _ = write!(text, ",x{j}");
    }
    text.push('\n');
    let mut steps: Vec<usize> = (0..=grid.n_t).step_by(stride.max(1)).collect();
    if steps.last() != Some(&grid.n_t) {
        steps.push(grid.n_t);
    }
    for n in steps {
        let _ = write!(text, "{n},{}", grid.time(n));
        for v in path.slice(n) {
            let _ = write!(text, ",{v}");
        }
        text.push('\n');
    }
    text
}

// ---------------------------------------------------------- transfer-check

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reweighted: f64,
    pub reweighted_se: f64,
    pub direct: f64,
    pub direct_se: f64,
    /// `|reweighted - direct| / sqrt(se_r^2 + se_d^2)`
    pub z: f64,
}

impl Comparison {
    fn new(reweighted: f64, reweighted_se: f64, direct: f64, direct_se: f64) -> Self {
        let combined = (reweighted_se * reweighted_se + direct_se * direct_se).sqrt();
        let diff = (reweighted - direct).abs();
        let z = if combined > 0.0 {
            diff / combined
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Comparison {
            reweighted,
            reweighted_se,
            direct,
            direct_se,
            z,
        }
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.z <= sigmas
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub n: f64,
    pub heat_survival: f64,
    pub direct_survival: f64,
    /// `E_P[Xi 1{survived}]` against `Q[tau_n = T]`.
    pub normalization: Comparison,
    /// `E_P[f(U) Xi 1{survived}]` against `E_Q[f(V) 1{survived}]`.
    pub functional: Comparison,
    pub ks: Option<KsResult>,
    pub ess: f64,
    pub ess_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSummary {
    pub median: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
    pub heavy_tail: bool,
}

impl TailSummary {
    fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let median = sorted_quantile(&v, 0.5);
        let p99 = sorted_quantile(&v, 0.99);
        TailSummary {
            median,
            p90: sorted_quantile(&v, 0.9),
            p99,
            max: *v.last().unwrap(),
            heavy_tail: p99 > 20.0 * median,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub config_hash: String,
    pub base_seed: u64,
    pub preset: String,
    pub ensemble_size: usize,
    pub observe_x: f64,
    pub functional: String,
    pub levels: Vec<LevelReport>,
    pub heat_quad: TailSummary,
    pub direct_quad: TailSummary,
    pub tests: Vec<TestRecord>,
    pub warnings: Vec<String>,
}

/// Raw per-path data of a transfer check, kept for callers that want more
/// than the report.
#[derive(Debug, Clone)]
pub struct TransferData {
    /// `records[level][path]`
    pub records: Vec<Vec<TransferRecord>>,
    pub heat_values: Vec<f64>,
    pub direct_values: Vec<f64>,
    pub direct_quad: Vec<f64>,
    pub direct_seeds: Vec<u64>,
}

/// Heat ensemble reweighted towards the drifted equation, against an
/// independent direct ensemble of the drifted equation, at every level of
/// the localization schedule. The functional is `tanh(u(T, x_obs))`.
pub fn run_transfer_check(cfg: &RunConfig, opts: &RunOptions) -> Result<TransferReport> {
    let (report, data) = transfer_check(cfg, opts)?;
    write_transfer_outputs(cfg, &report, &data)?;
    Ok(report)
}

/// [`run_transfer_check`] without writing files.
pub fn transfer_check(cfg: &RunConfig, opts: &RunOptions) -> Result<(TransferReport, TransferData)> {
    cfg.validate()?;
    if cfg.scheme != NoiseScheme::EulerMaruyama {
        return Err(Error::config(
            "model.scheme",
            "transfer-check needs the euler scheme (the density assumes Gaussian increments)",
        ));
    }
    if !cfg.noise {
        return Err(Error::config("model.noise", "transfer-check needs noise"));
    }
    let grid = cfg.grid()?;
    let spec = cfg.coefficients()?;
    let h = cfg.initial_data();
    let obs = grid.cell_of(cfg.observe_x());
    let levels = cfg.localization.clone();
    let functional = |p: &FieldPath| p.terminal()[obs].tanh();

    let heat_opts = cfg.solve_options(false);
    let heat = opts.map(cfg.ensemble_size, |k| {
        let seed = derive_seed(cfg.seed, STREAM_HEAT, k as u64);
        let noise = sample_noise(&grid, seed);
        let path = solve_path_with(&grid, &spec, &h, &noise, &heat_opts).map_err(|e| path_error(k, e))?;
        let trace = transfer_trace(&path, &spec)?;
        let records: Vec<TransferRecord> = levels.iter().map(|&n| trace.record(n)).collect();
        Ok((functional(&path), records))
    })?;

    let target_opts = cfg.solve_options(true);
    let direct = opts.map(cfg.ensemble_size, |k| {
        let seed = derive_seed(cfg.seed, STREAM_TARGET, k as u64);
        let noise = sample_noise(&grid, seed);
        let path = solve_path_with(&grid, &spec, &h, &noise, &target_opts).map_err(|e| path_error(k, e))?;
        let trace = transfer_trace(&path, &spec)?;
        Ok((seed, functional(&path), trace.quad_final()))
    })?;

    let count = cfg.ensemble_size;
    let heat_values: Vec<f64> = heat.iter().map(|(v, _)| *v).collect();
    let records: Vec<Vec<TransferRecord>> = (0..levels.len())
        .map(|i| heat.iter().map(|(_, r)| r[i]).collect())
        .collect();
    let direct_seeds: Vec<u64> = direct.iter().map(|d| d.0).collect();
    let direct_values: Vec<f64> = direct.iter().map(|d| d.1).collect();
    let direct_quad: Vec<f64> = direct.iter().map(|d| d.2).collect();

    let hash = cfg.config_hash();
    let mut tests = Vec::new();
    let mut warnings = Vec::new();
    let mut level_reports = Vec::new();
    for (i, &n) in levels.iter().enumerate() {
        let recs = &records[i];
        let heat_survival = recs.iter().filter(|r| r.survived).count() as f64 / count as f64;
        let survived_direct: Vec<bool> = direct_quad.iter().map(|&q| q < n).collect();
        let direct_survival =
            survived_direct.iter().filter(|s| **s).count() as f64 / count as f64;

        let ones = vec![1.0; count];
        let norm = reweighted_estimate(&ones, recs)?;
        let norm_cmp = Comparison::new(
            norm.estimate,
            norm.standard_error,
            direct_survival,
            bernoulli_se(direct_survival, count),
        );

        let fun = reweighted_estimate(&heat_values, recs)?;
        let direct_terms: Vec<f64> = direct_values
            .iter()
            .zip(&survived_direct)
            .map(|(v, s)| if *s { *v } else { 0.0 })
            .collect();
        let (dm, dse) = mean_and_se(&direct_terms);
        let fun_cmp = Comparison::new(fun.estimate, fun.standard_error, dm, dse);

        let (_, weights) = shifted_weights(recs);
        let direct_weights: Vec<f64> = survived_direct.iter().map(|s| f64::from(u8::from(*s))).collect();
        let test_seed = derive_seed(cfg.seed, STREAM_TESTS, i as u64);
        let ks = match (
            WeightedSample::new(heat_values.clone(), weights, "reweighted-heat"),
            WeightedSample::new(direct_values.clone(), direct_weights, "direct-target"),
        ) {
            (Ok(a), Ok(b)) => Some(ks_weighted(&a, &b, cfg.permutations, test_seed)?),
            _ => {
                warnings.push(format!("level {n}: no surviving paths, KS test skipped"));
                None
            }
        };
        if let Some(ks) = ks {
            tests.push(TestRecord {
                test: format!("ks_weighted:tanh_u_obs:n={n}"),
                statistic: ks.statistic,
                p_value: ks.p_value,
                ess: fun.ess,
                n_a: count,
                n_b: count,
                seed: test_seed,
                config_hash: hash.clone(),
            });
        }
        if fun.ess < 0.05 * count as f64 {
            warnings.push(format!(
                "level {n}: effective sample size {:.1} is below 5% of the ensemble",
                fun.ess
            ));
        }
        level_reports.push(LevelReport {
            n,
            heat_survival,
            direct_survival,
            normalization: norm_cmp,
            functional: fun_cmp,
            ks,
            ess: fun.ess,
            ess_fraction: fun.ess / count as f64,
        });
    }

    let heat_quad: Vec<f64> = records
        .first()
        .map(|r| r.iter().map(|x| x.quad_final).collect())
        .unwrap_or_default();
    let heat_tail = TailSummary::of(&heat_quad);
    let direct_tail = TailSummary::of(&direct_quad);
    if heat_tail.heavy_tail || direct_tail.heavy_tail {
        warnings.push("quadratic functional has a heavy upper tail".into());
    }

    for w in &warnings {
        log::warn!("{w}");
    }
    let report = TransferReport {
        config_hash: hash,
        base_seed: cfg.seed,
        preset: cfg.preset.to_string(),
        ensemble_size: count,
        observe_x: grid.cell_center(obs),
        functional: "tanh(u(T, x_obs))".into(),
        levels: level_reports,
        heat_quad: heat_tail,
        direct_quad: direct_tail,
        tests,
        warnings,
    };
    let data = TransferData {
        records,
        heat_values,
        direct_values,
        direct_quad,
        direct_seeds,
    };
    Ok((report, data))
}

fn bernoulli_se(p: f64, count: usize) -> f64 {
    if count < 2 {
        return 0.0;
    }
    (p * (1.0 - p) / (count - 1) as f64).sqrt()
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = crate::stats::compensated_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = crate::stats::compensated_sum(&ss) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn write_transfer_outputs(cfg: &RunConfig, report: &TransferReport, data: &TransferData) -> Result<()> {
    for (recs, &n) in data.records.iter().zip(&cfg.localization) {
        let mut text = header("transfer-check records", cfg);
        text.push_str("seed,n,tau_index,quad_final,log_xi,survived\n");
        for r in recs {
            let _ = writeln!(
                text,
                "{},{},{},{},{},{}",
                r.seed, r.n, r.tau_index, r.quad_final, r.log_xi, r.survived
            );
        }
        write_file(&cfg.out_dir.join(format!("records_n{n}.csv")), &text)?;
    }
    let mut text = header("transfer-check direct", cfg);
    text.push_str("seed,quad_final,value\n");
    for ((s, q), v) in data.direct_seeds.iter().zip(&data.direct_quad).zip(&data.direct_values) {
        let _ = writeln!(text, "{s},{q},{v}");
    }
    write_file(&cfg.out_dir.join("direct.csv"), &text)?;
    write_json(&cfg.out_dir.join("transfer_report.json"), report)
}

// ------------------------------------------------------------ support-scan

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSummary {
    pub gamma: f64,
    pub median_width: f64,
    pub containment_rate: f64,
    pub touched_fraction: f64,
    pub integrability_median: f64,
    pub integrability_p90: f64,
    pub integrability_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub gamma_low: f64,
    pub gamma_high: f64,
    /// `width(gamma_low) < width(gamma_high)`
    pub width: SignTest,
    /// contained at `gamma_low` but not at `gamma_high`
    pub containment: SignTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub config_hash: String,
    pub base_seed: u64,
    pub preset: String,
    pub epsilon: f64,
    pub time: f64,
    pub containment: (f64, f64),
    pub ensemble_size: usize,
    pub gammas: Vec<GammaSummary>,
    pub comparisons: Vec<PairedComparison>,
    pub tests: Vec<TestRecord>,
    pub warnings: Vec<String>,
}

/// Per-path results of a support scan, indexed `[gamma][path]`.
#[derive(Debug, Clone)]
pub struct SupportData {
    pub profiles: Vec<Vec<SupportProfile>>,
    pub widths: Vec<Vec<f64>>,
    pub contained: Vec<Vec<bool>>,
    pub integrability: Vec<Vec<f64>>,
    pub seeds: Vec<u64>,
}

pub fn run_support_scan(cfg: &RunConfig, opts: &RunOptions) -> Result<SupportReport> {
    let (report, data) = support_scan(cfg, opts)?;
    write_support_outputs(cfg, &report, &data)?;
    Ok(report)
}

/// Support profiles for every gamma in `support.gammas`. Path `k` uses the
/// same seed at every gamma, so the ensembles are paired.
pub fn support_scan(cfg: &RunConfig, opts: &RunOptions) -> Result<(SupportReport, SupportData)> {
    cfg.validate()?;
    let h = cfg.initial_data();
    let Some((lo, hi)) = h.support_hint else {
        return Err(Error::config(
            "initial.shape",
            "support-scan needs compactly supported initial data (plateau or bump)",
        ));
    };
    let grid = cfg.grid()?;
    if lo < grid.x_left || hi > grid.x_right {
        return Err(Error::config(
            "initial",
            "support of h must lie inside the domain",
        ));
    }
    let eps = cfg.epsilon();
    let time = cfg.support_time.unwrap_or(cfg.t_end);
    let interval = cfg.containment();
    let stride = cfg.thin(grid.n_t);
    let solve = cfg.solve_options(cfg.include_d);
    let seeds: Vec<u64> = (0..cfg.ensemble_size)
        .map(|k| derive_seed(cfg.seed, STREAM_SUPPORT, k as u64))
        .collect();

    let mut warnings = Vec::new();
    if cfg.scheme == NoiseScheme::EulerMaruyama && cfg.gammas.iter().any(|g| *g < 1.0) {
        warnings.push(
            "euler scheme does not absorb at zero; epsilon-supports for gamma < 1 are overstated \
             (use scheme = splitting)"
                .into(),
        );
    }

    let mut data = SupportData {
        profiles: Vec::new(),
        widths: Vec::new(),
        contained: Vec::new(),
        integrability: Vec::new(),
        seeds: seeds.clone(),
    };
    let mut summaries = Vec::new();
    for &gamma in &cfg.gammas {
        let spec = cfg.coefficients_at(gamma)?;
        log::info!("support-scan: gamma = {gamma}");
        let per_path = opts.map(cfg.ensemble_size, |k| {
            let noise = sample_noise(&grid, seeds[k]);
            let path = solve_path_with(&grid, &spec, &h, &noise, &solve).map_err(|e| path_error(k, e))?;
            let profile = support_profile_thinned(&path, eps, stride)?;
            let functional = integrability_functional(&path, cfg.c, gamma)?;
            Ok((profile, functional))
        })?;
        let widths: Vec<f64> = per_path.iter().map(|(p, _)| p.at_time(time).1).collect();
        let contained: Vec<bool> = per_path.iter().map(|(p, _)| p.contained_in(interval)).collect();
        let touched = per_path.iter().filter(|(p, _)| p.touched_boundary).count();
        let integ: Vec<f64> = per_path.iter().map(|(_, f)| *f).collect();
        let touched_fraction = touched as f64 / cfg.ensemble_size as f64;
        if touched_fraction > BOUNDARY_WARNING_FRACTION {
            warnings.push(format!(
                "gamma {gamma}: support reached the outer 10% of the domain on {:.1}% of paths; \
                 domain too small",
                100.0 * touched_fraction
            ));
        }
        let mut sorted_w = widths.clone();
        sorted_w.sort_by(f64::total_cmp);
        let mut sorted_i = integ.clone();
        sorted_i.sort_by(f64::total_cmp);
        summaries.push(GammaSummary {
            gamma,
            median_width: sorted_quantile(&sorted_w, 0.5),
            containment_rate: contained.iter().filter(|c| **c).count() as f64
                / cfg.ensemble_size as f64,
            touched_fraction,
            integrability_median: sorted_quantile(&sorted_i, 0.5),
            integrability_p90: sorted_quantile(&sorted_i, 0.9),
            integrability_max: *sorted_i.last().unwrap(),
        });
        data.profiles.push(per_path.into_iter().map(|(p, _)| p).collect());
        data.widths.push(widths);
        data.contained.push(contained);
        data.integrability.push(integ);
    }

    let hash = cfg.config_hash();
    let mut comparisons = Vec::new();
    let mut tests = Vec::new();
    for i in 0..cfg.gammas.len() {
        for j in i + 1..cfg.gammas.len() {
            let (low, high) = if cfg.gammas[i] <= cfg.gammas[j] { (i, j) } else { (j, i) };
            let width = sign_test_less(&data.widths[low], &data.widths[high])?;
            let outside = |c: &[bool]| c.iter().map(|&b| f64::from(u8::from(!b))).collect::<Vec<_>>();
            let containment =
                sign_test_less(&outside(&data.contained[low]), &outside(&data.contained[high]))?;
            let (gl, gh) = (cfg.gammas[low], cfg.gammas[high]);
            for (name, t) in [("width", &width), ("containment", &containment)] {
                tests.push(TestRecord {
                    test: format!("sign_test:{name}:gamma={gl}<gamma={gh}"),
                    statistic: t.favourable as f64,
                    p_value: t.p_value,
                    ess: cfg.ensemble_size as f64,
                    n_a: cfg.ensemble_size,
                    n_b: cfg.ensemble_size,
                    seed: cfg.seed,
                    config_hash: hash.clone(),
                });
            }
            comparisons.push(PairedComparison {
                gamma_low: gl,
                gamma_high: gh,
                width,
                containment,
            });
        }
    }

    for w in &warnings {
        log::warn!("{w}");
    }
    let report = SupportReport {
        config_hash: hash,
        base_seed: cfg.seed,
        preset: cfg.preset.to_string(),
        epsilon: eps,
        time,
        containment: interval,
        ensemble_size: cfg.ensemble_size,
        gammas: summaries,
        comparisons,
        tests,
        warnings,
    };
    Ok((report, data))
}

/// `t,left,right,width,touched_boundary` per recorded slice, prefixed by the
/// path index. `left`/`right` are the outer cell edges of the support and
/// are empty when the slice has none.
pub fn support_csv(cfg: &RunConfig, profiles: &[SupportProfile]) -> String {
    let mut text = header("support profiles", cfg);
    text.push_str("path,t,left,right,width,touched_boundary\n");
    for (k, p) in profiles.iter().enumerate() {
        for ((t, iv), w) in p.times.iter().zip(&p.intervals).zip(&p.widths) {
            match iv {
                Some((l, r)) => {
                    let left = p.x_left + *l as f64 * p.dx;
                    let right = p.x_left + (*r + 1) as f64 * p.dx;
                    let _ = writeln!(text, "{k},{t},{left},{right},{w},{}", p.touched_boundary);
                }
                None => {
                    let _ = writeln!(text, "{k},{t},,,{w},{}", p.touched_boundary);
                }
            }
        }
    }
    text
}

fn write_support_outputs(cfg: &RunConfig, report: &SupportReport, data: &SupportData) -> Result<()> {
    let mut summary = header("support-scan summary", cfg);
    summary.push_str("gamma,path,seed,width_at_t,contained,touched_boundary,integrability\n");
    for (g, &gamma) in cfg.gammas.iter().enumerate() {
        let name = format!("support_gamma_{gamma}.csv");
        write_file(&cfg.out_dir.join(name), &support_csv(cfg, &data.profiles[g]))?;
        for k in 0..data.seeds.len() {
            let _ = writeln!(
                summary,
                "{gamma},{k},{},{},{},{},{}",
                data.seeds[k],
                data.widths[g][k],
                data.contained[g][k],
                data.profiles[g][k].touched_boundary,
                data.integrability[g][k]
            );
        }
    }
    write_file(&cfg.out_dir.join("support_summary.csv"), &summary)?;
    write_json(&cfg.out_dir.join("support_report.json"), report)
}

// ----------------------------------------------------------------- compare

/// A numeric column read back from a stored CSV.
#[derive(Debug, Clone)]
pub struct StoredColumn {
    pub values: Vec<f64>,
    pub weights: Option<Vec<f64>>,
    pub config_hash: Option<String>,
}

/// Reads `column` (and a `weight` column when present) from a CSV written
/// by one of the subcommands. `#` lines are skipped, except that a
/// `# config_hash=` line is remembered.
pub fn read_column(path: &Path, column: &str) -> Result<StoredColumn> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config_hash = None;
    let mut lines = text.lines().filter(|l| {
        if let Some(h) = l.strip_prefix("# config_hash=") {
            config_hash = Some(h.trim().to_string());
        }
        !l.starts_with('#') && !l.trim().is_empty()
    });
    let head = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument(format!("{}: no header row", path.display())))?;
    let names: Vec<&str> = head.split(',').map(str::trim).collect();
    let col = names.iter().position(|n| *n == column).ok_or_else(|| {
        Error::InvalidArgument(format!("{}: no column `{column}`", path.display()))
    })?;
    let wcol = names.iter().position(|n| *n == "weight");
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize| -> Result<f64> {
            fields
                .get(idx)
                .and_then(|f| f.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "{}: bad value in data row {}",
                        path.display(),
                        i + 1
                    ))
                })
        };
        values.push(parse(col)?);
        if let Some(w) = wcol {
            weights.push(parse(w)?);
        }
    }
    Ok(StoredColumn {
        values,
        weights: wcol.map(|_| weights),
        config_hash,
    })
}

/// Weighted KS test between one column of two stored summaries.
pub fn run_compare(
    a: &Path,
    b: &Path,
    column: &str,
    permutations: usize,
    seed: u64,
) -> Result<TestRecord> {
    let load = |p: &Path| -> Result<(WeightedSample, Option<String>)> {
        let c = read_column(p, column)?;
        let label = p.display().to_string();
        let sample = match c.weights {
            Some(w) => WeightedSample::new(c.values, w, label)?,
            None => WeightedSample::unweighted(c.values, label)?,
        };
        Ok((sample, c.config_hash))
    };
    let (sa, ha) = load(a)?;
    let (sb, hb) = load(b)?;
    let ks = ks_weighted(&sa, &sb, permutations, seed)?;
    let ess = crate::stats::ess(&sa.weights).0.min(crate::stats::ess(&sb.weights).0);
    Ok(TestRecord {
        test: format!("ks_weighted:{column}"),
        statistic: ks.statistic,
        p_value: ks.p_value,
        ess,
        n_a: sa.len(),
        n_b: sb.len(),
        seed,
        config_hash: format!(
            "{}+{}",
            ha.unwrap_or_else(|| "unknown".into()),
            hb.unwrap_or_else(|| "unknown".into())
        ),
    })
}

/// The grid a config resolves to, for callers that only need geometry.
pub fn config_grid(cfg: &RunConfig) -> Result<SpaceTimeGrid> {
    cfg.grid()
}
