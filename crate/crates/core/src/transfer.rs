//! Girsanov change of measure between the heat equation and its drifted twin.
//!
//! With `R = d/a` evaluated on a heat path `U`, the discrete density
//!
//! ```text
//! log Xi = sum_{m < tau} sum_j R(t_m, x_j, U[m][j]) dW(m, j)
//!          - 1/2 sum_{m < tau} sum_j R^2 dt dx
//! ```
//!
//! is exactly the likelihood ratio between the drifted and undrifted
//! explicit schemes on `[0, tau]`, because shifting every increment by
//! `R dt dx` turns one update rule into the other. `tau` is the first time
//! index at which the running quadratic functional reaches the localization
//! level `n`; paths with `quad[n_t] < n` are the survivors.

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSpec;
use crate::error::{Error, Result};
use crate::solver::FieldPath;
use crate::stats::NeumaierSum;

/// `d(t,x,u) / a(t,x,u)`, with `0/0 = 0`.
#[inline]
pub fn ratio(t: f64, x: f64, u: f64, spec: &CoefficientSpec) -> Result<f64> {
    let d = spec.d.eval(t, x, u);
    if d == 0.0 {
        return Ok(0.0);
    }
    let a = spec.a.eval(t, x, u);
    if a == 0.0 {
        return Err(Error::RatioUndefined { t, x, u, d });
    }
    Ok(d / a)
}

/// Running sums of the quadratic functional and of the stochastic integral
/// along one path. Both arrays have `n_t + 1` entries and start at zero;
/// entry `m` sums time steps `0..m`.
#[derive(Debug, Clone)]
pub struct TransferTrace {
    pub seed: u64,
    pub quad: Vec<f64>,
    pub stochastic: Vec<f64>,
}

impl TransferTrace {
    pub fn quad_final(&self) -> f64 {
        *self.quad.last().expect("trace has at least one entry")
    }

    /// Localized record at level `n`.
    pub fn record(&self, n: f64) -> TransferRecord {
        let tau_index = localization_time(&self.quad, n);
        let quad_final = self.quad_final();
        TransferRecord {
            seed: self.seed,
            n,
            tau_index,
            quad_final,
            quad_at_tau: self.quad[tau_index],
            log_xi: self.stochastic[tau_index] - 0.5 * self.quad[tau_index],
            survived: quad_final < n,
        }
    }
}

/// Per-path Girsanov data at one localization level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub seed: u64,
    pub n: f64,
    /// Discrete `T ∧ tau_n`, in `0..=n_t`.
    pub tau_index: usize,
    pub quad_final: f64,
    pub quad_at_tau: f64,
    pub log_xi: f64,
    /// `quad[n_t] < n`, i.e. `tau_n = T`.
    pub survived: bool,
}

/// Single pass over the path computing both running sums. The integrand is
/// evaluated at the left time point and paired with the increment that
/// drove the step out of it.
pub fn transfer_trace(path: &FieldPath, spec: &CoefficientSpec) -> Result<TransferTrace> {
    let grid = &path.grid;
    let xs = grid.cell_centers();
    let measure = grid.cell_measure();
    let scale = path.noise.increment_scale();

    let mut quad = Vec::with_capacity(grid.n_t + 1);
    let mut stochastic = Vec::with_capacity(grid.n_t + 1);
    let mut q_acc = NeumaierSum::default();
    let mut s_acc = NeumaierSum::default();
    quad.push(0.0);
    stochastic.push(0.0);
    for m in 0..grid.n_t {
        let t = grid.time(m);
        let row = path.slice(m);
        let xi = path.noise.row(m);
        let mut q_row = 0.0;
        let mut s_row = 0.0;
        for j in 0..grid.n_x {
            let r = ratio(t, xs[j], row[j], spec)?;
            q_row += r * r;
            s_row += r * xi[j];
        }
        q_acc.add(q_row * measure);
        s_acc.add(s_row * scale);
        quad.push(q_acc.total());
        stochastic.push(s_acc.total());
    }
    Ok(TransferTrace {
        seed: path.noise.seed,
        quad,
        stochastic,
    })
}

/// Running `quad[m] = sum_{k < m} sum_j R^2 dt dx`, `m = 0..=n_t`.
pub fn accumulate_quadratic(path: &FieldPath, spec: &CoefficientSpec) -> Result<Vec<f64>> {
    Ok(transfer_trace(path, spec)?.quad)
}

/// Smallest index with `quad[m] >= n`, or the last index if the level is
/// never reached. `n <= 0` stops at index 0.
pub fn localization_time(quad: &[f64], n: f64) -> usize {
    let last = quad.len().saturating_sub(1);
    // quad is nondecreasing, so the crossing is a partition point
    let first = quad.partition_point(|&q| q < n);
    first.min(last)
}

pub fn log_weight(path: &FieldPath, spec: &CoefficientSpec, n: f64) -> Result<TransferRecord> {
    Ok(transfer_trace(path, spec)?.record(n))
}

/// Monte Carlo estimate with its standard error and the effective sample
/// size of the weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub ess: f64,
    pub n: usize,
}

/// `(1/N) sum f(U_k) Xi_k 1{survived_k}` over an ensemble of heat paths.
pub fn reweighted_expectation<F>(
    functional: F,
    ensemble: &[(FieldPath, TransferRecord)],
) -> Result<Estimate>
where
    F: Fn(&FieldPath) -> f64,
{
    let values: Vec<f64> = ensemble.iter().map(|(p, _)| functional(p)).collect();
    let records: Vec<TransferRecord> = ensemble.iter().map(|(_, r)| *r).collect();
    reweighted_estimate(&values, &records)
}

/// Same estimator on precomputed functional values.
pub fn reweighted_estimate(values: &[f64], records: &[TransferRecord]) -> Result<Estimate> {
    if records.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if values.len() != records.len() {
        return Err(Error::InvalidArgument(format!(
            "{} functional values for {} records",
            values.len(),
            records.len()
        )));
    }
    let level = records[0].n;
    if records.iter().any(|r| r.n != level) {
        return Err(Error::InvalidArgument(
            "records mix localization levels".into(),
        ));
    }

    let (shift, weights) = shifted_weights(records);
    let count = records.len();
    let terms: Vec<f64> = values.iter().zip(&weights).map(|(f, w)| f * w).collect();

    let mut sum = NeumaierSum::default();
    terms.iter().for_each(|&v| sum.add(v));
    let mean = sum.total() / count as f64;
    let var = if count > 1 {
        let mut ss = NeumaierSum::default();
        terms.iter().for_each(|&v| ss.add((v - mean) * (v - mean)));
        ss.total() / (count - 1) as f64
    } else {
        0.0
    };
    let scale = shift.exp();
    Ok(Estimate {
        estimate: scale * mean,
        standard_error: scale * (var / count as f64).sqrt(),
        ess: crate::stats::ess(&weights).0,
        n: count,
    })
}

/// Weights `exp(log_xi - shift) 1{survived}` together with the shift, the
/// largest surviving log weight. The shift is 0 when nothing survives.
pub fn shifted_weights(records: &[TransferRecord]) -> (f64, Vec<f64>) {
    let shift = records
        .iter()
        .filter(|r| r.survived)
        .map(|r| r.log_xi)
        .fold(f64::NEG_INFINITY, f64::max);
    let shift = if shift.is_finite() { shift } else { 0.0 };
    let weights = records
        .iter()
        .map(|r| {
            if r.survived {
                (r.log_xi - shift).exp()
            } else {
                0.0
            }
        })
        .collect();
    (shift, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{preset, Coefficient, InitialData, PresetName};
    use crate::grid::{sample_noise, SpaceTimeGrid};
    use crate::solver::{solve_path, solve_path_with, Boundary, SolveOptions};

    #[test]
    fn ratio_examples() {
        let ac = preset(PresetName::AllenCahn, 1.0, 0.5).unwrap();
        assert_eq!(ratio(0.0, 0.0, 1.0, &ac).unwrap(), 0.0);
        assert_eq!(ratio(0.0, 0.0, 4.0, &ac).unwrap(), -60.0);
        assert_eq!(ratio(0.0, 0.0, 0.0, &ac).unwrap(), 0.0);
        let hp = preset(PresetName::HeatPower, 1.0, 0.5).unwrap();
        for u in [-3.0, 0.0, 0.2, 5.0] {
            assert_eq!(ratio(0.1, 0.2, u, &hp).unwrap(), 0.0);
        }
    }

    #[test]
    fn ratio_matches_closed_form() {
        for &(c, gamma) in &[(1.0, 0.5), (2.0, 0.75), (0.5, 0.6)] {
            let ac = preset(PresetName::AllenCahn, c, gamma).unwrap();
            for u in [-1.7, -0.3, 0.01, 0.4, 2.5] {
                // d and the sign-extended a are both odd, so R is even in u
                let closed = (2.0 / c) * f64::abs(u).powf(1.0 - gamma) * (1.0 - u * u);
                let r = ratio(0.0, 0.0, u, &ac).unwrap();
                assert!((r - closed).abs() <= 1e-12 * closed.abs().max(1.0), "{u}");
            }
        }
    }

    #[test]
    fn ratio_undefined_when_only_a_vanishes() {
        let spec = CoefficientSpec::new(
            "bad",
            Coefficient::Zero,
            Coefficient::Zero,
            Coefficient::Constant(1.0),
        );
        let err = ratio(0.5, 0.25, 3.0, &spec).unwrap_err();
        assert!(matches!(err, Error::RatioUndefined { t, x, u, .. } if t == 0.5 && x == 0.25 && u == 3.0));
    }

    #[test]
    fn localization_examples() {
        assert_eq!(localization_time(&[0.0; 11], 3.0), 10);
        assert_eq!(localization_time(&[0.0, 0.5, 1.2, 2.0], 1.0), 2);
        assert_eq!(localization_time(&[0.0, 0.5, 1.2, 2.0], 0.0), 0);
        assert_eq!(localization_time(&[0.0, 0.5, 1.2, 2.0], -1.0), 0);
        assert_eq!(localization_time(&[0.0, 0.5, 1.2, 2.0], 5.0), 3);
    }

    #[test]
    fn quad_on_constant_single_cell() {
        // integrand 4 |u| (u^2 - 1)^2 / C^2 = 72 at u = 2, C = 1, gamma = 1/2
        let g = SpaceTimeGrid::new(0.5, 0.0, 0.25, 10, 1).unwrap();
        let spec = preset(PresetName::AllenCahn, 1.0, 0.5).unwrap();
        let noise = sample_noise(&g, 0);
        let opts = SolveOptions {
            laplacian: false,
            ..SolveOptions::default()
        };
        let frozen = CoefficientSpec::new("frozen", Coefficient::Zero, Coefficient::Zero, Coefficient::Zero);
        let path = solve_path_with(&g, &frozen, &InitialData::constant(2.0), &noise, &opts).unwrap();
        let quad = accumulate_quadratic(&path, &spec).unwrap();
        let expected = 72.0 * 0.5 * 0.25;
        assert!((quad[g.n_t] - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_drift_gives_unit_weights() {
        let g = SpaceTimeGrid::new(0.1, 0.0, 1.0, 500, 16).unwrap();
        let hp = preset(PresetName::HeatPower, 1.0, 0.5).unwrap();
        let h = InitialData::bump(0.5, 0.3, 1.0);
        let path = solve_path(&g, &hp, false, &h, &sample_noise(&g, 7), Boundary::Neumann).unwrap();
        let rec = log_weight(&path, &hp, 4.0).unwrap();
        assert_eq!(rec.log_xi, 0.0);
        assert!(rec.survived);
        assert_eq!(rec.tau_index, g.n_t);
        let est = reweighted_expectation(|_| 1.0, &[(path.clone(), rec), (path, rec)]).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.ess, 2.0);
    }

    #[test]
    fn empty_ensemble_rejected() {
        assert!(matches!(reweighted_estimate(&[], &[]), Err(Error::EmptyEnsemble)));
    }

    #[test]
    fn shifted_weights_handle_huge_logs() {
        let rec = |log_xi: f64, survived| TransferRecord {
            seed: 0,
            n: 1.0,
            tau_index: 0,
            quad_final: 0.0,
            quad_at_tau: 0.0,
            log_xi,
            survived,
        };
        let records = [rec(800.0, true), rec(799.0, true), rec(5000.0, false)];
        let (shift, w) = shifted_weights(&records);
        assert_eq!(shift, 800.0);
        assert_eq!(w[0], 1.0);
        assert!((w[1] - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(w[2], 0.0);
        let est = reweighted_estimate(&[1.0, 1.0, 1.0], &records).unwrap();
        assert!(est.estimate.is_infinite());
        assert!(est.ess > 1.0 && est.ess < 2.0);
    }
}
