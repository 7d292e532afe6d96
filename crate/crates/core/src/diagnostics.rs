//! Compact-support measurement, the integrability functional of the
//! Allen-Cahn pair, and the deterministic heat-semigroup oracle.

use serde::{Deserialize, Serialize};

use crate::coefficients::InitialData;
use crate::error::{Error, Result};
use crate::solver::FieldPath;
use crate::stats::NeumaierSum;

/// Fraction of the domain at each end that counts as "near the boundary".
pub const BOUNDARY_MARGIN: f64 = 0.1;

/// epsilon-support of every time slice of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportProfile {
    pub epsilon: f64,
    pub times: Vec<f64>,
    /// Smallest cell-index interval holding every `|u| > epsilon`, per slice.
    pub intervals: Vec<Option<(usize, usize)>>,
    pub widths: Vec<f64>,
    /// Space-time union of the per-slice intervals.
    pub union: Option<(usize, usize)>,
    pub touched_boundary: bool,
    pub x_left: f64,
    pub dx: f64,
}

impl SupportProfile {
    /// Support at the time slice closest to `t`.
    pub fn at_time(&self, t: f64) -> (Option<(usize, usize)>, f64) {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        (self.intervals[k], self.widths[k])
    }

    pub fn cell_center(&self, cell: usize) -> f64 {
        self.x_left + (cell as f64 + 0.5) * self.dx
    }

    /// Whether the support stays inside `[lo, hi]` at every recorded time.
    pub fn contained_in(&self, (lo, hi): (f64, f64)) -> bool {
        self.intervals.iter().flatten().all(|&(l, r)| {
            lo <= self.cell_center(l) && self.cell_center(r) <= hi
        })
    }
}

/// Support of one slice: indices of the outermost cells with `|u| > epsilon`.
pub fn slice_support(slice: &[f64], epsilon: f64) -> Option<(usize, usize)> {
    let left = slice.iter().position(|v| v.abs() > epsilon)?;
    let right = slice.iter().rposition(|v| v.abs() > epsilon)?;
    Some((left, right))
}

pub fn support_profile(path: &FieldPath, epsilon: f64) -> Result<SupportProfile> {
    support_profile_thinned(path, epsilon, 1)
}

/// Profile over every `stride`-th time slice (the final slice is always kept).
pub fn support_profile_thinned(
    path: &FieldPath,
    epsilon: f64,
    stride: usize,
) -> Result<SupportProfile> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "support threshold must be positive, got {epsilon}"
        )));
    }
    let grid = &path.grid;
    let stride = stride.max(1);
    let margin = ((BOUNDARY_MARGIN * grid.n_x as f64).ceil() as usize).max(1);

    let mut steps: Vec<usize> = (0..=grid.n_t).step_by(stride).collect();
    if *steps.last().unwrap() != grid.n_t {
        steps.push(grid.n_t);
    }

    let mut times = Vec::with_capacity(steps.len());
    let mut intervals = Vec::with_capacity(steps.len());
    let mut widths = Vec::with_capacity(steps.len());
    let mut union: Option<(usize, usize)> = None;
    let mut touched = false;
    for &n in &steps {
        let support = slice_support(path.slice(n), epsilon);
        if let Some((l, r)) = support {
            touched |= l < margin || r + margin >= grid.n_x;
            union = Some(match union {
                None => (l, r),
                Some((ul, ur)) => (ul.min(l), ur.max(r)),
            });
        }
        times.push(grid.time(n));
        widths.push(support.map_or(0.0, |(l, r)| (r - l + 1) as f64 * grid.dx));
        intervals.push(support);
    }
    Ok(SupportProfile {
        epsilon,
        times,
        intervals,
        widths,
        union,
        touched_boundary: touched,
        x_left: grid.x_left,
        dx: grid.dx,
    })
}

/// Fraction of profiles whose support stays inside `interval` at all times.
pub fn support_containment_rate(profiles: &[SupportProfile], interval: (f64, f64)) -> Result<f64> {
    if profiles.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let inside = profiles.iter().filter(|p| p.contained_in(interval)).count();
    Ok(inside as f64 / profiles.len() as f64)
}

/// `(4/C^2) sum_{n < n_t} sum_j |u|^{2(1-gamma)} (u^2 - 1)^2 dt dx`.
///
/// At `gamma = 1` the power is `|u|^0 = 1` even where `u = 0`, so dead zones
/// still contribute the constant term.
pub fn integrability_functional(path: &FieldPath, c: f64, gamma: f64) -> Result<f64> {
    if c == 0.0 {
        return Err(Error::InvalidCoefficients("C must be nonzero".into()));
    }
    let grid = &path.grid;
    let power = 2.0 * (1.0 - gamma);
    let mut total = NeumaierSum::default();
    for n in 0..grid.n_t {
        let row: f64 = path
            .slice(n)
            .iter()
            .map(|&u| {
                let u2 = u * u;
                u.abs().powf(power) * (u2 * u2 - 2.0 * u2 + 1.0)
            })
            .sum();
        total.add(row);
    }
    Ok(4.0 / (c * c) * total.total() * grid.cell_measure())
}

/// Whole-line heat semigroup `(4 pi t)^{-1/2} int exp(-(x-y)^2 / 4t) h(y) dy`
/// by adaptive Gauss-Kronrod quadrature to relative tolerance `1e-8`.
pub fn heat_oracle(h: &InitialData, t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "heat oracle needs t > 0, got {t}"
        )));
    }
    let spread = (2.0 * t).sqrt();
    // beyond 40 standard deviations the kernel mass is below 1e-300
    let (mut lo, mut hi) = (x - 40.0 * spread, x + 40.0 * spread);
    if let Some((l, r)) = h.support_hint {
        lo = lo.max(l);
        hi = hi.min(r);
        if lo >= hi {
            return Ok(0.0);
        }
    }
    let mut cuts = vec![lo];
    let mut inner: Vec<f64> = h
        .breakpoints()
        .into_iter()
        .chain((-8..=8).map(|k| x + k as f64 * spread))
        .filter(|p| *p > lo && *p < hi)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(hi);

    let norm = 1.0 / (4.0 * std::f64::consts::PI * t).sqrt();
    let kernel = |y: f64| {
        let z = x - y;
        norm * (-z * z / (4.0 * t)).exp() * h.eval(y)
    };
    let mut total = NeumaierSum::default();
    for w in cuts.windows(2) {
        total.add(adaptive_gauss_kronrod(&kernel, w[0], w[1], 1e-8, 1e-14));
    }
    Ok(total.total())
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (the 7-point rule)
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for k in 0..7 {
        let dx = half * GK_NODES[k];
        let pair = f(center - dx) + f(center + dx);
        kronrod += KRONROD_WEIGHTS[k] * pair;
        if k % 2 == 1 {
            gauss += GAUSS_WEIGHTS[k / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Recursive bisection until the Kronrod/Gauss difference meets the
/// tolerance.
pub fn adaptive_gauss_kronrod(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: (f64, f64),
        rel_tol: f64,
        abs_tol: f64,
        depth: u32,
    ) -> f64 {
        let (value, err) = whole;
        if err <= abs_tol.max(rel_tol * value.abs()) || depth == 0 {
            return value;
        }
        let mid = 0.5 * (a + b);
        let left = gauss_kronrod_15(f, a, mid);
        let right = gauss_kronrod_15(f, mid, b);
        recurse(f, a, mid, left, rel_tol, 0.5 * abs_tol, depth - 1)
            + recurse(f, mid, b, right, rel_tol, 0.5 * abs_tol, depth - 1)
    }
    let whole = gauss_kronrod_15(f, a, b);
    recurse(f, a, b, whole, rel_tol, abs_tol, 48)
}
