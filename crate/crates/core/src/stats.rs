//! Weighted two-sample statistics for comparing a reweighted ensemble with a
//! directly simulated one.

use std::cmp::Ordering;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};
use crate::grid::derive_seed;

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn compensated_sum<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    let mut acc = NeumaierSum::default();
    for v in values {
        acc.add(*v);
    }
    acc.total()
}

/// Values of a path functional with nonnegative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub label: String,
}

impl WeightedSample {
    pub fn new(values: Vec<f64>, weights: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("sample contains NaN".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(Error::InvalidArgument(
                "sample has no positive weight".into(),
            ));
        }
        Ok(WeightedSample {
            values,
            weights,
            label: label.into(),
        })
    }

    pub fn unweighted(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let weights = vec![1.0; values.len()];
        Self::new(values, weights, label)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        compensated_sum(&self.weights)
    }

    /// Weighted mean of the values.
    pub fn mean(&self) -> f64 {
        let mut acc = NeumaierSum::default();
        for (v, w) in self.values.iter().zip(&self.weights) {
            acc.add(v * w);
        }
        acc.total() / self.total_weight()
    }
}

/// `sum w 1{value <= q} / sum w`
pub fn weighted_ecdf(sample: &WeightedSample, q: f64) -> Result<f64> {
    let total = sample.total_weight();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("all weights are zero".into()));
    }
    let mut below = NeumaierSum::default();
    for (v, w) in sample.values.iter().zip(&sample.weights) {
        if *v <= q {
            below.add(*w);
        }
    }
    Ok((below.total() / total).min(1.0))
}

/// `(sum w)^2 / sum w^2`; the flag is set when every weight is zero.
pub fn ess(weights: &[f64]) -> (f64, bool) {
    let mut s = NeumaierSum::default();
    let mut s2 = NeumaierSum::default();
    for &w in weights {
        s.add(w);
        s2.add(w * w);
    }
    let (s, s2) = (s.total(), s2.total());
    if s2 == 0.0 {
        return (0.0, true);
    }
    (s * s / s2, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample weighted Kolmogorov-Smirnov test with a permutation p-value.
///
/// Each sample's weights are rescaled to mean one before pooling, so every
/// point carries its own relative weight into whichever group a
/// permutation assigns it to.
pub fn ks_weighted(
    sample_a: &WeightedSample,
    sample_b: &WeightedSample,
    n_permutations: usize,
    seed: u64,
) -> Result<KsResult> {
    if n_permutations < 100 {
        return Err(Error::InvalidArgument(format!(
            "n_permutations must be at least 100, got {n_permutations}"
        )));
    }
    // canonical order makes the test exactly symmetric in its arguments
    let (first, second) = if canonical_cmp(sample_a, sample_b) == Ordering::Greater {
        (sample_b, sample_a)
    } else {
        (sample_a, sample_b)
    };
    let pooled = Pooled::new(first, second);
    let n_first = first.len();
    let mut membership = vec![false; pooled.len()];
    membership[..n_first].iter_mut().for_each(|m| *m = true);
    let statistic = pooled.statistic(&membership);

    let exceed: usize = (0..n_permutations as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x4b53, k));
            let mut member = vec![false; pooled.len()];
            for i in rand::seq::index::sample(&mut rng, pooled.len(), n_first) {
                member[i] = true;
            }
            // tolerance absorbs rounding between equal partitions
            usize::from(pooled.statistic(&member) >= statistic - 1e-12)
        })
        .sum();

    Ok(KsResult {
        statistic,
        p_value: (1 + exceed) as f64 / (1 + n_permutations) as f64,
    })
}

/// Weighted KS distance `sup_q |F_a(q) - F_b(q)|` without a p-value.
pub fn ks_statistic(sample_a: &WeightedSample, sample_b: &WeightedSample) -> f64 {
    let pooled = Pooled::new(sample_a, sample_b);
    let mut membership = vec![false; pooled.len()];
    membership[..sample_a.len()].iter_mut().for_each(|m| *m = true);
    pooled.statistic(&membership)
}

fn canonical_cmp(a: &WeightedSample, b: &WeightedSample) -> Ordering {
    a.len()
        .cmp(&b.len())
        .then_with(|| cmp_slices(&a.values, &b.values))
        .then_with(|| cmp_slices(&a.weights, &b.weights))
}

fn cmp_slices(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

struct Pooled {
    /// pooled indices sorted by value
    order: Vec<usize>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl Pooled {
    fn new(a: &WeightedSample, b: &WeightedSample) -> Self {
        let mut values = Vec::with_capacity(a.len() + b.len());
        let mut weights = Vec::with_capacity(a.len() + b.len());
        for s in [a, b] {
            let scale = s.len() as f64 / s.total_weight();
            values.extend_from_slice(&s.values);
            weights.extend(s.weights.iter().map(|w| w * scale));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        Pooled {
            order,
            values,
            weights,
        }
    }

    fn len(&self) -> usize {
        self.values.len()
    }

    fn statistic(&self, in_first: &[bool]) -> f64 {
        let mut total_a = 0.0;
        let mut total_b = 0.0;
        for (w, &m) in self.weights.iter().zip(in_first) {
            if m {
                total_a += w;
            } else {
                total_b += w;
            }
        }
        if !(total_a > 0.0) || !(total_b > 0.0) {
            return f64::INFINITY;
        }
        let mut cum_a = 0.0;
        let mut cum_b = 0.0;
        let mut sup: f64 = 0.0;
        let mut k = 0;
        while k < self.order.len() {
            let v = self.values[self.order[k]];
            while k < self.order.len() && self.values[self.order[k]] == v {
                let i = self.order[k];
                if in_first[i] {
                    cum_a += self.weights[i];
                } else {
                    cum_b += self.weights[i];
                }
                k += 1;
            }
            sup = sup.max((cum_a / total_a - cum_b / total_b).abs());
        }
        sup.min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Statistic {
    Mean,
    Quantile(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    /// The sample had a single distinct value, so the interval has zero width.
    pub degenerate: bool,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Percentile bootstrap over resamples drawn with probability proportional
/// to weight.
pub fn bootstrap_ci(
    sample: &WeightedSample,
    statistic: Statistic,
    n_boot: usize,
    level: f64,
    seed: u64,
) -> Result<Interval> {
    if n_boot < 200 {
        return Err(Error::InvalidArgument(format!(
            "n_boot must be at least 200, got {n_boot}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "level must lie in (0, 1), got {level}"
        )));
    }
    if let Statistic::Quantile(p) = statistic {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "quantile must lie in [0, 1], got {p}"
            )));
        }
    }

    let mut support = sample
        .values
        .iter()
        .zip(&sample.weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(v, _)| *v);
    let first = support.next().expect("valid sample has a positive weight");
    if support.all(|v| v == first) {
        return Ok(Interval {
            lower: first,
            upper: first,
            degenerate: true,
        });
    }

    let total = sample.total_weight();
    let normalized: Vec<f64> = sample.weights.iter().map(|w| w / total).collect();
    let picker = WeightedIndex::new(&normalized)
        .map_err(|e| Error::InvalidArgument(format!("bootstrap weights: {e}")))?;
    let size = sample.len();
    let mut replicates: Vec<f64> = (0..n_boot as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xB007, b));
            let mut draw: Vec<f64> = (0..size)
                .map(|_| sample.values[picker.sample(&mut rng)])
                .collect();
            match statistic {
                Statistic::Mean => compensated_sum(&draw) / size as f64,
                Statistic::Quantile(p) => {
                    draw.sort_by(f64::total_cmp);
                    sorted_quantile(&draw, p)
                }
            }
        })
        .collect();
    replicates.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    Ok(Interval {
        lower: sorted_quantile(&replicates, 0.5 * alpha),
        upper: sorted_quantile(&replicates, 1.0 - 0.5 * alpha),
        degenerate: false,
    })
}

/// Linear-interpolation quantile of sorted data.
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    sorted_quantile(&v, 0.5)
}

/// One-sided paired sign test of `H1: first < second`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    /// pairs with `first < second`
    pub favourable: usize,
    /// pairs with `first > second`
    pub unfavourable: usize,
    pub ties: usize,
    pub p_value: f64,
}

pub fn sign_test_less(first: &[f64], second: &[f64]) -> Result<SignTest> {
    if first.len() != second.len() {
        return Err(Error::InvalidArgument(
            "sign test needs paired samples of equal length".into(),
        ));
    }
    let mut favourable = 0;
    let mut unfavourable = 0;
    for (a, b) in first.iter().zip(second) {
        match a.partial_cmp(b) {
            Some(Ordering::Less) => favourable += 1,
            Some(Ordering::Greater) => unfavourable += 1,
            _ => {}
        }
    }
    let trials = favourable + unfavourable;
    let p_value = if trials == 0 || favourable == 0 {
        1.0
    } else {
        let binom = Binomial::new(0.5, trials as u64)
            .map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?;
        // P(X >= favourable)
        binom.sf(favourable as u64 - 1)
    };
    Ok(SignTest {
        favourable,
        unfavourable,
        ties: first.len() - trials,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(values: &[f64]) -> WeightedSample {
        WeightedSample::unweighted(values.to_vec(), "t").unwrap()
    }

    #[test]
    fn ecdf_examples() {
        let s = unit(&[1.0, 2.0, 3.0]);
        assert!((weighted_ecdf(&s, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(weighted_ecdf(&s, 0.5).unwrap(), 0.0);
        assert_eq!(weighted_ecdf(&s, 3.5).unwrap(), 1.0);
        let w = WeightedSample::new(vec![1.0, 2.0, 3.0], vec![1.0, 0.0, 1.0], "w").unwrap();
        assert_eq!(weighted_ecdf(&w, 2.0).unwrap(), 0.5);
    }

    #[test]
    fn sample_validation() {
        assert!(WeightedSample::new(vec![1.0], vec![0.0], "z").is_err());
        assert!(WeightedSample::new(vec![1.0], vec![-1.0], "n").is_err());
        assert!(WeightedSample::new(vec![1.0, 2.0], vec![1.0], "l").is_err());
    }

    #[test]
    fn ess_examples() {
        assert_eq!(ess(&[1.0; 7]), (7.0, false));
        assert_eq!(ess(&[0.0, 0.0, 3.0, 0.0]), (1.0, false));
        assert!((ess(&[1.0, 1.0, 2.0]).0 - 16.0 / 6.0).abs() < 1e-15);
        assert_eq!(ess(&[0.0, 0.0]), (0.0, true));
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let s = unit(&[0.3, 1.2, -0.7, 2.2, 0.9]);
        let r = ks_weighted(&s, &s, 200, 1).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);

        let a = unit(&[0.0, 0.1, 0.2]);
        let b = unit(&[1.0, 1.1, 1.2, 1.3]);
        assert_eq!(ks_weighted(&a, &b, 100, 1).unwrap().statistic, 1.0);
        assert!(ks_weighted(&a, &b, 50, 1).is_err());
    }

    #[test]
    fn ks_is_symmetric() {
        let a = WeightedSample::new(vec![0.1, 0.5, 0.9, 1.3], vec![1.0, 2.0, 0.5, 1.0], "a").unwrap();
        let b = unit(&[0.2, 0.4, 1.0, 1.5, 2.0]);
        assert_eq!(ks_weighted(&a, &b, 300, 9).unwrap(), ks_weighted(&b, &a, 300, 9).unwrap());
    }

    #[test]
    fn bootstrap_degenerate_and_nested() {
        let c = unit(&[2.5; 10]);
        let i = bootstrap_ci(&c, Statistic::Mean, 200, 0.95, 0).unwrap();
        assert!(i.degenerate);
        assert_eq!((i.lower, i.upper), (2.5, 2.5));

        let s = unit(&[0.1, 0.4, 0.2, 0.9, 1.5, 0.3, 0.8, 1.1]);
        let wide = bootstrap_ci(&s, Statistic::Quantile(0.5), 400, 0.95, 3).unwrap();
        let narrow = bootstrap_ci(&s, Statistic::Quantile(0.5), 400, 0.5, 3).unwrap();
        assert!(wide.contains_interval(&narrow));
        assert!(bootstrap_ci(&s, Statistic::Mean, 100, 0.9, 0).is_err());
        assert!(bootstrap_ci(&s, Statistic::Mean, 200, 1.0, 0).is_err());
    }

    #[test]
    fn sign_test_counts() {
        let t = sign_test_less(&[1.0, 1.0, 1.0, 2.0], &[2.0, 2.0, 1.0, 3.0]).unwrap();
        assert_eq!((t.favourable, t.unfavourable, t.ties), (3, 0, 1));
        assert!((t.p_value - 0.125).abs() < 1e-12);
        let none = sign_test_less(&[2.0], &[1.0]).unwrap();
        assert_eq!(none.p_value, 1.0);
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(&v), 2.0);
    }
}
