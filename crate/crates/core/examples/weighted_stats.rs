// Weighted ECDF, KS permutation test, ESS and bootstrap intervals on a
// toy importance-sampling problem: N(0,1) draws tilted to N(0.3,1).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use spde_lab::{bootstrap_ci, ess, ks_weighted, weighted_ecdf, Statistic, WeightedSample};

pub fn run_example() -> spde_lab::Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shift = 0.3;
    let base: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let weights: Vec<f64> = base.iter().map(|x| (shift * x - 0.5 * shift * shift).exp()).collect();
    let target: Vec<f64> = (0..2000)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            shift + z
        })
        .collect();

    let tilted = WeightedSample::new(base.clone(), weights.clone(), "tilted")?;
    let direct = WeightedSample::unweighted(target, "direct")?;
    let plain = WeightedSample::unweighted(base, "untilted")?;

    let (e, _) = ess(&weights);
    println!("ESS {e:.1} of {}", weights.len());
    println!(
        "F(0): tilted {:.4}  direct {:.4}  untilted {:.4}",
        weighted_ecdf(&tilted, 0.0)?,
        weighted_ecdf(&direct, 0.0)?,
        weighted_ecdf(&plain, 0.0)?
    );
    let good = ks_weighted(&tilted, &direct, 500, 1)?;
    let bad = ks_weighted(&plain, &direct, 500, 1)?;
    println!("KS tilted vs direct:   D = {:.4}, p = {:.3}", good.statistic, good.p_value);
    println!("KS untilted vs direct: D = {:.4}, p = {:.3}", bad.statistic, bad.p_value);

    let ci = bootstrap_ci(&tilted, Statistic::Mean, 400, 0.95, 2)?;
    println!("tilted mean 95% CI [{:.4}, {:.4}]", ci.lower, ci.upper);
    let med = bootstrap_ci(&direct, Statistic::Quantile(0.5), 400, 0.95, 3)?;
    println!("direct median 95% CI [{:.4}, {:.4}]", med.lower, med.upper);
    Ok((good.p_value, bad.p_value))
}

#[allow(dead_code)]
fn main() -> spde_lab::Result<()> {
    run_example().map(|_| ())
}
