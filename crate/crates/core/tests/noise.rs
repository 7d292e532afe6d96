use spde_lab::{derive_seed, sample_noise, SpaceTimeGrid};
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn normals_have_unit_moments_and_pass_ks() {
    let grid = SpaceTimeGrid::new(1.0, 0.0, 1.0, 400, 50).unwrap();
    let noise = sample_noise(&grid, 20240611);
    let xi = noise.normals();
    let n = xi.len() as f64;
    let mean = xi.iter().sum::<f64>() / n;
    let var = xi.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 4.0 / n.sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 4.0 * (2.0 / n).sqrt(), "var {var}");

    let mut sorted = xi.to_vec();
    sorted.sort_by(f64::total_cmp);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    // asymptotic 1% critical value
    assert!(d < 1.628 / n.sqrt(), "KS distance {d}");
}

#[test]
fn increments_scale_with_cell_measure() {
    let grid = SpaceTimeGrid::new(0.5, -1.0, 1.0, 50, 10).unwrap();
    let noise = sample_noise(&grid, 3);
    let scale = (grid.dt * grid.dx).sqrt();
    assert!((noise.increment_scale() - scale).abs() < 1e-15);
    assert!((noise.increment(7, 3) - scale * noise.xi(7, 3)).abs() < 1e-15);
}

#[test]
fn seeds_reproduce_and_streams_differ() {
    let grid = SpaceTimeGrid::new(0.1, 0.0, 1.0, 20, 8).unwrap();
    let a = sample_noise(&grid, derive_seed(9, 1, 4));
    let b = sample_noise(&grid, derive_seed(9, 1, 4));
    let c = sample_noise(&grid, derive_seed(9, 2, 4));
    assert_eq!(a.normals(), b.normals());
    assert_ne!(a.normals(), c.normals());
}
