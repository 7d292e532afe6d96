// Deterministic heat equation against the Gauss-Kronrod heat-kernel oracle.
//
// Switching the noise off (`a = 0`) and the drift off leaves the explicit
// scheme for `u_t = u_xx`; its interior error should shrink by about four
// when `dx` halves at a fixed `dt/dx^2`.

use spde_lab::{
    heat_oracle, solve_path, Boundary, Coefficient, CoefficientSpec, InitialData, SpaceTimeGrid,
};

/// Max interior error on `n_x` cells at `dt = 0.4 dx^2`.
pub fn interior_error(n_x: usize, h: &InitialData, t_end: f64) -> spde_lab::Result<(f64, f64, f64)> {
    let (xl, xr) = (-8.0, 8.0);
    let dx = (xr - xl) / n_x as f64;
    let n_t = (t_end / (0.4 * dx * dx)).ceil() as usize;
    let grid = SpaceTimeGrid::new(t_end, xl, xr, n_t, n_x)?;
    let spec = CoefficientSpec::new("heat", Coefficient::Zero, Coefficient::Zero, Coefficient::Zero);
    let noise = spde_lab::sample_noise(&grid, 0);
    let path = solve_path(&grid, &spec, false, h, &noise, Boundary::Neumann)?;
    let mut err: f64 = 0.0;
    for (j, x) in grid.cell_centers().into_iter().enumerate() {
        if x.abs() <= 4.0 {
            err = err.max((path.terminal()[j] - heat_oracle(h, t_end, x)?).abs());
        }
    }
    Ok((err, grid.dx, grid.dt))
}

pub fn run_example() -> spde_lab::Result<f64> {
    let h = InitialData::gaussian(0.0, 1.0, 1.0);
    let mut prev = None;
    let mut ratio = f64::NAN;
    println!("n_x      dx        dt         max err    bound");
    for n_x in [32, 64, 128] {
        let (err, dx, dt) = interior_error(n_x, &h, 0.5)?;
        println!("{n_x:<8} {dx:<9.4} {dt:<10.3e} {err:<10.3e} {:.3e}", 5.0 * (dx * dx + dt));
        if let Some(p) = prev {
            ratio = p / err;
            println!("         error ratio {ratio:.3}");
        }
        prev = Some(err);
    }
    Ok(ratio)
}

#[allow(dead_code)]
fn main() -> spde_lab::Result<()> {
    run_example().map(|_| ())
}
