//! Space-time discretization and the white-noise increments that drive a path.
//!
//! The domain `[0, t_end] x [x_left, x_right]` is split into `n_t` time steps
//! and `n_x` spatial cells. Cell `j` is centred at
//! `x_left + (j + 1/2) dx`. White noise is discretized as one independent
//! Gaussian per space-time cell, `dW(n, j) = sqrt(dt dx) xi[n][j]`, so each
//! increment has variance equal to the cell measure.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    pub t_end: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub n_t: usize,
    pub n_x: usize,
    pub dt: f64,
    pub dx: f64,
    /// `dt <= dx^2 / 2`, the stability bound of the explicit heat step.
    pub stable: bool,
}

impl SpaceTimeGrid {
    pub fn new(t_end: f64, x_left: f64, x_right: f64, n_t: usize, n_x: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "non-positive time extent t_end = {t_end}"
            )));
        }
        if !(x_right > x_left) || !x_left.is_finite() || !x_right.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "non-positive spatial extent [{x_left}, {x_right}]"
            )));
        }
        if n_t == 0 {
            return Err(Error::InvalidGrid("n_t must be at least 1".into()));
        }
        if n_x == 0 {
            return Err(Error::InvalidGrid("n_x must be at least 1".into()));
        }
        let dt = t_end / n_t as f64;
        let dx = (x_right - x_left) / n_x as f64;
        Ok(SpaceTimeGrid {
            t_end,
            x_left,
            x_right,
            n_t,
            n_x,
            dt,
            dx,
            stable: dt <= 0.5 * dx * dx,
        })
    }

    /// Smallest `n_t` that makes the grid CFL-stable for the given extents.
    pub fn stable_steps(t_end: f64, x_left: f64, x_right: f64, n_x: usize) -> usize {
        let dx = (x_right - x_left) / n_x as f64;
        let n = (2.0 * t_end / (dx * dx)).ceil() as usize;
        n.max(1)
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    #[inline]
    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    #[inline]
    pub fn cell_center(&self, cell: usize) -> f64 {
        self.x_left + (cell as f64 + 0.5) * self.dx
    }

    pub fn cell_centers(&self) -> Vec<f64> {
        (0..self.n_x).map(|j| self.cell_center(j)).collect()
    }

    /// Lebesgue measure of one space-time cell.
    #[inline]
    pub fn cell_measure(&self) -> f64 {
        self.dt * self.dx
    }

    /// Index of the cell containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let j = ((x - self.x_left) / self.dx).floor();
        (j.max(0.0) as usize).min(self.n_x - 1)
    }
}

/// Standard normal draws for every space-time cell of a grid, row-major in time.
#[derive(Debug, Clone)]
pub struct NoiseIncrements {
    xi: Arc<[f64]>,
    pub n_t: usize,
    pub n_x: usize,
    pub seed: u64,
    scale: f64,
}

impl NoiseIncrements {
    /// Wraps externally supplied normals (length `n_t * n_x`, time-major).
    pub fn from_normals(grid: &SpaceTimeGrid, xi: Vec<f64>, seed: u64) -> Result<Self> {
        if xi.len() != grid.n_t * grid.n_x {
            return Err(Error::DimensionMismatch {
                got_t: xi.len() / grid.n_x.max(1),
                got_x: grid.n_x,
                want_t: grid.n_t,
                want_x: grid.n_x,
            });
        }
        Ok(NoiseIncrements {
            xi: xi.into(),
            n_t: grid.n_t,
            n_x: grid.n_x,
            seed,
            scale: grid.cell_measure().sqrt(),
        })
    }

    /// Normalized draw `xi[step][cell]`.
    #[inline]
    pub fn xi(&self, step: usize, cell: usize) -> f64 {
        self.xi[step * self.n_x + cell]
    }

    /// Row of normalized draws for one time step.
    #[inline]
    pub fn row(&self, step: usize) -> &[f64] {
        &self.xi[step * self.n_x..(step + 1) * self.n_x]
    }

    /// Brownian-sheet increment over cell `(step, cell)`.
    #[inline]
    pub fn increment(&self, step: usize, cell: usize) -> f64 {
        self.scale * self.xi(step, cell)
    }

    /// `sqrt(dt dx)`, the standard deviation of one increment.
    pub fn increment_scale(&self) -> f64 {
        self.scale
    }

    pub fn normals(&self) -> &[f64] {
        &self.xi
    }

    pub fn matches(&self, grid: &SpaceTimeGrid) -> bool {
        self.n_t == grid.n_t && self.n_x == grid.n_x
    }
}

/// Draws the noise for one path. ChaCha8 is a keyed counter-mode generator,
/// so the array is a pure function of the grid shape and `seed`.
pub fn sample_noise(grid: &SpaceTimeGrid, seed: u64) -> NoiseIncrements {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xi: Vec<f64> = StandardNormal
        .sample_iter(&mut rng)
        .take(grid.n_t * grid.n_x)
        .collect();
    NoiseIncrements {
        xi: xi.into(),
        n_t: grid.n_t,
        n_x: grid.n_x,
        seed,
        scale: grid.cell_measure().sqrt(),
    }
}

/// Seed of ensemble member `index` in `stream`, derived from `base` with a
/// splitmix64 finalizer so any member can be replayed on its own.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03)
        ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unstable_grid_is_flagged() {
        let g = SpaceTimeGrid::new(1.0, -1.0, 1.0, 100, 20).unwrap();
        assert!((g.dt - 0.01).abs() < 1e-15);
        assert!((g.dx - 0.1).abs() < 1e-15);
        assert!(!g.stable);
    }

    #[test]
    fn stable_grid_is_flagged() {
        let g = SpaceTimeGrid::new(1.0, 0.0, 1.0, 10_000, 20).unwrap();
        assert!((g.dt - 1e-4).abs() < 1e-18);
        assert!((g.dx - 0.05).abs() < 1e-15);
        assert!(g.stable);
    }

    #[test]
    fn rejects_degenerate_extents() {
        let err = SpaceTimeGrid::new(0.0, 0.0, 1.0, 10, 10).unwrap_err();
        assert!(err.to_string().contains("non-positive time extent"));
        assert!(SpaceTimeGrid::new(1.0, 1.0, 1.0, 10, 10).is_err());
        assert!(SpaceTimeGrid::new(1.0, 0.0, 1.0, 0, 10).is_err());
        assert!(SpaceTimeGrid::new(1.0, 0.0, 1.0, 10, 0).is_err());
    }

    #[test]
    fn stable_steps_gives_stable_grid() {
        let n_t = SpaceTimeGrid::stable_steps(0.3, 0.0, 1.0, 32);
        assert!(SpaceTimeGrid::new(0.3, 0.0, 1.0, n_t, 32).unwrap().stable);
    }

    #[test]
    fn same_seed_same_noise() {
        let g = SpaceTimeGrid::new(1.0, 0.0, 1.0, 50, 7).unwrap();
        let a = sample_noise(&g, 42);
        let b = sample_noise(&g, 42);
        assert_eq!(a.normals(), b.normals());
        let c = sample_noise(&g, 43);
        assert_ne!(a.normals(), c.normals());
    }

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..100).map(|k| derive_seed(7, 1, k)).collect();
        let mut d = s.clone();
        d.sort_unstable();
        d.dedup();
        assert_eq!(d.len(), s.len());
        assert_ne!(derive_seed(7, 1, 0), derive_seed(7, 2, 0));
    }
}
