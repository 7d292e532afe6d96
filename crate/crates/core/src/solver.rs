//! Explicit Euler-Maruyama / centred-difference stepping of the SPDE pair
//!
//! ```text
//! dU = (U_xx + b(t,x,U)) dt        + a(t,x,U) W(dt,dx)
//! dV = (V_xx + b(t,x,V) + d(t,x,V)) dt + a(t,x,V) W(dt,dx)
//! ```
//!
//! One step on cell `j`:
//!
//! ```text
//! u[n+1][j] = u[n][j] + dt (lap_j + b + [d]) + a sqrt(dt/dx) xi[n][j]
//! ```
//!
//! where `a sqrt(dt/dx) xi = a dW / dx` is the noise increment divided by the
//! cell width. Coefficients are evaluated at the left time point.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::coefficients::{Coefficient, CoefficientSpec, InitialData};
use crate::error::{Error, Result};
use crate::grid::{derive_seed, NoiseIncrements, SpaceTimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Zero flux: ghost cells mirror the edge cells.
    #[default]
    Neumann,
    /// Ghost cells pinned at `h(x_left)` and `h(x_right)`.
    Dirichlet,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neumann" => Ok(Boundary::Neumann),
            "dirichlet" => Ok(Boundary::Dirichlet),
            other => Err(Error::InvalidArgument(format!(
                "unknown boundary `{other}` (expected neumann or dirichlet)"
            ))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Neumann => "neumann",
            Boundary::Dirichlet => "dirichlet",
        })
    }
}

/// How the noise term of one step is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseScheme {
    /// Gaussian increment `a(u) dW / dx` added to the explicit step. The
    /// Girsanov density of the transfer module is exact for this scheme.
    #[default]
    EulerMaruyama,
    /// Deterministic explicit step, then the exact transition law of the
    /// per-cell noise equation `du = C u^gamma dW / dx` over `dt`:
    /// Poisson-Gamma (Feller branching) for `gamma = 1/2`, log-normal for
    /// `gamma = 1`. Other exponents fall back to a Gaussian step. Negative
    /// values are set to zero before the noise step, so this scheme is for
    /// nonnegative data with power-law noise. Euler-Maruyama kills a small
    /// cell with probability about 1/2 whatever its size, so it cannot
    /// reproduce the absorption at zero behind compact support.
    ExactSplitting,
}

impl FromStr for NoiseScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(NoiseScheme::EulerMaruyama),
            "splitting" => Ok(NoiseScheme::ExactSplitting),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheme `{other}` (expected euler or splitting)"
            ))),
        }
    }
}

impl fmt::Display for NoiseScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseScheme::EulerMaruyama => "euler",
            NoiseScheme::ExactSplitting => "splitting",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Solve the drifted equation (`b + d`) instead of the base one (`b`).
    pub include_d: bool,
    pub boundary: Boundary,
    /// Drop the second-difference term, turning every cell into an SDE.
    pub laplacian: bool,
    pub allow_unstable: bool,
    /// Replace negative values by zero after every step.
    pub clamp_nonnegative: bool,
    pub scheme: NoiseScheme,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            include_d: false,
            boundary: Boundary::Neumann,
            laplacian: true,
            allow_unstable: false,
            clamp_nonnegative: false,
            scheme: NoiseScheme::EulerMaruyama,
        }
    }
}

/// One realized solution on the grid together with what produced it.
#[derive(Debug, Clone)]
pub struct FieldPath {
    u: Vec<f64>,
    pub grid: SpaceTimeGrid,
    pub noise: NoiseIncrements,
    pub coefficients: CoefficientSpec,
    pub options: SolveOptions,
}

impl FieldPath {
    #[inline]
    pub fn value(&self, step: usize, cell: usize) -> f64 {
        self.u[step * self.grid.n_x + cell]
    }

    /// Spatial slice at time step `step` (`0..=n_t`).
    #[inline]
    pub fn slice(&self, step: usize) -> &[f64] {
        let n = self.grid.n_x;
        &self.u[step * n..(step + 1) * n]
    }

    pub fn terminal(&self) -> &[f64] {
        self.slice(self.grid.n_t)
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_t
    }

    /// All values, time-major, `(n_t + 1) * n_x` entries.
    pub fn values(&self) -> &[f64] {
        &self.u
    }

    /// `sum_j u[step][j] dx`
    pub fn mass(&self, step: usize) -> f64 {
        self.slice(step).iter().sum::<f64>() * self.grid.dx
    }

    pub fn include_d(&self) -> bool {
        self.options.include_d
    }

    pub fn boundary(&self) -> Boundary {
        self.options.boundary
    }
}

pub fn solve_path(
    grid: &SpaceTimeGrid,
    spec: &CoefficientSpec,
    include_d: bool,
    h: &InitialData,
    noise: &NoiseIncrements,
    boundary: Boundary,
) -> Result<FieldPath> {
    let options = SolveOptions {
        include_d,
        boundary,
        ..SolveOptions::default()
    };
    solve_path_with(grid, spec, h, noise, &options)
}

pub fn solve_path_with(
    grid: &SpaceTimeGrid,
    spec: &CoefficientSpec,
    h: &InitialData,
    noise: &NoiseIncrements,
    options: &SolveOptions,
) -> Result<FieldPath> {
    if !noise.matches(grid) {
        return Err(Error::DimensionMismatch {
            got_t: noise.n_t,
            got_x: noise.n_x,
            want_t: grid.n_t,
            want_x: grid.n_x,
        });
    }
    if options.laplacian && !grid.stable && !options.allow_unstable {
        return Err(Error::UnstableGrid {
            dt: grid.dt,
            limit: 0.5 * grid.dx * grid.dx,
        });
    }

    let n_x = grid.n_x;
    let n_t = grid.n_t;
    let dt = grid.dt;
    let inv_dx2 = 1.0 / (grid.dx * grid.dx);
    let noise_gain = (grid.dt / grid.dx).sqrt();
    let xs = grid.cell_centers();
    let pinned = (h.eval(grid.x_left), h.eval(grid.x_right));

    let mut u = Vec::with_capacity((n_t + 1) * n_x);
    for (j, &x) in xs.iter().enumerate() {
        let v = h.eval(x);
        if !v.is_finite() {
            return Err(Error::BlowUp { step: 0, cell: j });
        }
        u.push(v);
    }

    let b_active = !spec.b.is_zero();
    let d_active = options.include_d && !spec.d.is_zero();
    let mut splitter = match options.scheme {
        NoiseScheme::EulerMaruyama => None,
        NoiseScheme::ExactSplitting => Some(ExactNoiseStep::new(spec, grid, noise.seed)?),
    };

    for n in 0..n_t {
        let t = grid.time(n);
        let xi = noise.row(n);
        let base = n * n_x;
        let (ghost_left, ghost_right) = match options.boundary {
            Boundary::Neumann => (u[base], u[base + n_x - 1]),
            Boundary::Dirichlet => pinned,
        };
        for j in 0..n_x {
            let x = xs[j];
            let c = u[base + j];
            let mut rate = 0.0;
            if options.laplacian {
                let left = if j == 0 { ghost_left } else { u[base + j - 1] };
                let right = if j + 1 == n_x {
                    ghost_right
                } else {
                    u[base + j + 1]
                };
                rate += (right - 2.0 * c + left) * inv_dx2;
            }
            if b_active {
                rate += spec.b.eval(t, x, c);
            }
            if d_active {
                rate += spec.d.eval(t, x, c);
            }
            let mut next = match splitter.as_mut() {
                None => c + dt * rate + spec.a.eval(t, x, c) * noise_gain * xi[j],
                Some(step) => step.apply((c + dt * rate).max(0.0), xi[j]),
            };
            if !next.is_finite() {
                return Err(Error::BlowUp {
                    step: n + 1,
                    cell: j,
                });
            }
            if options.clamp_nonnegative && next < 0.0 {
                next = 0.0;
            }
            u.push(next);
        }
    }

    Ok(FieldPath {
        u,
        grid: grid.clone(),
        noise: noise.clone(),
        coefficients: spec.clone(),
        options: options.clone(),
    })
}

/// Exact in-law integration of `du = C |u|^gamma dW / dx` over one step.
struct ExactNoiseStep {
    kind: ExactKind,
    rng: ChaCha8Rng,
}

enum ExactKind {
    /// `gamma = 1/2`: `u' ~ Gamma(N, scale)`, `N ~ Poisson(u / scale)`,
    /// `scale = C^2 dt / (2 dx)`.
    Feller { scale: f64 },
    /// `gamma = 1`: `u' = u exp(k xi - k^2/2)`, `k = |C| sqrt(dt/dx)`.
    Geometric { k: f64 },
    /// Gaussian step, clamped at zero by the caller's next deterministic step.
    Gaussian { c: f64, gamma: f64, gain: f64 },
}

impl ExactNoiseStep {
    fn new(spec: &CoefficientSpec, grid: &SpaceTimeGrid, seed: u64) -> Result<Self> {
        let (c, gamma) = match spec.a {
            Coefficient::Power { c, gamma } => (c, gamma),
            Coefficient::Zero => (0.0, 1.0),
            _ => {
                return Err(Error::InvalidCoefficients(
                    "exact splitting needs power-law noise".into(),
                ))
            }
        };
        let ratio = grid.dt / grid.dx;
        let kind = if gamma == 0.5 {
            ExactKind::Feller {
                scale: 0.5 * c * c * ratio,
            }
        } else if gamma == 1.0 {
            ExactKind::Geometric {
                k: c.abs() * ratio.sqrt(),
            }
        } else {
            ExactKind::Gaussian {
                c,
                gamma,
                gain: ratio.sqrt(),
            }
        };
        Ok(ExactNoiseStep {
            kind,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xFE11, 0)),
        })
    }

    #[inline]
    fn apply(&mut self, u: f64, xi: f64) -> f64 {
        match self.kind {
            ExactKind::Feller { scale } => {
                if u == 0.0 || scale == 0.0 {
                    return u;
                }
                let rate = u / scale;
                let count = match Poisson::new(rate) {
                    Ok(p) => p.sample(&mut self.rng),
                    Err(_) => return f64::NAN,
                };
                if count == 0.0 {
                    0.0
                } else {
                    Gamma::new(count, scale)
                        .map(|g| g.sample(&mut self.rng))
                        .unwrap_or(f64::NAN)
                }
            }
            ExactKind::Geometric { k } => u * (k * xi - 0.5 * k * k).exp(),
            ExactKind::Gaussian { c, gamma, gain } => {
                (u + c * u.powf(gamma) * gain * xi).max(0.0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{preset, Coefficient, PresetName};
    use crate::grid::sample_noise;

    fn zero_spec() -> CoefficientSpec {
        CoefficientSpec::new("zero", Coefficient::Zero, Coefficient::Zero, Coefficient::Zero)
    }

    #[test]
    fn constant_is_fixed_point() {
        let g = SpaceTimeGrid::new(0.5, 0.0, 1.0, 400, 16).unwrap();
        let noise = sample_noise(&g, 1);
        for boundary in [Boundary::Neumann, Boundary::Dirichlet] {
            let p = solve_path(&g, &zero_spec(), true, &InitialData::constant(3.25), &noise, boundary)
                .unwrap();
            assert!(p.values().iter().all(|&v| v == 3.25));
        }
    }

    #[test]
    fn allen_cahn_fixed_point() {
        let g = SpaceTimeGrid::new(0.5, 0.0, 1.0, 400, 16).unwrap();
        let mut spec = preset(PresetName::AllenCahn, 1.0, 0.5).unwrap();
        spec.a = Coefficient::Zero;
        let p = solve_path(&g, &spec, true, &InitialData::constant(1.0), &sample_noise(&g, 3), Boundary::Neumann)
            .unwrap();
        assert!(p.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn neumann_conserves_mass() {
        let g = SpaceTimeGrid::new(0.2, -1.0, 1.0, 2000, 40).unwrap();
        let h = InitialData::gaussian(0.3, 0.2, 1.0);
        let p = solve_path(&g, &zero_spec(), false, &h, &sample_noise(&g, 0), Boundary::Neumann).unwrap();
        let m0 = p.mass(0);
        for n in 0..=g.n_t {
            assert!((p.mass(n) - m0).abs() < 1e-12, "step {n}");
        }
    }

    #[test]
    fn rejects_unstable_grid_and_wrong_noise() {
        let g = SpaceTimeGrid::new(1.0, -1.0, 1.0, 100, 20).unwrap();
        let h = InitialData::constant(0.0);
        let noise = sample_noise(&g, 0);
        let err = solve_path(&g, &zero_spec(), false, &h, &noise, Boundary::Neumann).unwrap_err();
        assert!(matches!(err, Error::UnstableGrid { .. }));
        let opts = SolveOptions {
            allow_unstable: true,
            ..SolveOptions::default()
        };
        assert!(solve_path_with(&g, &zero_spec(), &h, &noise, &opts).is_ok());

        let other = SpaceTimeGrid::new(1.0, -1.0, 1.0, 100, 21).unwrap();
        let err = solve_path_with(&other, &zero_spec(), &h, &noise, &opts).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn blow_up_reports_first_cell() {
        let g = SpaceTimeGrid::new(1.0, 0.0, 1.0, 1000, 4).unwrap();
        let spec = CoefficientSpec::new(
            "explode",
            Coefficient::Zero,
            Coefficient::custom(|_, _, u| u * u * 1e307),
            Coefficient::Zero,
        );
        let h = InitialData::custom(|x| if x > 0.5 { 10.0 } else { 0.0 }, None);
        let err = solve_path(&g, &spec, false, &h, &sample_noise(&g, 0), Boundary::Neumann)
            .unwrap_err();
        match err {
            Error::BlowUp { step, cell } => {
                assert_eq!(step, 1);
                assert_eq!(cell, 2);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn deterministic_run_ignores_seed() {
        let g = SpaceTimeGrid::new(0.1, 0.0, 1.0, 200, 10).unwrap();
        let h = InitialData::bump(0.5, 0.3, 1.0);
        let a = solve_path(&g, &zero_spec(), true, &h, &sample_noise(&g, 1), Boundary::Dirichlet).unwrap();
        let b = solve_path(&g, &zero_spec(), true, &h, &sample_noise(&g, 99), Boundary::Dirichlet).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn single_cell_without_laplacian_is_an_sde() {
        let g = SpaceTimeGrid::new(1.0, 0.0, 1.0, 50, 1).unwrap();
        let spec = CoefficientSpec::new("bm", Coefficient::Constant(1.0), Coefficient::Zero, Coefficient::Constant(0.5));
        let noise = sample_noise(&g, 5);
        let opts = SolveOptions {
            include_d: true,
            laplacian: false,
            ..SolveOptions::default()
        };
        let p = solve_path_with(&g, &spec, &InitialData::constant(0.0), &noise, &opts).unwrap();
        let w: f64 = (0..g.n_t).map(|n| noise.increment(n, 0)).sum();
        assert!((p.terminal()[0] - (0.5 + w)).abs() < 1e-12);
    }
}
