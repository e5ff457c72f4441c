//! Two-dimensional Kuramoto–Sivashinsky equation on `[0, 2π)²`,
//!
//! ```text
//! u_t = -N(u) - Δu - ν Δ²u,     N(u) = ½ (|∇u|² - ⟨|∇u|²⟩),
//! ```
//!
//! with centered differences, the 5-point Laplacian, and the bi-Laplacian as
//! the Laplacian applied twice. Subtracting the mean of `|∇u|²` keeps the
//! spatial mean of `u` fixed.

use std::f64::consts::PI;

use serde::Serialize;

use crate::controller::{init_power_law, lambda_critical};
use crate::error::{MarsError, Result};
use crate::models::{Column, Model, Oracle};
use crate::noise::noise_2d;
use crate::rng::NoiseSource;
use crate::spectral::{Fourier, Fourier2D, Grid2D};
use crate::stepper::{DampingSpectrum, Fields, Rhs};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsParams {
    pub nx: usize,
    pub ny: usize,
    pub nu: f64,
    pub dt: f64,
    /// Amplitude of the initial zero-mean white noise.
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for KsParams {
    fn default() -> Self {
        Self {
            nx: 128,
            ny: 128,
            nu: 0.2,
            dt: 0.01,
            amplitude: 1e-3,
            seed: 0,
        }
    }
}

/// Spectrum of the discrete `ν Δ²` operator at wavenumbers `(kx, ky)`.
pub fn e_theory(kx: f64, ky: f64, grid: &Grid2D, nu: f64) -> f64 {
    let (dx, dy) = (grid.dx(), grid.dy());
    let (ax, ay) = (2.0 * PI * kx / grid.lx() * dx, 2.0 * PI * ky / grid.ly() * dy);
    let xx = (2.0 * (2.0 * ax).cos() - 8.0 * ax.cos() + 6.0) / dx.powi(4);
    let yy = (2.0 * (2.0 * ay).cos() - 8.0 * ay.cos() + 6.0) / dy.powi(4);
    let xy = 2.0
        * (2.0 * (ax + ay).cos() - 4.0 * ay.cos() + 2.0 * (ax - ay).cos() - 4.0 * ax.cos() + 4.0)
        / (dx * dx * dy * dy);
    nu * (xx + yy + xy)
}

/// Explicit boundary of the long-wave spectrum `ν |k|⁴`: `(2 / (ν dt))^(1/4)`.
pub fn ke_small_k(nu: f64, dt: f64) -> f64 {
    (2.0 / (nu * dt)).powf(0.25)
}

#[derive(Debug, Clone)]
pub struct Ks2d {
    params: KsParams,
    grid: Grid2D,
    fourier: Fourier2D,
}

impl Ks2d {
    pub fn new(params: KsParams) -> Result<Self> {
        if !(params.dt.is_finite() && params.dt > 0.0) {
            return Err(MarsError::validation("dt", "must be positive"));
        }
        if !(params.nu.is_finite() && params.nu > 0.0) {
            return Err(MarsError::validation("nu", "must be positive"));
        }
        if !(params.amplitude.is_finite() && params.amplitude >= 0.0) {
            return Err(MarsError::validation("amplitude", "must be nonnegative"));
        }
        let grid = Grid2D::new(params.nx, params.ny, 2.0 * PI, 2.0 * PI).map_err(|e| match e {
            MarsError::Config(m) => MarsError::validation("nx/ny", m),
            other => other,
        })?;
        Ok(Self {
            params,
            grid,
            fourier: Fourier2D::new(grid),
        })
    }

    pub fn params(&self) -> &KsParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Seeded zero-mean white noise.
    pub fn initial_field(&self) -> Vec<f64> {
        let mut u = NoiseSource::new(self.params.seed).white(self.grid.len(), self.params.amplitude);
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        for v in &mut u {
            *v -= mean;
        }
        u
    }

    /// Periodic 5-point Laplacian.
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (cx, cy) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
        let mut out = vec![0.0; u.len()];
        for jx in 0..nx {
            let here = g.index(jx, 0);
            let left = g.index((jx + nx - 1) % nx, 0);
            let right = g.index((jx + 1) % nx, 0);
            for jy in 0..ny {
                let c = u[here + jy];
                let down = u[here + (jy + ny - 1) % ny];
                let up = u[here + (jy + 1) % ny];
                out[here + jy] =
                    cx * (u[left + jy] - 2.0 * c + u[right + jy]) + cy * (down - 2.0 * c + up);
            }
        }
        out
    }

    /// `½ (|∇u|² - ⟨|∇u|²⟩)` with centered gradients.
    pub fn nonlinearity(&self, u: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (hx, hy) = (0.5 / g.dx(), 0.5 / g.dy());
        let mut q = vec![0.0; u.len()];
        for jx in 0..nx {
            let here = g.index(jx, 0);
            let left = g.index((jx + nx - 1) % nx, 0);
            let right = g.index((jx + 1) % nx, 0);
            for jy in 0..ny {
                let ux = hx * (u[right + jy] - u[left + jy]);
                let uy = hy * (u[here + (jy + 1) % ny] - u[here + (jy + ny - 1) % ny]);
                q[here + jy] = ux * ux + uy * uy;
            }
        }
        let mean = q.iter().sum::<f64>() / q.len() as f64;
        q.iter().map(|v| 0.5 * (v - mean)).collect()
    }

    pub fn rhs_field(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.grid.len() {
            return Err(MarsError::Config(format!(
                "field has {} samples, grid has {}",
                u.len(),
                self.grid.len()
            )));
        }
        let lap = self.laplacian(u);
        let bilap = self.laplacian(&lap);
        let nl = self.nonlinearity(u);
        let nu = self.params.nu;
        Ok((0..u.len()).map(|i| -nl[i] - lap[i] - nu * bilap[i]).collect())
    }

    /// Stiff part alone, `-ν Δ²φ`.
    pub fn stiff_operator(&self, phi: &[f64]) -> Vec<f64> {
        let bilap = self.laplacian(&self.laplacian(phi));
        bilap.into_iter().map(|v| -self.params.nu * v).collect()
    }

    pub fn spectrum(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| {
                let [kx, ky] = self.fourier.wavenumber(i);
                e_theory(kx as f64, ky as f64, &self.grid, self.params.nu)
            })
            .collect()
    }
}

impl Rhs for Ks2d {
    fn evaluate(&self, state: &[Vec<f64>]) -> Result<Fields> {
        Ok(vec![self.rhs_field(&state[0])?])
    }
}

impl Model for Ks2d {
    fn name(&self) -> &'static str {
        "ks2d"
    }

    fn fourier(&self) -> &dyn Fourier {
        &self.fourier
    }

    fn dimension(&self) -> usize {
        2
    }

    fn dt(&self) -> f64 {
        self.params.dt
    }

    fn initial_state(&self) -> Result<Fields> {
        Ok(vec![self.initial_field()])
    }

    /// `λ = (2/3) ν |k|⁴`, the marginal value of the long-wave spectrum,
    /// which bounds the discrete one from above.
    fn initial_lambda(&self, _state: &[Vec<f64>]) -> Result<DampingSpectrum> {
        init_power_law(2.0 * self.params.nu / 3.0, 4.0, &self.fourier)
    }

    fn noise(&self, error: &[Vec<f64>]) -> Result<Vec<f64>> {
        noise_2d(&self.fourier, &self.grid, &error[0])
    }

    fn oracle(&self, state: &[Vec<f64>]) -> Result<Oracle> {
        let e = self.spectrum();
        let u = &state[0];
        Ok(Oracle {
            lambda_c: lambda_critical(&e),
            e,
            ke: ke_small_k(self.params.nu, self.params.dt),
            scalars: vec![
                ("max_abs_u", u.iter().fold(0.0, |m, v| f64::max(m, v.abs()))),
                ("mean_u", u.iter().sum::<f64>() / u.len() as f64),
            ],
        })
    }

    fn check_state(&self, _state: &[Vec<f64>]) -> Result<()> {
        Ok(())
    }

    fn grid_columns(&self, state: &[Vec<f64>]) -> Vec<Column> {
        let g = &self.grid;
        vec![
            Column::new("x", (0..g.len()).map(|i| g.split(i).0 as f64 * g.dx()).collect()),
            Column::new("y", (0..g.len()).map(|i| g.split(i).1 as f64 * g.dy()).collect()),
            Column::new("u", state[0].clone()),
        ]
    }
}
