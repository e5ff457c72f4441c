//! Thin liquid film on a substrate with van der Waals attraction,
//!
//! ```text
//! h_t = -(h³ h_xxx + h_x / h)_x      on x ∈ [0, 1), periodic,
//! ```
//!
//! discretized with second-order centered differences of the expanded form
//! `-h³ h_xxxx - 3 h² h_x h_xxx - h_xx / h + h_x² / h²`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::controller::{explicit_boundary_ke, init_power_law, lambda_critical};
use crate::error::{MarsError, Result};
use crate::models::{Column, Model, Oracle};
use crate::noise::noise_1d;
use crate::spectral::{Fourier, Fourier1D, Grid1D};
use crate::stepper::{grid_scale_fraction, DampingSpectrum, Fields, Rhs, GRID_SCALE_FRACTION};

/// Mean film height of maximum linear growth rate, `2^(-1/4) (2π)^(-1/2)`.
pub fn h0_max_growth() -> f64 {
    2f64.powf(-0.25) / (2.0 * PI).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThinFilmParams {
    pub n: usize,
    pub dt: f64,
    /// Amplitude `A` of the initial cosine.
    pub amplitude: f64,
    pub h0: f64,
    /// Half-width of the noise smoothing stencil.
    pub n_half: usize,
    /// Initial damping `λ0 k⁴`; `None` uses [`lambda0_bound`] of the initial maximum height.
    pub lambda0: Option<f64>,
}

impl Default for ThinFilmParams {
    fn default() -> Self {
        Self {
            n: 128,
            dt: 1e-4,
            amplitude: 0.01,
            h0: h0_max_growth(),
            n_half: 2,
            lambda0: None,
        }
    }
}

/// Linear growth rate `ω(k) = -h0³ k⁴ + k² / h0` of `h0 + ε e^{ikx}`.
pub fn growth_rate(k: f64, h0: f64) -> f64 {
    -h0.powi(3) * k.powi(4) + k * k / h0
}

/// Spectrum of the discrete `h̄³ ∂⁴` operator at wavenumber `k` (index units).
pub fn e_theory(k: f64, hbar: f64, n: usize) -> f64 {
    let dx = 1.0 / n as f64;
    let da = 2.0 * PI / n as f64;
    2.0 * hbar.powi(3) / dx.powi(4) * ((2.0 * k * da).cos() - 4.0 * (k * da).cos() + 3.0)
}

/// Smallest `λ0` with `λ0 k⁴ ≥ 2 e(k) / 3` for every mode: `(32/3) π⁴ h̄³`.
pub fn lambda0_bound(hbar: f64) -> f64 {
    32.0 / 3.0 * PI.powi(4) * hbar.powi(3)
}

#[derive(Debug, Clone)]
pub struct ThinFilm {
    params: ThinFilmParams,
    grid: Grid1D,
    fourier: Fourier1D,
}

impl ThinFilm {
    pub fn new(params: ThinFilmParams) -> Result<Self> {
        if !(params.dt.is_finite() && params.dt > 0.0) {
            return Err(MarsError::validation("dt", "must be positive"));
        }
        if !(params.h0.is_finite() && params.h0 > 0.0) {
            return Err(MarsError::validation("h0", "must be positive"));
        }
        if !params.amplitude.is_finite() || params.amplitude.abs() >= params.h0 {
            return Err(MarsError::validation(
                "A",
                "must be finite and smaller than the mean height",
            ));
        }
        if let Some(l) = params.lambda0 {
            if !(l.is_finite() && l >= 0.0) {
                return Err(MarsError::validation("lambda0", "must be nonnegative"));
            }
        }
        let grid = Grid1D::new(params.n, 1.0).map_err(|e| match e {
            MarsError::Config(m) => MarsError::validation("n", m),
            other => other,
        })?;
        if params.n_half == 0 || 2 * params.n_half + 1 > params.n {
            return Err(MarsError::validation("n_half", "must be in 1..=(n-1)/2"));
        }
        Ok(Self {
            params,
            grid,
            fourier: Fourier1D::new(grid),
        })
    }

    pub fn params(&self) -> &ThinFilmParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// `h_j = h0 + A cos(2π x_j)`.
    pub fn initial_height(&self) -> Vec<f64> {
        (0..self.grid.n())
            .map(|j| self.params.h0 + self.params.amplitude * (2.0 * PI * self.grid.x(j)).cos())
            .collect()
    }

    /// Right-hand side of the expanded centered-difference scheme.
    pub fn rhs_height(&self, h: &[f64]) -> Result<Vec<f64>> {
        check_positive(&self.fourier, h)?;
        let n = h.len();
        if n != self.grid.n() {
            return Err(MarsError::Config(format!(
                "height has {n} samples, grid has {}",
                self.grid.n()
            )));
        }
        let dx = self.grid.spacing();
        let (dx2, dx3, dx4) = (dx * dx, dx * dx * dx, dx * dx * dx * dx);
        Ok((0..n)
            .map(|j| {
                let m2 = h[(j + n - 2) % n];
                let m1 = h[(j + n - 1) % n];
                let c = h[j];
                let p1 = h[(j + 1) % n];
                let p2 = h[(j + 2) % n];
                let d1 = (p1 - m1) / (2.0 * dx);
                let d2 = (p1 - 2.0 * c + m1) / dx2;
                let d3 = (-m2 + 2.0 * m1 - 2.0 * p1 + p2) / (2.0 * dx3);
                let d4 = (m2 - 4.0 * m1 + 6.0 * c - 4.0 * p1 + p2) / dx4;
                -c * c * c * d4 - 3.0 * c * c * d1 * d3 - d2 / c + d1 * d1 / (c * c)
            })
            .collect())
    }

    /// Stiff part alone, `-h̄³ ∂⁴φ`, about a uniform film `h̄`.
    pub fn stiff_operator(&self, hbar: f64, phi: &[f64]) -> Vec<f64> {
        let n = phi.len();
        let dx4 = self.grid.spacing().powi(4);
        (0..n)
            .map(|j| {
                let d4 = phi[(j + n - 2) % n] - 4.0 * phi[(j + n - 1) % n] + 6.0 * phi[j]
                    - 4.0 * phi[(j + 1) % n]
                    + phi[(j + 2) % n];
                -hbar.powi(3) * d4 / dx4
            })
            .collect()
    }

    /// `e(k)` per spectral index for film height `hbar`.
    pub fn spectrum(&self, hbar: f64) -> Vec<f64> {
        (0..self.grid.n())
            .map(|i| e_theory(self.fourier.wavenumber_norm(i), hbar, self.grid.n()))
            .collect()
    }

    /// Explicit boundary `k_e` for film height `hbar`.
    pub fn ke(&self, hbar: f64) -> f64 {
        let half: Vec<f64> = (0..=self.grid.n() / 2)
            .map(|k| e_theory(k as f64, hbar, self.grid.n()))
            .collect();
        explicit_boundary_ke(&half, self.params.dt)
    }
}

fn check_positive(fourier: &Fourier1D, h: &[f64]) -> Result<()> {
    let min = h.iter().copied().fold(f64::INFINITY, f64::min);
    if min.is_nan() || h.iter().any(|v| !v.is_finite()) {
        return Err(MarsError::BlowUp {
            step: 0,
            reason: "non-finite film height".into(),
        });
    }
    if min <= 0.0 {
        let fraction = grid_scale_fraction(fourier, &[h.to_vec()])?;
        if fraction > GRID_SCALE_FRACTION {
            return Err(MarsError::BlowUp {
                step: 0,
                reason: format!(
                    "grid-scale growth ({:.0}% of the amplitude in the upper band) drove the height to {min:e}",
                    100.0 * fraction
                ),
            });
        }
        return Err(MarsError::Rupture {
            step: 0,
            min_height: min,
        });
    }
    Ok(())
}

fn max_height(h: &[f64]) -> f64 {
    h.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

impl Rhs for ThinFilm {
    fn evaluate(&self, state: &[Vec<f64>]) -> Result<Fields> {
        Ok(vec![self.rhs_height(&state[0])?])
    }
}

impl Model for ThinFilm {
    fn name(&self) -> &'static str {
        "thinfilm"
    }

    fn fourier(&self) -> &dyn Fourier {
        &self.fourier
    }

    fn dimension(&self) -> usize {
        1
    }

    fn dt(&self) -> f64 {
        self.params.dt
    }

    fn initial_state(&self) -> Result<Fields> {
        Ok(vec![self.initial_height()])
    }

    fn initial_lambda(&self, state: &[Vec<f64>]) -> Result<DampingSpectrum> {
        let lambda0 = self
            .params
            .lambda0
            .unwrap_or_else(|| lambda0_bound(max_height(&state[0])));
        init_power_law(lambda0, 4.0, &self.fourier)
    }

    fn noise(&self, error: &[Vec<f64>]) -> Result<Vec<f64>> {
        noise_1d(&self.fourier, &error[0], self.params.n_half)
    }

    fn oracle(&self, state: &[Vec<f64>]) -> Result<Oracle> {
        let hbar = max_height(&state[0]);
        let e = self.spectrum(hbar);
        Ok(Oracle {
            lambda_c: lambda_critical(&e),
            e,
            ke: self.ke(hbar),
            scalars: vec![
                ("hbar", hbar),
                ("min_height", state[0].iter().copied().fold(f64::INFINITY, f64::min)),
            ],
        })
    }

    fn check_state(&self, state: &[Vec<f64>]) -> Result<()> {
        check_positive(&self.fourier, &state[0])
    }

    fn grid_columns(&self, state: &[Vec<f64>]) -> Vec<Column> {
        vec![
            Column::new("x", (0..self.grid.n()).map(|j| self.grid.x(j)).collect()),
            Column::new("h", state[0].clone()),
        ]
    }
}
