//! Rayleigh–Taylor unstable interface in a Hele-Shaw cell with equal
//! viscosities, followed with marker points `z_j = x_j + i y_j`.
//!
//! The interface is periodic in `x` with period 1 and parametrized by
//! `α ∈ [0, 2π)`; `x` is stored as the periodic deviation `x_j - j/N` from the
//! ramp `α / 2π`. Markers move with the normal velocity of the vortex sheet,
//!
//! ```text
//! u - i v = -(2πi/N) Σ_{j+l odd} γ_l cot(π (z_j - z_l)),    γ = S κ_α + R y_α,
//! ```
//!
//! plus an artificial tangential velocity that keeps the markers equally
//! spaced in arclength.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::controller::{init_power_law, lambda_critical};
use crate::error::{MarsError, Result};
use crate::models::{Column, Model, Oracle};
use crate::noise::{noise_1d, noise_spectrum_max};
use crate::rng::NoiseSource;
use crate::spectral::{Fourier, Fourier1D, Grid1D};
use crate::stepper::{grid_scale_fraction, DampingSpectrum, Fields, Rhs, GRID_SCALE_FRACTION};

/// Opposite-parity markers closer than this fraction of the mean spacing
/// abort the run.
pub const PROXIMITY_FRACTION: f64 = 0.25;

/// Above this `|y|` the exponential form of the kernel could overflow.
const EXPONENTIAL_KERNEL_LIMIT: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeleShawParams {
    pub n: usize,
    pub dt: f64,
    /// Surface tension `S`.
    pub s: f64,
    /// Gravity `R`; positive values make the interface unstable.
    pub r: f64,
    /// Amplitude of the initial white noise on `y`.
    pub noise_amplitude: f64,
    pub seed: u64,
    pub n_half: usize,
    /// Redistribute markers along the interface; `false` sets `T ≡ 0`.
    pub equal_arclength: bool,
}

impl Default for HeleShawParams {
    fn default() -> Self {
        Self {
            n: 1024,
            dt: 3.125e-5,
            s: 0.1,
            r: 50.0,
            noise_amplitude: 1e-6,
            seed: 0,
            n_half: 2,
            equal_arclength: true,
        }
    }
}

/// Spectrum of the linearized surface-tension operator about a flat
/// interface of length `l`, clamped at zero.
pub fn e_theory(k: f64, l: f64, n: usize, s: f64) -> f64 {
    let x = 2.0 * PI * k.abs() / n as f64;
    let nf = n as f64;
    (s * nf.powi(3) / l.powi(3) * (1.0 - x.cos()) * x.sin()).max(0.0)
}

/// Long-wave marginal damping `(S/3) (2π k / L)³`.
pub fn lambda_c_hs(k: f64, l: f64, s: f64) -> f64 {
    s / 3.0 * (2.0 * PI * k.abs() / l).powi(3)
}

/// Explicit boundary of the long-wave spectrum: `(L/2π) (4 / (S dt))^(1/3)`.
pub fn ke_hs(l: f64, s: f64, dt: f64) -> f64 {
    l / (2.0 * PI) * (4.0 / (s * dt)).cbrt()
}

/// `cot(w)` without overflow for large `|Im w|`.
pub fn stable_cot(w: Complex64) -> Complex64 {
    let (a, b) = (2.0 * w.re, 2.0 * w.im);
    let ch = b.cosh();
    let denom = 1.0 - a.cos() / ch;
    Complex64::new(a.sin() / ch / denom, -b.tanh() / denom)
}

/// Centered first and second differences in `α` of periodic samples.
fn centered(f: &[f64], da: f64) -> (Vec<f64>, Vec<f64>) {
    let n = f.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for j in 0..n {
        let m = f[(j + n - 1) % n];
        let p = f[(j + 1) % n];
        d1[j] = (p - m) / (2.0 * da);
        d2[j] = (p - 2.0 * f[j] + m) / (da * da);
    }
    (d1, d2)
}

/// Derivatives, arclength metric and curvature of a marker chain.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub x_a: Vec<f64>,
    pub y_a: Vec<f64>,
    pub x_aa: Vec<f64>,
    pub y_aa: Vec<f64>,
    pub s_a: Vec<f64>,
    pub kappa: Vec<f64>,
    da: f64,
}

impl Geometry {
    /// `x` is periodic apart from a ramp of slope `ramp` in `α`
    /// (`1/2π` for the interface, `0` for a closed curve).
    pub fn new(x: &[f64], y: &[f64], ramp: f64) -> Result<Self> {
        let n = x.len();
        if y.len() != n || n < 4 {
            return Err(MarsError::Geometry(format!(
                "marker arrays have lengths {} and {}",
                n,
                y.len()
            )));
        }
        let da = 2.0 * PI / n as f64;
        let (xd, x_aa) = centered(x, da);
        let (y_a, y_aa) = centered(y, da);
        let x_a: Vec<f64> = xd.iter().map(|v| v + ramp).collect();
        let s_a: Vec<f64> = x_a.iter().zip(&y_a).map(|(a, b)| a.hypot(*b)).collect();
        if let Some(j) = s_a.iter().position(|v| !(v.is_finite() && *v > 1e-300)) {
            return Err(MarsError::Geometry(format!(
                "degenerate arclength metric {} at marker {j}",
                s_a[j]
            )));
        }
        let kappa = (0..n)
            .map(|j| (x_a[j] * y_aa[j] - y_a[j] * x_aa[j]) / s_a[j].powi(3))
            .collect();
        Ok(Self {
            x_a,
            y_a,
            x_aa,
            y_aa,
            s_a,
            kappa,
            da,
        })
    }

    /// Length of one period, `δα Σ s_α`.
    pub fn length(&self) -> f64 {
        self.da * self.s_a.iter().sum::<f64>()
    }

    /// Ratio of the largest to the smallest marker spacing.
    pub fn spacing_ratio(&self) -> f64 {
        let max = self.s_a.iter().copied().fold(0.0, f64::max);
        let min = self.s_a.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// Velocity induced by the sheet plus the closest opposite-parity approach.
#[derive(Debug, Clone)]
pub struct SheetVelocity {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub min_distance: f64,
}

/// Alternate-point sum `u - i v = -(2πi/N) Σ_{j+l odd} γ_l cot(π (z_j - z_l))`.
///
/// `x` includes the ramp. The minimum distance is periodic in `x`.
pub fn birkhoff_rott_velocity(x: &[f64], y: &[f64], gamma: &[f64]) -> Result<SheetVelocity> {
    let n = x.len();
    if n % 2 != 0 || y.len() != n || gamma.len() != n {
        return Err(MarsError::Geometry(format!(
            "alternate-point sum needs an even number of markers, got {n}"
        )));
    }
    let y_max = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let exponential = y_max < EXPONENTIAL_KERNEL_LIMIT;
    // q_j = exp(2πi z_j) turns cot(π (z_j - z_l)) into i (q_j + q_l) / (q_j - q_l)
    let q: Vec<Complex64> = if exponential {
        (0..n)
            .map(|j| Complex64::from_polar((-2.0 * PI * y[j]).exp(), 2.0 * PI * x[j]))
            .collect()
    } else {
        Vec::new()
    };
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut min_d2 = f64::INFINITY;
    let prefactor = Complex64::new(0.0, -2.0 * PI / n as f64);
    for j in 0..n {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut l = (j + 1) % 2;
        while l < n {
            let dx = x[j] - x[l];
            let dy = y[j] - y[l];
            let wrapped = dx - dx.round();
            min_d2 = min_d2.min(wrapped * wrapped + dy * dy);
            let cot = if exponential {
                Complex64::i() * (q[j] + q[l]) / (q[j] - q[l])
            } else {
                stable_cot(Complex64::new(PI * dx, PI * dy))
            };
            sum += gamma[l] * cot;
            l += 2;
        }
        let w = prefactor * sum;
        u[j] = w.re;
        v[j] = -w.im;
    }
    Ok(SheetVelocity {
        u,
        v,
        min_distance: min_d2.sqrt(),
    })
}

/// Equal-arclength tangential velocity
/// `T(α) = ∫₀^α θ_α U - (α/2π) ∫₀^{2π} θ_α U`, `θ_α = s_α κ`, trapezoid rule.
pub fn tangential_velocity(geometry: &Geometry, normal: &[f64]) -> Vec<f64> {
    let n = normal.len();
    let g: Vec<f64> = (0..n)
        .map(|j| geometry.s_a[j] * geometry.kappa[j] * normal[j])
        .collect();
    let total: f64 = g.iter().sum::<f64>() * geometry.da;
    let mut t = vec![0.0; n];
    let mut acc = 0.0;
    for j in 1..n {
        acc += 0.5 * (g[j - 1] + g[j]) * geometry.da;
        t[j] = acc - j as f64 / n as f64 * total;
    }
    t
}

#[derive(Debug, Clone)]
pub struct HeleShaw {
    params: HeleShawParams,
    grid: Grid1D,
    fourier: Fourier1D,
}

/// Intermediate quantities of one velocity evaluation.
#[derive(Debug, Clone)]
pub struct Kinematics {
    pub geometry: Geometry,
    pub gamma: Vec<f64>,
    pub sheet: SheetVelocity,
    pub normal: Vec<f64>,
    pub tangential: Vec<f64>,
    pub velocity_x: Vec<f64>,
    pub velocity_y: Vec<f64>,
}

impl HeleShaw {
    pub fn new(params: HeleShawParams) -> Result<Self> {
        if !(params.dt.is_finite() && params.dt > 0.0) {
            return Err(MarsError::validation("dt", "must be positive"));
        }
        if !(params.s.is_finite() && params.s > 0.0) {
            return Err(MarsError::validation("S", "must be positive"));
        }
        if !params.r.is_finite() {
            return Err(MarsError::validation("R", "must be finite"));
        }
        if !(params.noise_amplitude.is_finite() && params.noise_amplitude >= 0.0) {
            return Err(MarsError::validation("noise_amplitude", "must be nonnegative"));
        }
        let grid = Grid1D::new(params.n, 2.0 * PI).map_err(|e| match e {
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

    pub fn params(&self) -> &HeleShawParams {
        &self.params
    }

    fn ramp(&self, j: usize) -> f64 {
        j as f64 / self.grid.n() as f64
    }

    /// Marker abscissae including the ramp.
    pub fn full_x(&self, x_dev: &[f64]) -> Vec<f64> {
        x_dev.iter().enumerate().map(|(j, v)| v + self.ramp(j)).collect()
    }

    pub fn geometry(&self, x_dev: &[f64], y: &[f64]) -> Result<Geometry> {
        Geometry::new(x_dev, y, 1.0 / (2.0 * PI))
    }

    /// `γ = S κ_α + R y_α` with centered differences.
    pub fn sheet_strength(&self, geometry: &Geometry) -> Vec<f64> {
        let (kappa_a, _) = centered(&geometry.kappa, geometry.da);
        (0..kappa_a.len())
            .map(|j| self.params.s * kappa_a[j] + self.params.r * geometry.y_a[j])
            .collect()
    }

    /// Geometric failures of an interface dominated by grid-scale content
    /// are numerical blow-ups rather than physical pinch-off.
    fn classify_failure(&self, x_dev: &[f64], y: &[f64], err: MarsError) -> MarsError {
        match grid_scale_fraction(&self.fourier, &[x_dev.to_vec(), y.to_vec()]) {
            Ok(f) if f > GRID_SCALE_FRACTION => MarsError::BlowUp {
                step: 0,
                reason: format!("grid-scale growth ({:.0}% of the amplitude in the upper band): {err}", 100.0 * f),
            },
            _ => err,
        }
    }

    /// Marker velocity `U n + T ŝ` and its ingredients.
    pub fn kinematics(&self, x_dev: &[f64], y: &[f64]) -> Result<Kinematics> {
        let n = self.grid.n();
        if x_dev.len() != n || y.len() != n {
            return Err(MarsError::Config(format!(
                "interface has {} and {} markers, grid has {n}",
                x_dev.len(),
                y.len()
            )));
        }
        let geometry = self
            .geometry(x_dev, y)
            .map_err(|e| self.classify_failure(x_dev, y, e))?;
        let gamma = self.sheet_strength(&geometry);
        let sheet = birkhoff_rott_velocity(&self.full_x(x_dev), y, &gamma)?;
        let threshold = PROXIMITY_FRACTION * geometry.length() / n as f64;
        if sheet.min_distance < threshold {
            return Err(self.classify_failure(
                x_dev,
                y,
                MarsError::Proximity {
                    step: 0,
                    distance: sheet.min_distance,
                    threshold,
                },
            ));
        }
        let normal: Vec<f64> = (0..n)
            .map(|j| (-sheet.u[j] * geometry.y_a[j] + sheet.v[j] * geometry.x_a[j]) / geometry.s_a[j])
            .collect();
        let tangential = if self.params.equal_arclength {
            tangential_velocity(&geometry, &normal)
        } else {
            vec![0.0; n]
        };
        let mut velocity_x = vec![0.0; n];
        let mut velocity_y = vec![0.0; n];
        for j in 0..n {
            let (xa, ya, sa) = (geometry.x_a[j], geometry.y_a[j], geometry.s_a[j]);
            velocity_x[j] = (-normal[j] * ya + tangential[j] * xa) / sa;
            velocity_y[j] = (normal[j] * xa + tangential[j] * ya) / sa;
        }
        Ok(Kinematics {
            geometry,
            gamma,
            sheet,
            normal,
            tangential,
            velocity_x,
            velocity_y,
        })
    }

    /// Flat interface plus seeded white noise of the configured amplitude on `y`.
    pub fn initial_interface(&self) -> Fields {
        let n = self.grid.n();
        let y = NoiseSource::new(self.params.seed).white(n, self.params.noise_amplitude);
        vec![vec![0.0; n], y]
    }

    pub fn spectrum(&self, length: f64) -> Vec<f64> {
        (0..self.grid.n())
            .map(|i| e_theory(self.fourier.wavenumber_norm(i), length, self.grid.n(), self.params.s))
            .collect()
    }

    pub fn length(&self, state: &[Vec<f64>]) -> Result<f64> {
        Ok(self.geometry(&state[0], &state[1])?.length())
    }
}

impl Rhs for HeleShaw {
    fn evaluate(&self, state: &[Vec<f64>]) -> Result<Fields> {
        let k = self.kinematics(&state[0], &state[1])?;
        Ok(vec![k.velocity_x, k.velocity_y])
    }
}

impl Model for HeleShaw {
    fn name(&self) -> &'static str {
        "heleshaw"
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
        Ok(self.initial_interface())
    }

    /// `λ(k) = (S/3) (2π k / L)³` for the initial length `L`.
    fn initial_lambda(&self, state: &[Vec<f64>]) -> Result<DampingSpectrum> {
        let l = self.length(state)?;
        init_power_law(lambda_c_hs(1.0, l, self.params.s), 3.0, &self.fourier)
    }

    fn noise(&self, error: &[Vec<f64>]) -> Result<Vec<f64>> {
        let ex = noise_1d(&self.fourier, &error[0], self.params.n_half)?;
        let ey = noise_1d(&self.fourier, &error[1], self.params.n_half)?;
        Ok(noise_spectrum_max(&ex, &ey))
    }

    fn oracle(&self, state: &[Vec<f64>]) -> Result<Oracle> {
        let geometry = self.geometry(&state[0], &state[1])?;
        let l = geometry.length();
        let e = self.spectrum(l);
        Ok(Oracle {
            lambda_c: lambda_critical(&e),
            e,
            ke: ke_hs(l, self.params.s, self.params.dt),
            scalars: vec![("length", l), ("spacing_ratio", geometry.spacing_ratio())],
        })
    }

    fn check_state(&self, state: &[Vec<f64>]) -> Result<()> {
        self.geometry(&state[0], &state[1]).map(|_| ())
    }

    fn grid_columns(&self, state: &[Vec<f64>]) -> Vec<Column> {
        vec![
            Column::new("alpha", (0..self.grid.n()).map(|j| self.grid.x(j)).collect()),
            Column::new("x", self.full_x(&state[0])),
            Column::new("y", state[1].clone()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(n: usize, s: f64, r: f64) -> HeleShaw {
        HeleShaw::new(HeleShawParams {
            n,
            s,
            r,
            ..HeleShawParams::default()
        })
        .unwrap()
    }

    fn alpha(n: usize) -> Vec<f64> {
        (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
    }

    #[test]
    fn stable_cot_matches_direct_form() {
        for w in [
            Complex64::new(0.3, 0.2),
            Complex64::new(-1.1, -0.7),
            Complex64::new(2.0, 3.0),
        ] {
            let direct = w.cos() / w.sin();
            assert!((stable_cot(w) - direct).norm() < 1e-13 * direct.norm().max(1.0));
        }
        let far = stable_cot(Complex64::new(0.4, 800.0));
        assert!((far - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        let far = stable_cot(Complex64::new(0.4, -800.0));
        assert!((far - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn exponential_and_stable_kernels_agree() {
        let n = 64;
        let a = alpha(n);
        let x: Vec<f64> = a.iter().map(|t| t / (2.0 * PI) + 0.01 * (2.0 * t).sin()).collect();
        let y: Vec<f64> = a.iter().map(|t| 0.1 * t.cos()).collect();
        let gamma: Vec<f64> = a.iter().map(|t| (3.0 * t).sin()).collect();
        let fast = birkhoff_rott_velocity(&x, &y, &gamma).unwrap();
        let mut slow = SheetVelocity { u: vec![0.0; n], v: vec![0.0; n], min_distance: 0.0 };
        for j in 0..n {
            let mut sum = Complex64::new(0.0, 0.0);
            for l in (0..n).filter(|l| (j + l) % 2 == 1) {
                sum += gamma[l] * stable_cot(PI * Complex64::new(x[j] - x[l], y[j] - y[l]));
            }
            let w = Complex64::new(0.0, -2.0 * PI / n as f64) * sum;
            slow.u[j] = w.re;
            slow.v[j] = -w.im;
        }
        for j in 0..n {
            assert!((fast.u[j] - slow.u[j]).abs() < 1e-12);
            assert!((fast.v[j] - slow.v[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_interface_has_no_curvature_and_no_strength() {
        let m = model(64, 0.1, 50.0);
        let g = m.geometry(&[0.0; 64], &[0.0; 64]).unwrap();
        assert!(g.kappa.iter().all(|&k| k == 0.0));
        assert!(m.sheet_strength(&g).iter().all(|&v| v == 0.0));
        assert!((g.length() - 1.0).abs() < 1e-14);
        let k = m.kinematics(&[0.0; 64], &[0.0; 64]).unwrap();
        assert!(k.velocity_x.iter().chain(&k.velocity_y).all(|&v| v == 0.0));
    }

    #[test]
    fn circle_curvature() {
        let n = 256;
        let r = 0.7;
        let a = alpha(n);
        let x: Vec<f64> = a.iter().map(|t| r * t.cos()).collect();
        let y: Vec<f64> = a.iter().map(|t| r * t.sin()).collect();
        let g = Geometry::new(&x, &y, 0.0).unwrap();
        let da = 2.0 * PI / n as f64;
        for k in &g.kappa {
            assert!((k - 1.0 / r).abs() < da * da);
        }
    }

    #[test]
    fn linearized_curvature_and_strength() {
        // y = ε sin α: κ ≈ y_αα / x_α² = -ε (2π)² sin α, γ ≈ S κ_α + R ε cos α
        let n = 1024;
        let eps = 1e-6;
        let a = alpha(n);
        let y: Vec<f64> = a.iter().map(|t| eps * t.sin()).collect();
        let m = model(n, 0.1, 50.0);
        let g = m.geometry(&vec![0.0; n], &y).unwrap();
        let gamma = m.sheet_strength(&g);
        let c = (2.0 * PI).powi(2);
        for j in (0..n).step_by(37) {
            let kappa = -eps * c * a[j].sin();
            if kappa.abs() > 1e-3 * eps * c {
                assert!((g.kappa[j] / kappa - 1.0).abs() < 1e-2);
            }
            let want = -0.1 * eps * c * a[j].cos() + 50.0 * eps * a[j].cos();
            if want.abs() > 1e-3 * 50.0 * eps {
                assert!((gamma[j] / want - 1.0).abs() < 1e-2);
            }
        }
        // without surface tension only the gravity term is left, exactly
        let s0 = HeleShaw {
            params: HeleShawParams { s: 0.0, ..m.params.clone() },
            ..m
        };
        let gamma0 = s0.sheet_strength(&g);
        for j in 0..n {
            assert_eq!(gamma0[j], 50.0 * g.y_a[j]);
        }
    }

    #[test]
    fn constant_strength_on_flat_sheet_induces_nothing() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
        let v = birkhoff_rott_velocity(&x, &vec![0.0; n], &vec![1.3; n]).unwrap();
        for j in 0..n {
            assert!(v.u[j].abs() < 1e-12 && v.v[j].abs() < 1e-12);
        }
        assert!((v.min_distance - 1.0 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn velocity_is_translation_equivariant() {
        let n = 128;
        let a = alpha(n);
        let xd: Vec<f64> = a.iter().map(|t| 0.02 * (3.0 * t).sin()).collect();
        let y: Vec<f64> = a.iter().map(|t| 0.05 * (2.0 * t).cos() + 0.01 * (5.0 * t).sin()).collect();
        let gamma: Vec<f64> = a.iter().map(|t| t.sin() + 0.3 * (4.0 * t).cos()).collect();
        let m = model(n, 0.1, 50.0);
        let base = birkhoff_rott_velocity(&m.full_x(&xd), &y, &gamma).unwrap();
        let shift = |v: &[f64]| -> Vec<f64> { (0..n).map(|j| v[(j + 1) % n]).collect() };
        let shifted = birkhoff_rott_velocity(&m.full_x(&shift(&xd)), &shift(&y), &shift(&gamma)).unwrap();
        for j in 0..n {
            assert!((shifted.u[j] - base.u[(j + 1) % n]).abs() < 1e-12);
            assert!((shifted.v[j] - base.v[(j + 1) % n]).abs() < 1e-12);
        }
    }

    #[test]
    fn surface_tension_decay_matches_spectrum() {
        let n = 256;
        let m = model(n, 0.1, 0.0);
        let a = alpha(n);
        for k in [4usize, 8, 16, n / 8] {
            let eps = 1e-7;
            let y: Vec<f64> = a.iter().map(|t| eps * (k as f64 * t).sin()).collect();
            let kin = m.kinematics(&vec![0.0; n], &y).unwrap();
            let proj = |v: &[f64]| -> f64 { v.iter().zip(&a).map(|(p, t)| p * (k as f64 * t).sin()).sum() };
            let rate = -proj(&kin.velocity_y) / proj(&y);
            let e = e_theory(k as f64, 1.0, n, 0.1);
            assert!((rate / e - 1.0).abs() < 0.02, "k = {k}: {rate} vs {e}");
        }
    }

    #[test]
    fn gravity_drives_rayleigh_taylor_growth() {
        let n = 256;
        let m = model(n, 0.1, 50.0);
        let a = alpha(n);
        let k = 2.0;
        let y: Vec<f64> = a.iter().map(|t| 1e-7 * (k * t).sin()).collect();
        let kin = m.kinematics(&vec![0.0; n], &y).unwrap();
        let proj = |v: &[f64]| -> f64 { v.iter().zip(&a).map(|(p, t)| p * (k * t).sin()).sum() };
        let rate = proj(&kin.velocity_y) / proj(&y);
        let expected = PI * 50.0 * k - e_theory(k, 1.0, n, 0.1);
        assert!((rate / expected - 1.0).abs() < 1e-3, "{rate} vs {expected}");
    }

    #[test]
    fn tangential_velocity_cases() {
        let n = 64;
        let m = model(n, 0.1, 50.0);
        let flat = m.geometry(&vec![0.0; n], &vec![0.0; n]).unwrap();
        assert!(tangential_velocity(&flat, &vec![0.7; n]).iter().all(|&v| v == 0.0));
        let a = alpha(n);
        let y: Vec<f64> = a.iter().map(|t| 0.05 * t.sin()).collect();
        let bent = m.geometry(&vec![0.0; n], &y).unwrap();
        assert!(tangential_velocity(&bent, &vec![0.0; n]).iter().all(|&v| v == 0.0));
        assert_eq!(tangential_velocity(&bent, &vec![1.0; n])[0], 0.0);
    }

    #[test]
    fn near_coincident_markers_are_rejected() {
        let n = 64;
        let m = model(n, 0.1, 50.0);
        // smooth bunching: x_α nearly vanishes at α = π
        let xd: Vec<f64> = alpha(n).iter().map(|t| 0.97 / (2.0 * PI) * t.sin()).collect();
        assert!(matches!(
            m.kinematics(&xd, &vec![0.0; n]),
            Err(MarsError::Proximity { .. })
        ));
        // one marker jumping onto its neighbour is grid-scale
        let mut xd = vec![0.0; n];
        xd[11] = 0.95 / n as f64;
        assert!(matches!(
            m.kinematics(&xd, &vec![0.0; n]),
            Err(MarsError::BlowUp { .. })
        ));
    }

    #[test]
    fn spectrum_oracles() {
        let n = 1024;
        assert_eq!(e_theory(0.0, 1.0, n, 0.1), 0.0);
        assert!((e_theory(n as f64 / 4.0, 1.0, n, 0.1) - 0.1 * (n as f64).powi(3)).abs() < 1e-6);
        let peak = e_theory(n as f64 / 3.0, 1.0, n, 0.1) / (0.1 * (n as f64).powi(3));
        assert!((peak - 3.0 * 3f64.sqrt() / 4.0).abs() < 1e-12);
        for k in [1.0, 2.0, 10.0] {
            let small = 0.1 / 2.0 * (2.0 * PI * k).powi(3);
            assert!((2.0 / 3.0 * small - lambda_c_hs(k, 1.0, 0.1)).abs() < 1e-12 * small);
        }
        assert_eq!(lambda_c_hs(0.0, 1.0, 0.1), 0.0);
        assert!((ke_hs(1.0, 0.1, 3.125e-5) - 17.3).abs() < 0.05);
        assert!(ke_hs(1.5, 0.1, 3.125e-5) > ke_hs(1.0, 0.1, 3.125e-5));
    }
}
