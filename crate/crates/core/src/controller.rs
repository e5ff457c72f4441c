//! Per-mode adaptation of the damping spectrum and the analytic stability
//! oracles it is compared against.

use serde::Serialize;

use crate::error::{MarsError, Result};
use crate::spectral::Fourier;
use crate::stepper::DampingSpectrum;

/// Settings of the multiplicative `λ` update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllerConfig {
    /// Noise threshold `ε_u`.
    pub epsilon_u: f64,
    /// Factor applied to `λ(k)` when `ε(k) > ε_u`.
    pub up_factor: f64,
    /// Divisor applied to `λ(k)` otherwise.
    pub down_factor: f64,
    pub lambda_floor: f64,
    /// Value given to a zero `λ(k)` that sees noise; `None` means `2 / (3 dt)`.
    pub lambda_seed: Option<f64>,
    /// Repeat a step with the raised `λ` whenever some mode exceeded `ε_u`.
    pub reject_noisy_steps: bool,
}

impl ControllerConfig {
    pub fn new(epsilon_u: f64) -> Self {
        Self {
            epsilon_u,
            up_factor: 1.2,
            down_factor: 1.02,
            lambda_floor: 0.0,
            lambda_seed: None,
            reject_noisy_steps: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_u.is_finite() && self.epsilon_u > 0.0) {
            return Err(MarsError::validation("epsilon_u", "must be positive"));
        }
        if !(self.up_factor.is_finite() && self.up_factor > 1.0) {
            return Err(MarsError::validation("up_factor", "must be greater than 1"));
        }
        if !(self.down_factor.is_finite() && self.down_factor > 1.0) {
            return Err(MarsError::validation("down_factor", "must be greater than 1"));
        }
        if !(self.lambda_floor.is_finite() && self.lambda_floor >= 0.0) {
            return Err(MarsError::validation("lambda_floor", "must be nonnegative"));
        }
        if let Some(seed) = self.lambda_seed {
            if !(seed.is_finite() && seed > 0.0) {
                return Err(MarsError::validation("lambda_seed", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn seed_value(&self, dt: f64) -> f64 {
        self.lambda_seed.unwrap_or(2.0 / (3.0 * dt))
    }
}

/// Outcome of one update, for diagnostics and step rejection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateSummary {
    pub raised: usize,
    pub lowered: usize,
}

/// Raise `λ(k)` by `up_factor` where `ε(k) > ε_u`, lower it by
/// `down_factor` elsewhere.
///
/// Each conjugate pair is updated once from the larger of its two `ε`
/// values, so symmetry is preserved; the mean mode stays undamped.
pub fn update_lambda(
    lambda: &mut DampingSpectrum,
    eps: &[f64],
    cfg: &ControllerConfig,
    fourier: &dyn Fourier,
    dt: f64,
) -> Result<UpdateSummary> {
    if eps.len() != lambda.len() || lambda.len() != fourier.len() {
        return Err(MarsError::Config(format!(
            "noise measure has {} entries, damping {}, grid {}",
            eps.len(),
            lambda.len(),
            fourier.len()
        )));
    }
    let seed = cfg.seed_value(dt);
    let mut summary = UpdateSummary::default();
    let values = lambda.values_mut();
    for k in 1..values.len() {
        let c = fourier.conjugate_index(k);
        if c < k {
            continue;
        }
        let current = values[k];
        let next = if eps[k].max(eps[c]) > cfg.epsilon_u {
            summary.raised += 1;
            if current == 0.0 {
                seed
            } else {
                current * cfg.up_factor
            }
        } else {
            summary.lowered += 1;
            current / cfg.down_factor
        };
        let next = next.max(cfg.lambda_floor);
        values[k] = next;
        values[c] = next;
    }
    Ok(summary)
}

/// `λ_c(k) = 2 e(k) / 3`.
pub fn lambda_critical(e: &[f64]) -> Vec<f64> {
    e.iter().map(|v| 2.0 * v / 3.0).collect()
}

/// Explicit stability boundary from a spectrum sampled at integer
/// wavenumbers `k = 0, 1, …, e.len() - 1`.
///
/// Returns the crossing of `e(k) = 2/dt`, interpolated as a power law
/// between the bracketing modes (linearly when the lower one is `k = 0`).
/// If no sampled mode reaches the threshold the last wavenumber is returned.
pub fn explicit_boundary_ke(e: &[f64], dt: f64) -> f64 {
    let threshold = 2.0 / dt;
    let Some(k) = e.iter().position(|&v| v >= threshold) else {
        return e.len().saturating_sub(1) as f64;
    };
    if k == 0 {
        return 0.0;
    }
    let (lo, hi) = (e[k - 1], e[k]);
    let k0 = (k - 1) as f64;
    if k == 1 || lo <= 0.0 {
        return k0 + (threshold - lo) / (hi - lo);
    }
    let t = (threshold.ln() - lo.ln()) / (hi.ln() - lo.ln());
    (k0.ln() + t * ((k as f64).ln() - k0.ln())).exp()
}

/// Explicit stability boundary of an analytic spectrum increasing on
/// `[0, k_max]`, by bisection; `k_max` if the threshold is never reached.
pub fn explicit_boundary_bisect(e: impl Fn(f64) -> f64, dt: f64, k_max: f64) -> f64 {
    let threshold = 2.0 / dt;
    if e(k_max) < threshold {
        return k_max;
    }
    let (mut lo, mut hi) = (0.0, k_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if e(mid) < threshold {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `λ(k) = λ0 |k|^power` with `|k|` the wavenumber magnitude in index units.
pub fn init_power_law(lambda0: f64, power: f64, fourier: &dyn Fourier) -> Result<DampingSpectrum> {
    if !(lambda0.is_finite() && lambda0 >= 0.0) {
        return Err(MarsError::validation("lambda0", "must be nonnegative"));
    }
    if !(power.is_finite() && power >= 0.0) {
        return Err(MarsError::validation("power", "must be nonnegative"));
    }
    DampingSpectrum::from_fn(fourier, |k| {
        if lambda0 == 0.0 {
            0.0
        } else {
            lambda0 * fourier.wavenumber_norm(k).powf(power)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Fourier1D, Fourier2D, Grid1D, Grid2D};
    use proptest::prelude::*;

    fn fourier(n: usize) -> Fourier1D {
        Fourier1D::new(Grid1D::new(n, 1.0).unwrap())
    }

    #[test]
    fn noisy_mode_is_raised_quiet_modes_lowered() {
        let f = fourier(16);
        let cfg = ControllerConfig::new(1e-8);
        let mut lambda = init_power_law(1.0, 2.0, &f).unwrap();
        let before = lambda.clone();
        let mut eps = vec![0.0; 16];
        eps[3] = 2e-8;
        let summary = update_lambda(&mut lambda, &eps, &cfg, &f, 1e-3).unwrap();
        assert_eq!(summary.raised, 1);
        assert_eq!(lambda.get(3), before.get(3) * 1.2);
        assert_eq!(lambda.get(13), before.get(3) * 1.2);
        assert_eq!(lambda.get(5), before.get(5) / 1.02);
        assert_eq!(lambda.get(0), 0.0);
    }

    #[test]
    fn quiet_spectrum_decays_everywhere() {
        let f = fourier(32);
        let cfg = ControllerConfig::new(1e-8);
        let mut lambda = init_power_law(2.0, 4.0, &f).unwrap();
        let before = lambda.clone();
        update_lambda(&mut lambda, &[0.0; 32], &cfg, &f, 1e-3).unwrap();
        for k in 0..32 {
            assert_eq!(lambda.get(k), before.get(k) / 1.02);
        }
    }

    #[test]
    fn zero_damping_is_seeded_when_noisy() {
        let f = fourier(16);
        let dt = 1e-2;
        let mut cfg = ControllerConfig::new(1e-8);
        let mut lambda = DampingSpectrum::zeros(16);
        let mut eps = vec![0.0; 16];
        eps[8] = 1.0;
        update_lambda(&mut lambda, &eps, &cfg, &f, dt).unwrap();
        assert!((lambda.get(8) - 2.0 / (3.0 * dt)).abs() < 1e-12);
        assert_eq!(lambda.get(7), 0.0);

        cfg.lambda_seed = Some(5.0);
        let mut lambda = DampingSpectrum::zeros(16);
        update_lambda(&mut lambda, &eps, &cfg, &f, dt).unwrap();
        assert_eq!(lambda.get(8), 5.0);
    }

    #[test]
    fn floor_is_applied() {
        let f = fourier(8);
        let mut cfg = ControllerConfig::new(1.0);
        cfg.lambda_floor = 0.5;
        let mut lambda = DampingSpectrum::zeros(8);
        update_lambda(&mut lambda, &[0.0; 8], &cfg, &f, 1.0).unwrap();
        assert_eq!(lambda.get(1), 0.5);
        assert_eq!(lambda.get(0), 0.0);
    }

    #[test]
    fn geometric_growth_and_decay_are_exact() {
        let f = fourier(16);
        let cfg = ControllerConfig::new(1e-8);
        let mut grow = init_power_law(1.0, 1.0, &f).unwrap();
        let mut decay = grow.clone();
        let (mut up, mut down) = (1.0f64, 1.0f64);
        for _ in 0..50 {
            update_lambda(&mut grow, &[1.0; 16], &cfg, &f, 1.0).unwrap();
            update_lambda(&mut decay, &[0.0; 16], &cfg, &f, 1.0).unwrap();
            up *= 1.2;
            down /= 1.02;
        }
        assert_eq!(grow.get(2), 2.0 * up);
        assert_eq!(decay.get(2), 2.0 * down);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ControllerConfig::new(0.0).validate().is_err());
        let mut cfg = ControllerConfig::new(1e-8);
        cfg.up_factor = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ControllerConfig::new(1e-8);
        cfg.down_factor = 0.9;
        assert!(cfg.validate().is_err());
        assert!(ControllerConfig::new(1e-8).validate().is_ok());
    }

    #[test]
    fn critical_damping() {
        assert_eq!(lambda_critical(&[0.0, 3.0]), vec![0.0, 2.0]);
    }

    #[test]
    fn boundary_of_a_power_law_is_exact() {
        // e(k) = c k^4 is reproduced exactly by power-law interpolation
        let c = 3.0;
        let e: Vec<f64> = (0..=64).map(|k| c * (k as f64).powi(4)).collect();
        let dt = 1e-4;
        let exact = (2.0 / (dt * c)).powf(0.25);
        assert!((explicit_boundary_ke(&e, dt) - exact).abs() < 1e-12);
        assert!((explicit_boundary_bisect(|k| c * k.powi(4), dt, 64.0) - exact).abs() < 1e-10);
    }

    #[test]
    fn boundary_limits() {
        let e: Vec<f64> = (0..=8).map(|k| (k * k) as f64).collect();
        assert!((explicit_boundary_ke(&e, 1.0) - 2.0f64.sqrt()).abs() < 1e-14);
        // threshold never reached: last sampled wavenumber
        assert_eq!(explicit_boundary_ke(&e, 1e-9), 8.0);
        // huge dt: boundary collapses towards zero
        assert!(explicit_boundary_ke(&e, 1e12) < 1e-11);
        assert!(explicit_boundary_bisect(|k| k * k, 1e12, 10.0) < 1e-5);
    }

    #[test]
    fn power_law_initialization() {
        let f = fourier(16);
        let l = init_power_law(2.0, 3.0, &f).unwrap();
        assert_eq!(l.get(0), 0.0);
        assert_eq!(l.get(2), 16.0);
        assert_eq!(l.get(14), 16.0);
        assert!(init_power_law(0.0, 4.0, &f).unwrap().values().iter().all(|&v| v == 0.0));

        let g = Grid2D::new(8, 8, 1.0, 1.0).unwrap();
        let f2 = Fourier2D::new(g);
        let l2 = init_power_law(1.0, 4.0, &f2).unwrap();
        assert!((l2.get(g.index(1, 7)) - 4.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn update_preserves_symmetry_and_responds_monotonically(
            init in prop::collection::vec(0.0f64..10.0, 32),
            eps in prop::collection::vec(0.0f64..2e-8, 32),
            bump in 0usize..32,
        ) {
            let f = fourier(32);
            let cfg = ControllerConfig::new(1e-8);
            let lambda = DampingSpectrum::from_fn(&f, |k| init[k]).unwrap();

            let mut quiet = lambda.clone();
            update_lambda(&mut quiet, &eps, &cfg, &f, 1e-3).unwrap();
            for k in 0..32 {
                prop_assert_eq!(quiet.get(k), quiet.get(f.conjugate_index(k)));
                prop_assert!(quiet.get(k) >= 0.0);
            }

            let mut noisy_eps = eps.clone();
            noisy_eps[bump] = 1.0;
            let mut noisy = lambda.clone();
            update_lambda(&mut noisy, &noisy_eps, &cfg, &f, 1e-3).unwrap();
            prop_assert!(noisy.get(bump) >= quiet.get(bump));
            if bump != 0 {
                prop_assert!(noisy.get(bump) >= lambda.get(bump));
            }
        }
    }
}
