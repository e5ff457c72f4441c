//! The Fourier-diagonal explicit-implicit-null step and its Richardson
//! extrapolation.

use num_complex::Complex64;

use crate::error::{MarsError, Result};
use crate::spectral::Fourier;

/// A model state or right-hand side: one real grid field per component.
pub type Fields = Vec<Vec<f64>>;

/// Any field whose max-norm exceeds this is treated as blown up.
pub const BLOW_UP_CEILING: f64 = 1e8;

/// Right-hand side `f(u)` of `u_t = f(u)`.
///
/// Implementations must be deterministic: the same state gives a bitwise
/// identical result.
pub trait Rhs {
    fn evaluate(&self, state: &[Vec<f64>]) -> Result<Fields>;
}

impl<F> Rhs for F
where
    F: Fn(&[Vec<f64>]) -> Result<Fields>,
{
    fn evaluate(&self, state: &[Vec<f64>]) -> Result<Fields> {
        self(state)
    }
}

/// Nonnegative damping `λ(k)` over the full spectral index range.
///
/// `λ` vanishes on the mean mode and is symmetric under `k -> conj(k)`, so a
/// filtered real field stays real.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingSpectrum {
    values: Vec<f64>,
}

impl DampingSpectrum {
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    /// Build from `value(index)`, forcing the mean mode to zero and
    /// symmetrizing each conjugate pair with the larger of its two values.
    pub fn from_fn(fourier: &dyn Fourier, mut value: impl FnMut(usize) -> f64) -> Result<Self> {
        let mut values: Vec<f64> = (0..fourier.len()).map(&mut value).collect();
        for (k, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(MarsError::validation(
                    "lambda",
                    format!("damping at index {k} is {v}, expected a finite nonnegative value"),
                ));
            }
        }
        values[0] = 0.0;
        for k in 1..values.len() {
            let c = fourier.conjugate_index(k);
            let m = values[k].max(values[c]);
            values[k] = m;
            values[c] = m;
        }
        Ok(Self { values })
    }

    /// Wrap raw values, checking every invariant against `fourier`.
    pub fn from_values(fourier: &dyn Fourier, values: Vec<f64>) -> Result<Self> {
        if values.len() != fourier.len() {
            return Err(MarsError::Config(format!(
                "damping spectrum has {} entries, grid has {}",
                values.len(),
                fourier.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(MarsError::validation("lambda", "mean-mode damping must be zero"));
        }
        for (k, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(MarsError::validation(
                    "lambda",
                    format!("damping at index {k} is {v}"),
                ));
            }
            if v != values[fourier.conjugate_index(k)] {
                return Err(MarsError::validation(
                    "lambda",
                    format!("damping is not symmetric at index {k}"),
                ));
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

fn check_shapes(fourier: &dyn Fourier, fields: &[Vec<f64>], what: &str) -> Result<()> {
    if fields.is_empty() {
        return Err(MarsError::Config(format!("{what} has no components")));
    }
    for f in fields {
        if f.len() != fourier.len() {
            return Err(MarsError::Config(format!(
                "{what} component has {} samples, grid has {}",
                f.len(),
                fourier.len()
            )));
        }
    }
    Ok(())
}

/// A state that fails a physical check while carrying more than this share
/// of its spectral amplitude in the upper half of the resolved band is
/// reported as a numerical blow-up. Resolved pinches and ruptures sit
/// around `1e-4`; one explicit step of the Hele-Shaw sheet lands near `0.5`.
pub const GRID_SCALE_FRACTION: f64 = 0.1;

/// Share `sqrt(Σ_high |f̂|² / Σ |f̂|²)` of the non-mean spectral amplitude of
/// the fields above half the largest resolved `|k|` (`N/4` on a line); zero
/// for constant fields.
pub fn grid_scale_fraction(fourier: &dyn Fourier, fields: &[Vec<f64>]) -> Result<f64> {
    let cutoff = 0.5 * (0..fourier.len()).map(|i| fourier.wavenumber_norm(i)).fold(0.0, f64::max);
    let (mut high, mut total) = (0.0, 0.0);
    for f in fields {
        let spec = fourier.forward(f)?;
        for (i, c) in spec.iter().enumerate().skip(1) {
            let p = c.norm_sqr();
            total += p;
            if fourier.wavenumber_norm(i) > cutoff {
                high += p;
            }
        }
    }
    Ok(if total > 0.0 { (high / total).sqrt() } else { 0.0 })
}

/// Reject non-finite values and anything above [`BLOW_UP_CEILING`].
///
/// The step index is filled in by the caller via [`MarsError::at_step`].
pub fn check_bounded(fields: &[Vec<f64>], what: &str) -> Result<()> {
    for (c, f) in fields.iter().enumerate() {
        for (j, &v) in f.iter().enumerate() {
            if !v.is_finite() {
                return Err(MarsError::BlowUp {
                    step: 0,
                    reason: format!("non-finite {what} (component {c}, point {j})"),
                });
            }
            if v.abs() > BLOW_UP_CEILING {
                return Err(MarsError::BlowUp {
                    step: 0,
                    reason: format!(
                        "{what} magnitude {:e} exceeds {BLOW_UP_CEILING:e} (component {c}, point {j})",
                        v.abs()
                    ),
                });
            }
        }
    }
    Ok(())
}

/// Apply a precomputed right-hand side: `u' = u + IFFT(f̂ / (1/dt + λ))`.
///
/// Equivalent to filtering `û` and `f̂` together because the filter only
/// touches the increment.
pub fn ein_update(
    fourier: &dyn Fourier,
    state: &[Vec<f64>],
    rhs: &[Vec<f64>],
    lambda: &DampingSpectrum,
    dt: f64,
) -> Result<Fields> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(MarsError::validation("dt", format!("must be positive, got {dt}")));
    }
    if lambda.len() != fourier.len() {
        return Err(MarsError::Config(format!(
            "damping spectrum has {} entries, grid has {}",
            lambda.len(),
            fourier.len()
        )));
    }
    check_shapes(fourier, state, "state")?;
    check_shapes(fourier, rhs, "right-hand side")?;
    if rhs.len() != state.len() {
        return Err(MarsError::Config(format!(
            "right-hand side has {} components, state has {}",
            rhs.len(),
            state.len()
        )));
    }
    check_finite(rhs, "right-hand side")?;

    let inv_dt = 1.0 / dt;
    let mut next = Vec::with_capacity(state.len());
    for (u, f) in state.iter().zip(rhs) {
        let mut spectrum: Vec<Complex64> = fourier.forward(f)?;
        for (z, &l) in spectrum.iter_mut().zip(lambda.values()) {
            *z /= inv_dt + l;
        }
        let increment = fourier.inverse(&spectrum)?;
        next.push(u.iter().zip(&increment).map(|(a, b)| a + b).collect());
    }
    Ok(next)
}

fn check_finite(fields: &[Vec<f64>], what: &str) -> Result<()> {
    for f in fields {
        if let Some(j) = f.iter().position(|v| !v.is_finite()) {
            return Err(MarsError::BlowUp {
                step: 0,
                reason: format!("non-finite {what} at point {j}"),
            });
        }
    }
    Ok(())
}

/// One first-order step of size `dt`.
pub fn ein_step(
    fourier: &dyn Fourier,
    rhs: &dyn Rhs,
    state: &[Vec<f64>],
    lambda: &DampingSpectrum,
    dt: f64,
) -> Result<Fields> {
    let f = rhs.evaluate(state)?;
    let next = ein_update(fourier, state, &f, lambda, dt)?;
    check_bounded(&next, "state")?;
    Ok(next)
}

/// Second-order result and error estimator of one macro step.
#[derive(Debug, Clone)]
pub struct RichardsonStep {
    pub state: Fields,
    pub error: Fields,
}

/// Combine a full step `u1` and two half steps `u2` into `2 u2 - u1`, with
/// error estimator `E = u1 - u2`.
pub fn extrapolate(u1: &[Vec<f64>], u2: &[Vec<f64>]) -> RichardsonStep {
    let mut state = Vec::with_capacity(u1.len());
    let mut error = Vec::with_capacity(u1.len());
    for (a, b) in u1.iter().zip(u2) {
        state.push(a.iter().zip(b).map(|(x1, x2)| 2.0 * x2 - x1).collect());
        error.push(a.iter().zip(b).map(|(x1, x2)| x1 - x2).collect());
    }
    RichardsonStep { state, error }
}

/// One full step of `dt` against two steps of `dt/2`, extrapolated.
///
/// The full step and the first half step share `f(u)`, so the right-hand
/// side is evaluated twice. `λ` is held fixed across the sub-steps.
pub fn richardson_step(
    fourier: &dyn Fourier,
    rhs: &dyn Rhs,
    state: &[Vec<f64>],
    lambda: &DampingSpectrum,
    dt: f64,
) -> Result<RichardsonStep> {
    let f0 = rhs.evaluate(state)?;
    let u1 = ein_update(fourier, state, &f0, lambda, dt)?;
    let half = ein_update(fourier, state, &f0, lambda, 0.5 * dt)?;
    check_bounded(&half, "half-step state")?;
    let f1 = rhs.evaluate(&half)?;
    let u2 = ein_update(fourier, &half, &f1, lambda, 0.5 * dt)?;
    let step = extrapolate(&u1, &u2);
    check_bounded(&step.state, "state")?;
    Ok(step)
}

/// Amplification factor of the extrapolated step on `û' = -e û` with
/// damping `λ`.
///
/// A single step of size `h` multiplies `û` by `a(h) = 1 - e h / (1 + λ h)`;
/// the extrapolated step gives `2 a(dt/2)² - a(dt)`.
pub fn linear_stability_factor(e: f64, lambda: f64, dt: f64) -> f64 {
    let a = |h: f64| 1.0 - e * h / (1.0 + lambda * h);
    let half = a(0.5 * dt);
    2.0 * half * half - a(dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Fourier1D, Grid1D};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn fourier(n: usize) -> Fourier1D {
        Fourier1D::new(Grid1D::new(n, 1.0).unwrap())
    }

    fn smooth_field(n: usize, phase: f64) -> Vec<f64> {
        (0..n)
            .map(|j| {
                let x = j as f64 / n as f64;
                (2.0 * PI * x + phase).sin() + 0.3 * (4.0 * PI * x).cos()
            })
            .collect()
    }

    fn power_law(f: &Fourier1D, lambda0: f64) -> DampingSpectrum {
        DampingSpectrum::from_fn(f, |k| lambda0 * f.wavenumber_norm(k).powi(4)).unwrap()
    }

    #[test]
    fn zero_damping_is_forward_euler() {
        let f = fourier(64);
        let u = vec![smooth_field(64, 0.1)];
        let rhs = vec![smooth_field(64, 1.3)];
        let dt = 1e-3;
        let next = ein_update(&f, &u, &rhs, &DampingSpectrum::zeros(64), dt).unwrap();
        for j in 0..64 {
            assert!((next[0][j] - (u[0][j] + dt * rhs[0][j])).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_rhs_leaves_state_unchanged() {
        let f = fourier(32);
        let u = vec![smooth_field(32, 0.4)];
        let zero = |s: &[Vec<f64>]| -> Result<Fields> { Ok(vec![vec![0.0; s[0].len()]]) };
        let next = ein_step(&f, &zero, &u, &power_law(&f, 50.0), 0.1).unwrap();
        assert_eq!(next, u);
    }

    #[test]
    fn damped_single_mode_recurrence() {
        // û' = -e û with λ = e: factor 1 - e dt / (1 + e dt) = 1 / (1 + e dt)
        let n = 16;
        let f = fourier(n);
        let (k, e, dt) = (3usize, 40.0, 0.04);
        let lambda = DampingSpectrum::from_fn(&f, |i| if f.wavenumber_norm(i) == k as f64 { e } else { 0.0 }).unwrap();
        let mode = |a: f64| -> Vec<f64> {
            (0..n).map(|j| a * (2.0 * PI * (k * j) as f64 / n as f64).cos()).collect()
        };
        let rhs = |s: &[Vec<f64>]| -> Result<Fields> { Ok(vec![s[0].iter().map(|v| -e * v).collect()]) };
        let mut u = vec![mode(1.0)];
        let mut amp = 1.0;
        for _ in 0..5 {
            u = ein_step(&f, &rhs, &u, &lambda, dt).unwrap();
            amp /= 1.0 + e * dt;
        }
        let want = mode(amp);
        for j in 0..n {
            assert!((u[0][j] - want[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn extrapolation_arithmetic() {
        let out = extrapolate(&[vec![1.0; 4]], &[vec![1.1; 4]]);
        for j in 0..4 {
            assert!((out.state[0][j] - 1.2).abs() < 1e-15);
            assert!((out.error[0][j] + 0.1).abs() < 1e-15);
        }
        let same = extrapolate(&[vec![0.5, 2.0]], &[vec![0.5, 2.0]]);
        assert_eq!(same.error[0], vec![0.0, 0.0]);
        assert_eq!(same.state[0], vec![0.5, 2.0]);
    }

    #[test]
    fn extrapolated_step_has_third_order_local_error() {
        // exact reference exp(-e dt); the one-step defect shrinks by 8 when dt halves
        let e = 1.0;
        let defect = |dt: f64| (linear_stability_factor(e, 0.0, dt) - (-e * dt).exp()).abs();
        for dt in [0.02, 0.01, 0.005] {
            let ratio = defect(dt) / defect(dt / 2.0);
            assert!((ratio - 8.0).abs() < 0.8, "dt = {dt}: ratio {ratio}");
        }
    }

    #[test]
    fn stability_factor_boundary_cases() {
        assert_eq!(linear_stability_factor(0.0, 3.0, 0.7), 1.0);
        for x in [0.1, 1.0, 10.0, 100.0, 1000.0] {
            let r = linear_stability_factor(1.0, 2.0 / 3.0, x);
            assert!(r.abs() <= 1.0, "dt e = {x}: factor {r}");
        }
        assert!(linear_stability_factor(1.0, 0.0, 3.0).abs() > 1.0);
    }

    #[test]
    fn richardson_matches_scalar_factor() {
        let n = 32;
        let f = fourier(n);
        let (k, e, lam, dt) = (5usize, 300.0, 150.0, 0.01);
        let lambda = DampingSpectrum::from_fn(&f, |i| if f.wavenumber_norm(i) == k as f64 { lam } else { 0.0 }).unwrap();
        let rhs = |s: &[Vec<f64>]| -> Result<Fields> { Ok(vec![s[0].iter().map(|v| -e * v).collect()]) };
        let u: Vec<f64> = (0..n).map(|j| (2.0 * PI * (k * j) as f64 / n as f64).sin()).collect();
        let out = richardson_step(&f, &rhs, &[u.clone()], &lambda, dt).unwrap();
        let r = linear_stability_factor(e, lam, dt);
        for j in 0..n {
            assert!((out.state[0][j] - r * u[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn non_finite_rhs_is_a_blow_up() {
        let f = fourier(16);
        let bad = |s: &[Vec<f64>]| -> Result<Fields> {
            let mut v = s.to_vec();
            v[0][3] = f64::NAN;
            Ok(v)
        };
        let err = ein_step(&f, &bad, &[vec![0.0; 16]], &DampingSpectrum::zeros(16), 0.1).unwrap_err();
        assert!(matches!(err.at_step(7), MarsError::BlowUp { step: 7, .. }));
    }

    #[test]
    fn asymmetric_damping_is_rejected() {
        let f = fourier(8);
        let mut v = vec![0.0; 8];
        v[1] = 1.0;
        assert!(DampingSpectrum::from_values(&f, v).is_err());
        let sym = DampingSpectrum::from_fn(&f, |k| if k == 1 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(sym.get(7), 1.0);
        assert!(DampingSpectrum::from_values(&f, sym.values().to_vec()).is_ok());
    }

    #[test]
    fn null_property_is_second_order_in_dt() {
        let n = 64;
        let f = fourier(n);
        // keep λ dt small on every mode so the asymptotic regime is reached
        let lambda = DampingSpectrum::from_fn(&f, |k| 0.1 * f.wavenumber_norm(k).powi(2)).unwrap();
        let u = vec![smooth_field(n, 0.2)];
        let rhs = |s: &[Vec<f64>]| -> Result<Fields> {
            Ok(vec![s[0].iter().map(|v| (v * 3.0).sin() - v).collect()])
        };
        let gap = |dt: f64| {
            let a = ein_step(&f, &rhs, &u, &lambda, dt).unwrap();
            let b = ein_step(&f, &rhs, &u, &DampingSpectrum::zeros(n), dt).unwrap();
            a[0].iter().zip(&b[0]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        let (g3, g4, g5) = (gap(1e-3), gap(1e-4), gap(1e-5));
        for (coarse, fine) in [(g3, g4), (g4, g5)] {
            let slope = (coarse / fine).log10();
            assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
        }
    }

    proptest! {
        #[test]
        fn real_fields_stay_real_and_mean_mode_is_euler(
            seed in prop::collection::vec(-1.0f64..1.0, 32),
            force in prop::collection::vec(-1.0f64..1.0, 32),
            lambda0 in 0.0f64..1e3,
            dt in 1e-4f64..1e-1,
        ) {
            let f = fourier(32);
            let lambda = power_law(&f, lambda0);
            let next = ein_update(&f, &[seed.clone()], &[force.clone()], &lambda, dt).unwrap();
            // inverse() already rejects imaginary residue above 1e-6 relative;
            // check the mean mode moved exactly as forward Euler
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let want = mean(&seed) + dt * mean(&force);
            prop_assert!((mean(&next[0]) - want).abs() < 1e-13);
        }

        #[test]
        fn damping_never_amplifies_a_pure_increment(
            force in prop::collection::vec(-1.0f64..1.0, 32),
            lambda0 in 0.0f64..1e3,
            dt in 1e-4f64..1e-1,
        ) {
            let f = fourier(32);
            let damped = ein_update(&f, &[vec![0.0; 32]], &[force.clone()], &power_law(&f, lambda0), dt).unwrap();
            let plain = ein_update(&f, &[vec![0.0; 32]], &[force], &DampingSpectrum::zeros(32), dt).unwrap();
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
            prop_assert!(norm(&damped[0]) <= norm(&plain[0]) * (1.0 + 1e-12));
        }
    }
}
