//! Grid-scale noise in the Richardson error estimator.
//!
//! The estimator `E` is smoothed in real space by interpolating each point
//! from its neighbours; `E - Ē` keeps only what a low-degree polynomial cannot
//! reproduce, which is the grid-scale noise produced by an unstable mode.
//!
//! The noise measure is `ε(k) = |F(E - Ē)_k| / n` with `n` the number of grid
//! points, so that `ε` is the amplitude of mode `k` in real-space units.

use crate::error::{MarsError, Result};
use crate::spectral::{Fourier, Grid2D};

/// Weights of the smoothing stencil at offsets `-n_half..=-1, 1..=n_half`.
///
/// They are the Lagrange basis polynomials through those offsets evaluated
/// at zero, so the stencil reproduces polynomials of degree `2 n_half - 1`.
pub fn smoothing_weights(n_half: usize) -> Vec<f64> {
    let offsets: Vec<f64> = (1..=n_half)
        .rev()
        .map(|m| -(m as f64))
        .chain((1..=n_half).map(|m| m as f64))
        .collect();
    offsets
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            offsets
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != i)
                .map(|(_, &xl)| -xl / (xi - xl))
                .product()
        })
        .collect()
}

/// Periodic 1D smoothing of `e` with the `2 n_half`-point Lagrange stencil.
pub fn smooth_1d(e: &[f64], n_half: usize) -> Result<Vec<f64>> {
    let n = e.len();
    if n_half == 0 {
        return Err(MarsError::validation("n_half", "must be at least 1"));
    }
    if n < 2 * n_half + 1 {
        return Err(MarsError::Config(format!(
            "smoothing with n_half = {n_half} needs at least {} points, got {n}",
            2 * n_half + 1
        )));
    }
    let weights = smoothing_weights(n_half);
    let offsets: Vec<usize> = (1..=n_half)
        .rev()
        .map(|m| n - m)
        .chain(1..=n_half)
        .collect();
    Ok((0..n)
        .map(|j| {
            weights
                .iter()
                .zip(&offsets)
                .map(|(w, &o)| w * e[(j + o) % n])
                .sum()
        })
        .collect())
}

/// Periodic 2D smoothing: mean of the four edge neighbours.
pub fn smooth_2d(e: &[f64], grid: &Grid2D) -> Result<Vec<f64>> {
    if e.len() != grid.len() {
        return Err(MarsError::Config(format!(
            "field has {} samples, grid expects {}",
            e.len(),
            grid.len()
        )));
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = vec![0.0; e.len()];
    for jx in 0..nx {
        let left = grid.index((jx + nx - 1) % nx, 0);
        let right = grid.index((jx + 1) % nx, 0);
        let here = grid.index(jx, 0);
        for jy in 0..ny {
            let down = (jy + ny - 1) % ny;
            let up = (jy + 1) % ny;
            out[here + jy] =
                0.25 * (e[here + down] + e[right + jy] + e[here + up] + e[left + jy]);
        }
    }
    Ok(out)
}

/// `ε(k) = |F(E)_k - F(Ē)_k| / n`.
pub fn noise_spectrum(fourier: &dyn Fourier, e: &[f64], e_bar: &[f64]) -> Result<Vec<f64>> {
    if e.len() != e_bar.len() {
        return Err(MarsError::Config(format!(
            "estimator has {} samples, smoothed estimator has {}",
            e.len(),
            e_bar.len()
        )));
    }
    let residual: Vec<f64> = e.iter().zip(e_bar).map(|(a, b)| a - b).collect();
    let scale = 1.0 / fourier.len() as f64;
    Ok(fourier
        .forward(&residual)?
        .into_iter()
        .map(|z| z.norm() * scale)
        .collect())
}

/// Componentwise maximum of two noise measures.
pub fn noise_spectrum_max(eps_x: &[f64], eps_y: &[f64]) -> Vec<f64> {
    eps_x.iter().zip(eps_y).map(|(a, b)| a.max(*b)).collect()
}

/// Noise measure of a 1D estimator.
pub fn noise_1d(fourier: &dyn Fourier, e: &[f64], n_half: usize) -> Result<Vec<f64>> {
    let e_bar = smooth_1d(e, n_half)?;
    noise_spectrum(fourier, e, &e_bar)
}

/// Noise measure of a 2D estimator.
pub fn noise_2d(fourier: &dyn Fourier, grid: &Grid2D, e: &[f64]) -> Result<Vec<f64>> {
    let e_bar = smooth_2d(e, grid)?;
    noise_spectrum(fourier, e, &e_bar)
}
