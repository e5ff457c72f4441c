//! Discrete Fourier transforms of real periodic fields.
//!
//! Convention: the forward transform is unnormalized, the inverse carries the
//! `1/n` (or `1/(nx*ny)`) factor. Spectra are stored in full complex form,
//! index `k` in `[0, n)`, so a damping value can be attached to every index
//! in 1D and 2D alike. Two-dimensional fields are flat, x-major:
//! `index = jx * ny + jy`.

use std::sync::Arc;

use log::warn;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{MarsError, Result};

/// Smallest admissible grid size; the smoothing stencils need at least five points.
pub const MIN_POINTS: usize = 8;

/// Imaginary residue (relative) above which an inverse transform is reported.
const SYMMETRY_WARN: f64 = 1e-10;
/// Imaginary residue (relative) above which an inverse transform is rejected.
const SYMMETRY_FAIL: f64 = 1e-6;

fn check_size(n: usize, what: &str) -> Result<()> {
    if n < MIN_POINTS {
        return Err(MarsError::Config(format!(
            "{what} = {n} is below the minimum of {MIN_POINTS} points"
        )));
    }
    if !n.is_power_of_two() {
        return Err(MarsError::Config(format!("{what} = {n} is not a power of two")));
    }
    Ok(())
}

fn check_length(length: f64, what: &str) -> Result<()> {
    if !(length.is_finite() && length > 0.0) {
        return Err(MarsError::Config(format!("{what} must be positive, got {length}")));
    }
    Ok(())
}

/// Uniform periodic grid `x_j = j * length / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    length: f64,
}

impl Grid1D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        check_size(n, "n")?;
        check_length(length, "length")?;
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }
}

/// Uniform periodic grid on `[0, lx) x [0, ly)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        check_size(nx, "nx")?;
        check_size(ny, "ny")?;
        check_length(lx, "lx")?;
        check_length(ly, "ly")?;
        Ok(Self { nx, ny, lx, ly })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, jx: usize, jy: usize) -> usize {
        jx * self.ny + jy
    }

    #[inline]
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.ny, index % self.ny)
    }
}

/// Map a transform index to its signed wavenumber in `[-n/2 + 1, n/2]`.
pub fn mode_frequency(k_index: usize, n: usize) -> Result<i64> {
    if k_index >= n {
        return Err(MarsError::IndexOutOfRange {
            index: k_index,
            len: n,
        });
    }
    Ok(signed(k_index, n))
}

#[inline]
fn signed(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Forward/inverse transforms plus wavenumber bookkeeping over one grid.
pub trait Fourier {
    /// Number of real samples (and of spectral coefficients).
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn forward(&self, field: &[f64]) -> Result<Vec<Complex64>>;

    fn inverse(&self, spectrum: &[Complex64]) -> Result<Vec<f64>>;

    /// Index of the coefficient conjugate to `index` for a real field.
    fn conjugate_index(&self, index: usize) -> usize;

    /// Signed integer wavenumbers `[kx, ky]` of an index (`ky = 0` in 1D).
    fn wavenumber(&self, index: usize) -> [i64; 2];

    /// Euclidean norm of the signed wavenumber, in index units.
    fn wavenumber_norm(&self, index: usize) -> f64 {
        let [kx, ky] = self.wavenumber(index);
        ((kx * kx + ky * ky) as f64).sqrt()
    }
}

fn to_complex(field: &[f64]) -> Vec<Complex64> {
    field.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Drop the imaginary residue of an inverse transform, rejecting it when the
/// input spectrum was clearly not conjugate-symmetric.
fn real_part(data: Vec<Complex64>, norm: f64) -> Result<Vec<f64>> {
    let mut scale = 0.0_f64;
    let mut residue = 0.0_f64;
    for z in &data {
        scale = scale.max(z.norm());
        residue = residue.max(z.im.abs());
    }
    if !scale.is_finite() {
        return Err(MarsError::NumericalCorruption(
            "non-finite value in inverse transform".into(),
        ));
    }
    if scale > 0.0 {
        let relative = residue / scale;
        if relative > SYMMETRY_FAIL {
            return Err(MarsError::NumericalCorruption(format!(
                "spectrum is not conjugate-symmetric (imaginary residue {relative:e})"
            )));
        }
        if relative > SYMMETRY_WARN {
            warn!("discarding imaginary residue {relative:e} from inverse transform");
        }
    }
    Ok(data.into_iter().map(|z| z.re * norm).collect())
}

fn size_mismatch(got: usize, want: usize) -> MarsError {
    MarsError::Config(format!("field has {got} samples, grid expects {want}"))
}

/// Transforms over a [`Grid1D`].
#[derive(Clone)]
pub struct Fourier1D {
    grid: Grid1D,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fourier1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier1D").field("grid", &self.grid).finish()
    }
}

impl Fourier1D {
    pub fn new(grid: Grid1D) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }
}

impl Fourier for Fourier1D {
    fn len(&self) -> usize {
        self.grid.n()
    }

    fn forward(&self, field: &[f64]) -> Result<Vec<Complex64>> {
        if field.len() != self.len() {
            return Err(size_mismatch(field.len(), self.len()));
        }
        let mut data = to_complex(field);
        self.forward.process(&mut data);
        Ok(data)
    }

    fn inverse(&self, spectrum: &[Complex64]) -> Result<Vec<f64>> {
        if spectrum.len() != self.len() {
            return Err(size_mismatch(spectrum.len(), self.len()));
        }
        let mut data = spectrum.to_vec();
        self.inverse.process(&mut data);
        real_part(data, 1.0 / self.len() as f64)
    }

    fn conjugate_index(&self, index: usize) -> usize {
        let n = self.len();
        (n - index % n) % n
    }

    fn wavenumber(&self, index: usize) -> [i64; 2] {
        [signed(index, self.len()), 0]
    }
}

/// Transforms over a [`Grid2D`], as 1D transforms along each axis.
#[derive(Clone)]
pub struct Fourier2D {
    grid: Grid2D,
    forward_x: Arc<dyn Fft<f64>>,
    inverse_x: Arc<dyn Fft<f64>>,
    forward_y: Arc<dyn Fft<f64>>,
    inverse_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fourier2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier2D").field("grid", &self.grid).finish()
    }
}

impl Fourier2D {
    pub fn new(grid: Grid2D) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward_x: planner.plan_fft_forward(grid.nx()),
            inverse_x: planner.plan_fft_inverse(grid.nx()),
            forward_y: planner.plan_fft_forward(grid.ny()),
            inverse_y: planner.plan_fft_inverse(grid.ny()),
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex64], along_y: &dyn Fft<f64>, along_x: &dyn Fft<f64>) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        // rows of constant jx are contiguous
        along_y.process(data);
        let mut column = vec![Complex64::default(); nx];
        for jy in 0..ny {
            for jx in 0..nx {
                column[jx] = data[jx * ny + jy];
            }
            along_x.process(&mut column);
            for jx in 0..nx {
                data[jx * ny + jy] = column[jx];
            }
        }
    }
}

impl Fourier for Fourier2D {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn forward(&self, field: &[f64]) -> Result<Vec<Complex64>> {
        if field.len() != self.len() {
            return Err(size_mismatch(field.len(), self.len()));
        }
        let mut data = to_complex(field);
        self.transform(&mut data, self.forward_y.as_ref(), self.forward_x.as_ref());
        Ok(data)
    }

    fn inverse(&self, spectrum: &[Complex64]) -> Result<Vec<f64>> {
        if spectrum.len() != self.len() {
            return Err(size_mismatch(spectrum.len(), self.len()));
        }
        let mut data = spectrum.to_vec();
        self.transform(&mut data, self.inverse_y.as_ref(), self.inverse_x.as_ref());
        real_part(data, 1.0 / self.len() as f64)
    }

    fn conjugate_index(&self, index: usize) -> usize {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let (kx, ky) = self.grid.split(index);
        self.grid.index((nx - kx) % nx, (ny - ky) % ny)
    }

    fn wavenumber(&self, index: usize) -> [i64; 2] {
        let (kx, ky) = self.grid.split(index);
        [signed(kx, self.grid.nx()), signed(ky, self.grid.ny())]
    }
}
