//! Bundled stiff model problems.

pub mod heleshaw;
pub mod ks2d;
pub mod thinfilm;

use crate::error::Result;
use crate::spectral::Fourier;
use crate::stepper::{DampingSpectrum, Fields, Rhs};

/// Analytic stability data for the current state.
#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    /// Spectrum `e(k)` of the linearized stiff operator, per spectral index.
    pub e: Vec<f64>,
    /// Marginal damping `2 e(k) / 3`, per spectral index.
    pub lambda_c: Vec<f64>,
    /// Explicit stability boundary.
    pub ke: f64,
    /// Extra model scalars (film height used by the oracle, interface length, …).
    pub scalars: Vec<(&'static str, f64)>,
}

/// A named real column of a snapshot table.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: &'static str,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: &'static str, values: Vec<f64>) -> Self {
        Self { name, values }
    }
}

/// Everything the driver needs from a model.
pub trait Model: Rhs {
    fn name(&self) -> &'static str;

    fn fourier(&self) -> &dyn Fourier;

    /// 1 for a line of grid points, 2 for a plane.
    fn dimension(&self) -> usize;

    fn dt(&self) -> f64;

    fn initial_state(&self) -> Result<Fields>;

    fn initial_lambda(&self, state: &[Vec<f64>]) -> Result<DampingSpectrum>;

    /// Noise measure `ε(k)` of a Richardson error estimator.
    fn noise(&self, error: &[Vec<f64>]) -> Result<Vec<f64>>;

    fn oracle(&self, state: &[Vec<f64>]) -> Result<Oracle>;

    /// Physical admissibility of a state (positive film, separated markers).
    fn check_state(&self, state: &[Vec<f64>]) -> Result<()>;

    /// Coordinates and state fields, one value per grid point.
    fn grid_columns(&self, state: &[Vec<f64>]) -> Vec<Column>;
}
