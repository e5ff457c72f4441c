//! Adaptive per-mode damping for stiff PDE time integration.
//!
//! A stiff evolution equation `u_t = f(u)` is advanced with an
//! explicit-implicit-null step that is diagonal in Fourier space,
//!
//! ```text
//! û' = û + f̂ / (1/dt + λ(k))
//! ```
//!
//! wrapped in Richardson step halving for second order in time. The damping
//! spectrum `λ(k)` is adapted once per step from the grid-scale part of the
//! Richardson error estimator, so that it settles near the marginal value
//! `2 e(k) / 3` of the stiff operator's spectrum `e(k)` without that spectrum
//! ever being supplied.
//!
//! Three model problems are bundled: a thin liquid film with van der Waals
//! forces ([`models::thinfilm`]), the 2D Kuramoto–Sivashinsky equation
//! ([`models::ks2d`]) and a Rayleigh–Taylor unstable Hele-Shaw interface
//! ([`models::heleshaw`]). [`driver`] runs them from a flat TOML config and
//! writes CSV snapshots plus a JSON manifest.

pub mod acceptance;
pub mod controller;
pub mod driver;
pub mod error;
pub mod models;
pub mod noise;
pub mod rng;
pub mod spectral;
pub mod stepper;

pub use error::{MarsError, Result};
