//! The per-step loop: Richardson step, noise measure, damping update.

use serde::Serialize;

use crate::controller::{update_lambda, ControllerConfig};
use crate::error::Result;
use crate::models::{Model, Oracle};
use crate::stepper::{richardson_step, DampingSpectrum, Fields};

/// Retries allowed per step when noisy steps are rejected.
pub const MAX_REJECTIONS: usize = 20;

/// How the damping spectrum evolves during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingMode {
    /// Start from the model's initial spectrum and adapt every step.
    Adaptive,
    /// Keep the model's initial spectrum.
    Fixed,
    /// `λ ≡ 0`: plain explicit Richardson stepping.
    Explicit,
}

/// Diagnostics of one accepted macro step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub step: u64,
    pub time: f64,
    pub error_estimator: Fields,
    pub noise: Vec<f64>,
    /// Damping used for the step.
    pub lambda: DampingSpectrum,
    pub ke: f64,
    pub step_accepted: bool,
    pub rejections: usize,
}

pub struct Simulation<M: Model> {
    model: M,
    controller: ControllerConfig,
    mode: DampingMode,
    state: Fields,
    lambda: DampingSpectrum,
    noise: Vec<f64>,
    step: u64,
}

impl<M: Model> Simulation<M> {
    pub fn new(model: M, controller: ControllerConfig, mode: DampingMode) -> Result<Self> {
        controller.validate()?;
        let state = model.initial_state()?;
        model.check_state(&state)?;
        let lambda = match mode {
            DampingMode::Explicit => DampingSpectrum::zeros(model.fourier().len()),
            _ => model.initial_lambda(&state)?,
        };
        Self::from_parts(model, controller, mode, state, lambda)
    }

    /// Start from an explicit state and damping spectrum.
    pub fn from_parts(
        model: M,
        controller: ControllerConfig,
        mode: DampingMode,
        state: Fields,
        lambda: DampingSpectrum,
    ) -> Result<Self> {
        controller.validate()?;
        let n = model.fourier().len();
        Ok(Self {
            model,
            controller,
            mode,
            state,
            lambda,
            noise: vec![0.0; n],
            step: 0,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn controller(&self) -> &ControllerConfig {
        &self.controller
    }

    pub fn mode(&self) -> DampingMode {
        self.mode
    }

    pub fn state(&self) -> &Fields {
        &self.state
    }

    pub fn lambda(&self) -> &DampingSpectrum {
        &self.lambda
    }

    /// Noise measure of the last accepted step (zero before the first).
    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.model.dt()
    }

    pub fn oracle(&self) -> Result<Oracle> {
        self.model.oracle(&self.state)
    }

    /// Advance one macro step. On error the simulation is left at the last
    /// accepted state and the error carries the index of the failed step.
    pub fn step(&mut self) -> Result<StepReport> {
        let index = self.step + 1;
        self.try_step().map_err(|e| e.at_step(index))
    }

    fn try_step(&mut self) -> Result<StepReport> {
        let dt = self.model.dt();
        let fourier = self.model.fourier();
        let mut rejections = 0;
        loop {
            let used = self.lambda.clone();
            let out = richardson_step(fourier, &self.model, &self.state, &used, dt)?;
            self.model.check_state(&out.state)?;
            let noise = self.model.noise(&out.error)?;
            if self.mode == DampingMode::Adaptive {
                let summary = update_lambda(&mut self.lambda, &noise, &self.controller, fourier, dt)?;
                if self.controller.reject_noisy_steps
                    && summary.raised > 0
                    && rejections < MAX_REJECTIONS
                {
                    rejections += 1;
                    continue;
                }
            }
            self.state = out.state;
            self.noise = noise.clone();
            self.step += 1;
            let ke = self.model.oracle(&self.state)?.ke;
            return Ok(StepReport {
                step: self.step,
                time: self.time(),
                error_estimator: out.error,
                noise,
                lambda: used,
                ke,
                step_accepted: true,
                rejections,
            });
        }
    }

    /// Advance `steps` macro steps, discarding reports.
    pub fn advance(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }
}
