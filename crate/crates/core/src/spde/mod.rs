//! Exponential Milstein and Wagner-Platen steppers on spectral Galerkin
//! models, path simulation and strong-error estimation.

mod model;
mod scheme;
mod simulate;

pub use model::{DiagnosticParams, Drift, GalerkinModel, Noise, SpectralModel};
pub use scheme::{milstein_step, wagner_platen_step, Scheme, StepContext, TermGroup, TermMask};
pub use simulate::{
    fit_line, simulate_path, simulate_with, steps_in, strong_error_estimate, tail_decay_study, ConvergenceSetup,
    ErrorRow, ErrorTable, TailRow, TailStudy, Trajectory, MIN_PATHS,
};
