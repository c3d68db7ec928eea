//! Traffic flow simulation toolkit.
//!
//! Macroscopic second-order traffic models with kinetic-closure
//! coefficients, solved by a staggered central scheme:
//!
//! - an Aw-Rascle-type quasilinear system (momentum or conservative
//!   variables),
//! - a Hamilton-Jacobi-type system whose braking/acceleration response
//!   grows with the velocity gradient ahead, and
//! - a merged variant that caps the gradient factor.
//!
//! Alongside the PDE solvers the crate ships the closure formulas
//! ([`closure`]), an exact Riemann oracle for the Aw-Rascle pressure law
//! ([`riemann`]), the associated microscopic car-following models
//! ([`micro`]), preset Riemann experiments with CSV output
//! ([`experiments`]), and a command-line front end (`traffic-flow`).
//!
//! With the default `parallel` feature the per-cell loops and batch
//! runners use rayon; disabling it falls back to identical sequential
//! code paths.

pub mod closure;
pub mod config;
pub mod error;
pub mod experiments;
pub mod micro;
pub mod parallel;
pub mod params;
pub mod quadrature;
pub mod riemann;
pub mod solver;
pub mod state;

pub use closure::{Branch, ClosureVariant, CoefficientProfile};
pub use config::{load_config, FileConfig, InitialCondition, SimulationConfig};
pub use error::{Error, Result};
pub use experiments::{preset, run_comparison, ExperimentPreset, PresetId};
pub use micro::{run_micro, MicroConfig, MicroModel, MicroState};
pub use params::{ModelKind, ModelParameters};
pub use riemann::{sample, solve_riemann, WaveStructure};
pub use solver::{central_step, run_macro, BoundaryMode, MacroRun, Scheme, StepReport};
pub use state::{pressure, pressure_inverse, MacroState, VariableSet};
