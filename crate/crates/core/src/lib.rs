//! Simulation and analysis of a diffusive SVIR epidemic model with distributed delay.
//!
//! The four compartments (susceptible, vaccinated, infected, removed) live on the unit
//! interval with zero-flux boundaries. Infection pressure is a kernel-weighted average of
//! past incidence, `∫₀ᵏ g(τ) f(I(t − τ, x)) dτ`. The crate provides
//!
//! * [`model`]: parameters, incidence families, delay kernels, hypothesis checks;
//! * [`equilibria`]: E₀, R₀ and the endemic equilibrium;
//! * [`spatial`], [`delay`], [`integrator`]: method-of-lines RK4 integration with a history buffer;
//! * [`diagnostics`]: Lyapunov functionals, mass and distance monitors;
//! * [`scenario`]: config files, presets and the `analyze` / `simulate` / `sweep` drivers.

// Negated comparisons are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delay;
pub mod diagnostics;
pub mod equilibria;
mod error;
pub mod integrator;
pub mod model;
pub mod scenario;
pub mod spatial;
mod state;

pub use error::{Compartment, Error, Result};
pub use state::FieldState;

pub use delay::{build_quadrature, delay_incidence, HistoryBuffer, KernelQuadrature};
pub use equilibria::{
    basic_reproduction_number, disease_free, endemic_equilibrium, endemic_h, hprime_zero_identity, Equilibrium,
    EquilibriumKind,
};
pub use integrator::{run, RunConfig, Simulation, StopReason, Trajectory};
pub use model::{check_hypotheses, DelayKernel, HypothesisReport, IncidenceFunction, Parameters};
pub use spatial::{integrate_field, laplacian_neumann, Field, Grid1D};
