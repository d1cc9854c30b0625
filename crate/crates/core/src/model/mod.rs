//! Model constants, incidence families, delay kernels and the (H₁)/(H₂) checker.

mod hypotheses;
mod incidence;
mod kernel;
mod params;

pub use hypotheses::{
    check_hypotheses, Condition, Hypothesis, HypothesisReport, IncidenceRole, Violation, DEFAULT_I_MAX,
    DEFAULT_SAMPLES,
};
pub use incidence::IncidenceFunction;
pub use kernel::{DelayKernel, KernelShape};
pub use params::Parameters;

/// Pointwise incidence value; see [`IncidenceFunction::value`].
pub fn incidence_value(f: &IncidenceFunction, i: f64) -> crate::Result<f64> {
    f.value(i)
}

/// Analytic (f′, f″); see [`IncidenceFunction::derivatives`].
pub fn incidence_derivatives(f: &IncidenceFunction, i: f64) -> crate::Result<(f64, f64)> {
    f.derivatives(i)
}

pub fn kernel_mass(g: &DelayKernel) -> f64 {
    g.kernel_mass()
}
