use std::fmt;

use thiserror::Error;

/// One of the four compartments of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compartment {
    S,
    V,
    I,
    R,
}

impl Compartment {
    pub const ALL: [Compartment; 4] = [Compartment::S, Compartment::V, Compartment::I, Compartment::R];
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Compartment::S => "S",
            Compartment::V => "V",
            Compartment::I => "I",
            Compartment::R => "R",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} = {value} is outside the admissible domain")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size mismatch: expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("degenerate delay kernel: {0}")]
    DegenerateKernel(String),

    #[error("history underflow: query t = {t_query} outside stored coverage [{t_oldest}, {t_newest}]")]
    HistoryUnderflow { t_query: f64, t_oldest: f64, t_newest: f64 },

    #[error("no endemic equilibrium: R0 = {r0} <= 1")]
    NoEndemicEquilibrium { r0: f64 },

    #[error("endemic root search failed: {sign_changes} sign changes of H on (0, {upper}], H(upper) = {h_at_upper}")]
    RootSearch { upper: f64, h_at_upper: f64, sign_changes: usize },

    #[error("time step dt = {dt} violates the diffusion stability bound dt <= 0.9*h^2/(2*d_max) = {bound}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("numerical blow-up at t = {t}: non-finite values in field {field}")]
    BlowUp { t: f64, field: Compartment },

    #[error("config error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config { line: None, msg: msg.into() }
    }

    /// True for errors caused by the user's configuration rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidParameter(_)
                | Error::StepTooLarge { .. }
                | Error::DegenerateKernel(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
