use std::fmt;

use super::IncidenceFunction;

pub const DEFAULT_I_MAX: f64 = 1e3;
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Rounding allowance on the concavity test f″ ≤ 0.
const CONCAVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// f(I) > 0 and h(I) > 0 for I > 0.
    H1,
    /// f′ > 0, h′ > 0, f″ ≤ 0, h″ ≤ 0.
    H2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncidenceRole {
    /// Acts on susceptibles.
    F,
    /// Acts on vaccinated.
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Positive,
    Increasing,
    Concave,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub hypothesis: Hypothesis,
    pub role: IncidenceRole,
    pub condition: Condition,
    /// Sample at which the condition first failed.
    pub at: f64,
    pub value: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let func = match self.role {
            IncidenceRole::F => "f",
            IncidenceRole::H => "h",
        };
        let what = match self.condition {
            Condition::Positive => format!("{func}(I) = {} is not > 0", self.value),
            Condition::Increasing => format!("{func}'(I) = {} is not > 0", self.value),
            Condition::Concave => format!("{func}''(I) = {} is not <= 0", self.value),
        };
        write!(f, "{:?} fails at I = {}: {what}", self.hypothesis, self.at)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub h1_holds: bool,
    pub h2_holds: bool,
    pub first_violation: Option<Violation>,
    /// Grid used for both decisions: I_j = i_max·j/n_samples, j = 1..=n_samples.
    pub i_max: f64,
    pub n_samples: usize,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.h1_holds && self.h2_holds
    }
}

/// Samples (H₁)/(H₂) on the uniform grid over (0, `i_max`].
///
/// Strict inequalities for f, h > 0 and f′, h′ > 0; f″, h″ ≤ 0 up to an absolute
/// tolerance of 1e-12. Panics when `i_max` is not positive or `n_samples < 2`.
pub fn check_hypotheses(
    f: &IncidenceFunction,
    h: &IncidenceFunction,
    i_max: f64,
    n_samples: usize,
) -> HypothesisReport {
    assert!(i_max > 0.0 && i_max.is_finite(), "i_max must be positive");
    assert!(n_samples >= 2, "need at least two samples");

    let mut h1_holds = true;
    let mut h2_holds = true;
    let mut first_violation = None;

    for j in 1..=n_samples {
        let i = i_max * j as f64 / n_samples as f64;
        for (role, func) in [(IncidenceRole::F, f), (IncidenceRole::H, h)] {
            let value = func.eval(i);
            let (d1, d2) = func.eval_derivatives(i);
            let checks = [
                (Hypothesis::H1, Condition::Positive, value > 0.0, value),
                (Hypothesis::H2, Condition::Increasing, d1 > 0.0, d1),
                (Hypothesis::H2, Condition::Concave, d2 <= CONCAVITY_TOL, d2),
            ];
            for (hypothesis, condition, ok, v) in checks {
                if ok {
                    continue;
                }
                match hypothesis {
                    Hypothesis::H1 => h1_holds = false,
                    Hypothesis::H2 => h2_holds = false,
                }
                first_violation.get_or_insert(Violation { hypothesis, role, condition, at: i, value: v });
            }
        }
    }

    HypothesisReport { h1_holds, h2_holds, first_violation, i_max, n_samples }
}
