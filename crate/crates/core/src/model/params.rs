use crate::error::{Error, Result};

/// Scalar constants of the SVIR system.
///
/// Rates are per unit time, diffusion coefficients in length²/time and `k` is the
/// longest delay (time) the kernel may reach back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameters {
    /// Recruitment rate of new susceptibles.
    pub lambda: f64,
    /// Natural death rate.
    pub mu: f64,
    /// Vaccination rate of susceptibles.
    pub alpha: f64,
    /// Rate at which vaccinated individuals acquire immunity.
    pub gamma1: f64,
    /// Recovery rate of infected individuals.
    pub gamma: f64,
    /// Disease-induced death rate.
    pub c: f64,
    pub d_s: f64,
    pub d_v: f64,
    pub d_i: f64,
    pub d_r: f64,
    /// Maximum delay.
    pub k: f64,
}

impl Parameters {
    /// Reference rates with unit-interval diffusion 0.1 and no delay.
    pub fn table1() -> Self {
        Parameters {
            lambda: 0.392465,
            mu: 0.001,
            alpha: 0.005,
            gamma1: 0.005,
            gamma: 0.009,
            c: 0.09,
            d_s: 0.1,
            d_v: 0.1,
            d_i: 0.1,
            d_r: 0.1,
            k: 0.0,
        }
    }

    /// Every constant must be finite and nonnegative.
    ///
    /// Zero rates are accepted: vaccination-free, recruitment-free and pure-diffusion
    /// configurations are legitimate numerical experiments even though the stability
    /// results assume strictly positive rates (see [`Parameters::is_strictly_positive`]).
    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.named() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {value} must be finite and nonnegative"
                )));
            }
        }
        Ok(())
    }

    /// All rates strictly positive except `c` and `k`, which may vanish.
    pub fn is_strictly_positive(&self) -> bool {
        self.named()
            .iter()
            .filter(|(name, _)| *name != "c" && *name != "k")
            .all(|(_, v)| *v > 0.0)
    }

    /// Removal rate of the infected class, γ + μ + c.
    pub fn infected_outflow(&self) -> f64 {
        self.gamma + self.mu + self.c
    }

    pub fn max_diffusion(&self) -> f64 {
        self.d_s.max(self.d_v).max(self.d_i).max(self.d_r)
    }

    /// Λ|Ω|/μ on the unit interval; infinite without natural death.
    pub fn mass_ceiling(&self) -> f64 {
        if self.mu > 0.0 {
            self.lambda / self.mu
        } else {
            f64::INFINITY
        }
    }

    pub(crate) fn named(&self) -> [(&'static str, f64); 11] {
        [
            ("Lambda", self.lambda),
            ("mu", self.mu),
            ("alpha", self.alpha),
            ("gamma1", self.gamma1),
            ("gamma", self.gamma),
            ("c", self.c),
            ("d_S", self.d_s),
            ("d_V", self.d_v),
            ("d_I", self.d_i),
            ("d_R", self.d_r),
            ("k", self.k),
        ]
    }
}
