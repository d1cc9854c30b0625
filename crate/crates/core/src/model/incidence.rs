use std::fmt;

use crate::error::{Error, Result};

/// Incidence rate I ↦ f(I) with closed-form first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IncidenceFunction {
    /// β I
    Bilinear { beta: f64 },
    /// β I e^{-m I}
    ExponentialDamped { beta: f64, m: f64 },
    /// β I / (1 + a₁ I)
    Saturated { beta: f64, a1: f64 },
    /// β I / (1 + ω₁ I + ω₂ I²)
    RationalQuadratic { beta: f64, omega1: f64, omega2: f64 },
}

impl IncidenceFunction {
    pub fn bilinear(beta: f64) -> Result<Self> {
        Self::Bilinear { beta }.validated()
    }

    pub fn exponential_damped(beta: f64, m: f64) -> Result<Self> {
        Self::ExponentialDamped { beta, m }.validated()
    }

    pub fn saturated(beta: f64, a1: f64) -> Result<Self> {
        Self::Saturated { beta, a1 }.validated()
    }

    pub fn rational_quadratic(beta: f64, omega1: f64, omega2: f64) -> Result<Self> {
        Self::RationalQuadratic { beta, omega1, omega2 }.validated()
    }

    fn validated(self) -> Result<Self> {
        let beta = self.beta();
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "transmission rate beta = {beta} must be finite and nonnegative"
            )));
        }
        let extras: &[(&str, f64)] = match &self {
            Self::Bilinear { .. } => &[],
            Self::ExponentialDamped { m, .. } => &[("m", *m)],
            Self::Saturated { a1, .. } => &[("a1", *a1)],
            Self::RationalQuadratic { omega1, omega2, .. } => &[("omega1", *omega1), ("omega2", *omega2)],
        };
        for (name, v) in extras {
            if !v.is_finite() || *v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{} parameter {name} = {v} must be finite and positive",
                    self.family_name()
                )));
            }
        }
        Ok(self)
    }

    pub fn beta(&self) -> f64 {
        match *self {
            Self::Bilinear { beta }
            | Self::ExponentialDamped { beta, .. }
            | Self::Saturated { beta, .. }
            | Self::RationalQuadratic { beta, .. } => beta,
        }
    }

    /// Same family and shape parameters with a different transmission rate.
    pub fn with_beta(mut self, new_beta: f64) -> Result<Self> {
        match &mut self {
            Self::Bilinear { beta }
            | Self::ExponentialDamped { beta, .. }
            | Self::Saturated { beta, .. }
            | Self::RationalQuadratic { beta, .. } => *beta = new_beta,
        }
        self.validated()
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Bilinear { .. } => "bilinear",
            Self::ExponentialDamped { .. } => "exponential_damped",
            Self::Saturated { .. } => "saturated",
            Self::RationalQuadratic { .. } => "rational_quadratic",
        }
    }

    /// f(I) for I ≥ 0.
    pub fn value(&self, i: f64) -> Result<f64> {
        check_domain(i)?;
        Ok(self.eval(i))
    }

    /// (f′(I), f″(I)) for I ≥ 0.
    pub fn derivatives(&self, i: f64) -> Result<(f64, f64)> {
        check_domain(i)?;
        Ok(self.eval_derivatives(i))
    }

    /// Closed form without the domain check. Intermediate Runge–Kutta stages may dip a
    /// few ulps below zero; the analytic continuation is used there.
    #[inline]
    pub(crate) fn eval(&self, i: f64) -> f64 {
        match *self {
            Self::Bilinear { beta } => beta * i,
            Self::ExponentialDamped { beta, m } => beta * i * (-m * i).exp(),
            Self::Saturated { beta, a1 } => beta * i / (1.0 + a1 * i),
            Self::RationalQuadratic { beta, omega1, omega2 } => {
                beta * i / (1.0 + omega1 * i + omega2 * i * i)
            }
        }
    }

    pub(crate) fn eval_derivatives(&self, i: f64) -> (f64, f64) {
        match *self {
            Self::Bilinear { beta } => (beta, 0.0),
            Self::ExponentialDamped { beta, m } => {
                let e = (-m * i).exp();
                (beta * e * (1.0 - m * i), beta * e * m * (m * i - 2.0))
            }
            Self::Saturated { beta, a1 } => {
                let q = 1.0 + a1 * i;
                (beta / (q * q), -2.0 * beta * a1 / (q * q * q))
            }
            Self::RationalQuadratic { beta, omega1, omega2 } => {
                let d = 1.0 + omega1 * i + omega2 * i * i;
                let dd = omega1 + 2.0 * omega2 * i;
                let num = 1.0 - omega2 * i * i;
                let dnum = -2.0 * omega2 * i;
                (beta * num / (d * d), beta * (dnum * d - 2.0 * num * dd) / (d * d * d))
            }
        }
    }
}

impl fmt::Display for IncidenceFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Bilinear { beta } => write!(f, "bilinear(beta={beta})"),
            Self::ExponentialDamped { beta, m } => write!(f, "exponential_damped(beta={beta}, m={m})"),
            Self::Saturated { beta, a1 } => write!(f, "saturated(beta={beta}, a1={a1})"),
            Self::RationalQuadratic { beta, omega1, omega2 } => {
                write!(f, "rational_quadratic(beta={beta}, omega1={omega1}, omega2={omega2})")
            }
        }
    }
}

fn check_domain(i: f64) -> Result<()> {
    if i.is_finite() && i >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { what: "I", value: i })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn families(beta: f64) -> Vec<IncidenceFunction> {
        vec![
            IncidenceFunction::bilinear(beta).unwrap(),
            IncidenceFunction::exponential_damped(beta, 0.3).unwrap(),
            IncidenceFunction::saturated(beta, 0.7).unwrap(),
            IncidenceFunction::rational_quadratic(beta, 1.0, 0.5).unwrap(),
        ]
    }

    /// Central differences of `value` (first) and of the analytic `d1` (second).
    fn fd_oracle(f: &IncidenceFunction, i: f64) -> (f64, f64) {
        let step = 1e-6 * i.max(1.0);
        let v = |x: f64| f.eval(x);
        let d1 = (v(i + step) - v(i - step)) / (2.0 * step);
        let d2 = (f.eval_derivatives(i + step).0 - f.eval_derivatives(i - step).0) / (2.0 * step);
        (d1, d2)
    }

    #[test]
    fn bilinear_value_and_derivatives() {
        let f = IncidenceFunction::bilinear(0.002).unwrap();
        assert_relative_eq!(f.value(5.0).unwrap(), 0.01, max_relative = 1e-15);
        assert_eq!(f.derivatives(3.0).unwrap(), (0.002, 0.0));
    }

    #[test]
    fn saturated_value() {
        let f = IncidenceFunction::saturated(0.002, 1.0).unwrap();
        assert_relative_eq!(f.value(1.0).unwrap(), 0.001, max_relative = 1e-15);
    }

    #[test]
    fn every_family_vanishes_at_zero() {
        for f in families(0.4) {
            assert_eq!(f.value(0.0).unwrap(), 0.0, "{f}");
        }
    }

    #[test]
    fn derivatives_at_zero_match_symbolic_values() {
        // I/(1+I) and I e^{-I}: f'(0) = 1, f''(0) = -2 for both.
        let sat = IncidenceFunction::saturated(1.0, 1.0).unwrap();
        let exp = IncidenceFunction::exponential_damped(1.0, 1.0).unwrap();
        for f in [sat, exp] {
            let (d1, d2) = f.derivatives(0.0).unwrap();
            assert_relative_eq!(d1, 1.0, max_relative = 1e-14);
            assert_relative_eq!(d2, -2.0, max_relative = 1e-14);
            let (fd1, fd2) = fd_oracle(&f, 0.0);
            assert_relative_eq!(fd1, 1.0, max_relative = 1e-6);
            assert_relative_eq!(fd2, -2.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn rational_quadratic_derivative_changes_sign_at_one() {
        let f = IncidenceFunction::rational_quadratic(1.0, 1.0, 1.0).unwrap();
        assert!(f.derivatives(0.5).unwrap().0 > 0.0);
        assert_eq!(f.derivatives(1.0).unwrap().0, 0.0);
        assert!(f.derivatives(2.0).unwrap().0 < 0.0);
    }

    #[test]
    fn negative_input_is_domain_error() {
        let f = IncidenceFunction::bilinear(1.0).unwrap();
        assert!(matches!(f.value(-1e-3), Err(Error::Domain { .. })));
        assert!(matches!(f.derivatives(-1.0), Err(Error::Domain { .. })));
        assert!(f.value(f64::NAN).is_err());
    }

    #[test]
    fn invalid_shape_parameters_rejected() {
        assert!(IncidenceFunction::saturated(1.0, 0.0).is_err());
        assert!(IncidenceFunction::exponential_damped(1.0, -1.0).is_err());
        assert!(IncidenceFunction::rational_quadratic(1.0, 1.0, 0.0).is_err());
        assert!(IncidenceFunction::bilinear(-0.1).is_err());
        assert!(IncidenceFunction::bilinear(0.0).is_ok());
    }

    #[test]
    fn derivatives_match_finite_differences_on_log_grid() {
        for f in families(0.8) {
            for j in 0..=90 {
                let i = 10f64.powf(-6.0 + 9.0 * j as f64 / 90.0);
                let (d1, d2) = f.derivatives(i).unwrap();
                let (fd1, fd2) = fd_oracle(&f, i);
                let tol = |exact: f64, approx: f64| (exact - approx).abs() <= 1e-5 * exact.abs().max(1e-300) + 1e-12;
                assert!(tol(d1, fd1), "{f} d1 at I={i}: {d1} vs {fd1}");
                assert!(tol(d2, fd2), "{f} d2 at I={i}: {d2} vs {fd2}");
            }
        }
    }

    proptest! {
        // Concave families through the origin have a nonincreasing per-capita rate.
        #[test]
        fn per_capita_rate_nonincreasing_for_concave_families(
            beta in 1e-4f64..1.0, a1 in 1e-3f64..10.0, lo in 1e-6f64..100.0, ratio in 1.0f64..50.0,
        ) {
            let hi = lo * ratio;
            for f in [IncidenceFunction::bilinear(beta).unwrap(), IncidenceFunction::saturated(beta, a1).unwrap()] {
                let per_lo = f.value(lo).unwrap() / lo;
                let per_hi = f.value(hi).unwrap() / hi;
                prop_assert!(per_hi <= per_lo * (1.0 + 1e-14));
            }
        }
    }
}
