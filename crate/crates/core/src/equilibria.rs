//! Disease-free and endemic steady states, and the basic reproduction number.
//!
//! Homogeneous steady states of the S, V, I equations satisfy
//! S = Λ/(f(I)+μ+α) and V = αS/(h(I)+γ₁+μ); substituting into the I equation leaves
//! the scalar balance H(I) = S(I)f(I) + V(I)h(I) − (γ+μ+c)I whose positive zero is I*.

use crate::error::{Error, Result};
use crate::model::{IncidenceFunction, Parameters};

/// Log-spaced sample count of the uniqueness scan.
pub const SIGN_SCAN_POINTS: usize = 1000;
/// The scan covers [upper·1e-16, upper].
const SIGN_SCAN_DECADES: f64 = 16.0;
const MAX_BISECTIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    DiseaseFree,
    Endemic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub s: f64,
    pub v: f64,
    pub i: f64,
    pub kind: EquilibriumKind,
}

impl Equilibrium {
    /// R completing the steady state: μR = γ₁V + γI.
    pub fn recovered(&self, p: &Parameters) -> f64 {
        (p.gamma1 * self.v + p.gamma * self.i) / p.mu
    }
}

pub fn disease_free(p: &Parameters) -> Result<Equilibrium> {
    p.validate()?;
    let s = p.lambda / (p.mu + p.alpha);
    let v = p.alpha * s / (p.gamma1 + p.mu);
    Ok(Equilibrium { s, v, i: 0.0, kind: EquilibriumKind::DiseaseFree })
}

/// R₀ = (S₀f′(0) + V₀h′(0)) / (γ+μ+c).
pub fn basic_reproduction_number(p: &Parameters, f: &IncidenceFunction, h: &IncidenceFunction) -> Result<f64> {
    let e0 = disease_free(p)?;
    let (f1, _) = f.derivatives(0.0)?;
    let (h1, _) = h.derivatives(0.0)?;
    Ok((e0.s * f1 + e0.v * h1) / p.infected_outflow())
}

/// The scalar steady-state balance H(I); H(0) = 0.
pub fn endemic_h(i: f64, p: &Parameters, f: &IncidenceFunction, h: &IncidenceFunction) -> f64 {
    let fi = f.eval(i);
    let hi = h.eval(i);
    let s_denom = fi + p.mu + p.alpha;
    p.lambda * fi / s_denom + p.alpha * p.lambda * hi / ((hi + p.gamma1 + p.mu) * s_denom)
        - p.infected_outflow() * i
}

/// Beyond this point the bounded inflow Λ(1 + α/(γ₁+μ)) cannot balance the linear sink.
pub fn root_bracket_upper(p: &Parameters) -> f64 {
    p.lambda * (1.0 + p.alpha / (p.gamma1 + p.mu)) / p.infected_outflow() + 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignScan {
    /// Consecutive grid pairs where H changes sign (or hits zero exactly).
    pub brackets: Vec<(f64, f64)>,
    pub upper: f64,
}

impl SignScan {
    pub fn sign_changes(&self) -> usize {
        self.brackets.len()
    }
}

/// Samples H on `n` log-spaced points of (0, upper] and records every sign change.
pub fn sign_scan(p: &Parameters, f: &IncidenceFunction, h: &IncidenceFunction, upper: f64, n: usize) -> SignScan {
    let lower_exp = upper.log10() - SIGN_SCAN_DECADES;
    let upper_exp = upper.log10();
    let grid: Vec<f64> = (0..n)
        .map(|j| {
            if j + 1 == n {
                upper
            } else {
                10f64.powf(lower_exp + (upper_exp - lower_exp) * j as f64 / (n - 1) as f64)
            }
        })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&i| endemic_h(i, p, f, h)).collect();

    let mut brackets = Vec::new();
    for j in 0..n - 1 {
        let (a, b) = (values[j], values[j + 1]);
        if a == 0.0 && j > 0 {
            // Already counted as the right end of the previous pair.
            continue;
        }
        if (a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0) || (a == 0.0 && j == 0) {
            brackets.push((grid[j], grid[j + 1]));
        }
    }
    SignScan { brackets, upper }
}

/// Unique positive zero of H, found by a log-grid sign scan and bisection.
pub fn endemic_equilibrium(p: &Parameters, f: &IncidenceFunction, h: &IncidenceFunction) -> Result<Equilibrium> {
    let r0 = basic_reproduction_number(p, f, h)?;
    if !(r0 > 1.0) {
        return Err(Error::NoEndemicEquilibrium { r0 });
    }
    let upper = root_bracket_upper(p);
    let scan = sign_scan(p, f, h, upper, SIGN_SCAN_POINTS);
    let &[(lo, hi)] = scan.brackets.as_slice() else {
        return Err(Error::RootSearch {
            upper,
            h_at_upper: endemic_h(upper, p, f, h),
            sign_changes: scan.sign_changes(),
        });
    };
    let i_star = bisect(|i| endemic_h(i, p, f, h), lo, hi);
    Ok(endemic_point(p, f, h, i_star))
}

fn endemic_point(p: &Parameters, f: &IncidenceFunction, h: &IncidenceFunction, i: f64) -> Equilibrium {
    let s = p.lambda / (f.eval(i) + p.mu + p.alpha);
    let v = p.alpha * s / (h.eval(i) + p.gamma1 + p.mu);
    Equilibrium { s, v, i, kind: EquilibriumKind::Endemic }
}

/// Bisection on [lo, hi] with g(lo) ≥ 0 ≥ g(hi).
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g_lo = g(lo);
    if g_lo == 0.0 {
        return lo;
    }
    let positive_at_lo = g_lo > 0.0;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm > 0.0) == positive_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Self-consistency check H′(0) = (γ+μ+c)(R₀ − 1).
///
/// `lhs` is the Richardson extrapolation to I = 0 of central differences of H taken
/// about I = 10⁻⁶ and I = ½·10⁻⁶ (using H(0) = 0); `rhs` comes from R₀.
pub fn hprime_zero_identity(p: &Parameters, f: &IncidenceFunction, h: &IncidenceFunction) -> Result<(f64, f64)> {
    const STEP: f64 = 1e-6;
    let r0 = basic_reproduction_number(p, f, h)?;
    let lhs = (4.0 * endemic_h(STEP, p, f, h) - endemic_h(2.0 * STEP, p, f, h)) / (2.0 * STEP);
    let rhs = p.infected_outflow() * (r0 - 1.0);
    Ok((lhs, rhs))
}
