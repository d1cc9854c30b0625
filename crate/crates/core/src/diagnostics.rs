//! Lyapunov functionals, total mass and distances to equilibria along a trajectory.
//!
//! The disease-free functional is
//!   L = ∫ [I + S₀φ(S/S₀) + V₀φ(V/V₀)] dx + ∫ Σⱼ wⱼ ∫_{t−τⱼ}^{t} [f(I)S + h(I)V](u) du dx
//! and the endemic one is
//!   H = ∫ [S*φ(S/S*) + V*φ(V/V*) + I*φ(I/I*)] dx
//!     + ∫ Σⱼ wⱼ ∫_{t−τⱼ}^{t} [S*f(I*)φ(Sf(I)/(S*f(I*))) + V*h(I*)φ(Vh(I)/(V*h(I*)))](θ) dθ dx
//! with φ(x) = x − 1 − ln x. Time integrals use the trapezoid rule over stored snapshots.

use crate::delay::{HistoryBuffer, KernelQuadrature};
use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::integrator::{Record, RunConfig};
use crate::model::{IncidenceFunction, Parameters};
use crate::spatial::{integrate_field, Field, Grid1D};
use crate::state::FieldState;

/// Fields are floored here before any logarithm.
pub const LOG_FLOOR: f64 = 1e-30;

/// Monotonicity slack per record, relative to the functional's initial value.
pub const CERTIFICATE_REL_SLACK: f64 = 1e-8;
/// Records earlier than this many steps are treated as transient.
pub const CERTIFICATE_TRANSIENT_STEPS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// N(t) = ∫(S+V+I+R) dx.
    pub total_mass: f64,
    pub l_dfe: Option<f64>,
    pub h_endemic: Option<f64>,
    /// Sup-norm distance of (S, V, I) to E₀.
    pub dist_dfe: Option<f64>,
    /// Sup-norm of the relative deviation |X − X*|/X* over S, V, I.
    pub dist_endemic: Option<f64>,
    /// Cumulative count of nodes clamped at zero.
    pub clamp_count: usize,
}

/// φ(x) = x − 1 − ln x.
pub fn phi(x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(phi_unchecked(x))
    } else {
        Err(Error::Domain { what: "phi argument", value: x })
    }
}

#[inline]
fn phi_unchecked(x: f64) -> f64 {
    x - 1.0 - x.ln()
}

/// a·φ(x/a), extended continuously by x when a = 0.
#[inline]
fn weighted_phi(x: f64, a: f64) -> f64 {
    if a > 0.0 {
        a * phi_unchecked(x.max(LOG_FLOOR) / a)
    } else {
        x
    }
}

pub fn total_mass(state: &FieldState, grid: &Grid1D) -> Result<f64> {
    state.fields().iter().map(|f| integrate_field(f, grid)).sum()
}

/// Σⱼ wⱼ ∫_{t−τⱼ}^{t} F(u) du per node, t being the newest snapshot time.
///
/// `integrand(state, out)` writes F at one instant into `out`.
fn delay_window_integral(
    hist: &HistoryBuffer,
    q: &KernelQuadrature,
    integrand: impl Fn(&FieldState, &mut [f64]),
) -> Result<Field> {
    let newest = hist.newest();
    let n = newest.n_nodes();
    let mut total = Field::zeros(n);
    let tau_max = q.max_delay();
    if tau_max <= 0.0 {
        return Ok(total);
    }
    let t = newest.t;
    let (start, _) = hist.locate(t - tau_max)?;
    let last = hist.len() - 1;

    // cum[j − start] = ∫_{t_j}^{t} F du, accumulated from the newest snapshot backwards.
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(last - start + 1);
    for j in start..=last {
        let mut v = vec![0.0; n];
        integrand(hist.get(j), &mut v);
        values.push(v);
    }
    let mut cum = vec![vec![0.0; n]; values.len()];
    for j in (0..values.len() - 1).rev() {
        let dt = hist.get(start + j + 1).t - hist.get(start + j).t;
        for x in 0..n {
            cum[j][x] = cum[j + 1][x] + 0.5 * dt * (values[j][x] + values[j + 1][x]);
        }
    }

    let mut at_t0 = vec![0.0; n];
    for (tau, w) in q.iter() {
        if tau <= 0.0 {
            continue;
        }
        let t0 = t - tau;
        let (j, frac) = hist.locate(t0)?;
        if frac >= 1.0 {
            for x in 0..n {
                total[x] += w * cum[j + 1 - start][x];
            }
            continue;
        }
        let right = j + 1;
        let partial_state = hist.sample(t0)?;
        integrand(&partial_state, &mut at_t0);
        let dt = hist.get(right).t - t0;
        let cr = &cum[right - start];
        let vr = &values[right - start];
        for x in 0..n {
            total[x] += w * (cr[x] + 0.5 * dt * (at_t0[x] + vr[x]));
        }
    }
    Ok(total)
}

/// Disease-free functional L(t) at the newest history entry.
pub fn lyapunov_dfe(
    hist: &HistoryBuffer,
    q: &KernelQuadrature,
    f: &IncidenceFunction,
    h: &IncidenceFunction,
    e0: &Equilibrium,
    grid: &Grid1D,
) -> Result<f64> {
    let state = hist.newest();
    let l1: Vec<f64> = (0..state.n_nodes())
        .map(|x| state.i[x] + weighted_phi(state.s[x], e0.s) + weighted_phi(state.v[x], e0.v))
        .collect();
    let l2 = delay_window_integral(hist, q, |st, out| {
        for x in 0..out.len() {
            out[x] = f.eval(st.i[x]) * st.s[x] + h.eval(st.i[x]) * st.v[x];
        }
    })?;
    Ok(integrate_field(&Field(l1), grid)? + integrate_field(&l2, grid)?)
}

/// Endemic functional H(t) at the newest history entry. Requires I > 0 at every node.
pub fn lyapunov_endemic(
    hist: &HistoryBuffer,
    q: &KernelQuadrature,
    f: &IncidenceFunction,
    h: &IncidenceFunction,
    e_star: &Equilibrium,
    grid: &Grid1D,
) -> Result<f64> {
    let state = hist.newest();
    if let Some(&bad) = state.i.iter().find(|&&i| !(i > 0.0)) {
        return Err(Error::Domain { what: "I in endemic functional", value: bad });
    }
    let h1: Vec<f64> = (0..state.n_nodes())
        .map(|x| {
            weighted_phi(state.s[x], e_star.s) + weighted_phi(state.v[x], e_star.v) + weighted_phi(state.i[x], e_star.i)
        })
        .collect();
    let sf_star = e_star.s * f.eval(e_star.i);
    let vh_star = e_star.v * h.eval(e_star.i);
    let h2 = delay_window_integral(hist, q, |st, out| {
        for x in 0..out.len() {
            let i = st.i[x].max(LOG_FLOOR);
            let sf = st.s[x].max(LOG_FLOOR) * f.eval(i);
            let vh = st.v[x].max(LOG_FLOOR) * h.eval(i);
            out[x] = weighted_phi(sf, sf_star) + weighted_phi(vh, vh_star);
        }
    })?;
    Ok(integrate_field(&Field(h1), grid)? + integrate_field(&h2, grid)?)
}

/// max over nodes of |S − S₀|, |V − V₀|, |I|.
pub fn distance_to_dfe(state: &FieldState, e0: &Equilibrium) -> f64 {
    (0..state.n_nodes())
        .map(|x| (state.s[x] - e0.s).abs().max((state.v[x] - e0.v).abs()).max(state.i[x].abs()))
        .fold(0.0, f64::max)
}

/// max over nodes and S, V, I of |X − X*|/X* (absolute where X* = 0).
pub fn distance_to_endemic(state: &FieldState, e: &Equilibrium) -> f64 {
    let rel = |x: f64, target: f64| if target > 0.0 { (x - target).abs() / target } else { x.abs() };
    (0..state.n_nodes())
        .map(|x| rel(state.s[x], e.s).max(rel(state.v[x], e.v)).max(rel(state.i[x], e.i)))
        .fold(0.0, f64::max)
}

/// All diagnostics at the newest history entry.
pub(crate) fn evaluate(
    hist: &HistoryBuffer,
    q: &KernelQuadrature,
    cfg: &RunConfig,
    dfe: Option<&Equilibrium>,
    endemic: Option<&Equilibrium>,
    clamp_count: usize,
) -> Result<DiagnosticsRecord> {
    let state = hist.newest();
    let grid = &cfg.grid;
    let l_dfe = dfe.map(|e0| lyapunov_dfe(hist, q, &cfg.f, &cfg.h, e0, grid)).transpose()?;
    let h_endemic = match endemic {
        Some(e) if state.i.iter().all(|&i| i > 0.0) => Some(lyapunov_endemic(hist, q, &cfg.f, &cfg.h, e, grid)?),
        _ => None,
    };
    Ok(DiagnosticsRecord {
        t: state.t,
        total_mass: total_mass(state, grid)?,
        l_dfe,
        h_endemic,
        dist_dfe: dfe.map(|e0| distance_to_dfe(state, e0)),
        dist_endemic: endemic.map(|e| distance_to_endemic(state, e)),
        clamp_count,
    })
}

/// First consecutive pair at which a series increased by more than the slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityBreach {
    pub t: f64,
    pub increase: f64,
    pub allowed: f64,
}

/// Checks v(t_{i+1}) ≤ v(t_i) + rel_slack·|v(t₀)| for every pair with t_i ≥ t_min.
pub fn check_nonincreasing(series: &[(f64, f64)], t_min: f64, rel_slack: f64) -> Result<(), MonotonicityBreach> {
    let Some(&(_, first)) = series.first() else {
        return Ok(());
    };
    let allowed = rel_slack * first.abs();
    for pair in series.windows(2) {
        let ((t0, v0), (t1, v1)) = (pair[0], pair[1]);
        if t0 < t_min {
            continue;
        }
        if !(v1 <= v0 + allowed) {
            return Err(MonotonicityBreach { t: t1, increase: v1 - v0, allowed });
        }
    }
    Ok(())
}

/// Mass bound N(t) ≤ max(N(0), Λ|Ω|/μ) + tol at every record.
pub fn check_mass_bound(records: &[Record], params: &Parameters, tol: f64) -> Result<(), (f64, f64)> {
    let Some(first) = records.first() else {
        return Ok(());
    };
    let bound = first.diagnostics.total_mass.max(params.mass_ceiling()) + tol;
    for r in records {
        if !(r.diagnostics.total_mass <= bound) {
            return Err((r.t, r.diagnostics.total_mass));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Pass,
    Fail(String),
    NotApplicable(String),
}

impl Certificate {
    pub fn label(&self) -> &'static str {
        match self {
            Certificate::Pass => "pass",
            Certificate::Fail(_) => "fail",
            Certificate::NotApplicable(_) => "n/a",
        }
    }
}

/// Checks the functional matching the regime: L for R₀ < 1, H for R₀ > 1.
pub fn certify(records: &[Record], r0: f64, hypotheses_hold: bool, dt: f64) -> Certificate {
    if !hypotheses_hold {
        return Certificate::NotApplicable("incidence functions violate (H1)/(H2)".into());
    }
    let t_min = CERTIFICATE_TRANSIENT_STEPS * dt;
    let (name, series): (&str, Vec<Option<(f64, f64)>>) = if r0 < 1.0 {
        ("L_dfe", records.iter().map(|r| r.diagnostics.l_dfe.map(|v| (r.t, v))).collect())
    } else if r0 > 1.0 {
        ("H_endemic", records.iter().map(|r| r.diagnostics.h_endemic.map(|v| (r.t, v))).collect())
    } else {
        return Certificate::NotApplicable("R0 = 1 is a boundary case".into());
    };
    let Some(series) = series.into_iter().collect::<Option<Vec<_>>>() else {
        return Certificate::NotApplicable(format!("{name} undefined on part of the trajectory"));
    };
    match check_nonincreasing(&series, t_min, CERTIFICATE_REL_SLACK) {
        Ok(()) => Certificate::Pass,
        Err(b) => Certificate::Fail(format!("{name} increased by {:e} at t = {}", b.increase, b.t)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::build_quadrature;
    use crate::equilibria::{disease_free, endemic_equilibrium};
    use crate::model::DelayKernel;
    use proptest::prelude::*;

    fn setup() -> (Parameters, IncidenceFunction, IncidenceFunction, Grid1D) {
        (
            Parameters::table1(),
            IncidenceFunction::bilinear(0.002).unwrap(),
            IncidenceFunction::bilinear(0.0016).unwrap(),
            Grid1D::new(8).unwrap(),
        )
    }

    #[test]
    fn phi_closed_forms() {
        assert_eq!(phi(1.0).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((phi(e).unwrap() - (e - 2.0)).abs() < 1e-15);
        assert!((phi(0.5).unwrap() - 0.193147180559945).abs() < 1e-14);
        assert!(phi(0.0).is_err());
        assert!(phi(-1.0).is_err());
    }

    #[test]
    fn dfe_functional_vanishes_at_e0() {
        let (p, f, h, g) = setup();
        let e0 = disease_free(&p).unwrap();
        let st = FieldState::homogeneous(&g, 0.0, e0.s, e0.v, 0.0, 3.0);
        let q = build_quadrature(&DelayKernel::uniform(2.0).unwrap(), 8).unwrap();
        let hb = HistoryBuffer::constant(&st, 2.0, 0.1).unwrap();
        assert!(lyapunov_dfe(&hb, &q, &f, &h, &e0, &g).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dfe_functional_doubled_s() {
        let (p, f, h, g) = setup();
        let e0 = disease_free(&p).unwrap();
        let st = FieldState::homogeneous(&g, 0.0, 2.0 * e0.s, e0.v, 0.0, 0.0);
        let q = build_quadrature(&DelayKernel::dirac(0.0, 0.0).unwrap(), 1).unwrap();
        let hb = HistoryBuffer::constant(&st, 0.0, 0.1).unwrap();
        let l = lyapunov_dfe(&hb, &q, &f, &h, &e0, &g).unwrap();
        assert!((l - e0.s * phi(2.0).unwrap()).abs() < 1e-12 * l);
    }

    #[test]
    fn point_mass_at_zero_has_no_delay_term() {
        let (p, f, h, g) = setup();
        let e0 = disease_free(&p).unwrap();
        let st = FieldState::homogeneous(&g, 0.0, 30.0, 10.0, 5.0, 0.0);
        let q = build_quadrature(&DelayKernel::dirac(0.0, 0.0).unwrap(), 1).unwrap();
        let hb = HistoryBuffer::constant(&st, 0.0, 0.1).unwrap();
        let l = lyapunov_dfe(&hb, &q, &f, &h, &e0, &g).unwrap();
        let l1 = 5.0 + e0.s * phi(30.0 / e0.s).unwrap() + e0.v * phi(10.0 / e0.v).unwrap();
        assert!((l - l1).abs() < 1e-12 * l1);
    }

    #[test]
    fn delay_term_for_constant_history() {
        // Constant history: ∫_{t−τ}^{t} F du = τF, so the delay term is F·Σ wⱼτⱼ = F·k/2.
        let (p, f, h, g) = setup();
        let e0 = disease_free(&p).unwrap();
        let st = FieldState::homogeneous(&g, 4.0, 30.0, 10.0, 5.0, 0.0);
        let q = build_quadrature(&DelayKernel::uniform(3.0).unwrap(), 6).unwrap();
        let hb = HistoryBuffer::constant(&st, 3.0, 0.07).unwrap();
        let l = lyapunov_dfe(&hb, &q, &f, &h, &e0, &g).unwrap();
        let l1 = 5.0 + e0.s * phi(30.0 / e0.s).unwrap() + e0.v * phi(10.0 / e0.v).unwrap();
        let flux = 0.002 * 5.0 * 30.0 + 0.0016 * 5.0 * 10.0;
        assert!((l - (l1 + 1.5 * flux)).abs() < 1e-12 * l);
    }

    #[test]
    fn delay_term_for_linear_history_is_exact() {
        // F(u) = f(I(u))S with I(u) = u, S = 1, V = 0: ∫_{t−τ}^{t} u du, trapezoid-exact.
        let g = Grid1D::new(4).unwrap();
        let f = IncidenceFunction::bilinear(1.0).unwrap();
        let hb = HistoryBuffer::from_fn(2.0, 0.3, 10.0, |u| FieldState::homogeneous(&g, u, 1.0, 0.0, u, 0.0)).unwrap();
        let q = KernelQuadrature { nodes: vec![0.45, 1.9], weights: vec![0.5, 0.5] };
        let out = delay_window_integral(&hb, &q, |st, out| {
            for x in 0..out.len() {
                out[x] = f.eval(st.i[x]) * st.s[x];
            }
        })
        .unwrap();
        let exact = |tau: f64| 0.5 * (100.0 - (10.0 - tau) * (10.0 - tau));
        let expected = 0.5 * exact(0.45) + 0.5 * exact(1.9);
        assert!(out.iter().all(|&x| (x - expected).abs() < 1e-11), "{:?} vs {expected}", out.0);
    }

    #[test]
    fn endemic_functional_at_and_near_e_star() {
        let (p, f, h, g) = setup();
        let e = endemic_equilibrium(&p, &f, &h).unwrap();
        let st = FieldState::homogeneous(&g, 0.0, e.s, e.v, e.i, 1.0);
        let q = build_quadrature(&DelayKernel::uniform(1.0).unwrap(), 4).unwrap();
        let hb = HistoryBuffer::constant(&st, 1.0, 0.1).unwrap();
        assert!(lyapunov_endemic(&hb, &q, &f, &h, &e, &g).unwrap().abs() < 1e-10);

        // Perturbed only at the newest instant: H₁ = S*φ(2), H₂ ≥ 0.
        let mut hb = hb;
        hb.push(FieldState::homogeneous(&g, 0.1, 2.0 * e.s, e.v, e.i, 1.0));
        let val = lyapunov_endemic(&hb, &q, &f, &h, &e, &g).unwrap();
        let h1 = e.s * phi(2.0).unwrap();
        assert!(val >= h1 - 1e-12);
    }

    #[test]
    fn endemic_functional_needs_positive_infecteds() {
        let (p, f, h, g) = setup();
        let e = endemic_equilibrium(&p, &f, &h).unwrap();
        let mut st = FieldState::homogeneous(&g, 0.0, e.s, e.v, e.i, 1.0);
        st.i[3] = 0.0;
        let q = build_quadrature(&DelayKernel::dirac(0.0, 0.0).unwrap(), 1).unwrap();
        let hb = HistoryBuffer::constant(&st, 0.0, 0.1).unwrap();
        assert!(matches!(lyapunov_endemic(&hb, &q, &f, &h, &e, &g), Err(Error::Domain { .. })));
    }

    #[test]
    fn mass_values() {
        let (p, _, _, g) = setup();
        let st = FieldState::homogeneous(&g, 0.0, 30.0, 10.0, 5.0, 0.0);
        assert!((total_mass(&st, &g).unwrap() - 45.0).abs() < 1e-12);
        let e0 = disease_free(&p).unwrap();
        let r = e0.recovered(&p);
        let st = FieldState::homogeneous(&g, 0.0, e0.s, e0.v, 0.0, r);
        assert!((r - 0.005 * e0.v / 0.001).abs() < 1e-12);
        assert!((total_mass(&st, &g).unwrap() - (e0.s + e0.v + r)).abs() < 1e-10);
        assert_eq!(total_mass(&FieldState::zeros(9, 0.0), &g).unwrap(), 0.0);
    }

    #[test]
    fn monotonicity_checker() {
        let series = [(0.0, 10.0), (1.0, 12.0), (2.0, 9.0), (3.0, 9.0 + 5e-8), (4.0, 8.0)];
        assert!(check_nonincreasing(&series, 1.0, 1e-8).is_ok());
        let breach = check_nonincreasing(&series, 0.0, 1e-8).unwrap_err();
        assert_eq!(breach.t, 1.0);
        assert!(check_nonincreasing(&series, 1.0, 1e-9).is_err());
    }

    proptest! {
        #[test]
        fn phi_is_nonnegative_and_convex(a in 1e-6f64..1e3, b in 1e-6f64..1e3) {
            let (pa, pb) = (phi(a).unwrap(), phi(b).unwrap());
            prop_assert!(pa >= 0.0 && pb >= 0.0);
            let mid = phi(0.5 * (a + b)).unwrap();
            prop_assert!(mid <= 0.5 * (pa + pb) + 1e-12 * (pa + pb).max(1.0));
        }
    }
}
