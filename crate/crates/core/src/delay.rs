//! Solution history over [t − k, t] and quadrature of the distributed-delay integrals.

use std::collections::VecDeque;

use crate::error::{Compartment, Error, Result};
use crate::model::{DelayKernel, IncidenceFunction, KernelShape};
use crate::spatial::Field;
use crate::state::FieldState;

/// Discrete delay distribution: Σ wⱼ = 1, τⱼ ∈ [0, k].
#[derive(Debug, Clone, PartialEq)]
pub struct KernelQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl KernelQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn max_delay(&self) -> f64 {
        self.nodes.iter().copied().fold(0.0, f64::max)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Point mass → one node; densities → composite midpoint rule with wⱼ ∝ g(τⱼ)Δτ.
pub fn build_quadrature(g: &DelayKernel, n_nodes: usize) -> Result<KernelQuadrature> {
    if n_nodes == 0 {
        return Err(Error::InvalidParameter("kernel quadrature needs at least one node".into()));
    }
    if let KernelShape::Dirac { tau0 } = g.shape() {
        return Ok(KernelQuadrature { nodes: vec![*tau0], weights: vec![1.0] });
    }
    let k = g.horizon();
    if k <= 0.0 {
        return Err(Error::DegenerateKernel(format!("{} kernel with k = {k}", g.family_name())));
    }
    let dtau = k / n_nodes as f64;
    let nodes: Vec<f64> = (0..n_nodes).map(|j| (j as f64 + 0.5) * dtau).collect();
    let raw: Vec<f64> = nodes.iter().map(|&tau| g.density(tau).unwrap_or(0.0) * dtau).collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateKernel(format!(
            "kernel density vanishes at all {n_nodes} midpoint nodes"
        )));
    }
    let weights = raw.into_iter().map(|w| w / total).collect();
    Ok(KernelQuadrature { nodes, weights })
}

/// Read access to a time-indexed sequence of states.
pub trait StateHistory {
    fn t_oldest(&self) -> f64;
    fn t_newest(&self) -> f64;
    /// Linear interpolation of one compartment at `t` into `out`.
    fn sample_field_into(&self, t: f64, which: Compartment, out: &mut [f64]) -> Result<()>;

    fn sample_field(&self, t: f64, which: Compartment, n_nodes: usize) -> Result<Field> {
        let mut out = Field::zeros(n_nodes);
        self.sample_field_into(t, which, &mut out)?;
        Ok(out)
    }
}

/// Time-ordered snapshots covering at least [t − k, t].
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    snapshots: VecDeque<FieldState>,
    horizon: f64,
    /// Extra retention beyond the horizon, two steps by default.
    slack: f64,
}

impl HistoryBuffer {
    /// Samples the prescribed history Φ on [t0 − k, t0] at spacing `dt` (the last sample is at t0).
    pub fn from_fn(horizon: f64, dt: f64, t0: f64, phi: impl Fn(f64) -> FieldState) -> Result<Self> {
        if !(dt > 0.0) || !horizon.is_finite() || horizon < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "history needs dt > 0 and finite k >= 0 (dt = {dt}, k = {horizon})"
            )));
        }
        let steps = (horizon / dt).ceil() as usize;
        let mut snapshots = VecDeque::with_capacity(steps + 3);
        for j in (0..=steps).rev() {
            let t = t0 - j as f64 * dt;
            let mut s = phi(t);
            s.t = t;
            snapshots.push_back(s);
        }
        Ok(HistoryBuffer { snapshots, horizon, slack: 2.0 * dt })
    }

    /// Constant history equal to `state` on [t − k, t].
    pub fn constant(state: &FieldState, horizon: f64, dt: f64) -> Result<Self> {
        Self::from_fn(horizon, dt, state.t, |_| state.clone())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn newest(&self) -> &FieldState {
        self.snapshots.back().expect("history is never empty")
    }

    pub fn snapshots(&self) -> impl DoubleEndedIterator<Item = &FieldState> + ExactSizeIterator {
        self.snapshots.iter()
    }

    pub(crate) fn get(&self, j: usize) -> &FieldState {
        &self.snapshots[j]
    }

    /// Appends a strictly newer state and drops entries older than t − k − slack.
    pub fn push(&mut self, state: FieldState) {
        debug_assert!(state.t > self.newest().t, "history times must increase");
        let cutoff = state.t - self.horizon - self.slack;
        self.snapshots.push_back(state);
        while self.snapshots.len() > 2 && self.snapshots[1].t <= cutoff {
            self.snapshots.pop_front();
        }
    }

    /// Linear interpolation of all four fields at `t`.
    pub fn sample(&self, t: f64) -> Result<FieldState> {
        let n = self.newest().n_nodes();
        let mut out = FieldState::zeros(n, t);
        for c in Compartment::ALL {
            self.sample_field_into(t, c, out.field_mut(c))?;
        }
        Ok(out)
    }

    /// Index j with t_j ≤ t ≤ t_{j+1} and the weight of t_{j+1}.
    pub(crate) fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let (oldest, newest) = (self.t_oldest(), self.t_newest());
        let eps = 1e-12 * oldest.abs().max(newest.abs()).max(1.0);
        if !(t >= oldest - eps && t <= newest + eps) {
            return Err(Error::HistoryUnderflow { t_query: t, t_oldest: oldest, t_newest: newest });
        }
        let n = self.snapshots.len();
        if n == 1 {
            return Ok((0, 0.0));
        }
        let upper = self.snapshots.partition_point(|s| s.t < t).clamp(1, n - 1);
        let (a, b) = (&self.snapshots[upper - 1], &self.snapshots[upper]);
        let w = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        Ok((upper - 1, w))
    }
}

impl StateHistory for HistoryBuffer {
    fn t_oldest(&self) -> f64 {
        self.snapshots.front().expect("history is never empty").t
    }

    fn t_newest(&self) -> f64 {
        self.newest().t
    }

    fn sample_field_into(&self, t: f64, which: Compartment, out: &mut [f64]) -> Result<()> {
        let (j, w) = self.locate(t)?;
        let a = self.snapshots[j].field(which);
        if w == 0.0 {
            out.copy_from_slice(a);
            return Ok(());
        }
        let b = self.snapshots[j + 1].field(which);
        if w == 1.0 {
            out.copy_from_slice(b);
            return Ok(());
        }
        lerp_into(a, b, w, out);
        Ok(())
    }
}

/// History extended past its newest snapshot by an in-progress Runge–Kutta stage.
///
/// Queries later than the newest stored time interpolate linearly between that snapshot
/// and the stage state, so a zero delay returns the stage itself.
pub struct StageHistory<'a> {
    pub base: &'a HistoryBuffer,
    pub stage: &'a FieldState,
}

impl StateHistory for StageHistory<'_> {
    fn t_oldest(&self) -> f64 {
        self.base.t_oldest()
    }

    fn t_newest(&self) -> f64 {
        self.stage.t
    }

    fn sample_field_into(&self, t: f64, which: Compartment, out: &mut [f64]) -> Result<()> {
        let last = self.base.newest();
        if t <= last.t || self.stage.t <= last.t {
            return self.base.sample_field_into(t, which, out);
        }
        if t >= self.stage.t {
            let eps = 1e-12 * self.stage.t.abs().max(1.0);
            if t > self.stage.t + eps {
                return Err(Error::HistoryUnderflow { t_query: t, t_oldest: self.t_oldest(), t_newest: self.stage.t });
            }
            out.copy_from_slice(self.stage.field(which));
            return Ok(());
        }
        let w = (t - last.t) / (self.stage.t - last.t);
        lerp_into(last.field(which), self.stage.field(which), w, out);
        Ok(())
    }
}

fn lerp_into(a: &[f64], b: &[f64], w: f64, out: &mut [f64]) {
    for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
        *o = x + w * (y - x);
    }
}

/// Which incidence integral is requested; the S or V factor is applied by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayPairing {
    Susceptible,
    Vaccinated,
}

/// Nodewise Σⱼ wⱼ·inc(I(t − τⱼ, x)).
pub fn delay_incidence(
    hist: &impl StateHistory,
    q: &KernelQuadrature,
    t: f64,
    inc: &IncidenceFunction,
    _pairing: DelayPairing,
    n_nodes: usize,
) -> Result<Field> {
    let mut out = Field::zeros(n_nodes);
    let mut scratch = vec![0.0; n_nodes];
    delay_incidence_into(hist, q, t, &[inc], &mut scratch, &mut [&mut out])?;
    Ok(out)
}

/// Accumulates several incidence integrals at once, sharing the history lookups.
pub(crate) fn delay_incidence_into(
    hist: &impl StateHistory,
    q: &KernelQuadrature,
    t: f64,
    incs: &[&IncidenceFunction],
    scratch: &mut [f64],
    outs: &mut [&mut Field],
) -> Result<()> {
    for o in outs.iter_mut() {
        o.fill(0.0);
    }
    for (tau, w) in q.iter() {
        hist.sample_field_into(t - tau, Compartment::I, scratch)?;
        for (inc, out) in incs.iter().zip(outs.iter_mut()) {
            for (o, &i) in out.iter_mut().zip(scratch.iter()) {
                *o += w * inc.eval(i);
            }
        }
    }
    Ok(())
}
