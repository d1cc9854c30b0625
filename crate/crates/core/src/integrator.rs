//! Method-of-lines right-hand side and explicit RK4 time stepping.

use std::fmt;
use std::sync::Arc;

use crate::delay::{build_quadrature, delay_incidence_into, HistoryBuffer, KernelQuadrature, StageHistory, StateHistory};
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::equilibria::{disease_free, endemic_equilibrium, Equilibrium};
use crate::error::{Compartment, Error, Result};
use crate::model::{DelayKernel, IncidenceFunction, Parameters};
use crate::spatial::{laplacian_into, Field, Grid1D};
use crate::state::FieldState;

/// Fraction of the explicit diffusion limit h²/(2·d_max) a step may use.
pub const STABILITY_SAFETY: f64 = 0.9;
pub const DEFAULT_DT: f64 = 2.5e-4;
pub const DEFAULT_STEADY_TOL: f64 = 1e-8;

/// Initial history Φ on [−k, 0].
#[derive(Clone)]
pub enum HistoryInit {
    /// Φ(θ) equal to the given initial state for every θ.
    Constant(FieldState),
    /// Φ(θ) supplied pointwise; Φ(0) is the initial state.
    Function(Arc<dyn Fn(f64) -> FieldState + Send + Sync>),
}

impl HistoryInit {
    pub fn initial_state(&self) -> FieldState {
        match self {
            HistoryInit::Constant(s) => FieldState { t: 0.0, ..s.clone() },
            HistoryInit::Function(phi) => FieldState { t: 0.0, ..phi(0.0) },
        }
    }
}

impl fmt::Debug for HistoryInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistoryInit::Constant(s) => f.debug_tuple("Constant").field(&s.t).finish(),
            HistoryInit::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSchedule {
    /// Time between diagnostic records.
    pub record_stride: f64,
    /// Times at which full spatial profiles are captured.
    pub snapshot_times: Vec<f64>,
}

impl Default for OutputSchedule {
    fn default() -> Self {
        OutputSchedule { record_stride: 1.0, snapshot_times: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: Parameters,
    pub f: IncidenceFunction,
    pub h: IncidenceFunction,
    pub kernel: DelayKernel,
    /// Midpoint nodes for density kernels (ignored for the point mass).
    pub quadrature_nodes: usize,
    pub grid: Grid1D,
    pub dt: f64,
    pub t_end: f64,
    pub steady_tol: f64,
    pub history: HistoryInit,
    pub schedule: OutputSchedule,
}

impl RunConfig {
    /// Homogeneous initial data with constant history.
    #[allow(clippy::too_many_arguments)]
    pub fn homogeneous(
        params: Parameters,
        f: IncidenceFunction,
        h: IncidenceFunction,
        kernel: DelayKernel,
        grid: Grid1D,
        init: [f64; 4],
        dt: f64,
        t_end: f64,
    ) -> Self {
        let [s, v, i, r] = init;
        RunConfig {
            params,
            f,
            h,
            kernel,
            quadrature_nodes: 32,
            grid,
            dt,
            t_end,
            steady_tol: DEFAULT_STEADY_TOL,
            history: HistoryInit::Constant(FieldState::homogeneous(&grid, 0.0, s, v, i, r)),
            schedule: OutputSchedule::default(),
        }
    }

    /// 0.9·h²/(2·d_max); unbounded without diffusion.
    pub fn stability_bound(&self) -> f64 {
        let d = self.params.max_diffusion();
        let h = self.grid.spacing();
        if d > 0.0 {
            STABILITY_SAFETY * h * h / (2.0 * d)
        } else {
            f64::INFINITY
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        let bound = self.stability_bound();
        if self.dt > bound {
            return Err(Error::StepTooLarge { dt: self.dt, bound });
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!("t_end = {} must be finite and >= 0", self.t_end)));
        }
        if !(self.steady_tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("steady_tol = {} must be >= 0", self.steady_tol)));
        }
        if !(self.schedule.record_stride > 0.0) || !self.schedule.record_stride.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "record stride {} must be positive",
                self.schedule.record_stride
            )));
        }
        if self.kernel.horizon() > self.params.k * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "kernel horizon {} exceeds the maximum delay k = {}",
                self.kernel.horizon(),
                self.params.k
            )));
        }
        let init = self.history.initial_state();
        if init.n_nodes() != self.grid.n_nodes() {
            return Err(Error::SizeMismatch { expected: self.grid.n_nodes(), found: init.n_nodes() });
        }
        if init.fields().iter().any(|f| f.iter().any(|x| !x.is_finite() || *x < 0.0)) {
            return Err(Error::InvalidParameter("initial data must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// Step actually used: the largest dt' ≤ dt dividing the record stride.
    pub fn effective_dt(&self) -> f64 {
        let stride = self.schedule.record_stride;
        let per_record = ((stride / self.dt) - 1e-9).ceil().max(1.0);
        stride / per_record
    }
}

/// Scratch buffers reused across right-hand-side evaluations.
struct Workspace {
    lap: Vec<f64>,
    scratch: Vec<f64>,
    force_f: Field,
    force_h: Field,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace { lap: vec![0.0; n], scratch: vec![0.0; n], force_f: Field::zeros(n), force_h: Field::zeros(n) }
    }
}

/// Time derivatives of all four fields, returned as a state stamped with `state.t`.
pub fn rhs(state: &FieldState, hist: &impl StateHistory, q: &KernelQuadrature, cfg: &RunConfig) -> Result<FieldState> {
    if state.n_nodes() != cfg.grid.n_nodes() {
        return Err(Error::SizeMismatch { expected: cfg.grid.n_nodes(), found: state.n_nodes() });
    }
    let n = state.n_nodes();
    let mut ws = Workspace::new(n);
    let mut out = FieldState::zeros(n, state.t);
    rhs_into(state, hist, q, cfg, &mut ws, &mut out)?;
    Ok(out)
}

fn rhs_into(
    state: &FieldState,
    hist: &impl StateHistory,
    q: &KernelQuadrature,
    cfg: &RunConfig,
    ws: &mut Workspace,
    out: &mut FieldState,
) -> Result<()> {
    let p = &cfg.params;
    let h = cfg.grid.spacing();
    delay_incidence_into(
        hist,
        q,
        state.t,
        &[&cfg.f, &cfg.h],
        &mut ws.scratch,
        &mut [&mut ws.force_f, &mut ws.force_h],
    )?;
    let (ff, fh) = (&ws.force_f, &ws.force_h);
    let lap = &mut ws.lap;

    laplacian_into(&state.s, h, lap);
    for k in 0..lap.len() {
        let s = state.s[k];
        out.s[k] = p.d_s * lap[k] + p.lambda - s * ff[k] - (p.mu + p.alpha) * s;
    }
    laplacian_into(&state.v, h, lap);
    for k in 0..lap.len() {
        let v = state.v[k];
        out.v[k] = p.d_v * lap[k] + p.alpha * state.s[k] - v * fh[k] - (p.gamma1 + p.mu) * v;
    }
    laplacian_into(&state.i, h, lap);
    let removal = p.infected_outflow();
    for k in 0..lap.len() {
        out.i[k] = p.d_i * lap[k] + state.v[k] * fh[k] + state.s[k] * ff[k] - removal * state.i[k];
    }
    laplacian_into(&state.r, h, lap);
    for k in 0..lap.len() {
        out.r[k] = p.d_r * lap[k] + p.gamma1 * state.v[k] + p.gamma * state.i[k] - p.mu * state.r[k];
    }
    out.t = state.t;
    Ok(())
}

fn axpy_state(base: &FieldState, scale: f64, d: &FieldState, t: f64, out: &mut FieldState) {
    for (o, (b, x)) in out.fields_mut().into_iter().zip(base.fields().into_iter().zip(d.fields())) {
        for ((o, &b), &x) in o.iter_mut().zip(b.iter()).zip(x.iter()) {
            *o = b + scale * x;
        }
    }
    out.t = t;
}

fn max_norm(d: &FieldState) -> f64 {
    d.fields().iter().map(|f| f.max_abs()).fold(0.0, f64::max)
}

/// Reusable RK4 stepper state.
struct Stepper {
    ws: Workspace,
    k: [FieldState; 4],
    stage: FieldState,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Stepper {
            ws: Workspace::new(n),
            k: std::array::from_fn(|_| FieldState::zeros(n, 0.0)),
            stage: FieldState::zeros(n, 0.0),
        }
    }

    /// k₁ = rhs at the newest history entry.
    fn first_stage(&mut self, hb: &HistoryBuffer, q: &KernelQuadrature, cfg: &RunConfig) -> Result<f64> {
        let y = hb.newest();
        let [k1, ..] = &mut self.k;
        rhs_into(y, hb, q, cfg, &mut self.ws, k1)?;
        Ok(max_norm(k1))
    }

    /// Remaining stages; assumes `first_stage` ran on the same history. Returns the
    /// unclamped new state.
    fn finish(&mut self, hb: &HistoryBuffer, q: &KernelQuadrature, cfg: &RunConfig, dt: f64) -> Result<FieldState> {
        let y = hb.newest();
        let t = y.t;
        for (stage_idx, c) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
            let (done, rest) = self.k.split_at_mut(stage_idx);
            axpy_state(y, c * dt, &done[stage_idx - 1], t + c * dt, &mut self.stage);
            let view = StageHistory { base: hb, stage: &self.stage };
            rhs_into(&self.stage, &view, q, cfg, &mut self.ws, &mut rest[0])?;
        }
        let mut next = FieldState::zeros(y.n_nodes(), t + dt);
        let [k1, k2, k3, k4] = &self.k;
        for (c, o) in Compartment::ALL.into_iter().zip(next.fields_mut()) {
            let (y0, a, b, cc, d) = (y.field(c), k1.field(c), k2.field(c), k3.field(c), k4.field(c));
            for j in 0..o.len() {
                o[j] = y0[j] + dt / 6.0 * (a[j] + 2.0 * b[j] + 2.0 * cc[j] + d[j]);
            }
        }
        Ok(next)
    }
}

/// Sets negative entries to zero, returning how many were changed.
fn clamp_negative(state: &mut FieldState) -> usize {
    let mut count = 0;
    for f in state.fields_mut() {
        for x in f.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
                count += 1;
            }
        }
    }
    count
}

/// One classical RK4 step from the newest history entry; the new state is appended to
/// `hb`. Returns the number of nodes clamped at zero.
pub fn step_rk4(hb: &mut HistoryBuffer, q: &KernelQuadrature, cfg: &RunConfig, dt: f64) -> Result<usize> {
    let bound = cfg.stability_bound();
    if dt > bound {
        return Err(Error::StepTooLarge { dt, bound });
    }
    let mut stepper = Stepper::new(hb.newest().n_nodes());
    stepper.first_stage(hb, q, cfg)?;
    let next = stepper.finish(hb, q, cfg, dt)?;
    commit(hb, next)
}

fn commit(hb: &mut HistoryBuffer, mut next: FieldState) -> Result<usize> {
    if let Some(field) = next.non_finite_field() {
        return Err(Error::BlowUp { t: next.t, field });
    }
    let clamps = clamp_negative(&mut next);
    hb.push(next);
    Ok(clamps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopReason {
    EndTime,
    /// Max-norm of the right-hand side fell below `steady_tol`.
    SteadyState { residual: f64 },
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::EndTime => f.write_str("end_time"),
            StopReason::SteadyState { residual } => write!(f, "steady_state (residual {residual:e})"),
        }
    }
}

/// Spatial summaries and diagnostics at one output time.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    /// Spatial means (trapezoid) of S, V, I, R.
    pub mean: [f64; 4],
    /// Max over nodes of S, V, I, R.
    pub sup: [f64; 4],
    /// Largest nodewise max − min over the four fields.
    pub spread: f64,
    pub diagnostics: DiagnosticsRecord,
    /// Set on the final record.
    pub stop: Option<StopReason>,
}

#[derive(Debug)]
pub enum Event<'a> {
    Record(&'a Record),
    Snapshot { requested: f64, state: &'a FieldState },
}

/// A single integration, advanced record by record.
pub struct Simulation {
    cfg: RunConfig,
    quadrature: KernelQuadrature,
    history: HistoryBuffer,
    stepper: Stepper,
    dt: f64,
    clamp_count: usize,
    dfe: Option<Equilibrium>,
    endemic: Option<Equilibrium>,
}

impl Simulation {
    /// Validates the configuration (including the step-size bound) and seeds the history.
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let quadrature = build_quadrature(&cfg.kernel, cfg.quadrature_nodes)?;
        let dt = cfg.effective_dt();
        let horizon = cfg.kernel.horizon();
        let history = match &cfg.history {
            HistoryInit::Constant(s) => HistoryBuffer::constant(&FieldState { t: 0.0, ..s.clone() }, horizon, dt)?,
            HistoryInit::Function(phi) => HistoryBuffer::from_fn(horizon, dt, 0.0, |t| phi(t))?,
        };
        let dfe = disease_free(&cfg.params).ok().filter(|e| e.s.is_finite() && e.v.is_finite());
        let endemic = endemic_equilibrium(&cfg.params, &cfg.f, &cfg.h).ok();
        let stepper = Stepper::new(cfg.grid.n_nodes());
        Ok(Simulation { cfg, quadrature, history, stepper, dt, clamp_count: 0, dfe, endemic })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn state(&self) -> &FieldState {
        self.history.newest()
    }

    pub fn history(&self) -> &HistoryBuffer {
        &self.history
    }

    pub fn quadrature(&self) -> &KernelQuadrature {
        &self.quadrature
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn clamp_count(&self) -> usize {
        self.clamp_count
    }

    pub fn disease_free(&self) -> Option<&Equilibrium> {
        self.dfe.as_ref()
    }

    pub fn endemic(&self) -> Option<&Equilibrium> {
        self.endemic.as_ref()
    }

    fn record(&self, t: f64, stop: Option<StopReason>) -> Result<Record> {
        let state = self.state();
        let grid = &self.cfg.grid;
        let h = grid.spacing();
        let fields = state.fields();
        let mean = fields.map(|f| crate::spatial::trapezoid(f, h));
        let sup = fields.map(|f| f.max());
        let diagnostics = diagnostics::evaluate(
            &self.history,
            &self.quadrature,
            &self.cfg,
            self.dfe.as_ref(),
            self.endemic.as_ref(),
            self.clamp_count,
        )?;
        Ok(Record { t, mean, sup, spread: state.max_spread(), diagnostics: DiagnosticsRecord { t, ..diagnostics }, stop })
    }

    /// Integrates to `t_end` or steady state, reporting records and snapshots as they occur.
    pub fn run_with(&mut self, mut on_event: impl FnMut(Event<'_>)) -> Result<StopReason> {
        let stride = self.cfg.schedule.record_stride;
        let steps_per_record = (stride / self.dt).round() as u64;
        let t_end = self.cfg.t_end;
        let full_steps = (t_end / self.dt + 1e-9).floor() as u64;
        let remainder = t_end - full_steps as f64 * self.dt;
        let tail = if remainder > 1e-9 * self.dt { Some(remainder) } else { None };
        let mut snapshots: Vec<f64> = self.cfg.schedule.snapshot_times.clone();
        snapshots.retain(|t| *t >= 0.0 && *t <= t_end);
        snapshots.sort_by(f64::total_cmp);
        snapshots.dedup();
        let mut next_snapshot = 0usize;

        let mut step: u64 = 0;
        let mut last_record_t = f64::NAN;
        loop {
            let t_now = self.state().t;
            let on_schedule = step.is_multiple_of(steps_per_record);
            while next_snapshot < snapshots.len() && snapshots[next_snapshot] <= t_now + 1e-9 * t_now.max(1.0) {
                on_event(Event::Snapshot { requested: snapshots[next_snapshot], state: self.state() });
                next_snapshot += 1;
            }

            let at_end = step == full_steps && tail.is_none() || step > full_steps;
            let residual = self.stepper.first_stage(&self.history, &self.quadrature, &self.cfg)?;
            let steady = residual < self.cfg.steady_tol;
            let stop = if at_end {
                Some(StopReason::EndTime)
            } else if steady {
                Some(StopReason::SteadyState { residual })
            } else {
                None
            };

            if on_schedule || stop.is_some() {
                let label = if on_schedule { (step / steps_per_record) as f64 * stride } else { t_now };
                if label != last_record_t {
                    let rec = self.record(label, stop)?;
                    on_event(Event::Record(&rec));
                    last_record_t = label;
                }
            }
            if let Some(stop) = stop {
                return Ok(stop);
            }

            let dt = if step < full_steps { self.dt } else { tail.expect("tail step exists") };
            let mut next = self.stepper.finish(&self.history, &self.quadrature, &self.cfg, dt)?;
            if step < full_steps {
                // Absolute times avoid accumulating rounding in t.
                next.t = (step + 1) as f64 * self.dt;
            } else {
                next.t = t_end;
            }
            self.clamp_count += commit(&mut self.history, next)?;
            step += 1;
        }
    }
}

/// Collected output of a finished run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub snapshots: Vec<(f64, FieldState)>,
    pub stop: StopReason,
    pub final_state: FieldState,
    pub clamp_count: usize,
    pub dt: f64,
}

pub fn run(cfg: RunConfig) -> Result<Trajectory> {
    let mut sim = Simulation::new(cfg)?;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let stop = sim.run_with(|ev| match ev {
        Event::Record(r) => records.push(r.clone()),
        Event::Snapshot { requested, state } => snapshots.push((requested, state.clone())),
    })?;
    Ok(Trajectory {
        records,
        snapshots,
        stop,
        final_state: sim.state().clone(),
        clamp_count: sim.clamp_count(),
        dt: sim.dt(),
    })
}
