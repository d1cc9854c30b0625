//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Long simulations use the desk-scale grid N = 50 (h = 0.02) with dt = 1.6e-3, under the
//! stability bound 0.9·h²/(2·d_max) = 1.8e-3.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svir_core::delay::{DelayPairing, HistoryBuffer};
use svir_core::diagnostics::check_nonincreasing;
use svir_core::equilibria::{sign_scan, SIGN_SCAN_POINTS};
use svir_core::integrator::Record;
use svir_core::model::Hypothesis;
use svir_core::scenario::{analyze, ConfigBuilder, ScenarioConfig};
use svir_core::{
    build_quadrature, check_hypotheses, delay_incidence, endemic_equilibrium, endemic_h,
    hprime_zero_identity, laplacian_neumann, run, DelayKernel, FieldState, Grid1D, IncidenceFunction, Parameters,
    Trajectory,
};

const DESK_CELLS: usize = 50;
const DESK_DT: f64 = 1.6e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn preset(name: &str) -> ScenarioConfig {
    ConfigBuilder::preset(name).unwrap().build().unwrap()
}

fn desk_run(name: &str) -> (ScenarioConfig, Trajectory) {
    let mut b = ConfigBuilder::preset(name).unwrap();
    b.set("n_cells", &DESK_CELLS.to_string()).unwrap().set("dt", &DESK_DT.to_string()).unwrap();
    let cfg = b.build().unwrap();
    let traj = run(cfg.run_config().unwrap()).unwrap();
    (cfg, traj)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let low = analyze(&preset("table1_low")).unwrap().r0;
    let high = analyze(&preset("table1_high")).unwrap().r0;
    let pass = (low - 0.8721).abs() <= 1e-4 && (high - 2.1804).abs() <= 1e-4;
    outcome(pass, format!("R0 low = {low:.7}, high = {high:.7}"))
}

/// Plain bisection on H over [lo, hi], written independently of the library solver.
fn bisect_oracle(hfun: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = hfun(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = hfun(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_2() -> Outcome {
    let cfg = preset("table1_high");
    let (p, f, h) = (cfg.params, cfg.f, cfg.h);
    let e = endemic_equilibrium(&p, &f, &h).unwrap();
    let h_res = endemic_h(e.i, &p, &f, &h).abs();
    let id_s = rel(e.s * (f.value(e.i).unwrap() + p.mu + p.alpha), p.lambda);
    let id_v = rel(e.v * (h.value(e.i).unwrap() + p.gamma1 + p.mu), p.alpha * e.s);
    // H > 0 just above zero when R0 > 1 and H < 0 for large I.
    let oracle = bisect_oracle(|i| endemic_h(i, &p, &f, &h), 1e-9, 1e4);
    let upper = p.lambda * (1.0 + p.alpha / (p.gamma1 + p.mu)) / (p.gamma + p.mu + p.c) + 1.0;
    let scan = sign_scan(&p, &f, &h, upper, SIGN_SCAN_POINTS);
    let single = scan.brackets.len() == 1 && scan.brackets[0].0 <= e.i && e.i <= scan.brackets[0].1;
    let agree = rel(e.i, oracle) < 1e-9;
    let pass = h_res < 1e-10 && id_s < 1e-10 && id_v < 1e-10 && single && agree;
    outcome(
        pass,
        format!(
            "I* = {:.9}, |H(I*)| = {h_res:.1e}, identities {id_s:.1e}/{id_v:.1e}, oracle {oracle:.9}, scan brackets {}",
            e.i,
            scan.brackets.len()
        ),
    )
}

fn log_uniform(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.gen_range(-4.0..=0.0))
}

fn random_case(rng: &mut ChaCha8Rng) -> (Parameters, IncidenceFunction, IncidenceFunction) {
    let p = Parameters {
        lambda: log_uniform(rng),
        mu: log_uniform(rng),
        alpha: log_uniform(rng),
        gamma1: log_uniform(rng),
        gamma: log_uniform(rng),
        c: log_uniform(rng),
        d_s: log_uniform(rng),
        d_v: log_uniform(rng),
        d_i: log_uniform(rng),
        d_r: log_uniform(rng),
        k: 0.0,
    };
    let inc = |rng: &mut ChaCha8Rng| {
        let beta = log_uniform(rng);
        if rng.gen_bool(0.5) {
            IncidenceFunction::bilinear(beta).unwrap()
        } else {
            IncidenceFunction::saturated(beta, log_uniform(rng)).unwrap()
        }
    };
    let f = inc(rng);
    let h = inc(rng);
    (p, f, h)
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = vec![];
    for name in ["table1_low", "table1_high"] {
        let c = preset(name);
        cases.push((c.params, c.f, c.h));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        cases.push(random_case(&mut rng));
    }
    for (p, f, h) in &cases {
        let (lhs, rhs) = hprime_zero_identity(p, f, h).unwrap();
        worst = worst.max(rel(lhs, rhs));
    }
    let rhs_check = [("table1_low", -0.01279), ("table1_high", 0.11804)]
        .iter()
        .all(|(name, expected)| {
            let c = preset(name);
            let (_, rhs) = hprime_zero_identity(&c.params, &c.f, &c.h).unwrap();
            rel(rhs, *expected) < 1e-3
        });
    outcome(worst < 1e-4 && rhs_check, format!("{} parameter sets, worst relative mismatch {worst:.2e}", cases.len()))
}

/// Nondelayed homogeneous ODE, integrated with classical RK4.
fn ode_oracle(p: &Parameters, f: &IncidenceFunction, h: &IncidenceFunction, y0: [f64; 4], t_end: f64, dt: f64) -> [f64; 4] {
    let field = |y: [f64; 4]| {
        let [s, v, i, _r] = y;
        let fi = f.value(i.max(0.0)).unwrap();
        let hi = h.value(i.max(0.0)).unwrap();
        [
            p.lambda - s * fi - (p.mu + p.alpha) * s,
            p.alpha * s - v * hi - (p.gamma1 + p.mu) * v,
            s * fi + v * hi - (p.gamma + p.mu + p.c) * i,
            p.gamma * i + p.gamma1 * v - p.mu * y[3],
        ]
    };
    let axpy = |y: [f64; 4], a: f64, k: [f64; 4]| [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2], y[3] + a * k[3]];
    let steps = (t_end / dt).round() as usize;
    let mut y = y0;
    for _ in 0..steps {
        let k1 = field(y);
        let k2 = field(axpy(y, 0.5 * dt, k1));
        let k3 = field(axpy(y, 0.5 * dt, k2));
        let k4 = field(axpy(y, dt, k3));
        for c in 0..4 {
            y[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    y
}

fn record_at(records: &[Record], t: f64) -> &Record {
    records.iter().find(|r| (r.t - t).abs() < 1e-9).expect("record at requested time")
}

fn criterion_4(runs: &[(ScenarioConfig, Trajectory)]) -> Outcome {
    let mut worst: f64 = 0.0;
    for (cfg, traj) in runs {
        let dt = traj.dt;
        let oracle = ode_oracle(&cfg.params, &cfg.f, &cfg.h, cfg.init, 100.0, dt / 10.0);
        let rec = record_at(&traj.records, 100.0);
        for c in 0..4 {
            worst = worst.max(rel(rec.mean[c], oracle[c]));
        }
    }
    outcome(worst < 1e-6, format!("worst relative deviation of spatial means at t = 100: {worst:.2e}"))
}

fn monotone(records: &[Record], dt: f64, pick: impl Fn(&Record) -> Option<f64>) -> Result<(), String> {
    let series: Option<Vec<(f64, f64)>> = records.iter().map(|r| pick(r).map(|v| (r.t, v))).collect();
    let series = series.ok_or("functional undefined on part of the run")?;
    check_nonincreasing(&series, 5.0 * dt, 1e-8)
        .map_err(|b| format!("increase {:.2e} > {:.2e} at t = {}", b.increase, b.allowed, b.t))
}

fn criterion_5((_, traj): &(ScenarioConfig, Trajectory)) -> Outcome {
    let sup_i = traj.final_state.i.max();
    let mono = monotone(&traj.records, traj.dt, |r| r.diagnostics.l_dfe);
    let t_final = traj.final_state.t;
    let pass = t_final == 1500.0 && sup_i < 1e-3 && mono.is_ok() && traj.clamp_count == 0;
    outcome(
        pass,
        format!(
            "t = {t_final}, sup I = {sup_i:.2e}, L_dfe {}, clamps = {}",
            mono.err().unwrap_or_else(|| "nonincreasing".into()),
            traj.clamp_count
        ),
    )
}

fn criterion_6((cfg, traj): &(ScenarioConfig, Trajectory)) -> Outcome {
    let i_star = endemic_equilibrium(&cfg.params, &cfg.f, &cfg.h).unwrap().i;
    let last = traj.records.last().unwrap();
    let dev = rel(last.mean[2], i_star);
    let mono = monotone(&traj.records, traj.dt, |r| r.diagnostics.h_endemic);
    let pass = dev < 0.05 && mono.is_ok();
    outcome(
        pass,
        format!(
            "t = {}, |I_mean - I*|/I* = {dev:.2e}, H_endemic {}",
            last.t,
            mono.err().unwrap_or_else(|| "nonincreasing".into())
        ),
    )
}

fn laplacian_error(n: usize) -> f64 {
    let grid = Grid1D::new(n).unwrap();
    let u = grid.field_from(|x| (PI * x).cos());
    let lap = laplacian_neumann(&u, &grid).unwrap();
    grid.nodes().zip(lap.iter()).map(|(x, l)| (l + PI * PI * (PI * x).cos()).abs()).fold(0.0, f64::max)
}

fn quadrature_error(n_nodes: usize) -> f64 {
    // I(t) = 1 + 0.5 sin(t) on [t − k, t], uniform kernel, bilinear incidence:
    // exact value β(1 + 0.5 (cos(t − k) − cos t)/k).
    let (k, t, beta, dt) = (2.0, 3.0, 0.7, 1e-4);
    let grid = Grid1D::new(2).unwrap();
    let hist = HistoryBuffer::from_fn(k, dt, t, |s| {
        FieldState::homogeneous(&grid, s, 0.0, 0.0, 1.0 + 0.5 * s.sin(), 0.0)
    })
    .unwrap();
    let q = build_quadrature(&DelayKernel::uniform(k).unwrap(), n_nodes).unwrap();
    let inc = IncidenceFunction::bilinear(beta).unwrap();
    let got = delay_incidence(&hist, &q, t, &inc, DelayPairing::Susceptible, grid.n_nodes()).unwrap();
    let exact = beta * (1.0 + 0.5 * ((t - k).cos() - t.cos()) / k);
    got.iter().map(|g| (g - exact).abs()).fold(0.0, f64::max)
}

fn criterion_7() -> Outcome {
    let lap = [50, 100, 200].map(laplacian_error);
    let lap_ratios = [lap[0] / lap[1], lap[1] / lap[2]];
    let quad = [4, 8, 16].map(quadrature_error);
    let quad_ratios = [quad[0] / quad[1], quad[1] / quad[2]];
    let pass = lap_ratios.iter().all(|r| (3.6..=4.4).contains(r)) && quad_ratios.iter().all(|r| (3.5..=4.5).contains(r));
    outcome(
        pass,
        format!(
            "Laplacian ratios {:.3}/{:.3}, delay quadrature ratios {:.3}/{:.3}",
            lap_ratios[0], lap_ratios[1], quad_ratios[0], quad_ratios[1]
        ),
    )
}

fn criterion_8(runs: &[(ScenarioConfig, Trajectory)]) -> Outcome {
    let bound = 45f64.max(392.465) + 1e-6;
    let peak = runs
        .iter()
        .flat_map(|(_, t)| t.records.iter().map(|r| r.diagnostics.total_mass))
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(peak <= bound, format!("max N(t) = {peak:.6} vs bound {bound}"))
}

fn criterion_9() -> Outcome {
    let beta = 0.002;
    let passing = [
        IncidenceFunction::bilinear(beta).unwrap(),
        IncidenceFunction::exponential_damped(beta, 1e-4).unwrap(),
        IncidenceFunction::saturated(beta, 1.0).unwrap(),
    ];
    let mut names = vec![];
    let mut pass = true;
    for f in &passing {
        let report = check_hypotheses(f, f, 1e3, 10_000);
        pass &= report.all_hold();
        names.push(format!("{} {}", f.family_name(), if report.all_hold() { "holds" } else { "fails" }));
    }
    let rational = IncidenceFunction::rational_quadratic(beta, 1.0, 1.0).unwrap();
    let report = check_hypotheses(&rational, &rational, 100.0, 9_999);
    let located = match &report.first_violation {
        Some(v) => v.hypothesis == Hypothesis::H2 && v.at > 1.0,
        None => false,
    };
    pass &= report.h1_holds && !report.h2_holds && located;
    let at = report.first_violation.as_ref().map(|v| v.at).unwrap_or(f64::NAN);
    outcome(pass, format!("{}; rational_quadratic H2 violated at I = {at:.4}", names.join(", ")))
}

fn criterion_10(runs: &[(ScenarioConfig, Trajectory)]) -> Outcome {
    let worst = runs.iter().flat_map(|(_, t)| t.records.iter().map(|r| r.spread)).fold(0.0, f64::max);
    outcome(worst < 1e-10, format!("max nodewise spread {worst:.2e}"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let low = desk_run("table1_low");
    let high = desk_run("table1_high");
    let runs = [low, high];
    eprintln!("preset runs finished in {:.1?}", start.elapsed());

    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(&runs),
        criterion_5(&runs[0]),
        criterion_6(&runs[1]),
        criterion_7(),
        criterion_8(&runs),
        criterion_9(),
        criterion_10(&runs),
    ];
    let mut failed = 0;
    for (n, r) in results.iter().enumerate() {
        println!("criterion {:>2}: {}  {}", n + 1, if r.pass { "PASS" } else { "FAIL" }, r.detail);
        failed += usize::from(!r.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
