use std::fmt::{self, Write as _};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{is_sweepable, ScenarioConfig};
use crate::diagnostics::{certify, Certificate};
use crate::equilibria::{
    basic_reproduction_number, disease_free, endemic_equilibrium, hprime_zero_identity, Equilibrium,
};
use crate::error::{Error, Result};
use crate::integrator::{Event, Record, Simulation, StopReason};
use crate::model::{check_hypotheses, HypothesisReport};
use crate::state::FieldState;

pub const SERIES_HEADER: &str =
    "t,S_mean,V_mean,I_mean,R_mean,S_sup,V_sup,I_sup,R_sup,N,L_dfe,H_endemic,dist_dfe,dist_endemic,clamps";
pub const SUMMARY_HEADER: &str = "value,R0,I_star,final_I_sup,certificate,error";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Result of `analyze`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub hypotheses: HypothesisReport,
    pub disease_free: Equilibrium,
    pub r0: f64,
    /// `None` when R₀ ≤ 1.
    pub endemic: Option<Equilibrium>,
    /// Numerical H′(0) and (γ + μ + c)(R₀ − 1).
    pub hprime: (f64, f64),
}

impl AnalysisReport {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if let Some(v) = &self.hypotheses.first_violation {
            w.push(format!("hypotheses do not hold on (0, {}]: {v}", self.hypotheses.i_max));
        }
        w
    }
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hyp = &self.hypotheses;
        writeln!(f, "R0 = {:.4}", self.r0)?;
        writeln!(f, "R0_exact = {}", num(self.r0))?;
        writeln!(f, "S0 = {}", num(self.disease_free.s))?;
        writeln!(f, "V0 = {}", num(self.disease_free.v))?;
        match &self.endemic {
            Some(e) => {
                writeln!(f, "endemic = exists")?;
                writeln!(f, "S_star = {}", num(e.s))?;
                writeln!(f, "V_star = {}", num(e.v))?;
                writeln!(f, "I_star = {}", num(e.i))?;
            }
            None => writeln!(f, "endemic = none (R0 <= 1)")?,
        }
        writeln!(f, "H1 = {}", if hyp.h1_holds { "holds" } else { "violated" })?;
        writeln!(f, "H2 = {}", if hyp.h2_holds { "holds" } else { "violated" })?;
        writeln!(f, "hypothesis_grid = {} samples on (0, {}]", hyp.n_samples, hyp.i_max)?;
        if let Some(v) = &hyp.first_violation {
            writeln!(f, "first_violation = {v}")?;
        }
        writeln!(f, "Hprime0_numeric = {}", num(self.hprime.0))?;
        writeln!(f, "Hprime0_identity = {}", num(self.hprime.1))?;
        for w in self.warnings() {
            writeln!(f, "# warning: {w}")?;
        }
        Ok(())
    }
}

pub fn analyze(cfg: &ScenarioConfig) -> Result<AnalysisReport> {
    let p = &cfg.params;
    let hypotheses = check_hypotheses(&cfg.f, &cfg.h, cfg.hyp_i_max, cfg.hyp_samples);
    let dfe = disease_free(p)?;
    let r0 = basic_reproduction_number(p, &cfg.f, &cfg.h)?;
    let endemic = match endemic_equilibrium(p, &cfg.f, &cfg.h) {
        Ok(e) => Some(e),
        Err(Error::NoEndemicEquilibrium { .. }) => None,
        Err(e) => return Err(e),
    };
    let hprime = hprime_zero_identity(p, &cfg.f, &cfg.h)?;
    Ok(AnalysisReport { hypotheses, disease_free: dfe, r0, endemic, hprime })
}

/// Runs `analyze` and writes `analysis.txt` under `out_dir`.
pub fn cmd_analyze(cfg: &ScenarioConfig, out_dir: &Path) -> Result<AnalysisReport> {
    let report = analyze(cfg)?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("analysis.txt"), report.to_string())?;
    Ok(report)
}

/// Outcome of `simulate`.
#[derive(Debug, Clone)]
pub struct SimulationSummary {
    pub r0: f64,
    pub i_star: Option<f64>,
    pub stop: StopReason,
    pub final_state: FieldState,
    pub final_i_sup: f64,
    pub certificate: Certificate,
    pub records: Vec<Record>,
    pub dt: f64,
    pub clamp_count: usize,
    pub out_dir: PathBuf,
}

fn series_row(r: &Record) -> String {
    let d = &r.diagnostics;
    let mut row = num(r.t);
    for x in r.mean.iter().chain(r.sup.iter()) {
        row.push(',');
        row.push_str(&num(*x));
    }
    let _ = write!(
        row,
        ",{},{},{},{},{},{}",
        num(d.total_mass),
        opt(d.l_dfe),
        opt(d.h_endemic),
        opt(d.dist_dfe),
        opt(d.dist_endemic),
        d.clamp_count
    );
    row
}

fn write_snapshot(dir: &Path, requested: f64, state: &FieldState, cfg: &ScenarioConfig) -> Result<()> {
    let grid = cfg.grid()?;
    let mut w = BufWriter::new(File::create(dir.join(format!("snapshot_{requested}.csv")))?);
    writeln!(w, "x,S,V,I,R")?;
    for (j, x) in grid.nodes().enumerate() {
        writeln!(w, "{},{},{},{},{}", num(x), num(state.s[j]), num(state.v[j]), num(state.i[j]), num(state.r[j]))?;
    }
    w.flush()?;
    Ok(())
}

fn write_manifest(dir: &Path, cfg: &ScenarioConfig, status: &str, extra: &[(&str, String)]) -> Result<()> {
    let mut text = cfg.to_config_text();
    let _ = writeln!(text, "# status = {status}");
    for (k, v) in extra {
        let _ = writeln!(text, "# {k} = {v}");
    }
    fs::write(dir.join("manifest.txt"), text)?;
    Ok(())
}

/// Integrates the scenario, writing `series.csv`, `snapshot_<t>.csv` and `manifest.txt`.
///
/// On a numerical failure the rows produced so far stay on disk and the manifest records
/// the error before it is returned.
pub fn cmd_simulate(cfg: &ScenarioConfig, out_dir: &Path) -> Result<SimulationSummary> {
    let run_cfg = cfg.run_config()?;
    let hyp = check_hypotheses(&cfg.f, &cfg.h, cfg.hyp_i_max, cfg.hyp_samples);
    let r0 = basic_reproduction_number(&cfg.params, &cfg.f, &cfg.h)?;
    fs::create_dir_all(out_dir)?;

    let mut sim = Simulation::new(run_cfg)?;
    let i_star = sim.endemic().map(|e| e.i);
    let dt = sim.dt();
    let mut series = BufWriter::new(File::create(out_dir.join("series.csv"))?);
    writeln!(series, "{SERIES_HEADER}")?;

    let mut records = Vec::new();
    let mut io_error: Option<std::io::Error> = None;
    let mut snap_error: Option<Error> = None;
    let outcome = sim.run_with(|ev| match ev {
        Event::Record(r) => {
            if io_error.is_none() {
                if let Err(e) = writeln!(series, "{}", series_row(r)) {
                    io_error = Some(e);
                }
            }
            records.push(r.clone());
        }
        Event::Snapshot { requested, state } => {
            if snap_error.is_none() {
                if let Err(e) = write_snapshot(out_dir, requested, state, cfg) {
                    snap_error = Some(e);
                }
            }
        }
    });
    series.flush()?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    if let Some(e) = snap_error {
        return Err(e);
    }

    let mut extra = vec![("R0", num(r0)), ("dt_effective", num(dt)), ("records", records.len().to_string())];
    let stop = match outcome {
        Ok(stop) => stop,
        Err(e) => {
            extra.push(("clamps", sim.clamp_count().to_string()));
            write_manifest(out_dir, cfg, &format!("failed: {e}"), &extra)?;
            return Err(e);
        }
    };
    let certificate = certify(&records, r0, hyp.all_hold(), dt);
    let final_state = sim.state().clone();
    let final_i_sup = final_state.i.max();
    extra.push(("stop", stop.to_string()));
    extra.push(("clamps", sim.clamp_count().to_string()));
    extra.push(("final_I_sup", num(final_i_sup)));
    extra.push(("certificate", certificate.label().to_string()));
    if let Certificate::Fail(why) | Certificate::NotApplicable(why) = &certificate {
        extra.push(("certificate_note", why.clone()));
    }
    write_manifest(out_dir, cfg, "ok", &extra)?;

    Ok(SimulationSummary {
        r0,
        i_star,
        stop,
        final_state,
        final_i_sup,
        certificate,
        records,
        dt,
        clamp_count: sim.clamp_count(),
        out_dir: out_dir.to_path_buf(),
    })
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub r0: Option<f64>,
    pub i_star: Option<f64>,
    pub final_i_sup: Option<f64>,
    pub certificate: Option<String>,
    pub error: Option<String>,
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl SweepRow {
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            csv_text(&self.value),
            opt(self.r0),
            opt(self.i_star),
            opt(self.final_i_sup),
            self.certificate.as_deref().unwrap_or(""),
            csv_text(self.error.as_deref().unwrap_or(""))
        )
    }
}

fn sweep_one(base: &ScenarioConfig, key: &str, value: &str, dir: &Path) -> SweepRow {
    let mut row =
        SweepRow { value: value.to_string(), r0: None, i_star: None, final_i_sup: None, certificate: None, error: None };
    let mut builder = base.to_builder();
    let cfg = match builder.set(key, value).and_then(|b| b.build_unchecked()) {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.r0 = basic_reproduction_number(&cfg.params, &cfg.f, &cfg.h).ok();
    row.i_star = endemic_equilibrium(&cfg.params, &cfg.f, &cfg.h).ok().map(|e| e.i);
    match cmd_simulate(&cfg, dir) {
        Ok(s) => {
            row.final_i_sup = Some(s.final_i_sup);
            row.certificate = Some(s.certificate.label().to_string());
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs one simulation per value of `key` in parallel, each under `run_<index>/`, and
/// writes `summary.csv`. A failing run is reported in its row and does not stop the sweep.
pub fn cmd_sweep(base: &ScenarioConfig, key: &str, values: &[String], out_dir: &Path) -> Result<Vec<SweepRow>> {
    if !is_sweepable(key) {
        return Err(Error::config(format!("`{key}` is not a sweepable scalar key")));
    }
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    fs::create_dir_all(out_dir)?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .enumerate()
        .map(|(idx, v)| sweep_one(base, key, v, &out_dir.join(format!("run_{idx:03}"))))
        .collect();
    let mut text = format!("{SUMMARY_HEADER}\n");
    for r in &rows {
        text.push_str(&r.to_csv());
        text.push('\n');
    }
    fs::write(out_dir.join("summary.csv"), text)?;
    Ok(rows)
}
