//! Flat `key = value` scenario files.
//!
//! One entry per line, `#` starts a comment. Entries are resolved in layers: built-in
//! defaults, then the preset named by `preset`, then the file, then command-line
//! overrides. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::integrator::{HistoryInit, OutputSchedule, RunConfig, DEFAULT_DT, DEFAULT_STEADY_TOL};
use crate::model::{DelayKernel, IncidenceFunction, Parameters, DEFAULT_I_MAX, DEFAULT_SAMPLES};
use crate::spatial::Grid1D;
use crate::state::FieldState;

/// Every accepted key with its default, `None` meaning required (or family-specific).
const KEYS: &[(&str, Option<&str>)] = &[
    ("preset", None),
    ("Lambda", None),
    ("mu", None),
    ("alpha", None),
    ("gamma1", None),
    ("gamma", None),
    ("c", None),
    ("d_S", None),
    ("d_V", None),
    ("d_I", None),
    ("d_R", None),
    ("k", Some("0")),
    ("f_family", Some("bilinear")),
    ("f_beta", None),
    ("f_m", None),
    ("f_a1", None),
    ("f_omega1", None),
    ("f_omega2", None),
    ("h_family", Some("bilinear")),
    ("h_beta", None),
    ("h_m", None),
    ("h_a1", None),
    ("h_omega1", None),
    ("h_omega2", None),
    ("kernel", Some("dirac")),
    ("kernel_tau0", Some("0")),
    ("kernel_nodes", None),
    ("kernel_densities", None),
    ("n_nodes", Some("32")),
    ("n_cells", Some("100")),
    ("dt", Some("2.5e-4")),
    ("t_end", Some("1500")),
    ("steady_tol", Some("1e-8")),
    ("record_stride", Some("1")),
    ("snapshot_times", Some("")),
    ("S_init", None),
    ("V_init", None),
    ("I_init", None),
    ("R_init", None),
    ("perturb_amp", Some("0")),
    ("perturb_noise", Some("0")),
    ("seed", Some("0")),
    ("hyp_i_max", Some("1000")),
    ("hyp_samples", Some("10000")),
    ("out_dir", Some("out")),
];

const REQUIRED: &[&str] = &[
    "Lambda", "mu", "alpha", "gamma1", "gamma", "c", "d_S", "d_V", "d_I", "d_R", "f_beta", "h_beta", "S_init",
    "V_init", "I_init", "R_init",
];

/// Alternative spellings accepted on input.
const ALIASES: &[(&str, &str)] = &[("beta1", "f_beta"), ("beta2", "h_beta"), ("lambda", "Lambda")];

pub const PRESETS: &[&str] = &["table1_low", "table1_high"];

fn preset_entries(name: &str) -> Option<Vec<(&'static str, &'static str)>> {
    let (beta1, beta2) = match name {
        "table1_low" => ("0.0008", "0.00064"),
        "table1_high" => ("0.002", "0.0016"),
        _ => return None,
    };
    Some(vec![
        ("Lambda", "0.392465"),
        ("mu", "0.001"),
        ("alpha", "0.005"),
        ("gamma1", "0.005"),
        ("gamma", "0.009"),
        ("c", "0.09"),
        ("d_S", "0.1"),
        ("d_V", "0.1"),
        ("d_I", "0.1"),
        ("d_R", "0.1"),
        ("f_family", "bilinear"),
        ("f_beta", beta1),
        ("h_family", "bilinear"),
        ("h_beta", beta2),
        ("S_init", "30"),
        ("V_init", "10"),
        ("I_init", "5"),
        ("R_init", "0"),
        ("n_cells", "100"),
        ("t_end", "1500"),
    ])
}

fn canonical_key(key: &str) -> Option<&'static str> {
    if let Some((_, canon)) = ALIASES.iter().find(|(a, _)| *a == key) {
        return Some(canon);
    }
    KEYS.iter().map(|(k, _)| *k).find(|k| *k == key)
}

/// Scalar keys a sweep may vary.
pub fn is_sweepable(key: &str) -> bool {
    matches!(
        canonical_key(key),
        Some(
            "Lambda" | "mu" | "alpha" | "gamma1" | "gamma" | "c" | "d_S" | "d_V" | "d_I" | "d_R" | "k" | "f_beta"
                | "f_m" | "f_a1" | "f_omega1" | "f_omega2" | "h_beta" | "h_m" | "h_a1" | "h_omega1" | "h_omega2"
                | "kernel_tau0" | "perturb_amp" | "perturb_noise"
        )
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Dirac { tau0: f64 },
    Uniform,
    Table { nodes: Vec<f64>, densities: Vec<f64> },
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub preset: Option<String>,
    pub params: Parameters,
    pub f: IncidenceFunction,
    pub h: IncidenceFunction,
    pub kernel: KernelSpec,
    pub quadrature_nodes: usize,
    pub n_cells: usize,
    pub dt: f64,
    pub t_end: f64,
    pub steady_tol: f64,
    pub record_stride: f64,
    pub snapshot_times: Vec<f64>,
    /// Homogeneous initial values (S, V, I, R).
    pub init: [f64; 4],
    /// Amplitude of the cos(πx) perturbation added to I.
    pub perturb_amp: f64,
    /// Amplitude of seeded uniform noise in [0, perturb_noise) added to I.
    pub perturb_noise: f64,
    pub seed: u64,
    pub hyp_i_max: f64,
    pub hyp_samples: usize,
    pub out_dir: PathBuf,
    entries: BTreeMap<String, String>,
}

/// Layered key/value entries prior to typing.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    entries: BTreeMap<String, String>,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn preset(name: &str) -> Result<Self> {
        let mut b = Self::new();
        b.set("preset", name)?;
        Ok(b)
    }

    /// Parses `key = value` lines; later layers may override earlier ones but a key may
    /// appear only once within one text.
    pub fn merge_text(&mut self, text: &str) -> Result<&mut Self> {
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config { line: Some(line_no), msg: format!("expected `key = value`, got `{line}`") });
            };
            let (key, value) = (key.trim(), value.trim());
            let canon = canonical_key(key)
                .ok_or_else(|| Error::Config { line: Some(line_no), msg: format!("unknown key `{key}`") })?;
            if let Some(prev) = seen.insert(canon, line_no) {
                return Err(Error::Config {
                    line: Some(line_no),
                    msg: format!("duplicate key `{canon}` (first set at line {prev})"),
                });
            }
            self.entries.insert(canon.to_string(), value.to_string());
        }
        Ok(self)
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<&mut Self> {
        let text = std::fs::read_to_string(path)?;
        self.merge_text(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<&mut Self> {
        let canon = canonical_key(key.trim()).ok_or_else(|| Error::config(format!("unknown key `{key}`")))?;
        self.entries.insert(canon.to_string(), value.trim().to_string());
        Ok(self)
    }

    /// Applies an override written as `key=value`.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<&mut Self> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override `{assignment}` is not of the form key=value")))?;
        self.set(k, v)
    }

    fn resolved(&self) -> Result<BTreeMap<String, String>> {
        let mut map: BTreeMap<String, String> = KEYS
            .iter()
            .filter_map(|(k, d)| d.map(|d| (k.to_string(), d.to_string())))
            .collect();
        if let Some(name) = self.entries.get("preset") {
            let entries = preset_entries(name).ok_or_else(|| {
                Error::config(format!("unknown preset `{name}` (known: {})", PRESETS.join(", ")))
            })?;
            for (k, v) in entries {
                map.insert(k.to_string(), v.to_string());
            }
        }
        for (k, v) in &self.entries {
            map.insert(k.clone(), v.clone());
        }
        Ok(map)
    }

    /// Types the entries without checking numerical constraints.
    pub fn build_unchecked(&self) -> Result<ScenarioConfig> {
        ScenarioConfig::from_entries(self.resolved()?)
    }

    /// Types the entries and validates the resulting run (step bound, kernel, grid).
    pub fn build(&self) -> Result<ScenarioConfig> {
        let cfg = self.build_unchecked()?;
        cfg.run_config()?;
        Ok(cfg)
    }
}

/// Where a scenario comes from.
#[derive(Debug, Clone)]
pub enum ConfigSource {
    File(PathBuf),
    Preset(String),
}

pub fn parse_config(source: &ConfigSource) -> Result<ScenarioConfig> {
    match source {
        ConfigSource::File(path) => ConfigBuilder::new().merge_file(path)?.build(),
        ConfigSource::Preset(name) => ConfigBuilder::preset(name)?.build(),
    }
}

struct Reader<'a> {
    map: &'a BTreeMap<String, String>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let raw = self.raw(key).ok_or_else(|| Error::config(format!("missing key `{key}`")))?;
        raw.parse::<f64>()
            .map_err(|_| Error::config(format!("`{key}` = `{raw}` is not a number")))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let raw = self.raw(key).ok_or_else(|| Error::config(format!("missing key `{key}`")))?;
        raw.parse::<usize>()
            .map_err(|_| Error::config(format!("`{key}` = `{raw}` is not a nonnegative integer")))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.raw(key).unwrap_or("");
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| Error::config(format!("`{key}` entry `{s}` is not a number"))))
            .collect()
    }

    fn incidence(&self, prefix: &str) -> Result<IncidenceFunction> {
        let family = self.raw(&format!("{prefix}_family")).unwrap_or("bilinear");
        let beta = self.f64(&format!("{prefix}_beta"))?;
        let p = |name: &str| self.f64(&format!("{prefix}_{name}"));
        match family {
            "bilinear" => IncidenceFunction::bilinear(beta),
            "exponential_damped" => IncidenceFunction::exponential_damped(beta, p("m")?),
            "saturated" => IncidenceFunction::saturated(beta, p("a1")?),
            "rational_quadratic" => IncidenceFunction::rational_quadratic(beta, p("omega1")?, p("omega2")?),
            other => Err(Error::config(format!(
                "unknown incidence family `{other}` for {prefix} (bilinear, exponential_damped, saturated, rational_quadratic)"
            ))),
        }
    }
}

impl ScenarioConfig {
    fn from_entries(map: BTreeMap<String, String>) -> Result<Self> {
        let missing: Vec<&str> = REQUIRED.iter().copied().filter(|k| !map.contains_key(*k)).collect();
        if !missing.is_empty() {
            return Err(Error::config(format!(
                "missing required keys: {} (or set `preset = {}`)",
                missing.join(", "),
                PRESETS.join(" | ")
            )));
        }
        let r = Reader { map: &map };
        let params = Parameters {
            lambda: r.f64("Lambda")?,
            mu: r.f64("mu")?,
            alpha: r.f64("alpha")?,
            gamma1: r.f64("gamma1")?,
            gamma: r.f64("gamma")?,
            c: r.f64("c")?,
            d_s: r.f64("d_S")?,
            d_v: r.f64("d_V")?,
            d_i: r.f64("d_I")?,
            d_r: r.f64("d_R")?,
            k: r.f64("k")?,
        };
        params.validate().map_err(|e| Error::config(e.to_string()))?;
        let kernel = match r.raw("kernel").unwrap_or("dirac") {
            "dirac" => KernelSpec::Dirac { tau0: r.f64("kernel_tau0")? },
            "uniform" => KernelSpec::Uniform,
            "table" => KernelSpec::Table { nodes: r.list("kernel_nodes")?, densities: r.list("kernel_densities")? },
            other => return Err(Error::config(format!("unknown kernel `{other}` (dirac, uniform, table)"))),
        };
        let seed_raw = r.raw("seed").unwrap_or("0");
        let seed = seed_raw
            .parse::<u64>()
            .map_err(|_| Error::config(format!("`seed` = `{seed_raw}` is not an unsigned integer")))?;
        Ok(ScenarioConfig {
            preset: r.raw("preset").map(str::to_string),
            params,
            f: r.incidence("f")?,
            h: r.incidence("h")?,
            kernel,
            quadrature_nodes: r.usize("n_nodes")?,
            n_cells: r.usize("n_cells")?,
            dt: r.f64("dt")?,
            t_end: r.f64("t_end")?,
            steady_tol: r.f64("steady_tol")?,
            record_stride: r.f64("record_stride")?,
            snapshot_times: r.list("snapshot_times")?,
            init: [r.f64("S_init")?, r.f64("V_init")?, r.f64("I_init")?, r.f64("R_init")?],
            perturb_amp: r.f64("perturb_amp")?,
            perturb_noise: r.f64("perturb_noise")?,
            seed,
            hyp_i_max: r.f64("hyp_i_max")?,
            hyp_samples: r.usize("hyp_samples")?,
            out_dir: PathBuf::from(r.raw("out_dir").unwrap_or("out")),
            entries: map,
        })
    }

    pub fn delay_kernel(&self) -> Result<DelayKernel> {
        match &self.kernel {
            KernelSpec::Dirac { tau0 } => DelayKernel::dirac(*tau0, self.params.k),
            KernelSpec::Uniform => DelayKernel::uniform(self.params.k),
            KernelSpec::Table { nodes, densities } => DelayKernel::table(nodes.clone(), densities.clone()),
        }
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.n_cells)
    }

    /// Initial state: homogeneous values plus the optional perturbation of I.
    pub fn initial_state(&self) -> Result<FieldState> {
        let grid = self.grid()?;
        let [s, v, i, r] = self.init;
        let mut state = FieldState::homogeneous(&grid, 0.0, s, v, i, r);
        if self.perturb_amp != 0.0 || self.perturb_noise != 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            for (x, value) in grid.nodes().zip(state.i.iter_mut()) {
                let noise = if self.perturb_noise > 0.0 { self.perturb_noise * rng.gen::<f64>() } else { 0.0 };
                *value = (*value + self.perturb_amp * (std::f64::consts::PI * x).cos() + noise).max(0.0);
            }
        }
        Ok(state)
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        if !(self.hyp_i_max > 0.0) || self.hyp_samples < 2 {
            return Err(Error::config("hypothesis grid needs hyp_i_max > 0 and hyp_samples >= 2"));
        }
        let cfg = RunConfig {
            params: self.params,
            f: self.f,
            h: self.h,
            kernel: self.delay_kernel()?,
            quadrature_nodes: self.quadrature_nodes,
            grid: self.grid()?,
            dt: self.dt,
            t_end: self.t_end,
            steady_tol: self.steady_tol,
            history: HistoryInit::Constant(self.initial_state()?),
            schedule: OutputSchedule { record_stride: self.record_stride, snapshot_times: self.snapshot_times.clone() },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resolved entries, one `key = value` line each, in key order.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Builder seeded with this scenario's resolved entries.
    pub fn to_builder(&self) -> ConfigBuilder {
        ConfigBuilder { entries: self.entries.clone() }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ConfigBuilder::preset("table1_high")
            .and_then(|b| b.build_unchecked())
            .expect("built-in preset is valid")
    }
}

// Keep the documented defaults and the integrator constants in step.
const _: () = {
    assert!(DEFAULT_DT == 2.5e-4);
    assert!(DEFAULT_STEADY_TOL == 1e-8);
    assert!(DEFAULT_I_MAX == 1e3);
    assert!(DEFAULT_SAMPLES == 10_000);
};
