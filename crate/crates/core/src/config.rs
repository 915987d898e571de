//! Experiment configuration: sectioned `key = value` text.
//!
//! ```text
//! # comment
//! [tree]
//! q = 2
//! n = 40
//! [time]
//! t = log:10:1000:41
//! ```
//!
//! Every key is optional; unknown sections and keys are rejected with the
//! offending line number.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nls::{EvolutionConfig, NonlinearityForm, NonlinearitySpec, Scheme};

/// Version of the CSV/JSON output layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// A list of times, either explicit or generated.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TimeGrid {
    List { values: Vec<f64> },
    Log { start: f64, end: f64, count: usize },
    Lin { start: f64, end: f64, count: usize },
}

impl TimeGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            TimeGrid::List { values } => values.clone(),
            TimeGrid::Log { start, end, count } => crate::analysis::log_space(*start, *end, *count),
            TimeGrid::Lin { start, end, count } => {
                if *count == 1 {
                    return vec![*start];
                }
                (0..*count)
                    .map(|i| start + (end - start) * i as f64 / (*count - 1) as f64)
                    .collect()
            }
        }
    }

    fn parse(text: &str) -> std::result::Result<Self, String> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(TimeGrid::List { values: Vec::new() });
        }
        for (prefix, log) in [("log:", true), ("lin:", false)] {
            if let Some(rest) = text.strip_prefix(prefix) {
                let parts: Vec<&str> = rest.split(':').collect();
                if parts.len() != 3 {
                    return Err(format!("expected {prefix}START:END:COUNT, got `{text}`"));
                }
                let start = parse_f64(parts[0])?;
                let end = parse_f64(parts[1])?;
                let count = parse_usize(parts[2])?;
                if count == 0 {
                    return Err("time grid count must be positive".into());
                }
                if log && !(start > 0.0 && end > 0.0) {
                    return Err("logarithmic time grid needs positive endpoints".into());
                }
                return Ok(if log {
                    TimeGrid::Log { start, end, count }
                } else {
                    TimeGrid::Lin { start, end, count }
                });
            }
        }
        Ok(TimeGrid::List {
            values: parse_list(text)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub q: u32,
    /// Radius of tabulated kernels and of random data.
    pub n: usize,
    /// Explicit times; each command has its own default.
    pub times: Option<TimeGrid>,
    pub tol: f64,
    pub tail_tol: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub form: NonlinearityForm,
    pub dt: f64,
    pub horizon: Option<f64>,
    pub scheme: Scheme,
    pub stride: Option<usize>,
    pub extra_radius: usize,
    /// Initial data `amplitude · 1_{S(o, data_sphere)}`.
    pub amplitude: f64,
    pub data_sphere: usize,
    pub exponents: Vec<f64>,
    /// Strichartz pairs `(p, q)`.
    pub pairs: Vec<(f64, f64)>,
    /// Window edges; windows are consecutive pairs.
    pub windows: Vec<f64>,
    pub samples_per_unit: f64,
    pub ladder: Vec<f64>,
    pub state_dumps: bool,
    pub seed: u64,
    /// Multiplies the inversion constant in the self-test (fault injection).
    pub plancherel_scale: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            q: 2,
            n: 40,
            times: None,
            tol: crate::kernel::DEFAULT_TOL,
            tail_tol: crate::propagator::DEFAULT_TAIL_TOL,
            gamma: 3.0,
            lambda: 1.0,
            form: NonlinearityForm::Power,
            dt: 1e-3,
            horizon: None,
            scheme: Scheme::Strang,
            stride: None,
            extra_radius: crate::nls::RADIUS_SAFETY,
            amplitude: 0.1,
            data_sphere: 0,
            exponents: vec![4.0, f64::INFINITY],
            pairs: vec![(f64::INFINITY, 2.0), (4.0, 4.0)],
            windows: vec![10.0, 20.0, 40.0, 80.0, 160.0],
            samples_per_unit: 10.0,
            ladder: vec![10.0, 20.0, 40.0, 50.0, 80.0, 100.0],
            state_dumps: false,
            seed: 0,
            plancherel_scale: 1.0,
        }
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    match s {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|v| !v.is_nan())
            .ok_or_else(|| format!("`{s}` is not a number")),
    }
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| format!("`{}` is not a nonnegative integer", s.trim()))
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_f64).collect()
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

/// `p:q` pairs separated by commas, e.g. `inf:2, 4:4`.
fn parse_pairs(s: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| format!("pair `{}` must look like P:Q", p.trim()))?;
            Ok((parse_f64(a)?, parse_f64(b)?))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::Config(format!("line {line_no}: unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line_no}: expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            if section.is_empty() {
                return Err(Error::Config(format!("line {line_no}: key `{key}` appears before any section")));
            }
            cfg.set(&section, key, value.trim())
                .map_err(|e| Error::Config(format!("line {line_no}: [{section}] {key}: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> std::result::Result<(), String> {
        match (section, key) {
            ("tree", "q") => {
                self.q = v.parse().map_err(|_| format!("`{v}` is not an integer"))?;
            }
            ("tree", "n") => self.n = parse_usize(v)?,
            ("time", "t") => self.times = Some(TimeGrid::parse(v)?),
            ("time", "dt") => self.dt = parse_f64(v)?,
            ("time", "horizon") => self.horizon = Some(parse_f64(v)?),
            ("tolerance", "kernel") => self.tol = parse_f64(v)?,
            ("tolerance", "tail") => self.tail_tol = parse_f64(v)?,
            ("nonlinearity", "gamma") => self.gamma = parse_f64(v)?,
            ("nonlinearity", "lambda") => self.lambda = parse_f64(v)?,
            ("nonlinearity", "form") => {
                self.form = match v {
                    "power" => NonlinearityForm::Power,
                    "non-gauge" => NonlinearityForm::NonGauge,
                    _ => return Err(format!("`{v}` is not one of power, non-gauge")),
                }
            }
            ("evolution", "scheme") => {
                self.scheme = match v {
                    "strang" => Scheme::Strang,
                    "picard" => Scheme::Picard,
                    _ => return Err(format!("`{v}` is not one of strang, picard")),
                }
            }
            ("evolution", "stride") => self.stride = Some(parse_usize(v)?),
            ("evolution", "extra_radius") => self.extra_radius = parse_usize(v)?,
            ("data", "amplitude") => self.amplitude = parse_f64(v)?,
            ("data", "sphere") => self.data_sphere = parse_usize(v)?,
            ("dispersive", "exponents") => self.exponents = parse_list(v)?,
            ("strichartz", "pairs") => self.pairs = parse_pairs(v)?,
            ("strichartz", "windows") => self.windows = parse_list(v)?,
            ("strichartz", "samples_per_unit") => self.samples_per_unit = parse_f64(v)?,
            ("scatter", "ladder") => self.ladder = parse_list(v)?,
            ("output", "state_dumps") => self.state_dumps = parse_bool(v)?,
            ("run", "seed") => {
                self.seed = v.parse().map_err(|_| format!("`{v}` is not a nonnegative integer"))?;
            }
            ("fault", "plancherel_scale") => self.plancherel_scale = parse_f64(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Range checks that do not depend on the command.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.q < 2 {
            return bad(format!("[tree] q must be at least 2, got {}", self.q));
        }
        if self.n < 1 {
            return bad("[tree] n must be at least 1".into());
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("[tolerance] kernel must lie in (0, 1), got {}", self.tol));
        }
        if !(self.tail_tol > 0.0) {
            return bad(format!("[tolerance] tail must be positive, got {}", self.tail_tol));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return bad(format!("[nonlinearity] gamma must satisfy 1 < gamma < inf, got {}", self.gamma));
        }
        if !self.lambda.is_finite() {
            return bad("[nonlinearity] lambda must be finite".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("[time] dt must be positive, got {}", self.dt));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("[time] horizon must be positive, got {h}"));
            }
        }
        if self.stride == Some(0) {
            return bad("[evolution] stride must be at least 1".into());
        }
        if let Some(TimeGrid::List { values }) = &self.times {
            if values.iter().any(|t| !t.is_finite()) {
                return bad("[time] t must be finite".into());
            }
        }
        if !self.amplitude.is_finite() {
            return bad("[data] amplitude must be finite".into());
        }
        if !(self.samples_per_unit > 0.0) {
            return bad("[strichartz] samples_per_unit must be positive".into());
        }
        if self.windows.windows(2).any(|w| w[1] <= w[0]) || self.windows.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return bad("[strichartz] windows must be finite, nonnegative and increasing".into());
        }
        if self.ladder.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return bad("[scatter] ladder times must be positive".into());
        }
        if !(self.plancherel_scale.is_finite() && self.plancherel_scale > 0.0) {
            return bad("[fault] plancherel_scale must be positive".into());
        }
        Ok(())
    }

    pub fn nonlinearity(&self) -> Result<NonlinearitySpec> {
        NonlinearitySpec::new(self.gamma, self.lambda, self.form).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn evolution(&self, default_horizon: f64, default_stride: usize) -> EvolutionConfig {
        EvolutionConfig {
            dt: self.dt,
            horizon: self.horizon.unwrap_or(default_horizon),
            scheme: self.scheme,
            stride: self.stride.unwrap_or(default_stride),
            tail_tol: self.tail_tol,
            extra_radius: self.extra_radius,
        }
    }

    /// SHA-256 of the canonical JSON form of the configuration (after
    /// command-line overrides).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

const SECTIONS: [&str; 12] = [
    "tree",
    "time",
    "tolerance",
    "nonlinearity",
    "evolution",
    "data",
    "dispersive",
    "strichartz",
    "scatter",
    "output",
    "run",
    "fault",
];
