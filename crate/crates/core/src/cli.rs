//! Command-line front end.
//!
//! Every command reads an optional configuration file, applies the
//! `--seed`/`--tol` overrides and writes CSV or JSON files into `--out`.
//! Each file starts with the tool version and the configuration hash.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::analysis::{scattering_probe, strichartz_norm, AdmissiblePair};
use crate::config::{ExperimentConfig, TimeGrid, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::kernel::{kernel_pointwise_report, schrodinger_kernel};
use crate::nls::{nls_evolve, NonlinearitySpec, Trajectory};
use crate::propagator::{dispersive_decay_scan, linear_trajectory};
use crate::selftest::{run_selftest, SelftestOptions};
use crate::tree::{RadialFunction, TreeParams};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tree-dispersion", version, about = "Dispersive Schrödinger dynamics on homogeneous trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file (sectioned key = value).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Kernel truncation tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the invariant suite.
    Selftest,
    /// Tabulate the Schrödinger kernel.
    Kernel,
    /// Dispersive decay scan and slope fit.
    Dispersive,
    /// Evolve the nonlinear equation.
    Evolve,
    /// Scattering probe along a time ladder.
    Scatter,
    /// Windowed Strichartz norms.
    Strichartz,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Selftest => "selftest",
            Command::Kernel => "kernel",
            Command::Dispersive => "dispersive",
            Command::Evolve => "evolve",
            Command::Scatter => "scatter",
            Command::Strichartz => "strichartz",
        }
    }
}

/// Exit status for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Fit(_) | Error::Singular { .. } => EXIT_CONFIG,
        Error::Overflow { .. }
        | Error::Budget { .. }
        | Error::Underflow { .. }
        | Error::Resolution { .. }
        | Error::Truncation { .. }
        | Error::EmptyTrusted { .. }
        | Error::BlowUp { .. }
        | Error::Io(_) => EXIT_RESOURCE,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Set when an invariant checked by the command failed.
    pub invariant_failure: Option<String>,
}

/// Loads the configuration and applies command-line overrides.
pub fn load_config(path: Option<&Path>, seed: Option<u64>, tol: Option<f64>) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = tol {
        cfg.tol = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = load_config(cli.config.as_deref(), cli.seed, cli.tol)
        .and_then(|cfg| run_command(cli.command, &cfg, &cli.out));
    match result {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            match outcome.invariant_failure {
                Some(msg) => {
                    eprintln!("invariant failure: {msg}");
                    EXIT_INVARIANT
                }
                None => EXIT_OK,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run_command(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    fs::create_dir_all(out)?;
    match command {
        Command::Selftest => cmd_selftest(cfg, out),
        Command::Kernel => cmd_kernel(cfg, out),
        Command::Dispersive => cmd_dispersive(cfg, out),
        Command::Evolve => cmd_evolve(cfg, out),
        Command::Scatter => cmd_scatter(cfg, out),
        Command::Strichartz => cmd_strichartz(cfg, out),
    }
}

fn header(cfg: &ExperimentConfig, command: &str) -> String {
    format!(
        "# tree-dispersion {VERSION} schema={SCHEMA_VERSION} command={command} config={}\n",
        cfg.hash()
    )
}

fn meta(cfg: &ExperimentConfig, command: &str) -> Value {
    json!({
        "tool": "tree-dispersion",
        "version": VERSION,
        "schema": SCHEMA_VERSION,
        "command": command,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
    })
}

fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// JSON number, or a string for non-finite values.
fn jnum(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(num(v))
    }
}

fn write_file(path: PathBuf, content: &str) -> Result<PathBuf> {
    fs::write(&path, content.as_bytes())?;
    Ok(path)
}

fn write_json(path: PathBuf, value: &Value) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

fn times_or(cfg: &ExperimentConfig, default: TimeGrid) -> Vec<f64> {
    cfg.times.clone().unwrap_or(default).values()
}

fn initial_data(cfg: &ExperimentConfig) -> Result<RadialFunction> {
    let params = TreeParams::new(cfg.q, cfg.data_sphere.max(1)).map_err(|e| Error::Config(e.to_string()))?;
    Ok(RadialFunction::delta(params, cfg.data_sphere).scale(cfg.amplitude.into()))
}

fn cmd_selftest(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let report = run_selftest(&SelftestOptions {
        seed: cfg.seed,
        plancherel_scale: cfg.plancherel_scale,
    });
    let invariants: Vec<Value> = report
        .invariants
        .iter()
        .map(|i| json!({"name": i.name, "measured": jnum(i.measured), "tolerance": i.tolerance, "passed": i.passed}))
        .collect();
    let mut doc = meta(cfg, "selftest");
    doc["passed"] = json!(report.passed);
    doc["invariants"] = json!(invariants);
    let file = write_json(out.join("selftest.json"), &doc)?;
    let failed = report.failed();
    Ok(Outcome {
        files: vec![file],
        invariant_failure: (!failed.is_empty()).then(|| failed.join(", ")),
    })
}

fn cmd_kernel(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let params = TreeParams::new(cfg.q, cfg.n)?;
    let times = times_or(cfg, TimeGrid::List { values: vec![0.0, 5.0] });
    if times.is_empty() {
        return Err(Error::Config("[time] t is empty".into()));
    }
    let mut csv = header(cfg, "kernel");
    csv.push_str("t,n,re,im,abs,bound_ratio\n");
    for t in times {
        let s = schrodinger_kernel(params, t, cfg.tol)?;
        let report = kernel_pointwise_report(&s);
        for (n, (v, r)) in s.values.values.iter().zip(&report.ratios).enumerate() {
            let _ = writeln!(csv, "{},{n},{},{},{},{}", num(t), num(v.re), num(v.im), num(v.norm()), num(*r));
        }
    }
    Ok(Outcome {
        files: vec![write_file(out.join("kernel.csv"), &csv)?],
        invariant_failure: None,
    })
}

fn cmd_dispersive(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let times = times_or(
        cfg,
        TimeGrid::Log {
            start: 10.0,
            end: 1000.0,
            count: 41,
        },
    );
    if times.is_empty() {
        return Err(Error::Config("[time] t is empty".into()));
    }
    if cfg.exponents.is_empty() {
        return Err(Error::Config("[dispersive] exponents is empty".into()));
    }
    let mut csv = header(cfg, "dispersive");
    csv.push_str("t,q,norm\n");
    let mut fits = Vec::new();
    for &q in &cfg.exponents {
        let scan = dispersive_decay_scan(q, &times, cfg.q, cfg.tol)?;
        for r in &scan.rows {
            let _ = writeln!(csv, "{},{},{}", num(r.t), num(q), num(r.norm));
        }
        let f = scan.fit;
        fits.push(json!({
            "q": num(q),
            "slope": f.slope,
            "intercept": f.intercept,
            "ci": [f.ci.0, f.ci.1],
            "stderr": f.stderr,
            "residual": f.residual,
            "points": f.points,
            "slope_in_expected_range": (-1.6..=-1.4).contains(&f.slope),
        }));
    }
    let mut doc = meta(cfg, "dispersive");
    doc["branching"] = json!(cfg.q);
    doc["fits"] = json!(fits);
    let files = vec![
        write_file(out.join("dispersive.csv"), &csv)?,
        write_json(out.join("dispersive.json"), &doc)?,
    ];
    Ok(Outcome {
        files,
        invariant_failure: None,
    })
}

fn state_csv(cfg: &ExperimentConfig, command: &str, u: &RadialFunction) -> String {
    let mut csv = header(cfg, command);
    csv.push_str("n,re,im\n");
    for (n, v) in u.values.iter().enumerate() {
        let _ = writeln!(csv, "{n},{},{}", num(v.re), num(v.im));
    }
    csv
}

fn cmd_evolve(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let spec = cfg.nonlinearity()?;
    let evo = cfg.evolution(10.0, 100);
    let traj = nls_evolve(&initial_data(cfg)?, &spec, &evo)?;
    let mut csv = header(cfg, "evolve");
    csv.push_str("t,mass,energy,l4norm\n");
    for i in 0..traj.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            num(traj.times[i]),
            num(traj.mass[i]),
            num(traj.energy[i]),
            num(traj.l4[i])
        );
    }
    let mut files = vec![write_file(out.join("evolve.csv"), &csv)?];
    if cfg.state_dumps {
        let dir = out.join("states");
        fs::create_dir_all(&dir)?;
        for (i, s) in traj.states.iter().enumerate() {
            files.push(write_file(dir.join(format!("state_{i:05}.csv")), &state_csv(cfg, "evolve", s))?);
        }
    }
    Ok(Outcome {
        files,
        invariant_failure: None,
    })
}

fn cmd_scatter(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    if cfg.ladder.is_empty() {
        return Err(Error::Config("[scatter] ladder is empty".into()));
    }
    let spec = cfg.nonlinearity()?;
    let t_top = cfg.ladder.iter().copied().fold(0.0, f64::max);
    let evo = cfg.evolution(t_top, 100);
    if evo.horizon + 1e-9 < t_top {
        return Err(Error::Config(format!(
            "[time] horizon {} is shorter than the largest ladder time {t_top}",
            evo.horizon
        )));
    }
    let record = evo.dt * evo.stride as f64;
    if cfg.ladder.iter().any(|t| ((t / record).round() * record - t).abs() > 1e-9 * t.max(1.0)) {
        return Err(Error::Config(format!(
            "[scatter] ladder times must be multiples of the record interval dt*stride = {record}"
        )));
    }
    let traj = nls_evolve(&initial_data(cfg)?, &spec, &evo)?;
    let report = scattering_probe(&traj, &cfg.ladder)?;
    let u_plus = write_file(out.join("u_plus.csv"), &state_csv(cfg, "scatter", &report.u_plus))?;
    let inc = |d: &crate::analysis::CauchyIncrement| {
        json!({"t1": d.t1, "t2": d.t2, "distance": d.distance, "strichartz_bound": d.strichartz_bound})
    };
    let mut doc = meta(cfg, "scatter");
    doc["ladder"] = json!(report.ladder);
    doc["doubling_increments"] = json!(report.doubling.iter().map(inc).collect::<Vec<_>>());
    doc["cauchy"] = json!(report.cauchy.iter().map(inc).collect::<Vec<_>>());
    doc["residuals"] = json!(report.residuals.iter().map(|(t, r)| json!({"t": t, "residual": r})).collect::<Vec<_>>());
    doc["k_ratio"] = json!(report.k_ratio);
    doc["gauge_invariant"] = json!(spec.gauge_invariant());
    doc["u_plus_path"] = json!(u_plus.file_name().and_then(|s| s.to_str()));
    let json_file = write_json(out.join("scatter.json"), &doc)?;
    Ok(Outcome {
        files: vec![json_file, u_plus],
        invariant_failure: None,
    })
}

fn strichartz_trajectory(cfg: &ExperimentConfig, spec: &NonlinearitySpec, horizon: f64) -> Result<Trajectory> {
    let f = initial_data(cfg)?;
    let samples = (horizon * cfg.samples_per_unit).ceil() as usize;
    if spec.lambda == 0.0 {
        let times: Vec<f64> = (0..=samples).map(|i| horizon * i as f64 / samples as f64).collect();
        return linear_trajectory(&f, &times);
    }
    let mut evo = cfg.evolution(horizon, 1);
    evo.horizon = horizon;
    let per_record = 1.0 / cfg.samples_per_unit;
    evo.stride = cfg.stride.unwrap_or(((per_record / evo.dt).floor() as usize).max(1));
    nls_evolve(&f, spec, &evo)
}

fn cmd_strichartz(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    if cfg.windows.len() < 2 {
        return Err(Error::Config("[strichartz] windows needs at least two edges".into()));
    }
    let pairs = cfg
        .pairs
        .iter()
        .map(|&(p, q)| AdmissiblePair::from_exponents(p, q).map_err(|e| Error::Config(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let spec = cfg.nonlinearity()?;
    let horizon = *cfg.windows.last().expect("two edges");
    let traj = strichartz_trajectory(cfg, &spec, horizon)?;
    let windows: Vec<(f64, f64)> = cfg.windows.windows(2).map(|w| (w[0], w[1])).collect();
    let mut csv = header(cfg, "strichartz");
    csv.push_str("pair,start,end,norm,tail,cumulative\n");
    for pair in pairs {
        let report = strichartz_norm(&traj, pair, &windows)?;
        let label = format!("{}:{}", num(pair.p()), num(pair.q()));
        for (w, c) in report.windows.iter().zip(&report.cumulative) {
            let _ = writeln!(
                csv,
                "{label},{},{},{},{},{}",
                num(w.start),
                num(w.end),
                num(w.norm),
                num(w.increment),
                num(*c)
            );
        }
    }
    Ok(Outcome {
        files: vec![write_file(out.join("strichartz.csv"), &csv)?],
        invariant_failure: None,
    })
}
