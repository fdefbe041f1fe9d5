//! Command-line front end: run configuration, config files and the four
//! commands. Everything here writes to caller-supplied sinks so it can be
//! driven from tests.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};

use crate::catalog::{ExampleId, ExampleModel};
use crate::diffusion::BoundaryCondition;
use crate::error::{Error, Result};
use crate::math::linspace;
use crate::montecarlo::{mc_density_error, simulate_paths, SimConfig};
use crate::verify::{default_bins, run_suite, Suite, VerifyOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Density,
    Verify,
    Simulate,
    Catalog,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::Verify => "verify",
            Command::Simulate => "simulate",
            Command::Catalog => "catalog",
        }
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        <Command as ValueEnum>::from_str(s, true)
            .map_err(|_| config_err(None, "command", format!("unknown command `{s}`")))
    }
}

/// `lo:hi:n`, `n ≥ 2` equally spaced points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.n)
    }
}

impl FromStr for Grid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| config_err(None, "grid", format!("`{s}`: {m}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(bad("expected lo:hi:n"));
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad("lower bound is not a number"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad("upper bound is not a number"))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| bad("count is not a nonnegative integer"))?;
        if n < 2 {
            return Err(bad("need at least 2 points"));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(bad("need finite lo < hi"));
        }
        Ok(Grid { lo, hi, n })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.n)
    }
}

fn config_err(line: Option<usize>, field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

/// Everything one invocation needs. Unset optional fields fall back to
/// per-command defaults at run time.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub example: Option<String>,
    pub gamma: Option<f64>,
    pub t: Vec<f64>,
    pub grid: Option<Grid>,
    pub tol: Option<f64>,
    pub paths: usize,
    pub seed: u64,
    pub dt: f64,
    pub x0: Option<f64>,
    pub suite: Option<String>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Density,
            example: None,
            gamma: None,
            t: Vec::new(),
            grid: None,
            tol: None,
            paths: 100_000,
            seed: 42,
            dt: 1e-3,
            x0: None,
            suite: None,
            out: None,
        }
    }
}

fn parse_f64(line: Option<usize>, field: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| config_err(line, field, format!("`{v}` is not a number")))
}

impl RunConfig {
    /// Sets one field from its textual form, as used in config files.
    pub fn set(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<()> {
        let value = value.trim();
        match key {
            "command" => {
                self.command = value
                    .parse()
                    .map_err(|_| config_err(line, key, format!("unknown command `{value}`")))?
            }
            "example" => self.example = Some(value.to_string()),
            "gamma" => self.gamma = Some(parse_f64(line, key, value)?),
            "t" => {
                self.t = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_f64(line, key, s))
                    .collect::<Result<_>>()?
            }
            "grid" => {
                self.grid = Some(value.parse().map_err(|e| match e {
                    Error::Config { field, message, .. } => Error::Config { line, field, message },
                    other => other,
                })?)
            }
            "tol" => self.tol = Some(parse_f64(line, key, value)?),
            "paths" => {
                self.paths = value
                    .parse()
                    .map_err(|_| config_err(line, key, format!("`{value}` is not a path count")))?
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| config_err(line, key, format!("`{value}` is not an unsigned integer")))?
            }
            "dt" => self.dt = parse_f64(line, key, value)?,
            "x0" => self.x0 = Some(parse_f64(line, key, value)?),
            "suite" => self.suite = Some(value.to_string()),
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(config_err(line, key, "unknown key")),
        }
        Ok(())
    }

    /// Parses a flat `key = value` file. Blank lines and lines starting with
    /// `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(config_err(Some(i + 1), line, "expected key = value"));
            };
            cfg.set(k.trim(), v, Some(i + 1))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Inverse of [`RunConfig::parse`]. Floats use the shortest form that
    /// reads back exactly.
    pub fn emit(&self) -> String {
        let mut s = format!("command = {}\n", self.command.name());
        if let Some(e) = &self.example {
            s += &format!("example = {e}\n");
        }
        if let Some(g) = self.gamma {
            s += &format!("gamma = {g:?}\n");
        }
        if !self.t.is_empty() {
            let ts: Vec<String> = self.t.iter().map(|t| format!("{t:?}")).collect();
            s += &format!("t = {}\n", ts.join(","));
        }
        if let Some(g) = &self.grid {
            s += &format!("grid = {:?}:{:?}:{}\n", g.lo, g.hi, g.n);
        }
        if let Some(t) = self.tol {
            s += &format!("tol = {t:?}\n");
        }
        s += &format!("paths = {}\nseed = {}\ndt = {:?}\n", self.paths, self.seed, self.dt);
        if let Some(x) = self.x0 {
            s += &format!("x0 = {x:?}\n");
        }
        if let Some(v) = &self.suite {
            s += &format!("suite = {v}\n");
        }
        if let Some(o) = &self.out {
            s += &format!("out = {}\n", o.display());
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(config_err(None, "tol", format!("must be positive, got {t}")));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(config_err(None, "dt", format!("must be positive, got {}", self.dt)));
        }
        if self.paths == 0 {
            return Err(config_err(None, "paths", "must be at least 1"));
        }
        if let Some(t) = self.t.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(config_err(None, "t", format!("times must be positive, got {t}")));
        }
        if let Some(g) = &self.grid {
            if g.n < 2 {
                return Err(config_err(None, "grid", "need at least 2 points"));
            }
        }
        Ok(())
    }

    /// Catalog entry selected by `example` and `gamma`.
    pub fn example_id(&self) -> Result<ExampleId> {
        ExampleId::parse(self.example.as_deref().unwrap_or("e1"), self.gamma)
    }

    fn sim(&self) -> Result<SimConfig> {
        SimConfig::new(self.dt, self.paths, self.seed)
    }
}

/// `darboux <command> [suite] [options]`
#[derive(Debug, Parser)]
#[command(
    name = "darboux",
    version,
    about = "Transition densities of transformed killed diffusions",
    allow_negative_numbers = true
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Suite name for `verify`.
    pub suite: Option<String>,
    /// Catalog example: e1, e2, e3, e4 or e5.
    #[arg(long)]
    pub example: Option<String>,
    /// Elasticity parameter, required for e3.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Time values (repeat the flag or separate with commas).
    #[arg(long = "t", value_delimiter = ',', num_args = 1..)]
    pub t: Vec<f64>,
    /// Spatial grid `lo:hi:n` (bin edges for `simulate`).
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Euler time step for simulations.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Starting point for `simulate`.
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat key = value file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::parse(&std::fs::read_to_string(p)?)?,
            None => RunConfig::default(),
        };
        cfg.command = self.command;
        if self.suite.is_some() {
            cfg.suite = self.suite;
        }
        if self.example.is_some() {
            cfg.example = self.example;
        }
        if self.gamma.is_some() {
            cfg.gamma = self.gamma;
        }
        if !self.t.is_empty() {
            cfg.t = self.t;
        }
        if let Some(g) = &self.grid {
            cfg.grid = Some(g.parse()?);
        }
        if self.tol.is_some() {
            cfg.tol = self.tol;
        }
        if let Some(p) = self.paths {
            cfg.paths = p;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = self.dt {
            cfg.dt = d;
        }
        if self.x0.is_some() {
            cfg.x0 = self.x0;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_grid(id: ExampleId) -> Grid {
    let (lo, hi) = match id {
        ExampleId::E1 | ExampleId::E5 => (-2.0, 2.0),
        ExampleId::E2 | ExampleId::E3 { .. } => (0.25, 2.5),
        ExampleId::E4 => (0.1, 0.9),
    };
    Grid { lo, hi, n: 5 }
}

/// Result of a command: whether it succeeded, and text meant for the user
/// rather than the data sink.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub success: bool,
    pub report: String,
}

fn csv(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the `t,x,y,p_Y,p_Ytilde` grid for the selected example.
pub fn cmd_density(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome> {
    let id = cfg.example_id()?;
    let m = ExampleModel::new(id)?;
    let grid = cfg.grid.unwrap_or_else(|| default_grid(id));
    let pts = grid.points();
    let dom = m.spec_y.interval;
    if let Some(p) = pts.iter().find(|&&p| !dom.contains(p)) {
        return Err(config_err(
            None,
            "grid",
            format!("point {p} lies outside the state space of {id}"),
        ));
    }
    let ts = if cfg.t.is_empty() { vec![1.0] } else { cfg.t.clone() };
    let mut body = String::from("t,x,y,p_Y,p_Ytilde\n");
    for &t in &ts {
        for &x in &pts {
            for &y in &pts {
                body += &format!(
                    "{},{},{},{},{}\n",
                    csv(t),
                    csv(x),
                    csv(y),
                    csv(m.py_eval(t, x, y)),
                    csv(m.pytilde_eval(t, x, y))
                );
            }
        }
    }
    out.write_all(body.as_bytes())?;
    Ok(Outcome {
        success: true,
        report: format!("{} rows for {id}\n", ts.len() * pts.len() * pts.len()),
    })
}

/// Runs one suite; the sink receives a CSV summary of every check.
pub fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome> {
    let name = cfg
        .suite
        .as_deref()
        .ok_or_else(|| config_err(None, "suite", "verify needs a suite name"))?;
    let suite: Suite = name.parse()?;
    let opts = VerifyOptions {
        examples: match &cfg.example {
            Some(_) => vec![cfg.example_id()?],
            None => Vec::new(),
        },
        tol: cfg.tol,
        sim: cfg.sim()?,
    };
    let checks = run_suite(suite, &opts)?;
    let mut report = String::new();
    let mut body = String::from("check,value,tol,expect,pass\n");
    for c in &checks {
        report += &format!("{c}\n");
        body += &format!(
            "{},{},{},{},{}\n",
            c.name.replace(',', ";"),
            csv(c.value),
            csv(c.tol),
            c.expect,
            c.pass
        );
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let success = passed == checks.len();
    report += &format!("{suite}: {passed}/{} checks passed\n", checks.len());
    out.write_all(body.as_bytes())?;
    Ok(Outcome { success, report })
}

/// Simulates the transformed process and compares the survivor histogram
/// with its kernel, one CSV row per bin.
pub fn cmd_simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome> {
    let id = cfg.example_id()?;
    let m = ExampleModel::new(id)?;
    let t = cfg.t.first().copied().unwrap_or(0.5);
    let (x_default, edges_default) = default_bins(id, t);
    let x0 = cfg.x0.unwrap_or(x_default);
    let edges = cfg.grid.map(|g| g.points()).unwrap_or(edges_default);
    let outcomes = simulate_paths(&m.p_ytilde.spec, x0, t, &cfg.sim()?)?;
    let cmp = mc_density_error(&outcomes, &m.p_ytilde, t, x0, &edges)?;
    let mut body = String::from("bin_lo,bin_hi,mc_mass,kernel_mass,z_score\n");
    for b in &cmp.bins {
        body += &format!(
            "{},{},{},{},{}\n",
            csv(b.lo),
            csv(b.hi),
            csv(b.mc_mass),
            csv(b.kernel_mass),
            csv(b.z_score)
        );
    }
    out.write_all(body.as_bytes())?;
    Ok(Outcome {
        success: true,
        report: format!(
            "{id}: {} of {} paths alive at t = {t}, max |z| = {:.3}\n",
            cmp.alive, cmp.n_paths, cmp.max_abs_z
        ),
    })
}

fn bc_name(bc: BoundaryCondition) -> String {
    match bc {
        BoundaryCondition::Killing => "killing".into(),
        BoundaryCondition::Reflecting => "reflecting".into(),
        BoundaryCondition::Elastic(g) => format!("elastic({g})"),
        BoundaryCondition::NotApplicable => "-".into(),
    }
}

/// Lists the catalog with state spaces, boundary conditions and seeds.
pub fn cmd_catalog(_cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome> {
    let mut body =
        String::from("example,left,right,left_bc,right_bc,lambda,m_h,left_bc_transformed,right_bc_transformed\n");
    for id in ExampleId::all() {
        let m = ExampleModel::new(id)?;
        let d = m.spec_y.interval;
        let s = &m.p_ytilde.spec;
        body += &format!(
            "{},{},{},{},{},{},{},{},{}\n",
            id.to_string().replace(',', ";"),
            d.left,
            d.right,
            bc_name(m.spec_y.left_bc),
            bc_name(m.spec_y.right_bc),
            m.seed.lambda,
            m.m_h,
            bc_name(s.left_bc),
            bc_name(s.right_bc)
        );
    }
    out.write_all(body.as_bytes())?;
    Ok(Outcome {
        success: true,
        report: String::new(),
    })
}

pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<Outcome> {
    match cfg.command {
        Command::Density => cmd_density(cfg, out),
        Command::Verify => cmd_verify(cfg, out),
        Command::Simulate => cmd_simulate(cfg, out),
        Command::Catalog => cmd_catalog(cfg, out),
    }
}
