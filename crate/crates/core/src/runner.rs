//! Config-driven experiment commands: `energy`, `classify`, `probe`,
//! `minimize` and `sweep`.
//!
//! Every output file starts with comment lines carrying the crate version and
//! the SHA-256 of the effective config, so identical inputs give identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::criticality::{classify_auto, dyadic_lambdas, fmt_real, scaling_probe, LionsInputs, DEFAULT_DELTAS};
use crate::energy::FreeEnergy;
use crate::ensemble::random_profile;
use crate::entropy::EntropyLaw;
use crate::error::{Error, Result};
use crate::interaction::InteractionOperator;
use crate::kernel::{Kernel, KernelShape};
use crate::minimizer::{infimum_estimate, FlowConfig, InfimumEstimate, Outcome, Scheme};
use crate::plot::loglog_svg;
use crate::radial::{Profile, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Energy,
    Classify,
    Probe,
    Minimize,
    Sweep,
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "energy" => Command::Energy,
            "classify" => Command::Classify,
            "probe" => Command::Probe,
            "minimize" => Command::Minimize,
            "sweep" => Command::Sweep,
            _ => return Err(Error::Config(format!("unknown command '{s}'"))),
        })
    }
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Command::Energy => "energy",
            Command::Classify => "classify",
            Command::Probe => "probe",
            Command::Minimize => "minimize",
            Command::Sweep => "sweep",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    pub radius: f64,
    pub cells: usize,
}

/// Where the working profile comes from, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSource {
    /// Centred Gaussian `∝ exp(-(r/width)²)` of the configured mass.
    Gaussian {
        width: f64,
    },
    /// A profile CSV; relative paths are resolved against the config file.
    Csv {
        path: PathBuf,
    },
    /// A seeded random mixture rescaled to the configured mass.
    Random,
    Zero,
}

impl Default for ProfileSource {
    fn default() -> Self {
        ProfileSource::Gaussian { width: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Uses `λ = 2^{-k}`, `k = 0..=levels`, unless `lambdas` is given.
    #[serde(default = "default_levels")]
    pub levels: u32,
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
}

fn default_levels() -> u32 {
    6
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            levels: default_levels(),
            lambdas: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    KernelAmplitude,
    Mass,
    /// Exponent of a `power` entropy.
    M,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalityConfig {
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// Supplied interpolation constant; estimated from an ensemble when absent.
    #[serde(default)]
    pub c0: Option<f64>,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
}

fn default_deltas() -> Vec<f64> {
    DEFAULT_DELTAS.to_vec()
}
fn default_ensemble() -> usize {
    100
}

impl Default for CriticalityConfig {
    fn default() -> Self {
        CriticalityConfig {
            deltas: default_deltas(),
            c0: None,
            ensemble: default_ensemble(),
            nu: None,
            alpha: None,
        }
    }
}

fn unit_mass() -> f64 {
    1.0
}

fn default_flow() -> FlowConfig {
    FlowConfig::new(Scheme::ProjectedDescent)
}

/// One experiment definition. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridConfig,
    pub kernel: KernelShape,
    pub entropy: EntropyLaw,
    #[serde(default = "unit_mass")]
    pub mass: f64,
    #[serde(default)]
    pub profile: ProfileSource,
    #[serde(default = "default_flow")]
    pub flow: FlowConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub criticality: CriticalityConfig,
    #[serde(default)]
    pub seed: u64,
    /// Directory for cached interaction operators; relative to the config file.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let to_config = |e: Error| Error::Config(e.to_string());
        self.grid().map_err(to_config)?;
        self.kernel().map_err(to_config)?;
        self.entropy.validate().map_err(to_config)?;
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::Config(format!("mass must be positive, got {}", self.mass)));
        }
        if let ProfileSource::Gaussian { width } = self.profile {
            if !(width.is_finite() && width > 0.0) {
                return Err(Error::Config(format!("profile.width must be positive, got {width}")));
            }
        }
        self.flow.validate()
    }

    pub fn grid(&self) -> Result<Arc<RadialGrid>> {
        RadialGrid::shared(self.grid.d, self.grid.radius, self.grid.cells)
    }

    pub fn kernel(&self) -> Result<Kernel> {
        Kernel::new(self.kernel.clone(), crate::radial::Dimension::new(self.grid.d)?)
    }

    /// Hex SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configs serialize");
        format!("{:x}", Sha256::digest(bytes))
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
}

struct Context {
    cfg: Config,
    base: PathBuf,
    out: PathBuf,
    header: Vec<String>,
}

impl Context {
    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn operator(&self, kernel: &Kernel) -> Result<InteractionOperator> {
        let grid = self.cfg.grid()?;
        match &self.cfg.cache_dir {
            Some(dir) => {
                let dir = self.resolve(dir);
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                let name = format!(
                    "pairs_d{}_R{}_N{}_{:016x}.bin",
                    grid.dim(),
                    grid.radius(),
                    grid.len(),
                    kernel.fingerprint()
                );
                InteractionOperator::load_or_build(&dir.join(name), grid, kernel)
            }
            None => InteractionOperator::build(grid, kernel),
        }
    }

    fn energy(&self) -> Result<FreeEnergy> {
        let op = self.operator(&self.cfg.kernel()?)?;
        FreeEnergy::new(self.cfg.entropy.clone(), Arc::new(op))
    }

    fn profile(&self) -> Result<Profile> {
        let grid = self.cfg.grid()?;
        match &self.cfg.profile {
            ProfileSource::Gaussian { width } => Profile::gaussian(grid, self.cfg.mass, *width),
            ProfileSource::Csv { path } => {
                let u = Profile::read_csv(&self.resolve(path))?;
                if u.grid() != &grid {
                    return Err(Error::Config(format!(
                        "profile {} does not live on the configured grid",
                        path.display()
                    )));
                }
                Ok(u)
            }
            ProfileSource::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
                random_profile(&grid, &mut rng).with_mass(self.cfg.mass)
            }
            ProfileSource::Zero => Ok(Profile::zeros(grid)),
        }
    }

    fn write(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.out.join(name);
        let mut text = String::new();
        for h in &self.header {
            let _ = writeln!(text, "# {h}");
        }
        text.push_str(body);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn write_csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<PathBuf> {
        let path = self.out.join(name);
        let mut csv = csv::Writer::from_writer(Vec::new());
        for r in rows {
            csv.serialize(r).map_err(|e| Error::format(&path, e.to_string()))?;
        }
        let bytes = csv.into_inner().map_err(|e| Error::format(&path, e.to_string()))?;
        self.write(name, &String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Loads `config_path`, applies `opts` and runs `command`, writing results
/// under `opts.out`. Returns the text summary printed by the binary.
pub fn run(command: Command, config_path: &Path, opts: &RunOptions) -> Result<String> {
    let mut cfg = Config::load(config_path)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if opts.jobs == Some(0) {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    std::fs::create_dir_all(&opts.out).map_err(|e| Error::io(&opts.out, e))?;
    let header = vec![
        format!("aggmin {}", env!("CARGO_PKG_VERSION")),
        format!("config_sha256 {}", cfg.hash()),
        format!("command {command}"),
    ];
    let ctx = Context {
        cfg,
        base: config_path.parent().map(Path::to_path_buf).unwrap_or_default(),
        out: opts.out.clone(),
        header,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match command {
        Command::Energy => cmd_energy(&ctx),
        Command::Classify => cmd_classify(&ctx),
        Command::Probe => cmd_probe(&ctx),
        Command::Minimize => cmd_minimize(&ctx),
        Command::Sweep => cmd_sweep(&ctx),
    })
}

fn cmd_energy(ctx: &Context) -> Result<String> {
    let energy = ctx.energy()?;
    let u = ctx.profile()?;
    let r = energy.evaluate(&u)?;
    let mut s = String::new();
    let _ = writeln!(s, "entropy = {}", r.entropy);
    let _ = writeln!(s, "interaction = {}", r.interaction);
    let _ = writeln!(s, "free_energy = {}", r.free_energy);
    let _ = writeln!(s, "mass = {}", u.mass());
    let _ = writeln!(s, "sup = {}", u.sup());
    ctx.write("energy.txt", &s)?;
    Ok(s)
}

fn cmd_classify(ctx: &Context) -> Result<String> {
    let cfg = &ctx.cfg;
    let c = &cfg.criticality;
    let report = classify_auto(
        &cfg.entropy,
        &cfg.kernel()?,
        cfg.mass,
        &c.deltas,
        c.c0,
        &cfg.grid()?,
        c.ensemble,
        cfg.seed,
        LionsInputs {
            nu: c.nu,
            alpha: c.alpha,
        },
    )?;
    let s = report.to_key_value();
    ctx.write("classify.txt", &s)?;
    Ok(s)
}

#[derive(Serialize)]
struct ProbeRow {
    lambda: f64,
    entropy: f64,
    interaction: f64,
    free_energy: f64,
    overflow: bool,
}

fn cmd_probe(ctx: &Context) -> Result<String> {
    let energy = ctx.energy()?;
    let phi = ctx.profile()?;
    let lambdas = match &ctx.cfg.probe.lambdas {
        Some(l) if l.is_empty() => return Err(Error::Config("probe.lambdas is empty".into())),
        Some(l) => l.clone(),
        None => dyadic_lambdas(ctx.cfg.probe.levels),
    };
    let result = scaling_probe(&phi, &energy, &lambdas)?;
    let rows: Vec<ProbeRow> = result
        .points
        .iter()
        .map(|p| ProbeRow {
            lambda: p.lambda,
            entropy: p.entropy,
            interaction: p.interaction,
            free_energy: p.free_energy,
            overflow: p.overflow,
        })
        .collect();
    ctx.write_csv("probe.csv", &rows)?;
    let negative: Vec<(f64, f64)> = result
        .points
        .iter()
        .filter(|p| !p.overflow && p.free_energy < 0.0)
        .map(|p| (p.lambda, -p.free_energy))
        .collect();
    let svg = loglog_svg(&negative, "λ", "-F(φ_λ)", &ctx.header);
    let svg_path = ctx.out.join("probe.svg");
    std::fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;
    let mut s = String::new();
    let _ = writeln!(s, "negative_found = {}", result.negative_found);
    let _ = writeln!(
        s,
        "fitted_exponent = {}",
        result.fitted_exponent.map_or("none".into(), fmt_real)
    );
    let _ = writeln!(
        s,
        "fit_range = {}",
        result.fit_range.map_or("none".into(), |(a, b)| format!("[{a}, {b}]"))
    );
    let _ = writeln!(s, "dimension = {}", ctx.cfg.grid.d);
    ctx.write("probe.txt", &s)?;
    Ok(s)
}

fn multistart_outcome(est: &InfimumEstimate) -> Outcome {
    if est.all_vanished {
        Outcome::Vanishing
    } else {
        est.runs[est.best].outcome
    }
}

fn cmd_minimize(ctx: &Context) -> Result<String> {
    let energy = ctx.energy()?;
    let flow = &ctx.cfg.flow;
    let est = infimum_estimate(ctx.cfg.mass, &energy, flow)?;
    for (i, r) in est.runs.iter().enumerate() {
        let path = ctx.out.join(format!("trace_{i}.csv"));
        let mut comments = ctx.header.clone();
        comments.push(format!("start_width {}", flow.widths[i]));
        r.write_trace_csv(&path, &comments)?;
    }
    let best = &est.runs[est.best];
    best.profile.write_csv(&ctx.out.join("profile.csv"), &ctx.header)?;
    let mut s = String::new();
    let _ = writeln!(s, "scheme = {}", flow.scheme);
    let _ = writeln!(s, "mass = {}", ctx.cfg.mass);
    let _ = writeln!(s, "outcome = {}", multistart_outcome(&est));
    let _ = writeln!(s, "infimum_estimate = {}", est.value);
    let _ = writeln!(s, "best_start_width = {}", flow.widths[est.best]);
    let _ = writeln!(s, "entropy = {}", best.report.entropy);
    let _ = writeln!(s, "interaction = {}", best.report.interaction);
    let _ = writeln!(s, "free_energy = {}", best.report.free_energy);
    let _ = writeln!(s, "sup = {}", best.profile.sup());
    let _ = writeln!(s, "stationarity_mu = {}", best.stationarity.mu);
    let _ = writeln!(s, "stationarity_residual = {}", best.stationarity.residual);
    let _ = writeln!(s, "stationarity_degenerate = {}", best.stationarity.degenerate);
    let _ = writeln!(
        s,
        "stationarity_note = formal Euler-Lagrange condition, not a proven optimality certificate"
    );
    let _ = writeln!(s, "domain_radius = {}", ctx.cfg.grid.radius);
    for (i, r) in est.runs.iter().enumerate() {
        let _ = writeln!(
            s,
            "run_{i} = width {} outcome {} free_energy {} steps {} rejected {}",
            flow.widths[i],
            r.outcome,
            r.free_energy(),
            r.steps,
            r.rejected
        );
    }
    ctx.write("summary.txt", &s)?;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub kernel_l1: f64,
    pub mass: f64,
    pub outcome: Outcome,
    pub infimum_estimate: f64,
    pub final_sup: f64,
    pub steps: usize,
}

fn sweep_point(ctx: &Context, base: &InteractionOperator, parameter: SweepParameter, value: f64) -> Result<SweepRow> {
    let cfg = &ctx.cfg;
    let mut mass = cfg.mass;
    let mut law = cfg.entropy.clone();
    let op = match parameter {
        SweepParameter::KernelAmplitude => base.with_amplitude(value)?,
        SweepParameter::Mass => {
            mass = value;
            base.clone()
        }
        SweepParameter::M => {
            match &mut law {
                EntropyLaw::Power { m, .. } => *m = value,
                _ => return Err(Error::Config("sweeping m needs a power entropy".into())),
            }
            law.validate().map_err(|e| Error::Config(e.to_string()))?;
            base.clone()
        }
    };
    let kernel_l1 = op.kernel().l1_norm();
    let energy = FreeEnergy::new(law, Arc::new(op))?;
    let est = infimum_estimate(mass, &energy, &cfg.flow)?;
    let best = &est.runs[est.best];
    Ok(SweepRow {
        value,
        kernel_l1,
        mass,
        outcome: multistart_outcome(&est),
        infimum_estimate: est.value,
        final_sup: best.profile.sup(),
        steps: best.steps,
    })
}

/// Runs the configured sweep and returns one row per value.
pub fn sweep_rows(cfg: &Config, base_dir: &Path) -> Result<Vec<SweepRow>> {
    let ctx = Context {
        cfg: cfg.clone(),
        base: base_dir.to_path_buf(),
        out: PathBuf::new(),
        header: Vec::new(),
    };
    sweep_with(&ctx)
}

fn sweep_with(ctx: &Context) -> Result<Vec<SweepRow>> {
    let sweep = ctx
        .cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("the sweep command needs a 'sweep' section".into()))?;
    if sweep.values.is_empty() {
        return Err(Error::Config("sweep.values is empty".into()));
    }
    let base = ctx.operator(&ctx.cfg.kernel()?)?;
    sweep
        .values
        .par_iter()
        .map(|&v| sweep_point(ctx, &base, sweep.parameter, v))
        .collect()
}

fn cmd_sweep(ctx: &Context) -> Result<String> {
    let rows = sweep_with(ctx)?;
    ctx.write_csv("sweep.csv", &rows)?;
    let parameter = ctx
        .cfg
        .sweep
        .as_ref()
        .map(|s| s.parameter)
        .expect("checked by sweep_with");
    let mut s = String::new();
    let _ = writeln!(
        s,
        "parameter = {}",
        serde_json::to_string(&parameter)
            .expect("enum serializes")
            .trim_matches('"')
    );
    for r in &rows {
        let _ = writeln!(
            s,
            "value {} kernel_l1 {} outcome {} infimum {} sup {}",
            r.value, r.kernel_l1, r.outcome, r.infimum_estimate, r.final_sup
        );
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "grid": {"d": 2, "radius": 10, "cells": 64},
        "kernel": {"shape": "exponential", "c": 1, "a": 1},
        "entropy": {"form": "quadratic", "chi0": 1}
    }"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = Config::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.mass, 1.0);
        assert_eq!(cfg.profile, ProfileSource::Gaussian { width: 1.0 });
        assert_eq!(cfg.flow.scheme, Scheme::ProjectedDescent);
        assert_eq!(cfg.criticality.deltas, DEFAULT_DELTAS.to_vec());
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn unknown_keys_are_errors() {
        let typo = MINIMAL.replace(
            "\"entropy\"",
            "\"entropy\": {\"form\": \"quadratic\", \"chi0\": 1}, \"seeed\": 3, \"x\"",
        );
        assert!(matches!(Config::from_json(&typo), Err(Error::Config(_))));
        let nested = MINIMAL.replace("\"a\": 1}", "\"a\": 1, \"b\": 2}");
        assert!(matches!(Config::from_json(&nested), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let bad = MINIMAL.replace("\"cells\": 64", "\"cells\": 0");
        assert!(matches!(Config::from_json(&bad), Err(Error::Config(_))));
        let bad = MINIMAL.replace("\"c\": 1", "\"c\": -1");
        assert!(matches!(Config::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = Config::from_json(MINIMAL).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 9;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn command_names_round_trip() {
        for c in [
            Command::Energy,
            Command::Classify,
            Command::Probe,
            Command::Minimize,
            Command::Sweep,
        ] {
            assert_eq!(c.to_string().parse::<Command>().unwrap(), c);
        }
        assert!("fit".parse::<Command>().is_err());
    }
}
