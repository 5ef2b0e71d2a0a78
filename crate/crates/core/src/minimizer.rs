//! Energy-dissipating descent towards radial minimizers and the
//! vanishing / boundary-escape / stationary diagnosis of the resulting traces.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{entropy_of, FreeEnergy, FreeEnergyReport};
use crate::error::{Error, Result};
use crate::radial::Profile;
use crate::rearrangement::symmetric_decreasing_rearrangement;

/// Fraction of the outer radii counted as the boundary annulus.
pub const BOUNDARY_FRACTION: f64 = 0.1;
/// Window, in steps, over which the energy must have settled.
pub const SETTLE_WINDOW: usize = 100;
/// Relative energy slack allowed per accepted step.
pub const ENERGY_SLACK: f64 = 1e-10;

const MAX_HALVINGS: usize = 40;
const BISECTION_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Explicit upwind finite volumes for `u_t = ∇·(u∇(Φ'(u) - K*u))`.
    FiniteVolumePde,
    /// `u ← max(0, u - τ(g - μ))` with `μ` fixing the mass, plus backtracking.
    ProjectedDescent,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::FiniteVolumePde => "finite_volume_pde",
            Scheme::ProjectedDescent => "projected_descent",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub scheme: Scheme,
    /// Fixed time step; `None` picks `cfl` times the stability limit for the
    /// finite-volume scheme and an adaptive step starting at 0.1 for descent.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_tol_stat")]
    pub tol_stat: f64,
    /// Defaults to `5·M/|B_R|`, five times the fully spread density.
    #[serde(default)]
    pub tol_sup: Option<f64>,
    #[serde(default = "default_tol_f")]
    pub tol_f: f64,
    #[serde(default = "default_theta_b")]
    pub theta_b: f64,
    #[serde(default)]
    pub resymmetrize_every: usize,
    #[serde(default = "default_widths")]
    pub widths: Vec<f64>,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
}

fn default_cfl() -> f64 {
    0.4
}
fn default_max_steps() -> usize {
    100_000
}
fn default_tol_stat() -> f64 {
    1e-6
}
fn default_tol_f() -> f64 {
    1e-6
}
fn default_theta_b() -> f64 {
    0.3
}
fn default_widths() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_log_every() -> usize {
    10
}

impl FlowConfig {
    pub fn new(scheme: Scheme) -> Self {
        FlowConfig {
            scheme,
            tau: None,
            cfl: default_cfl(),
            max_steps: default_max_steps(),
            tol_stat: default_tol_stat(),
            tol_sup: None,
            tol_f: default_tol_f(),
            theta_b: default_theta_b(),
            resymmetrize_every: 0,
            widths: default_widths(),
            log_every: default_log_every(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if let Some(t) = self.tau {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("flow.tau must be positive, got {t}"));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("flow.cfl must lie in (0, 1], got {}", self.cfl));
        }
        for (name, v) in [("tol_stat", self.tol_stat), ("tol_f", self.tol_f)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("flow.{name} must be positive, got {v}"));
            }
        }
        if let Some(v) = self.tol_sup {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("flow.tol_sup must be positive, got {v}"));
            }
        }
        if !(self.theta_b > 0.0 && self.theta_b < 1.0) {
            return bad(format!("flow.theta_b must lie in (0, 1), got {}", self.theta_b));
        }
        if self.log_every == 0 || !SETTLE_WINDOW.is_multiple_of(self.log_every) {
            return bad(format!(
                "flow.log_every must divide {SETTLE_WINDOW}, got {}",
                self.log_every
            ));
        }
        if self.widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return bad("flow.widths must be positive".into());
        }
        Ok(())
    }

    /// Thresholds used by [`diagnose`] for a run of mass `mass`.
    pub fn rules(&self, mass: f64, ball_volume: f64) -> Rules {
        Rules {
            mass,
            tol_stat: self.tol_stat,
            tol_sup: self.tol_sup.unwrap_or(5.0 * mass / ball_volume),
            tol_f: self.tol_f,
            theta_b: self.theta_b,
        }
    }
}

/// Thresholds of the trace classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rules {
    pub mass: f64,
    pub tol_stat: f64,
    pub tol_sup: f64,
    pub tol_f: f64,
    pub theta_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Stationary,
    Vanishing,
    DichotomySaturation,
    MaxIter,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Stationary => "stationary",
            Outcome::Vanishing => "vanishing",
            Outcome::DichotomySaturation => "dichotomy_saturation",
            Outcome::MaxIter => "max_iter",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub entropy: f64,
    pub interaction: f64,
    pub free_energy: f64,
    pub sup: f64,
    pub boundary_mass: f64,
    pub mass: f64,
    pub mass_error: f64,
    /// `Σ w u |g - μ| / M` with `μ` the mass-weighted mean of `g`.
    pub residual: f64,
    /// The line search ran out of halvings at this step.
    pub exhausted: bool,
}

/// Applies the classification rules to the last row of `trace`.
///
/// Checked in order: vanishing (`sup < tol_sup` and `F > -tol_F`), boundary
/// escape (`boundary mass > θ_b·M`), stationarity (exhausted line search, or
/// residual below `tol_stat` with `|ΔF| < tol_stat·|F|` against the row
/// [`SETTLE_WINDOW`] steps earlier, or the first row if the trace is shorter).
pub fn diagnose(trace: &[TraceRow], rules: &Rules) -> Outcome {
    let Some(last) = trace.last() else {
        return Outcome::MaxIter;
    };
    if last.sup < rules.tol_sup && last.free_energy > -rules.tol_f {
        return Outcome::Vanishing;
    }
    if last.boundary_mass > rules.theta_b * rules.mass {
        return Outcome::DichotomySaturation;
    }
    if last.exhausted {
        return Outcome::Stationary;
    }
    if last.residual < rules.tol_stat {
        let target = last.step.saturating_sub(SETTLE_WINDOW);
        let earlier = trace.iter().rev().find(|r| r.step <= target).unwrap_or(&trace[0]);
        let change = (last.free_energy - earlier.free_energy).abs();
        if change <= rules.tol_stat * last.free_energy.abs() {
            return Outcome::Stationary;
        }
    }
    Outcome::MaxIter
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub profile: Profile,
    pub trace: Vec<TraceRow>,
    pub outcome: Outcome,
    pub scheme: Scheme,
    pub report: FreeEnergyReport,
    pub stationarity: StationarityReport,
    pub steps: usize,
    /// Trial steps thrown away by the CFL or energy checks.
    pub rejected: usize,
    /// Rearrangements skipped because they would have raised `F`.
    pub rearrangements_skipped: usize,
    pub tau: f64,
}

impl MinimizeResult {
    /// Final `F`, this run's estimate of the infimum at its mass.
    pub fn free_energy(&self) -> f64 {
        self.report.free_energy
    }

    /// Largest per-step relative rise of `F` among logged rows.
    pub fn max_energy_rise(&self) -> f64 {
        self.trace
            .windows(2)
            .map(|p| (p[1].free_energy - p[0].free_energy) / p[0].free_energy.abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_trace_csv(&self, path: &Path, comments: &[String]) -> Result<()> {
        let mut out = Vec::new();
        write_trace_to(&mut out, &self.trace, comments).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

pub fn write_trace_to<W: Write>(mut w: W, trace: &[TraceRow], comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    for row in trace {
        csv.serialize(row)?;
    }
    csv.flush()
}

/// Euler–Lagrange residual of `Φ'(u) = K*u + μ` on the support of `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityReport {
    /// Mass-weighted mean of `g` over the support.
    pub mu: f64,
    /// `max |g - μ|·u / M` over the support.
    pub residual: f64,
    /// `u ≡ 0`: no support, nothing to check.
    pub degenerate: bool,
}

pub fn stationarity_check(energy: &FreeEnergy, u: &Profile) -> Result<StationarityReport> {
    let g = energy.first_variation(u)?;
    Ok(stationarity_of(u.values(), &g, u.grid().volumes()))
}

fn stationarity_of(u: &[f64], g: &[f64], w: &[f64]) -> StationarityReport {
    let sup = u.iter().fold(0.0f64, |m, &x| m.max(x));
    let floor = 1e-12 * sup;
    let support = || u.iter().zip(g).zip(w).filter(move |((&x, _), _)| x > floor);
    let mass: f64 = support().map(|((x, _), wi)| x * wi).sum();
    if sup == 0.0 || mass == 0.0 {
        return StationarityReport {
            mu: 0.0,
            residual: 0.0,
            degenerate: true,
        };
    }
    let mu = support().map(|((x, gi), wi)| x * gi * wi).sum::<f64>() / mass;
    let residual = support().map(|((x, gi), _)| (gi - mu).abs() * x).fold(0.0f64, f64::max) / mass;
    StationarityReport {
        mu,
        residual,
        degenerate: false,
    }
}

/// Cell values with their convolution and energy, so each accepted step
/// costs a single matrix-vector product.
#[derive(Debug, Clone)]
struct State {
    u: Vec<f64>,
    conv: Vec<f64>,
    report: FreeEnergyReport,
}

impl State {
    fn new(energy: &FreeEnergy, u: Vec<f64>) -> State {
        let op = energy.operator();
        let w = op.grid().volumes();
        let conv = op.convolve_values(&u);
        let interaction = u.iter().zip(&conv).zip(w).map(|((a, c), wi)| wi * a * c).sum::<f64>();
        let entropy = entropy_of(energy.law(), &u, w);
        State {
            u,
            conv,
            report: FreeEnergyReport {
                entropy,
                interaction,
                free_energy: entropy - 0.5 * interaction,
            },
        }
    }

    fn g(&self, energy: &FreeEnergy) -> Vec<f64> {
        energy.first_variation_from(&self.u, &self.conv)
    }

    fn f(&self) -> f64 {
        self.report.free_energy
    }
}

fn check_finite(u: &[f64]) -> Result<()> {
    if let Some((i, v)) = u.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(Error::NonFinite(format!("cell {i} holds {v}")));
    }
    Ok(())
}

fn energy_accepts(old: f64, new: f64) -> bool {
    new <= old + ENERGY_SLACK * old.abs()
}

/// Largest stable explicit step: positivity of the upwind transport and the
/// parabolic limit `Δr²/(2 max P'(u))` for the pressure `P`.
fn finite_volume_limit(energy: &FreeEnergy, u: &[f64], g: &[f64]) -> f64 {
    let grid = energy.grid();
    let (w, dr) = (grid.volumes(), grid.spacing());
    let n = u.len();
    let velocity = |k: usize| -(g[k + 1] - g[k]) / dr;
    let mut limit = f64::INFINITY;
    for (i, &wi) in w.iter().enumerate() {
        let mut out = 0.0;
        if i + 1 < n {
            out += grid.interface_area(i) * velocity(i).max(0.0);
        }
        if i > 0 {
            out += grid.interface_area(i - 1) * (-velocity(i - 1)).max(0.0);
        }
        if out > 0.0 {
            limit = limit.min(wi / out);
        }
    }
    let slope = u.iter().fold(0.0f64, |m, &z| m.max(energy.law().pressure_slope(z)));
    if slope > 0.0 {
        limit = limit.min(dr * dr / (2.0 * slope));
    }
    limit
}

fn finite_volume_update(energy: &FreeEnergy, u: &[f64], g: &[f64], tau: f64) -> Vec<f64> {
    let grid = energy.grid();
    let (w, dr) = (grid.volumes(), grid.spacing());
    let n = u.len();
    let flux: Vec<f64> = (0..n.saturating_sub(1))
        .map(|k| {
            let v = -(g[k + 1] - g[k]) / dr;
            grid.interface_area(k) * (v.max(0.0) * u[k] + v.min(0.0) * u[k + 1])
        })
        .collect();
    (0..n)
        .map(|i| {
            let right = if i + 1 < n { flux[i] } else { 0.0 };
            let left = if i > 0 { flux[i - 1] } else { 0.0 };
            u[i] - tau / w[i] * (right - left)
        })
        .collect()
}

/// One explicit finite-volume step of `u_t = ∇·(u∇(Φ'(u) - K*u))` with zero
/// flux at `r = 0` and `r = R`.
///
/// Interface velocities are upwinded; for `Φ = z^m/(m-1)` the diffusive part
/// is `Δu^m`. Fails with [`Error::CflViolation`] when `tau` exceeds the
/// stability limit.
pub fn step_finite_volume(energy: &FreeEnergy, u: &Profile, tau: f64) -> Result<Profile> {
    if u.grid() != energy.grid() {
        return Err(Error::GridMismatch);
    }
    let g = energy.first_variation(u)?;
    let limit = finite_volume_limit(energy, u.values(), &g);
    if tau > limit {
        return Err(Error::CflViolation { tau, limit });
    }
    let next = finite_volume_update(energy, u.values(), &g, tau);
    check_finite(&next)?;
    Ok(Profile::from_raw(u.grid().clone(), next))
}

/// `max(0, u - τ(g - μ))` with `μ` bisected on `[min g, max g]` so the mass
/// is unchanged, then rescaled to the exact mass.
fn project(u: &[f64], g: &[f64], w: &[f64], tau: f64, mass: f64) -> Vec<f64> {
    let trial = |mu: f64| -> Vec<f64> {
        u.iter()
            .zip(g)
            .map(|(&x, &gi)| (x - tau * (gi - mu)).max(0.0))
            .collect()
    };
    let mass_of = |v: &[f64]| v.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
    let (mut lo, mut hi) = g
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mass_of(&trial(mid)) < mass {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut next = trial(hi);
    let m = mass_of(&next);
    if m > 0.0 {
        let scale = mass / m;
        next.iter_mut().for_each(|x| *x *= scale);
    }
    next
}

/// One projected step at fixed `tau`, without line search.
pub fn step_projected_descent(energy: &FreeEnergy, u: &Profile, tau: f64) -> Result<Profile> {
    if u.grid() != energy.grid() {
        return Err(Error::GridMismatch);
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {tau}")));
    }
    let g = energy.first_variation(u)?;
    let next = project(u.values(), &g, u.grid().volumes(), tau, u.mass());
    check_finite(&next)?;
    Ok(Profile::from_raw(u.grid().clone(), next))
}

struct Runner<'a> {
    energy: &'a FreeEnergy,
    config: &'a FlowConfig,
    rules: Rules,
    state: State,
    tau: f64,
    time: f64,
    rejected: usize,
    skipped: usize,
    trace: Vec<TraceRow>,
}

impl Runner<'_> {
    fn row(&self, step: usize, exhausted: bool) -> TraceRow {
        let w = self.energy.grid().volumes();
        let u = &self.state.u;
        let g = self.state.g(self.energy);
        let mass: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
        let residual = if mass > 0.0 {
            let mu = u.iter().zip(&g).zip(w).map(|((a, gi), wi)| a * gi * wi).sum::<f64>() / mass;
            u.iter()
                .zip(&g)
                .zip(w)
                .map(|((a, gi), wi)| wi * a * (gi - mu).abs())
                .sum::<f64>()
                / mass
        } else {
            0.0
        };
        let profile = Profile::from_raw(self.energy.grid().clone(), u.clone());
        TraceRow {
            step,
            time: self.time,
            entropy: self.state.report.entropy,
            interaction: self.state.report.interaction,
            free_energy: self.state.f(),
            sup: profile.sup(),
            boundary_mass: profile.boundary_mass(BOUNDARY_FRACTION),
            mass,
            mass_error: (mass - self.rules.mass).abs(),
            residual,
            exhausted,
        }
    }

    fn finite_volume_step(&mut self) -> Result<()> {
        let g = self.state.g(self.energy);
        let limit = finite_volume_limit(self.energy, &self.state.u, &g);
        let mut tau = match self.config.tau {
            Some(t) => t.min(self.tau),
            None => self.config.cfl * limit,
        };
        let floor = 1e-14 * self.config.tau.unwrap_or(limit).min(1.0);
        loop {
            if !(tau > floor) {
                return Err(Error::CflCollapse(floor));
            }
            if tau <= limit {
                let next = State::new(self.energy, finite_volume_update(self.energy, &self.state.u, &g, tau));
                check_finite(&next.u)?;
                if energy_accepts(self.state.f(), next.f()) {
                    self.state = next;
                    self.time += tau;
                    self.tau = tau;
                    return Ok(());
                }
            }
            self.rejected += 1;
            tau *= 0.5;
        }
    }

    /// Returns `true` when no halving of the step lowers the energy.
    fn descent_step(&mut self) -> Result<bool> {
        let g = self.state.g(self.energy);
        let w = self.energy.grid().volumes();
        let mut tau = self.tau;
        for _ in 0..MAX_HALVINGS {
            let next = State::new(self.energy, project(&self.state.u, &g, w, tau, self.rules.mass));
            check_finite(&next.u)?;
            if next.f() <= self.state.f() {
                self.state = next;
                self.time += tau;
                self.tau = if self.config.tau.is_some() { tau } else { tau * 1.5 };
                return Ok(false);
            }
            self.rejected += 1;
            tau *= 0.5;
        }
        Ok(true)
    }

    fn resymmetrize(&mut self) {
        let grid = self.energy.grid().clone();
        let star = symmetric_decreasing_rearrangement(&Profile::from_raw(grid, self.state.u.clone()));
        let next = State::new(self.energy, star.into_values());
        if energy_accepts(self.state.f(), next.f()) {
            self.state = next;
        } else {
            self.skipped += 1;
        }
    }
}

/// Runs the configured scheme from `u0` until [`diagnose`] returns an outcome
/// other than [`Outcome::MaxIter`] or `max_steps` is reached.
pub fn minimize(u0: &Profile, energy: &FreeEnergy, config: &FlowConfig) -> Result<MinimizeResult> {
    config.validate()?;
    if u0.grid() != energy.grid() {
        return Err(Error::GridMismatch);
    }
    let mass = u0.mass();
    if !(mass > 0.0) {
        return Err(Error::InvalidProfile("initial profile has no mass".into()));
    }
    let grid = energy.grid();
    let rules = config.rules(mass, grid.ball_volume(grid.radius()));
    let mut run = Runner {
        energy,
        config,
        rules,
        state: State::new(energy, u0.values().to_vec()),
        tau: config.tau.unwrap_or(0.1),
        time: 0.0,
        rejected: 0,
        skipped: 0,
        trace: Vec::new(),
    };
    run.trace.push(run.row(0, false));
    let mut outcome = diagnose(&run.trace, &rules);
    let mut step = 0;
    while outcome == Outcome::MaxIter && step < config.max_steps {
        step += 1;
        let exhausted = match config.scheme {
            Scheme::FiniteVolumePde => {
                run.finite_volume_step()?;
                false
            }
            Scheme::ProjectedDescent => run.descent_step()?,
        };
        if config.resymmetrize_every > 0 && step % config.resymmetrize_every == 0 {
            run.resymmetrize();
        }
        if exhausted || step % config.log_every == 0 || step == config.max_steps {
            run.trace.push(run.row(step, exhausted));
            outcome = diagnose(&run.trace, &rules);
        }
    }
    let profile = Profile::from_raw(grid.clone(), run.state.u.clone());
    let g = run.state.g(energy);
    Ok(MinimizeResult {
        stationarity: stationarity_of(profile.values(), &g, grid.volumes()),
        profile,
        trace: run.trace,
        outcome,
        scheme: config.scheme,
        report: run.state.report,
        steps: step,
        rejected: run.rejected,
        rearrangements_skipped: run.skipped,
        tau: run.tau,
    })
}

/// Best of several runs started from centred Gaussians of mass `mass`.
#[derive(Debug, Clone)]
pub struct InfimumEstimate {
    /// Smallest final `F`, or exactly 0 when every run vanished.
    pub value: f64,
    pub all_vanished: bool,
    /// Index into `runs` of the run attaining `value`.
    pub best: usize,
    pub runs: Vec<MinimizeResult>,
}

/// Multistart estimate of `inf F` over densities of mass `mass`, one run per
/// entry of `config.widths`, executed in parallel.
pub fn infimum_estimate(mass: f64, energy: &FreeEnergy, config: &FlowConfig) -> Result<InfimumEstimate> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
    }
    if config.widths.is_empty() {
        return Err(Error::Config("flow.widths is empty".into()));
    }
    let runs: Vec<MinimizeResult> = config
        .widths
        .par_iter()
        .map(|&width| {
            let u0 = Profile::gaussian(energy.grid().clone(), mass, width)?;
            minimize(&u0, energy, config)
        })
        .collect::<Result<_>>()?;
    let all_vanished = runs.iter().all(|r| r.outcome == Outcome::Vanishing);
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.free_energy().total_cmp(&b.1.free_energy()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let value = if all_vanished { 0.0 } else { runs[best].free_energy() };
    Ok(InfimumEstimate {
        value,
        all_vanished,
        best,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::EntropyLaw;
    use crate::interaction::InteractionOperator;
    use crate::kernel::Kernel;
    use crate::radial::RadialGrid;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn model(law: EntropyLaw, c: f64, radius: f64, cells: usize) -> FreeEnergy {
        let g = RadialGrid::shared(2, radius, cells).unwrap();
        let k = Kernel::exponential(c, 1.0, 2).unwrap();
        FreeEnergy::new(law, Arc::new(InteractionOperator::build(g, &k).unwrap())).unwrap()
    }

    fn quadratic() -> EntropyLaw {
        EntropyLaw::quadratic(1.0).unwrap()
    }

    fn row(step: usize, f: f64, sup: f64, boundary: f64, residual: f64) -> TraceRow {
        TraceRow {
            step,
            time: step as f64,
            entropy: 0.0,
            interaction: 0.0,
            free_energy: f,
            sup,
            boundary_mass: boundary,
            mass: 1.0,
            mass_error: 0.0,
            residual,
            exhausted: false,
        }
    }

    fn rules() -> Rules {
        Rules {
            mass: 1.0,
            tol_stat: 1e-6,
            tol_sup: 1e-3,
            tol_f: 1e-6,
            theta_b: 0.3,
        }
    }

    #[test]
    fn diagnosis_rules() {
        let r = rules();
        assert_eq!(diagnose(&[], &r), Outcome::MaxIter);
        assert_eq!(diagnose(&[row(0, 1e-4, 1e-4, 0.0, 1.0)], &r), Outcome::Vanishing);
        assert_eq!(diagnose(&[row(0, -0.1, 1e-4, 0.0, 1.0)], &r), Outcome::MaxIter);
        assert_eq!(
            diagnose(&[row(0, -0.1, 0.5, 0.4, 1.0)], &r),
            Outcome::DichotomySaturation
        );
        let settled: Vec<TraceRow> = (0..=20)
            .map(|k| row(10 * k, -0.1 - 1e-12 * k as f64, 0.5, 0.0, 1e-8))
            .collect();
        assert_eq!(diagnose(&settled, &r), Outcome::Stationary);
        let moving: Vec<TraceRow> = (0..=20)
            .map(|k| row(10 * k, -0.1 - 1e-3 * k as f64, 0.5, 0.0, 1e-8))
            .collect();
        assert_eq!(diagnose(&moving, &r), Outcome::MaxIter);
        let mut exhausted = row(5, -0.1, 0.5, 0.0, 1.0);
        exhausted.exhausted = true;
        assert_eq!(diagnose(&[exhausted], &r), Outcome::Stationary);
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg: FlowConfig = serde_json::from_str(r#"{"scheme":"finite_volume_pde"}"#).unwrap();
        assert_eq!(cfg, FlowConfig::new(Scheme::FiniteVolumePde));
        assert!(serde_json::from_str::<FlowConfig>(r#"{"scheme":"projected_descent","tua":1}"#).is_err());
        let mut bad = FlowConfig::new(Scheme::ProjectedDescent);
        bad.theta_b = 1.0;
        assert!(bad.validate().is_err());
        bad = FlowConfig::new(Scheme::ProjectedDescent);
        bad.log_every = 7;
        assert!(bad.validate().is_err());
        bad = FlowConfig::new(Scheme::ProjectedDescent);
        bad.tau = Some(-1.0);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn flat_profile_without_interaction_is_a_fixed_point() {
        let e = model(EntropyLaw::power(2.0, 1.0).unwrap(), 0.0, 5.0, 40);
        let u = Profile::constant(e.grid().clone(), 0.3).unwrap();
        let fv = step_finite_volume(&e, &u, 1e-3).unwrap();
        let pd = step_projected_descent(&e, &u, 0.5).unwrap();
        for (a, b) in fv.values().iter().zip(pd.values()) {
            assert!((a - 0.3).abs() < 1e-15 && (b - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn porous_medium_lowers_the_maximum_every_step() {
        let e = model(EntropyLaw::power(2.0, 1.0).unwrap(), 0.0, 10.0, 128);
        let mut u = Profile::gaussian(e.grid().clone(), 1.0, 1.0).unwrap();
        let m = u.mass();
        for _ in 0..500 {
            let g = e.first_variation(&u).unwrap();
            let tau = 0.4 * finite_volume_limit(&e, u.values(), &g);
            let next = step_finite_volume(&e, &u, tau).unwrap();
            assert!(next.sup() < u.sup());
            u = next;
        }
        assert!((u.mass() - m).abs() < 1e-12 * m);
    }

    #[test]
    fn oversized_step_is_a_cfl_violation() {
        let e = model(quadratic(), 1.0, 10.0, 64);
        let u = Profile::gaussian(e.grid().clone(), 1.0, 1.0).unwrap();
        assert!(matches!(
            step_finite_volume(&e, &u, 10.0),
            Err(Error::CflViolation { .. })
        ));
    }

    #[test]
    fn fixed_oversized_tau_is_halved_not_fatal() {
        let e = model(quadratic(), 1.0, 10.0, 64);
        let u = Profile::gaussian(e.grid().clone(), 1.0, 1.0).unwrap();
        let mut cfg = FlowConfig::new(Scheme::FiniteVolumePde);
        cfg.tau = Some(1.0);
        cfg.max_steps = 50;
        let r = minimize(&u, &e, &cfg).unwrap();
        assert!(r.rejected > 0);
        assert!(r.tau < 1.0);
    }

    #[test]
    fn finite_volume_conserves_mass_and_dissipates() {
        let e = model(quadratic(), 1.0, 10.0, 64);
        let u = Profile::gaussian(e.grid().clone(), 1.0, 1.5).unwrap();
        let mut cfg = FlowConfig::new(Scheme::FiniteVolumePde);
        cfg.max_steps = 10_000;
        cfg.log_every = 1;
        cfg.tol_stat = 1e-300;
        let r = minimize(&u, &e, &cfg).unwrap();
        assert_eq!(r.steps, 10_000);
        for row in &r.trace {
            assert!(row.mass_error <= 1e-10);
        }
        assert!(r.max_energy_rise() <= ENERGY_SLACK);
        assert!(r.profile.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn descent_reaches_a_stationary_point_and_stays_there() {
        let e = model(quadratic(), 1.0, 10.0, 128);
        let u = Profile::gaussian(e.grid().clone(), 1.0, 1.0).unwrap();
        let cfg = FlowConfig::new(Scheme::ProjectedDescent);
        let first = minimize(&u, &e, &cfg).unwrap();
        assert_eq!(first.outcome, Outcome::Stationary);
        assert!(first.free_energy() < 0.0);
        assert!(first.stationarity.residual < 1e-4);
        assert!(crate::rearrangement::is_nonincreasing(&first.profile));
        for p in first.trace.windows(2) {
            assert!(p[1].free_energy <= p[0].free_energy);
        }
        let second = minimize(&first.profile, &e, &cfg).unwrap();
        assert_eq!(second.outcome, Outcome::Stationary);
        assert!(second.steps <= 1, "{} steps", second.steps);
    }

    #[test]
    fn resymmetrizing_keeps_mass_and_descent() {
        let e = model(quadratic(), 1.0, 10.0, 64);
        let u = Profile::from_cell_averages(e.grid().clone(), |r| (-(r - 3.0).powi(2)).exp()).unwrap();
        let mut cfg = FlowConfig::new(Scheme::ProjectedDescent);
        cfg.resymmetrize_every = 5;
        cfg.log_every = 5;
        let r = minimize(&u, &e, &cfg).unwrap();
        for p in r.trace.windows(2) {
            assert!(p[1].free_energy <= p[0].free_energy + ENERGY_SLACK * p[0].free_energy.abs());
            assert!(p[1].mass_error <= 1e-12 * u.mass());
        }
    }

    #[test]
    fn stationarity_report() {
        let e = model(quadratic(), 1.0, 10.0, 64);
        let zero = Profile::zeros(e.grid().clone());
        assert!(stationarity_check(&e, &zero).unwrap().degenerate);
        let bumpy = Profile::from_cell_averages(e.grid().clone(), |r| 1.0 + (3.0 * r).sin()).unwrap();
        let s = stationarity_check(&e, &bumpy).unwrap();
        assert!(!s.degenerate && s.residual > 1e-3);
    }

    #[test]
    fn pure_diffusion_infimum_is_zero() {
        let e = model(EntropyLaw::power(3.0, 1.0).unwrap(), 0.0, 10.0, 64);
        let est = infimum_estimate(1.0, &e, &FlowConfig::new(Scheme::ProjectedDescent)).unwrap();
        assert!(est.all_vanished);
        assert_eq!(est.value, 0.0);
        for r in &est.runs {
            assert!(r.free_energy() > 0.0);
        }
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let mut out = Vec::new();
        write_trace_to(&mut out, &[row(0, -1.0, 1.0, 0.0, 0.5)], &["note".into()]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# note");
        assert!(lines[1].starts_with("step,time,entropy,interaction,free_energy"));
        assert_eq!(lines.len(), 3);
    }

    proptest! {
        #[test]
        fn projection_keeps_mass_and_sign(
            u in proptest::collection::vec(0.0f64..2.0, 16),
            g in proptest::collection::vec(-3.0f64..3.0, 16),
            tau in 0.01f64..5.0,
        ) {
            let grid = RadialGrid::shared(3, 4.0, 16).unwrap();
            let w = grid.volumes();
            let mass: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
            prop_assume!(mass > 1e-6);
            let next = project(&u, &g, w, tau, mass);
            let after: f64 = next.iter().zip(w).map(|(a, b)| a * b).sum();
            prop_assert!((after - mass).abs() <= 1e-12 * mass);
            prop_assert!(next.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn constant_gradient_leaves_profile_unchanged(
            u in proptest::collection::vec(0.01f64..2.0, 12),
            c in -2.0f64..2.0,
        ) {
            let grid = RadialGrid::shared(2, 3.0, 12).unwrap();
            let w = grid.volumes();
            let mass: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
            let next = project(&u, &[c; 12], w, 0.7, mass);
            for (a, b) in next.iter().zip(&u) {
                prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
            }
        }
    }
}
