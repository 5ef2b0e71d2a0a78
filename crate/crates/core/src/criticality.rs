//! Regime classification, scaling probe and critical-mass bound.
//!
//! The classifier compares the small-density coefficient `χ` of the entropy
//! with `‖K‖₁`, and the large-density growth of `Φ` with the kernel
//! singularity through the subcriticality condition
//!
//! ```text
//! liminf_{z→∞} Φ(z)/z^{m*} > ½·C₀·‖K·1_{B_δ}‖_{p,∞}·M^{2-m*}.
//! ```
//!
//! `C₀` is the constant of the interpolation inequality
//! `∬ u u K·1_{B_δ} ≤ C₀‖K·1_{B_δ}‖_{p,∞}‖u‖²_{2p/(2p-1)}`. Its value is not known
//! in closed form; [`estimate_c0`] returns an empirical lower bound, and every
//! report says which value was used.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{interpolation_terms, FreeEnergy};
use crate::ensemble::random_profile;
use crate::entropy::EntropyLaw;
use crate::error::{Error, Result};
use crate::interaction::InteractionOperator;
use crate::kernel::Kernel;
use crate::radial::{Profile, RadialGrid};

/// Truncation radii tried by [`classify_auto`].
pub const DEFAULT_DELTAS: [f64; 3] = [0.25, 1.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `χ = 0` and subcritical: a minimizer exists.
    ExistenceChiZero,
    /// `0 < χ < ∞`, `2χ < ‖K‖₁` and subcritical: a minimizer exists.
    ExistenceChiPositive,
    /// `Φ(z) = χ₀z²` with `‖K‖₁ < 2χ₀`: the infimum is zero and no minimizer exists.
    NonexistenceQuadratic,
    /// Sublinear homogeneity of `Φ`: existence for large enough mass.
    LionsHomogeneity,
    /// Power-law decay of `K` with a matching small-density condition on `Φ`.
    LionsDecay,
    /// `2χ = ‖K‖₁`, where no statement is available.
    BoundaryTwoChiEqualsL1,
    Indeterminate,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::ExistenceChiZero => "existence_chi_zero",
            Regime::ExistenceChiPositive => "existence_chi_positive",
            Regime::NonexistenceQuadratic => "nonexistence_quadratic",
            Regime::LionsHomogeneity => "lions_homogeneity",
            Regime::LionsDecay => "lions_decay",
            Regime::BoundaryTwoChiEqualsL1 => "boundary_two_chi_equals_l1",
            Regime::Indeterminate => "indeterminate",
        }
    }

    /// Regimes in which a global minimizer is known to exist.
    pub fn predicts_existence(&self) -> bool {
        matches!(self, Regime::ExistenceChiZero | Regime::ExistenceChiPositive)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Where the value of `C₀` came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum C0Source {
    Supplied,
    /// Ensemble maximum of `lhs/mid`; a lower bound for the true constant.
    Estimated {
        samples: usize,
    },
}

/// Optional inputs for the Lions-type conditions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LionsInputs {
    /// Homogeneity exponent `ν ∈ (1, 2)`.
    pub nu: Option<f64>,
    /// Kernel decay exponent `α ∈ (0, d)`.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityReport {
    pub m_star: f64,
    pub p: f64,
    pub chi: f64,
    pub kernel_l1: f64,
    pub mass: f64,
    pub delta: f64,
    pub c0: f64,
    pub c0_source: C0Source,
    pub weak_norm: f64,
    /// `liminf Φ(z)/z^{m*}`
    pub growth_limit: f64,
    /// `½·C₀·‖K·1_{B_δ}‖_{p,∞}·M^{2-m*}`
    pub threshold: f64,
    pub subcritical_ok: bool,
    pub regime: Regime,
    pub critical_mass: f64,
    pub notes: Vec<String>,
}

impl CriticalityReport {
    /// Flat `key = value` block.
    pub fn to_key_value(&self) -> String {
        let c0_source = match self.c0_source {
            C0Source::Supplied => "supplied".to_string(),
            C0Source::Estimated { samples } => format!("estimated_lower_bound({samples} profiles)"),
        };
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("regime", self.regime.to_string());
        kv("m_star", fmt_real(self.m_star));
        kv("p", fmt_real(self.p));
        kv("chi", fmt_real(self.chi));
        kv("kernel_l1", fmt_real(self.kernel_l1));
        kv("mass", fmt_real(self.mass));
        kv("delta", fmt_real(self.delta));
        kv("c0", fmt_real(self.c0));
        kv("c0_source", c0_source);
        kv("weak_norm", fmt_real(self.weak_norm));
        kv("growth_limit", fmt_real(self.growth_limit));
        kv("threshold", fmt_real(self.threshold));
        kv("subcritical_ok", self.subcritical_ok.to_string());
        kv("critical_mass", fmt_real(self.critical_mass));
        for (i, n) in self.notes.iter().enumerate() {
            kv(&format!("note_{i}"), n.clone());
        }
        s
    }
}

impl fmt::Display for CriticalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_key_value())
    }
}

pub(crate) fn fmt_real(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x}")
    }
}

/// Classifies `(Φ, K, M)` with a fixed truncation radius and `C₀`.
pub fn classify(
    law: &EntropyLaw,
    kernel: &Kernel,
    mass: f64,
    delta: f64,
    c0: f64,
    c0_source: C0Source,
    lions: LionsInputs,
) -> Result<CriticalityReport> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if !(c0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("C0 must be nonnegative, got {c0}")));
    }
    law.validate()?;
    let index = kernel.singularity_index();
    let (p, m_star) = (index.p, index.m_star);
    let chi = law.chi();
    let kernel_l1 = kernel.l1_norm();
    let weak_norm = kernel.truncated(delta)?.weak_lp_norm(p, delta)?;
    let growth_limit = law.growth_versus(m_star).limit();
    let threshold = 0.5 * c0 * weak_norm * mass.powf(2.0 - m_star);
    let subcritical_ok = growth_limit > threshold;
    let critical_mass = critical_mass_bound(law, kernel, delta, c0)?;

    let mut notes = vec![match c0_source {
        C0Source::Supplied => "subcriticality uses a supplied C0".to_string(),
        C0Source::Estimated { .. } => {
            "subcriticality uses an empirical lower bound for C0; the true constant may be larger".to_string()
        }
    }];
    let finite_chi = chi > 0.0 && chi.is_finite();
    let boundary = finite_chi && (2.0 * chi - kernel_l1).abs() <= 1e-9 * kernel_l1.max(1.0);

    let regime = if law.pure_quadratic().is_some_and(|c| kernel_l1 < 2.0 * c) {
        Regime::NonexistenceQuadratic
    } else if chi == 0.0 && subcritical_ok {
        Regime::ExistenceChiZero
    } else if finite_chi && 2.0 * chi < kernel_l1 && !boundary && subcritical_ok {
        Regime::ExistenceChiPositive
    } else if boundary {
        notes.push("2 chi equals the kernel L1 norm; no existence statement applies".into());
        Regime::BoundaryTwoChiEqualsL1
    } else if lions
        .alpha
        .map(|a| check_lions_decay(kernel, a, law))
        .transpose()?
        .unwrap_or(false)
    {
        Regime::LionsDecay
    } else if lions
        .nu
        .map(|nu| check_lions_homogeneity(law, nu))
        .transpose()?
        .unwrap_or(false)
    {
        notes.push("existence for sufficiently large mass; no threshold is available".into());
        Regime::LionsHomogeneity
    } else {
        if finite_chi && 2.0 * chi > kernel_l1 {
            notes.push("2 chi exceeds the kernel L1 norm for a non-quadratic entropy".into());
        }
        if !subcritical_ok {
            notes.push("subcriticality fails with the chosen delta and C0".into());
        }
        Regime::Indeterminate
    };
    Ok(CriticalityReport {
        m_star,
        p,
        chi,
        kernel_l1,
        mass,
        delta,
        c0,
        c0_source,
        weak_norm,
        growth_limit,
        threshold,
        subcritical_ok,
        regime,
        critical_mass,
        notes,
    })
}

/// Tries each `δ` in `deltas` and keeps the most favourable report: the first
/// subcritical one, otherwise the one with the smallest threshold. `C₀` is
/// estimated on `grid` for each `δ` unless supplied.
#[allow(clippy::too_many_arguments)]
pub fn classify_auto(
    law: &EntropyLaw,
    kernel: &Kernel,
    mass: f64,
    deltas: &[f64],
    c0: Option<f64>,
    grid: &Arc<RadialGrid>,
    ensemble: usize,
    seed: u64,
    lions: LionsInputs,
) -> Result<CriticalityReport> {
    if deltas.is_empty() {
        return Err(Error::InvalidParameter("no truncation radius to try".into()));
    }
    let p = kernel.singularity_index().p;
    let mut best: Option<CriticalityReport> = None;
    for &delta in deltas {
        let (value, source) = match c0 {
            Some(v) => (v, C0Source::Supplied),
            None => {
                let est = estimate_c0(kernel, p, delta, grid, ensemble, seed)?;
                (est.value, C0Source::Estimated { samples: est.samples })
            }
        };
        let report = classify(law, kernel, mass, delta, value, source, lions)?;
        let better = match &best {
            None => true,
            Some(b) => {
                (report.subcritical_ok && !b.subcritical_ok)
                    || (report.subcritical_ok == b.subcritical_ok && report.threshold < b.threshold)
            }
        };
        if better {
            best = Some(report);
        }
    }
    let mut report = best.expect("at least one delta");
    report.notes.push(format!("delta chosen from {deltas:?}"));
    Ok(report)
}

/// Largest mass for which the subcriticality condition holds.
///
/// `∞` when `Φ` outgrows `z^{m*}` (always the case for bounded kernels, where
/// `m* = 1`), `0` when it grows slower, and `[2L/(C₀‖K·1_{B_δ}‖_{p,∞})]^{1/(2-m*)}`
/// when `Φ(z) ~ L·z^{m*}`.
pub fn critical_mass_bound(law: &EntropyLaw, kernel: &Kernel, delta: f64, c0: f64) -> Result<f64> {
    let index = kernel.singularity_index();
    if index.m_star <= 1.0 {
        return Ok(f64::INFINITY);
    }
    let limit = law.growth_versus(index.m_star).limit();
    if limit.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if limit == 0.0 {
        return Ok(0.0);
    }
    let weak = kernel.truncated(delta)?.weak_lp_norm(index.p, delta)?;
    let denom = c0 * weak;
    if denom <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((2.0 * limit / denom).powf(1.0 / (2.0 - index.m_star)))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

/// Samples `Φ(tz) ≤ t^ν Φ(z)` for `t ∈ [1, 10³]`, `z ∈ [10⁻³, 10³]`.
pub fn check_lions_homogeneity(law: &EntropyLaw, nu: f64) -> Result<bool> {
    if !(nu > 1.0 && nu < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "homogeneity exponent must lie in (1, 2), got {nu}"
        )));
    }
    for t in log_grid(1.0, 1e3, 40) {
        for z in log_grid(1e-3, 1e3, 60) {
            if law.phi(t * z) > t.powf(nu) * law.phi(z) * (1.0 + 1e-12) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Samples `K(tr) ≥ t^{-α}K(r)` for `t ∈ [1, 10³]` and checks that
/// `Φ(z)/z^{1+α/d} → 0` as `z → 0`.
pub fn check_lions_decay(kernel: &Kernel, alpha: f64, law: &EntropyLaw) -> Result<bool> {
    let d = kernel.dim().as_f64();
    if !(alpha > 0.0 && alpha < d) {
        return Err(Error::InvalidParameter(format!(
            "decay exponent must lie in (0, {d}), got {alpha}"
        )));
    }
    let entropy_ok = law.small_exponent() > 1.0 + alpha / d;
    let mut kernel_ok = true;
    'outer: for t in log_grid(1.0, 1e3, 40) {
        for r in log_grid(1e-3, 1e2, 60) {
            let k = kernel.eval(r);
            if kernel.eval(t * r) < t.powf(-alpha) * k * (1.0 - 1e-12) {
                kernel_ok = false;
                break 'outer;
            }
        }
    }
    Ok(kernel_ok && entropy_ok)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C0Estimate {
    /// Maximum of `lhs/mid` over the ensemble.
    pub value: f64,
    pub samples: usize,
    /// Set when the kernel vanishes and the ratio is `0/0`.
    pub degenerate: bool,
}

/// Empirical lower bound for `C₀`: the largest `lhs/mid` ratio over a seeded
/// ensemble of random profiles on `grid`.
pub fn estimate_c0(
    kernel: &Kernel,
    p: f64,
    delta: f64,
    grid: &Arc<RadialGrid>,
    ensemble: usize,
    seed: u64,
) -> Result<C0Estimate> {
    if kernel.amplitude() == 0.0 {
        return Ok(C0Estimate {
            value: 0.0,
            samples: 0,
            degenerate: true,
        });
    }
    let truncated = kernel.truncated(delta)?;
    let op = InteractionOperator::build(grid.clone(), &truncated)?;
    let weak = truncated.weak_lp_norm(p, delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles: Vec<Profile> = (0..ensemble).map(|_| random_profile(grid, &mut rng)).collect();
    let ratios: Vec<f64> = profiles
        .par_iter()
        .map(|u| -> Result<f64> { Ok(interpolation_terms(op.energy(u)?, weak, u, p)?.lhs_over_mid()) })
        .collect::<Result<_>>()?;
    Ok(C0Estimate {
        value: ratios.into_iter().fold(0.0, f64::max),
        samples: ensemble,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePoint {
    pub lambda: f64,
    pub entropy: f64,
    pub interaction: f64,
    pub free_energy: f64,
    /// The rescaled profile no longer fits in the grid; excluded from the fit.
    pub overflow: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub points: Vec<ProbePoint>,
    pub negative_found: bool,
    /// Slope of `log|F(φ_λ)|` against `log λ` over the smallest decade of
    /// negative values; `None` with fewer than two such points.
    pub fitted_exponent: Option<f64>,
    pub fit_range: Option<(f64, f64)>,
}

/// Evaluates `F` along the mass-invariant dilations `φ_λ(x) = λ^d φ(λx)`.
pub fn scaling_probe(phi: &Profile, energy: &FreeEnergy, lambdas: &[f64]) -> Result<ProbeResult> {
    if let Some(&l) = lambdas.iter().find(|&&l| !(l > 0.0 && l <= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "scaling factors must lie in (0, 1], got {l}"
        )));
    }
    let points: Vec<ProbePoint> = lambdas
        .par_iter()
        .map(|&lambda| -> Result<ProbePoint> {
            match phi.rescale_mass_invariant(lambda) {
                Ok(scaled) => {
                    let r = energy.evaluate(&scaled)?;
                    Ok(ProbePoint {
                        lambda,
                        entropy: r.entropy,
                        interaction: r.interaction,
                        free_energy: r.free_energy,
                        overflow: false,
                    })
                }
                Err(Error::SupportOverflow { .. }) => Ok(ProbePoint {
                    lambda,
                    entropy: f64::NAN,
                    interaction: f64::NAN,
                    free_energy: f64::NAN,
                    overflow: true,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let negative: Vec<&ProbePoint> = points.iter().filter(|p| !p.overflow && p.free_energy < 0.0).collect();
    let negative_found = !negative.is_empty();
    let mut fitted_exponent = None;
    let mut fit_range = None;
    if let Some(lo) = negative.iter().map(|p| p.lambda).reduce(f64::min) {
        let hi = 10.0 * lo;
        let pts: Vec<(f64, f64)> = negative
            .iter()
            .filter(|p| p.lambda <= hi * (1.0 + 1e-12))
            .map(|p| (p.lambda.ln(), (-p.free_energy).ln()))
            .collect();
        if pts.len() >= 2 {
            fitted_exponent = Some(least_squares_slope(&pts));
            let top = negative
                .iter()
                .map(|p| p.lambda)
                .filter(|&l| l <= hi * (1.0 + 1e-12))
                .fold(lo, f64::max);
            fit_range = Some((lo, top));
        }
    }
    Ok(ProbeResult {
        points,
        negative_found,
        fitted_exponent,
        fit_range,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// `{1, 1/2, ..., 2^{-k}}`
pub fn dyadic_lambdas(k: u32) -> Vec<f64> {
    (0..=k).map(|i| 0.5f64.powi(i as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn quick(law: &EntropyLaw, kernel: &Kernel, lions: LionsInputs) -> CriticalityReport {
        classify(law, kernel, 1.0, 1.0, 1.0, C0Source::Supplied, lions).unwrap()
    }

    #[test]
    fn classify_examples() {
        let q = EntropyLaw::quadratic(1.0).unwrap();
        let r = quick(&q, &Kernel::exponential(1.0, 1.0, 2).unwrap(), LionsInputs::default());
        assert_eq!(r.regime, Regime::ExistenceChiPositive);
        assert!((r.kernel_l1 - 2.0 * PI).abs() < 1e-8);
        assert_eq!(r.m_star, 1.0);
        assert!(r.subcritical_ok);

        let r = quick(
            &q,
            &Kernel::exponential(0.25 / PI, 1.0, 2).unwrap(),
            LionsInputs::default(),
        );
        assert_eq!(r.regime, Regime::NonexistenceQuadratic);
        assert!((r.kernel_l1 - 0.5).abs() < 1e-9);

        let r = quick(
            &EntropyLaw::power(3.0, 1.0).unwrap(),
            &Kernel::exponential(1.0, 1.0, 2).unwrap(),
            LionsInputs::default(),
        );
        assert_eq!(r.regime, Regime::ExistenceChiZero);
    }

    #[test]
    fn boundary_and_indeterminate() {
        // 2χ = ‖K‖₁ exactly for χ = π
        let law = EntropyLaw::power_sum(&[(PI, 2.0), (1.0, 3.0)]).unwrap();
        let r = quick(&law, &Kernel::exponential(1.0, 1.0, 2).unwrap(), LionsInputs::default());
        assert_eq!(r.regime, Regime::BoundaryTwoChiEqualsL1);
        // χ = ∞ without Lions inputs
        let r = quick(
            &EntropyLaw::power(1.5, 1.0).unwrap(),
            &Kernel::exponential(1.0, 1.0, 2).unwrap(),
            LionsInputs::default(),
        );
        assert_eq!(r.regime, Regime::Indeterminate);
        let r = quick(
            &EntropyLaw::power(1.5, 1.0).unwrap(),
            &Kernel::exponential(1.0, 1.0, 2).unwrap(),
            LionsInputs {
                nu: Some(1.5),
                alpha: None,
            },
        );
        assert_eq!(r.regime, Regime::LionsHomogeneity);
    }

    #[test]
    fn regime_invariants_hold() {
        let laws = [
            EntropyLaw::quadratic(1.0).unwrap(),
            EntropyLaw::quadratic(4.0).unwrap(),
            EntropyLaw::power(3.0, 1.0).unwrap(),
            EntropyLaw::power(1.4, 1.0).unwrap(),
            EntropyLaw::power_sum(&[(0.5, 2.0), (1.0, 4.0)]).unwrap(),
        ];
        let kernels = [
            Kernel::exponential(1.0, 1.0, 2).unwrap(),
            Kernel::exponential(0.05, 1.0, 2).unwrap(),
            Kernel::tophat(1.0, 1.0, 3).unwrap(),
            Kernel::power_law(1.0, 1.0, Some(1.0), 2).unwrap(),
        ];
        for law in &laws {
            for k in &kernels {
                let r = classify(law, k, 1.0, 1.0, 1.0, C0Source::Supplied, LionsInputs::default()).unwrap();
                let finite_chi = r.chi > 0.0 && r.chi.is_finite();
                match r.regime {
                    Regime::ExistenceChiZero => assert!(r.chi == 0.0 && r.subcritical_ok),
                    Regime::ExistenceChiPositive => {
                        assert!(finite_chi && 2.0 * r.chi < r.kernel_l1 && r.subcritical_ok)
                    }
                    Regime::NonexistenceQuadratic => {
                        assert!(law.pure_quadratic().is_some() && r.kernel_l1 < 2.0 * r.chi)
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn critical_mass_cases() {
        let pl = Kernel::power_law(1.0, 1.0, Some(1.0), 2).unwrap();
        assert!(
            critical_mass_bound(&EntropyLaw::power(3.0, 1.0).unwrap(), &pl, 1.0, 1.0)
                .unwrap()
                .is_infinite()
        );
        assert_eq!(
            critical_mass_bound(&EntropyLaw::power(1.2, 1.0).unwrap(), &pl, 1.0, 1.0).unwrap(),
            0.0
        );
        // Φ = 0.5·z^{3/2}/(1/2) = z^{3/2}: L = 1, m* = 3/2
        let law = EntropyLaw::power(1.5, 0.5).unwrap();
        let c0 = 0.8;
        let weak = pl.truncated(1.0).unwrap().weak_lp_norm(2.0, 1.0).unwrap();
        let expect = (2.0 * 1.0 / (c0 * weak)).powi(2);
        let got = critical_mass_bound(&law, &pl, 1.0, c0).unwrap();
        assert!((got - expect).abs() < 1e-12 * expect);
        assert!((weak - PI.sqrt()).abs() < 1e-2);
        // larger growth limit or smaller weak norm enlarges the bound
        let law2 = EntropyLaw::power(1.5, 1.0).unwrap();
        assert!(critical_mass_bound(&law2, &pl, 1.0, c0).unwrap() > got);
        assert!(critical_mass_bound(&law, &pl.with_amplitude(0.5).unwrap(), 1.0, c0).unwrap() > got);
        assert!(
            critical_mass_bound(&law, &Kernel::exponential(1.0, 1.0, 2).unwrap(), 1.0, c0)
                .unwrap()
                .is_infinite()
        );
    }

    #[test]
    fn lions_checks() {
        assert!(check_lions_homogeneity(&EntropyLaw::power(1.5, 1.0).unwrap(), 1.5).unwrap());
        assert!(!check_lions_homogeneity(&EntropyLaw::power(3.0, 1.0).unwrap(), 1.5).unwrap());
        assert!(!check_lions_homogeneity(&EntropyLaw::quadratic(1.0).unwrap(), 1.9).unwrap());
        assert!(check_lions_homogeneity(&EntropyLaw::quadratic(1.0).unwrap(), 2.5).is_err());

        let m2 = EntropyLaw::power(2.0, 1.0).unwrap();
        assert!(check_lions_decay(&Kernel::power_law(1.0, 1.0, None, 2).unwrap(), 1.0, &m2).unwrap());
        assert!(!check_lions_decay(&Kernel::exponential(1.0, 1.0, 2).unwrap(), 1.0, &m2).unwrap());
        assert!(!check_lions_decay(&Kernel::tophat(1.0, 1.0, 2).unwrap(), 1.0, &m2).unwrap());
        // small-density exponent 1.2 < 1 + α/d = 1.5
        let weak = EntropyLaw::power(1.2, 1.0).unwrap();
        assert!(!check_lions_decay(&Kernel::power_law(1.0, 1.0, None, 2).unwrap(), 1.0, &weak).unwrap());
    }

    #[test]
    fn c0_estimate_properties() {
        let grid = RadialGrid::shared(2, 8.0, 96).unwrap();
        let k = Kernel::power_law(1.0, 1.0, Some(1.0), 2).unwrap();
        let zero = estimate_c0(&k.with_amplitude(0.0).unwrap(), 2.0, 1.0, &grid, 10, 1).unwrap();
        assert!(zero.degenerate && zero.value == 0.0);
        let a = estimate_c0(&k, 2.0, 1.0, &grid, 40, 1).unwrap();
        let b = estimate_c0(&k.with_amplitude(3.0).unwrap(), 2.0, 1.0, &grid, 40, 1).unwrap();
        assert!(a.value > 0.0 && a.value.is_finite());
        assert!((a.value - b.value).abs() < 1e-9 * a.value);
    }

    #[test]
    fn probe_identity_entry_and_positive_regime() {
        let grid = RadialGrid::shared(2, 40.0, 160).unwrap();
        let k = Kernel::exponential(0.25 / PI, 1.0, 2).unwrap();
        let fe = FreeEnergy::build(EntropyLaw::quadratic(1.0).unwrap(), &k, grid.clone()).unwrap();
        let phi = Profile::gaussian(grid, 1.0, 1.0).unwrap();
        let res = scaling_probe(&phi, &fe, &dyadic_lambdas(3)).unwrap();
        assert_eq!(res.points[0].free_energy, fe.evaluate(&phi).unwrap().free_energy);
        assert!(!res.negative_found);
        assert!(res.fitted_exponent.is_none());
    }

    #[test]
    fn probe_flags_overflow() {
        let grid = RadialGrid::shared(2, 10.0, 80).unwrap();
        let k = Kernel::exponential(1.0, 1.0, 2).unwrap();
        let fe = FreeEnergy::build(EntropyLaw::power(3.0, 1.0).unwrap(), &k, grid.clone()).unwrap();
        let phi = Profile::gaussian(grid, 1.0, 1.0).unwrap();
        let res = scaling_probe(&phi, &fe, &dyadic_lambdas(6)).unwrap();
        assert!(res.points.last().unwrap().overflow);
        assert!(!res.points[0].overflow);
        assert!(scaling_probe(&phi, &fe, &[1.5]).is_err());
    }
}
