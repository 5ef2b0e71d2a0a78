//! Catalog of attractive interaction kernels `K(|x|)`.
//!
//! Every shape is radial, nonnegative and nonincreasing, and is known in closed
//! form, which is what allows `‖K‖₁`, weak-`L^p` norms and the singularity
//! index to be computed with analytic tails.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, tanh_sinh};
use crate::radial::Dimension;

fn unit_cutoff() -> Option<f64> {
    Some(1.0)
}

/// Kernel shapes as they appear in experiment configs, tagged by `shape`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelShape {
    /// `c·exp(-r/a)`
    Exponential { c: f64, a: f64 },
    /// `c·exp(-(r/a)²)`
    Gaussian { c: f64, a: f64 },
    /// `c` on `r < radius`, zero outside.
    Tophat { c: f64, radius: f64 },
    /// `c·r^{-β}` for `r ≤ r_c`, continued by `c·r_c^{-β}·exp(-(r - r_c))`.
    /// A `null` cutoff gives the pure power law.
    PowerLaw {
        c: f64,
        beta: f64,
        #[serde(default = "unit_cutoff")]
        cutoff: Option<f64>,
    },
}

impl KernelShape {
    pub fn amplitude(&self) -> f64 {
        match *self {
            KernelShape::Exponential { c, .. }
            | KernelShape::Gaussian { c, .. }
            | KernelShape::Tophat { c, .. }
            | KernelShape::PowerLaw { c, .. } => c,
        }
    }

    fn amplitude_mut(&mut self) -> &mut f64 {
        match self {
            KernelShape::Exponential { c, .. }
            | KernelShape::Gaussian { c, .. }
            | KernelShape::Tophat { c, .. }
            | KernelShape::PowerLaw { c, .. } => c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelShape::Exponential { .. } => "exponential",
            KernelShape::Gaussian { .. } => "gaussian",
            KernelShape::Tophat { .. } => "tophat",
            KernelShape::PowerLaw { .. } => "power_law",
        }
    }
}

/// Singularity data of a kernel: `K ∈ L^{p,∞}` near the origin and `m* = (p+1)/p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityIndex {
    /// `∞` for bounded kernels.
    pub p: f64,
    pub m_star: f64,
}

/// A catalog kernel in a fixed dimension, optionally truncated to `B_δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    shape: KernelShape,
    dim: Dimension,
    truncation: Option<f64>,
}

impl Kernel {
    pub fn new(shape: KernelShape, dim: Dimension) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let c = shape.amplitude();
        if !(c.is_finite() && c >= 0.0) {
            return bad(format!("kernel amplitude must be finite and nonnegative, got {c}"));
        }
        match shape {
            KernelShape::Exponential { a, .. } | KernelShape::Gaussian { a, .. } => {
                if !(a.is_finite() && a > 0.0) {
                    return bad(format!("kernel scale must be positive, got {a}"));
                }
            }
            KernelShape::Tophat { radius, .. } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return bad(format!("tophat radius must be positive, got {radius}"));
                }
            }
            KernelShape::PowerLaw { beta, cutoff, .. } => {
                if !(beta > 0.0 && beta < dim.as_f64()) {
                    return bad(format!("power law needs 0 < beta < d = {dim}, got {beta}"));
                }
                if let Some(rc) = cutoff {
                    if !(rc.is_finite() && rc > 0.0) {
                        return bad(format!("power law cutoff must be positive, got {rc}"));
                    }
                }
            }
        }
        let k = Self {
            shape,
            dim,
            truncation: None,
        };
        k.check_monotone()?;
        Ok(k)
    }

    pub fn exponential(c: f64, a: f64, d: usize) -> Result<Self> {
        Self::new(KernelShape::Exponential { c, a }, Dimension::new(d)?)
    }

    pub fn gaussian(c: f64, a: f64, d: usize) -> Result<Self> {
        Self::new(KernelShape::Gaussian { c, a }, Dimension::new(d)?)
    }

    pub fn tophat(c: f64, radius: f64, d: usize) -> Result<Self> {
        Self::new(KernelShape::Tophat { c, radius }, Dimension::new(d)?)
    }

    pub fn power_law(c: f64, beta: f64, cutoff: Option<f64>, d: usize) -> Result<Self> {
        Self::new(KernelShape::PowerLaw { c, beta, cutoff }, Dimension::new(d)?)
    }

    /// `K·1_{B_δ}`
    pub fn truncated(&self, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation radius must be positive, got {delta}"
            )));
        }
        let mut k = self.clone();
        k.truncation = Some(self.truncation.map_or(delta, |t| t.min(delta)));
        Ok(k)
    }

    /// Same shape with amplitude `c`.
    pub fn with_amplitude(&self, c: f64) -> Result<Self> {
        let mut shape = self.shape.clone();
        *shape.amplitude_mut() = c;
        let mut k = Self::new(shape, self.dim)?;
        k.truncation = self.truncation;
        Ok(k)
    }

    pub fn shape(&self) -> &KernelShape {
        &self.shape
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn amplitude(&self) -> f64 {
        self.shape.amplitude()
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.shape, KernelShape::PowerLaw { .. }) && self.amplitude() > 0.0
    }

    /// Exponent of the `r^{-β}` singularity at the origin, zero for bounded kernels.
    pub fn singular_exponent(&self) -> f64 {
        match self.shape {
            KernelShape::PowerLaw { beta, .. } if self.amplitude() > 0.0 => beta,
            _ => 0.0,
        }
    }

    /// Radius beyond which the kernel vanishes identically, if any.
    pub fn support_radius(&self) -> Option<f64> {
        let own = match self.shape {
            KernelShape::Tophat { radius, .. } => Some(radius),
            _ => None,
        };
        match (own, self.truncation) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Characteristic length on which the kernel varies.
    pub fn length_scale(&self) -> f64 {
        let own = match self.shape {
            KernelShape::Exponential { a, .. } | KernelShape::Gaussian { a, .. } => a,
            KernelShape::Tophat { radius, .. } => radius,
            KernelShape::PowerLaw { cutoff, .. } => cutoff.unwrap_or(1.0).min(1.0),
        };
        self.truncation.map_or(own, |t| own.min(t))
    }

    /// Radius beyond which `K` is below `10^{-20}` of its value at the length
    /// scale, or vanishes; `∞` for the pure power law.
    pub fn reach(&self) -> f64 {
        const DECADES: f64 = 46.06; // ln(1e20)
        let own = match self.shape {
            KernelShape::Exponential { a, .. } => a * (1.0 + DECADES),
            KernelShape::Gaussian { a, .. } => a * (1.0 + DECADES).sqrt(),
            KernelShape::Tophat { radius, .. } => radius,
            KernelShape::PowerLaw { cutoff, .. } => cutoff.map_or(f64::INFINITY, |rc| rc + DECADES),
        };
        self.truncation.map_or(own, |t| own.min(t))
    }

    /// Radii at which `K` or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = Vec::new();
        match self.shape {
            KernelShape::Tophat { radius, .. } => b.push(radius),
            KernelShape::PowerLaw { cutoff: Some(rc), .. } => b.push(rc),
            _ => {}
        }
        if let Some(t) = self.truncation {
            b.retain(|&x| x < t);
            b.push(t);
        }
        b
    }

    /// `K(r)`; the value at `r = 0` is `+∞` for singular kernels.
    pub fn eval(&self, r: f64) -> f64 {
        if let Some(t) = self.truncation {
            if r >= t {
                return 0.0;
            }
        }
        self.eval_untruncated(r)
    }

    fn eval_untruncated(&self, r: f64) -> f64 {
        match self.shape {
            KernelShape::Exponential { c, a } => c * (-r / a).exp(),
            KernelShape::Gaussian { c, a } => {
                let x = r / a;
                c * (-x * x).exp()
            }
            KernelShape::Tophat { c, radius } => {
                if r < radius {
                    c
                } else {
                    0.0
                }
            }
            KernelShape::PowerLaw { c, beta, cutoff } => match cutoff {
                Some(rc) if r > rc => c * rc.powf(-beta) * (-(r - rc)).exp(),
                _ => c * r.powf(-beta),
            },
        }
    }

    /// `K(r)·r^{d-1}`, evaluated without forming `∞·0` at the origin.
    pub fn radial_density(&self, r: f64) -> f64 {
        self.eval_weighted(r, (self.dim.get() - 1) as f64)
    }

    /// `K(r)·r^n`, with the power-law branch combined into a single power.
    pub fn eval_weighted(&self, r: f64, n: f64) -> f64 {
        match self.shape {
            KernelShape::PowerLaw { c, beta, cutoff } if cutoff.is_none_or(|rc| r <= rc) => {
                if self.truncation.is_some_and(|t| r >= t) {
                    0.0
                } else {
                    c * r.powf(n - beta)
                }
            }
            _ => self.eval(r) * r.powf(n),
        }
    }

    /// `ρ(t) = sup{r : K(r) > t}`, the radius of the level set `{K > t}`.
    pub fn level_radius(&self, t: f64) -> f64 {
        let rho = match self.shape {
            _ if t < 0.0 => f64::INFINITY,
            KernelShape::Exponential { c, a } => {
                if t >= c {
                    0.0
                } else if t == 0.0 {
                    f64::INFINITY
                } else {
                    a * (c / t).ln()
                }
            }
            KernelShape::Gaussian { c, a } => {
                if t >= c {
                    0.0
                } else if t == 0.0 {
                    f64::INFINITY
                } else {
                    a * (c / t).ln().sqrt()
                }
            }
            KernelShape::Tophat { c, radius } => {
                if t >= c {
                    0.0
                } else {
                    radius
                }
            }
            KernelShape::PowerLaw { c, beta, cutoff } => {
                if c == 0.0 {
                    0.0
                } else if t == 0.0 {
                    f64::INFINITY
                } else {
                    match cutoff {
                        Some(rc) => {
                            let edge = c * rc.powf(-beta);
                            if t >= edge {
                                (c / t).powf(1.0 / beta)
                            } else {
                                rc + (edge / t).ln()
                            }
                        }
                        None => (c / t).powf(1.0 / beta),
                    }
                }
            }
        };
        match self.truncation {
            Some(tr) => rho.min(tr),
            None => rho,
        }
    }

    /// Singularity index `p` and `m* = (p+1)/p`; bounded kernels get `p = ∞`, `m* = 1`.
    pub fn singularity_index(&self) -> SingularityIndex {
        let beta = self.singular_exponent();
        if beta == 0.0 {
            SingularityIndex {
                p: f64::INFINITY,
                m_star: 1.0,
            }
        } else {
            let d = self.dim.as_f64();
            SingularityIndex {
                p: d / beta,
                m_star: 1.0 + beta / d,
            }
        }
    }

    /// Whether `K` restricted to `|x| > 1` lies in some `L^{p̂}`, `p̂ < ∞`.
    /// True for every catalog shape: all decay exponentially, are compactly
    /// supported, or decay like `r^{-β}` with `β > 0`.
    pub fn far_field_integrable(&self) -> bool {
        true
    }

    /// `‖K‖₁ = σ_{d-1} ∫₀^∞ K(r) r^{d-1} dr`; `∞` when the tail diverges.
    pub fn l1_norm(&self) -> f64 {
        let dim = self.dim;
        let n = dim.get() - 1;
        let sigma = dim.sphere_area();
        let c = self.amplitude();
        if c == 0.0 {
            return 0.0;
        }
        let trunc = self.truncation.unwrap_or(f64::INFINITY);
        let f = |r: f64| self.radial_density(r);
        let tol = 1e-15;
        let radial = match self.shape {
            KernelShape::Exponential { a, .. } => {
                let end = trunc.min(40.0 * a);
                let body = adaptive(f, 0.0, end, 0.0, tol).value;
                let tail = if trunc.is_finite() && trunc <= end {
                    0.0
                } else {
                    c * exp_moment_tail(n, end, a)
                };
                body + tail
            }
            KernelShape::Gaussian { a, .. } => {
                let end = trunc.min(8.0 * a);
                let body = adaptive(f, 0.0, end, 0.0, tol).value;
                let tail = if trunc.is_finite() && trunc <= end {
                    0.0
                } else {
                    c * gaussian_moment_tail(n, end, a)
                };
                body + tail
            }
            KernelShape::Tophat { radius, .. } => adaptive(f, 0.0, radius.min(trunc), 0.0, tol).value,
            KernelShape::PowerLaw { beta, cutoff, .. } => {
                let rc = cutoff.unwrap_or(f64::INFINITY);
                let inner_end = rc.min(trunc).min(1.0);
                // singular piece, then the smooth remainder of the power-law branch
                let mut v = tanh_sinh().integrate(f, 0.0, inner_end);
                let pl_end = rc.min(trunc);
                if pl_end.is_infinite() {
                    return f64::INFINITY;
                }
                if pl_end > inner_end {
                    v += adaptive(f, inner_end, pl_end, 0.0, tol).value;
                }
                if trunc > rc {
                    let end = trunc.min(rc + 40.0);
                    v += adaptive(f, rc, end, 0.0, tol).value;
                    if !(trunc.is_finite() && trunc <= end) {
                        // c·rc^{-β}·∫_end^∞ e^{-(r-rc)} r^n dr
                        v += c * rc.powf(-beta) * (rc).exp() * exp_moment_tail(n, end, 1.0);
                    }
                }
                v
            }
        };
        sigma * radial
    }

    /// Weak-`L^p` quasi-norm of `K·1_{B_δ}`: `sup_t t·|{x ∈ B_δ : K(|x|) > t}|^{1/p}`.
    ///
    /// Level-set measures come from [`Kernel::level_radius`]; `t` is swept over a
    /// logarithmic grid between the smallest and largest values `K` takes on
    /// `B_δ`, and the best grid point is refined by golden-section search.
    /// Returns `∞` when `t·|{K > t}|^{1/p}` still grows at the top of the sweep.
    pub fn weak_lp_norm(&self, p: f64, delta: f64) -> Result<f64> {
        if !(p > 1.0) {
            return Err(Error::InvalidParameter(format!("weak L^p norm needs p > 1, got {p}")));
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "weak L^p norm needs delta > 0, got {delta}"
            )));
        }
        if self.amplitude() == 0.0 {
            return Ok(0.0);
        }
        let omega = self.dim.ball_volume();
        let d = self.dim.as_f64();
        let edge = match self.support_radius() {
            Some(s) => s.min(delta),
            None => delta,
        };
        let k_top = self.eval(0.0);
        if p.is_infinite() {
            return Ok(k_top);
        }
        let measure = |t: f64| {
            let rho = self.level_radius(t).min(delta);
            omega * rho.powf(d)
        };
        let objective = |t: f64| t * measure(t).powf(1.0 / p);
        let just_below = |v: f64| v * (1.0 - 1e-12);

        let t_lo = just_below(self.eval(edge * (1.0 - 1e-15)));
        let t_hi = if k_top.is_finite() {
            just_below(k_top)
        } else {
            self.eval(edge * 1e-12)
        };
        if !(t_lo > 0.0) || t_hi <= t_lo {
            return Ok(objective(t_lo.max(0.0)));
        }

        let samples = 2000;
        let (ln_lo, ln_hi) = (t_lo.ln(), t_hi.ln());
        let mut best = objective(t_lo);
        let mut best_idx = 0;
        let grid_t = |i: usize| (ln_lo + (ln_hi - ln_lo) * i as f64 / samples as f64).exp();
        for i in 0..=samples {
            let t = grid_t(i);
            let v = objective(t);
            if v > best {
                best = v;
                best_idx = i;
            }
        }
        let mut candidates = vec![t_hi];
        for b in self.breakpoints() {
            if b < edge {
                candidates.push(just_below(self.eval(b * (1.0 - 1e-15))));
            }
        }
        for t in candidates {
            if t > 0.0 && t <= t_hi {
                let v = objective(t);
                if v > best {
                    best = v;
                }
            }
        }

        if self.is_singular() {
            let probe = (t_hi / 1e3).max(t_lo);
            let top = objective(t_hi);
            let lower = objective(probe);
            if top > 0.0 && lower > 0.0 && (top / lower).ln() / (t_hi / probe).ln() > 1e-6 {
                return Ok(f64::INFINITY);
            }
        }

        // golden-section refinement in log t around the best grid point
        if best_idx > 0 && best_idx < samples {
            let (mut a, mut b) = (grid_t(best_idx - 1).ln(), grid_t(best_idx + 1).ln());
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let f = |x: f64| objective(x.exp());
            let mut x1 = b - g * (b - a);
            let mut x2 = a + g * (b - a);
            let (mut f1, mut f2) = (f(x1), f(x2));
            for _ in 0..80 {
                if f1 < f2 {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + g * (b - a);
                    f2 = f(x2);
                } else {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - g * (b - a);
                    f1 = f(x1);
                }
            }
            best = best.max(f1.max(f2));
        }
        Ok(best)
    }

    /// Checks `K ≥ 0` and nonincreasing on 10³ sample radii.
    pub fn check_monotone(&self) -> Result<()> {
        let span = 4.0 * self.length_scale() + self.breakpoints().iter().fold(0.0f64, |m, &b| m.max(b)) + 1.0;
        let mut prev = f64::INFINITY;
        for i in 1..=1000 {
            let r = span * i as f64 / 1000.0;
            let v = self.eval(r);
            if !(v >= 0.0) || v > prev * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "kernel {} is not nonnegative and nonincreasing near r = {r}",
                    self.shape.name()
                )));
            }
            prev = v;
        }
        Ok(())
    }

    /// Stable 64-bit fingerprint of the kernel parameters.
    pub fn fingerprint(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.to_string().as_bytes());
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.shape {
            KernelShape::Exponential { c, a } => write!(f, "exponential(c={c:e}, a={a:e})")?,
            KernelShape::Gaussian { c, a } => write!(f, "gaussian(c={c:e}, a={a:e})")?,
            KernelShape::Tophat { c, radius } => write!(f, "tophat(c={c:e}, radius={radius:e})")?,
            KernelShape::PowerLaw { c, beta, cutoff } => match cutoff {
                Some(rc) => write!(f, "power_law(c={c:e}, beta={beta:e}, cutoff={rc:e})")?,
                None => write!(f, "power_law(c={c:e}, beta={beta:e}, cutoff=none)")?,
            },
        }
        write!(f, " d={}", self.dim)?;
        if let Some(t) = self.truncation {
            write!(f, " truncated at {t:e}")?;
        }
        Ok(())
    }
}

/// `∫_T^∞ r^n e^{-r/a} dr = a e^{-T/a} Σ_{k=0}^n n!/(n-k)! T^{n-k} a^k`
fn exp_moment_tail(n: usize, t: f64, a: f64) -> f64 {
    let mut sum = 0.0;
    let mut falling = 1.0;
    for k in 0..=n {
        sum += falling * t.powi((n - k) as i32) * a.powi(k as i32);
        falling *= (n - k) as f64;
    }
    a * (-t / a).exp() * sum
}

/// `∫_T^∞ r^n e^{-(r/a)²} dr` for `n ∈ {1, 2}`.
fn gaussian_moment_tail(n: usize, t: f64, a: f64) -> f64 {
    let x = t / a;
    let g = (-x * x).exp();
    match n {
        1 => 0.5 * a * a * g,
        2 => 0.5 * a * a * t * g + 0.25 * a * a * a * std::f64::consts::PI.sqrt() * erfc_large(x),
        _ => unreachable!("dimension 2 or 3"),
    }
}

/// `erfc(x)` for `x ≥ 4` from the asymptotic series.
fn erfc_large(x: f64) -> f64 {
    debug_assert!(x >= 4.0);
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..8 {
        term *= -((2 * k - 1) as f64) / (2.0 * x2);
        sum += term;
    }
    (-x2).exp() / (x * std::f64::consts::PI.sqrt()) * sum
}
