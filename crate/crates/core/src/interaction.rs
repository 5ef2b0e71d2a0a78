//! Discretized interaction bilinear form `W(u) = ∬ u(x) K(|x-y|) u(y)` on a radial grid.
//!
//! The operator stores the exact cell-pair integrals
//!
//! ```text
//! P_ij = ∫_{A_i} ∫_{A_j} K(|x - y|) dx dy
//! ```
//!
//! over the annuli `A_i`, so that `W(u) = Σ u_i u_j P_ij` is exact for the
//! piecewise-constant profile and needs no quadrature over the profile itself.
//! Each `P_ij` reduces to a one-dimensional integral over the separation `t`:
//!
//! ```text
//! P_ij = σ_{d-1} ∫ K(t) t^{d-1} C_ij(t) dt,   C_ij(t) = |A_i ∩ (A_j + t e)|,
//! ```
//!
//! and `C_ij` is an inclusion-exclusion of four ball-ball intersection volumes.
//!
//! The angular-kernel view is available too: `ψ_ij = σ P_ij / (w_i w_j)` is the
//! cell average of `ψ(r, s) = ∫_{S^{d-1}} K(|r e - s θ|) dθ`, and with the line
//! weights `κ_i = w_i / σ` one has `W = σ Σ ψ_ij κ_i κ_j u_i u_j` and
//! `(K*u)_i = σ Σ_j ψ_ij κ_j u_j`, the average of `K*u` over annulus `i`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::quadrature::{adaptive, gauss_legendre, tanh_sinh, GaussLegendre, TanhSinh};
use crate::radial::{Dimension, Profile, RadialGrid};

const CACHE_MAGIC: &[u8; 8] = b"AGGPAIR1";
const RULE_NODES: usize = 12;
const CHUNKS_PER_SCALE: f64 = 2.0;

/// Largest relative discrepancy between the production rule and a refined rule,
/// over sampled entries of each class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureError {
    /// Entries with `|i - j| ≤ 1`.
    pub near: f64,
    pub far: f64,
}

#[derive(Debug, Clone)]
pub struct InteractionOperator {
    grid: Arc<RadialGrid>,
    kernel: Kernel,
    pairs: Vec<f64>,
    error: QuadratureError,
}

impl InteractionOperator {
    pub fn build(grid: Arc<RadialGrid>, kernel: &Kernel) -> Result<Self> {
        if kernel.dim() != grid.dim() {
            return Err(Error::InvalidParameter(format!(
                "kernel dimension {} does not match grid dimension {}",
                kernel.dim(),
                grid.dim()
            )));
        }
        let n = grid.len();
        let rules = Rules::production();
        let integrator = PairIntegrator::new(&grid, kernel);
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i..n).map(|j| integrator.pair(i, j, &rules)).collect())
            .collect();
        let mut pairs = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (k, v) in row.into_iter().enumerate() {
                let j = i + k;
                pairs[i * n + j] = v;
                pairs[j * n + i] = v;
            }
        }
        if let Some(v) = pairs.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("interaction entry {v}")));
        }
        let error = integrator.sample_error(&pairs);
        Ok(Self {
            grid,
            kernel: kernel.clone(),
            pairs,
            error,
        })
    }

    /// Loads the operator from `path` when it holds a matching cache, otherwise
    /// builds it and writes the cache.
    pub fn load_or_build(path: &Path, grid: Arc<RadialGrid>, kernel: &Kernel) -> Result<Self> {
        if path.exists() {
            if let Some(op) = Self::load(path, grid.clone(), kernel)? {
                return Ok(op);
            }
        }
        let op = Self::build(grid, kernel)?;
        op.save(path)?;
        Ok(op)
    }

    /// The operator of the same kernel shape with amplitude `c`. Entries are
    /// linear in the amplitude, so this rescales instead of integrating again.
    pub fn with_amplitude(&self, c: f64) -> Result<Self> {
        let kernel = self.kernel.with_amplitude(c)?;
        let old = self.kernel.amplitude();
        if old == 0.0 {
            return Self::build(self.grid.clone(), &kernel);
        }
        let factor = c / old;
        Ok(Self {
            grid: self.grid.clone(),
            kernel,
            pairs: self.pairs.iter().map(|p| p * factor).collect(),
            error: self.error,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn quadrature_error(&self) -> QuadratureError {
        self.error
    }

    /// `P_ij`
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.pairs[i * self.len() + j]
    }

    pub fn pairs(&self) -> &[f64] {
        &self.pairs
    }

    /// `ψ_ij = σ P_ij / (w_i w_j)`, the cell average of the angular kernel.
    pub fn psi(&self, i: usize, j: usize) -> f64 {
        let w = self.grid.volumes();
        self.grid.dim().sphere_area() * self.pair(i, j) / (w[i] * w[j])
    }

    /// `κ_i = w_i / σ`
    pub fn kappa(&self, i: usize) -> f64 {
        self.grid.volumes()[i] / self.grid.dim().sphere_area()
    }

    fn check(&self, u: &Profile) -> Result<()> {
        if u.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `W(u) = Σ u_i u_j P_ij`
    pub fn energy(&self, u: &Profile) -> Result<f64> {
        self.check(u)?;
        Ok(self.energy_of(u.values()))
    }

    pub(crate) fn energy_of(&self, u: &[f64]) -> f64 {
        let n = self.len();
        let mut total = 0.0;
        for (i, &ui) in u.iter().enumerate() {
            if ui == 0.0 {
                continue;
            }
            let row = &self.pairs[i * n..(i + 1) * n];
            let s: f64 = row.iter().zip(u).map(|(p, uj)| p * uj).sum();
            total += ui * s;
        }
        total.max(0.0)
    }

    /// Cell averages of `K*u`.
    pub fn convolve(&self, u: &Profile) -> Result<Profile> {
        self.check(u)?;
        Ok(Profile::from_raw(self.grid.clone(), self.convolve_values(u.values())))
    }

    pub(crate) fn convolve_values(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        let w = self.grid.volumes();
        // column sweep over the support; P is symmetric
        let mut acc = vec![0.0; n];
        for (j, &uj) in u.iter().enumerate() {
            if uj == 0.0 {
                continue;
            }
            let row = &self.pairs[j * n..(j + 1) * n];
            for (a, p) in acc.iter_mut().zip(row) {
                *a += p * uj;
            }
        }
        acc.iter().zip(w).map(|(a, wi)| (a / wi).max(0.0)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        w.write_all(CACHE_MAGIC).map_err(io)?;
        w.write_all(&(self.grid.dim().get() as u32).to_le_bytes()).map_err(io)?;
        w.write_all(&(self.len() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&self.grid.radius().to_le_bytes()).map_err(io)?;
        w.write_all(&self.kernel.fingerprint().to_le_bytes()).map_err(io)?;
        w.write_all(&self.error.near.to_le_bytes()).map_err(io)?;
        w.write_all(&self.error.far.to_le_bytes()).map_err(io)?;
        for v in &self.pairs {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Reads a cache file; `Ok(None)` when it was written for another grid or kernel.
    pub fn load(path: &Path, grid: Arc<RadialGrid>, kernel: &Kernel) -> Result<Option<Self>> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
        if &magic != CACHE_MAGIC {
            return Err(Error::format(path, "not an interaction cache"));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        let mut read8 = |r: &mut BufReader<File>| -> Result<[u8; 8]> {
            r.read_exact(&mut b8).map_err(|e| Error::io(path, e))?;
            Ok(b8)
        };
        r.read_exact(&mut b4).map_err(|e| Error::io(path, e))?;
        let d = u32::from_le_bytes(b4) as usize;
        let n = u64::from_le_bytes(read8(&mut r)?) as usize;
        let radius = f64::from_le_bytes(read8(&mut r)?);
        let hash = u64::from_le_bytes(read8(&mut r)?);
        let near = f64::from_le_bytes(read8(&mut r)?);
        let far = f64::from_le_bytes(read8(&mut r)?);
        if d != grid.dim().get() || n != grid.len() || radius != grid.radius() || hash != kernel.fingerprint() {
            return Ok(None);
        }
        let mut bytes = vec![0u8; n * n * 8];
        r.read_exact(&mut bytes)
            .map_err(|_| Error::format(path, "truncated interaction cache"))?;
        let pairs = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Some(Self {
            grid,
            kernel: kernel.clone(),
            pairs,
            error: QuadratureError { near, far },
        }))
    }
}

struct Rules {
    gl: &'static GaussLegendre,
    ts: &'static TanhSinh,
}

impl Rules {
    fn production() -> Self {
        Self {
            gl: gauss_legendre(RULE_NODES),
            ts: tanh_sinh(),
        }
    }

    fn refined() -> Self {
        static FINE: OnceLock<TanhSinh> = OnceLock::new();
        Self {
            gl: gauss_legendre(2 * RULE_NODES),
            ts: FINE.get_or_init(|| TanhSinh::new(1.0 / 24.0)),
        }
    }
}

struct PairIntegrator<'a> {
    dim: Dimension,
    edges: &'a [f64],
    kernel: &'a Kernel,
    reach: f64,
    chunk: f64,
    spacing: f64,
    kernel_breaks: Vec<f64>,
    singular: bool,
}

impl<'a> PairIntegrator<'a> {
    fn new(grid: &'a RadialGrid, kernel: &'a Kernel) -> Self {
        Self {
            dim: grid.dim(),
            edges: grid.edges(),
            kernel,
            reach: kernel.reach(),
            chunk: CHUNKS_PER_SCALE * kernel.length_scale(),
            spacing: grid.spacing(),
            kernel_breaks: kernel.breakpoints(),
            singular: kernel.is_singular(),
        }
    }

    fn pair(&self, i: usize, j: usize, rules: &Rules) -> f64 {
        if self.kernel.amplitude() == 0.0 {
            return 0.0;
        }
        let (a0, a1) = (self.edges[i], self.edges[i + 1]);
        let (b0, b1) = (self.edges[j], self.edges[j + 1]);
        let low = (a0 - b1).max(b0 - a1).max(0.0);
        let top = (a1 + b1).min(self.reach);
        if top <= low {
            return 0.0;
        }
        let mut breaks = vec![low, top];
        for &x in &[a0, a1] {
            for &y in &[b0, b1] {
                breaks.push((x - y).abs());
                breaks.push(x + y);
            }
        }
        breaks.extend_from_slice(&self.kernel_breaks);
        breaks.retain(|&b| b >= low && b <= top);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * top);

        let d = self.dim;
        let f = |t: f64| {
            let c = lens(d, a1, b1, t) - lens(d, a0, b1, t) - lens(d, a1, b0, t) + lens(d, a0, b0, t);
            if c <= 0.0 {
                0.0
            } else {
                self.kernel.radial_density(t) * c
            }
        };
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let (p, q) = (w[0], w[1]);
            if q <= p {
                continue;
            }
            for c in graded(p, q, self.spacing, self.chunk).windows(2) {
                let (mut x, end) = (c[0], c[1]);
                while x < end {
                    let mut len = end - x;
                    if self.singular && x > 0.0 {
                        len = len.min(x);
                    }
                    let mut y = x + len;
                    if y > end - 0.25 * len {
                        y = end;
                    }
                    total += if x == 0.0 {
                        rules.ts.integrate(f, x, y)
                    } else {
                        rules.gl.integrate_cosine_mapped(f, x, y)
                    };
                    x = y;
                }
            }
        }
        (d.sphere_area() * total).max(0.0)
    }

    /// Compares sampled entries against the refined rule.
    fn sample_error(&self, pairs: &[f64]) -> QuadratureError {
        let n = self.edges.len() - 1;
        let fine = Rules::refined();
        let scale = pairs.iter().fold(0.0f64, |m, &v| m.max(v)).max(f64::MIN_POSITIVE);
        let rel = |i: usize, j: usize| {
            let refined = self.pair(i, j, &fine);
            (pairs[i * n + j] - refined).abs() / refined.abs().max(1e-6 * scale)
        };
        let samples = 8.min(n);
        let mut near = 0.0f64;
        let mut far = 0.0f64;
        for k in 0..samples {
            let i = k * (n - 1) / (samples - 1).max(1);
            near = near.max(rel(i, i)).max(rel(i, (i + 1).min(n - 1)));
            far = far.max(rel(i, (i + n / 3 + 2) % n));
        }
        QuadratureError { near, far }
    }
}

/// Cut points of `[p, q]`: steps double away from both ends, starting at `h0`
/// and capped at `hmax`. The overlap volume of two thin shells varies on the
/// shell width near every breakpoint and on the kernel scale elsewhere.
fn graded(p: f64, q: f64, h0: f64, hmax: f64) -> Vec<f64> {
    let h0 = h0.min(hmax);
    if q - p <= 4.0 * h0 {
        return vec![p, q];
    }
    let mid = 0.5 * (p + q);
    let mut left = vec![p];
    let mut right = vec![q];
    let mut h = h0;
    while left.last().copied().unwrap_or(p) + h < mid - 0.25 * h {
        left.push(left.last().copied().unwrap_or(p) + h);
        right.push(right.last().copied().unwrap_or(q) - h);
        h = (2.0 * h).min(hmax);
    }
    left.push(mid);
    left.extend(right.into_iter().rev());
    left
}

/// Volume of `B_a(0) ∩ B_b(t e)`.
pub fn lens(d: Dimension, a: f64, b: f64, t: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 || t >= a + b {
        return 0.0;
    }
    let small = a.min(b);
    if t <= (a - b).abs() {
        return d.ball_volume() * d.pow_d(small);
    }
    match d {
        Dimension::Two => {
            let ca = ((t * t + a * a - b * b) / (2.0 * t * a)).clamp(-1.0, 1.0);
            let cb = ((t * t + b * b - a * a) / (2.0 * t * b)).clamp(-1.0, 1.0);
            let k = (-t + a + b) * (t + a - b) * (t - a + b) * (t + a + b);
            a * a * ca.acos() + b * b * cb.acos() - 0.5 * k.max(0.0).sqrt()
        }
        Dimension::Three => {
            let s = a + b - t;
            std::f64::consts::PI * s * s * (t * t + 2.0 * t * (a + b) - 3.0 * (a - b) * (a - b)) / (12.0 * t)
        }
    }
}

/// `ψ(r, s) = ∫_{S^{d-1}} K(|r e - s θ|) dθ`, the sphere average of `K` between
/// radii `r` and `s` times the sphere area. Infinite on the diagonal when the
/// kernel singularity is not integrable over the sphere.
pub fn angular_kernel(kernel: &Kernel, r: f64, s: f64) -> f64 {
    let d = kernel.dim();
    if r == 0.0 || s == 0.0 {
        return d.sphere_area() * kernel.eval(r.max(s));
    }
    let sphere_dim = (d.get() - 1) as f64;
    if r == s && kernel.singular_exponent() >= sphere_dim {
        return f64::INFINITY;
    }
    match d {
        Dimension::Three => 2.0 * std::f64::consts::PI / (r * s) * first_moment(kernel, (r - s).abs(), r + s),
        Dimension::Two => {
            let dist = |theta: f64| (r * r + s * s - 2.0 * r * s * theta.cos()).max(0.0).sqrt();
            let f = |theta: f64| kernel.eval(dist(theta));
            let mut breaks = vec![0.0, std::f64::consts::PI];
            for b in kernel.breakpoints() {
                let c = (r * r + s * s - b * b) / (2.0 * r * s);
                if c > -1.0 && c < 1.0 {
                    breaks.push(c.acos());
                }
            }
            breaks.sort_by(f64::total_cmp);
            let mut total = 0.0;
            for w in breaks.windows(2) {
                total += if w[0] == 0.0 && r == s && kernel.is_singular() {
                    tanh_sinh().integrate(f, w[0], w[1])
                } else {
                    adaptive(f, w[0], w[1], 0.0, 1e-12).value
                };
            }
            2.0 * total
        }
    }
}

/// `∫_lo^hi K(τ) τ dτ`
fn first_moment(kernel: &Kernel, lo: f64, hi: f64) -> f64 {
    let mut breaks = vec![lo, hi];
    breaks.extend(kernel.breakpoints().into_iter().filter(|&b| b > lo && b < hi));
    breaks.sort_by(f64::total_cmp);
    let f = |t: f64| kernel.eval_weighted(t, 1.0);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += if w[0] == 0.0 && kernel.is_singular() {
            tanh_sinh().integrate(f, w[0], w[1])
        } else {
            adaptive(f, w[0], w[1], 0.0, 1e-13).value
        };
    }
    total
}
