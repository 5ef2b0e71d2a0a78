//! Radial grids on `[0, R]` and nonnegative densities sampled on them.
//!
//! A [`RadialGrid`] splits the ball `B_R ⊂ ℝ^d` into `N` concentric annuli of
//! equal radial width. A [`Profile`] assigns one nonnegative value to every
//! annulus, so it is a piecewise-constant radial density; every integral in this
//! crate (mass, norms, energies) is evaluated exactly for that step function.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Largest relative mass loss accepted by [`Profile::rescale_mass_invariant`].
pub const RESCALE_MASS_TOLERANCE: f64 = 1e-6;

/// Spatial dimension. Only `d = 2` and `d = 3` are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    pub fn new(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Dimension::Two),
            3 => Ok(Dimension::Three),
            _ => Err(Error::InvalidParameter(format!("dimension must be 2 or 3, got {d}"))),
        }
    }

    pub fn get(self) -> usize {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.get() as f64
    }

    /// Surface area of the unit sphere `S^{d-1}`.
    pub fn sphere_area(self) -> f64 {
        match self {
            Dimension::Two => 2.0 * PI,
            Dimension::Three => 4.0 * PI,
        }
    }

    /// Volume of the unit ball.
    pub fn ball_volume(self) -> f64 {
        match self {
            Dimension::Two => PI,
            Dimension::Three => 4.0 * PI / 3.0,
        }
    }

    /// `r^{d-1}`
    pub fn radial_weight(self, r: f64) -> f64 {
        match self {
            Dimension::Two => r,
            Dimension::Three => r * r,
        }
    }

    /// `r^d`
    pub fn pow_d(self, r: f64) -> f64 {
        match self {
            Dimension::Two => r * r,
            Dimension::Three => r * r * r,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.get())
    }
}

/// Uniform radial grid of `N` annuli covering `B_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: Dimension,
    radius: f64,
    edges: Vec<f64>,
    centers: Vec<f64>,
    volumes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(d: usize, radius: f64, cells: usize) -> Result<Self> {
        let dim = Dimension::new(d)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid radius must be positive, got {radius}"
            )));
        }
        if cells < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 cells, got {cells}"
            )));
        }
        let edges: Vec<f64> = (0..=cells).map(|i| radius * i as f64 / cells as f64).collect();
        let centers = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
        let volumes = edges
            .windows(2)
            .map(|e| dim.ball_volume() * (dim.pow_d(e[1]) - dim.pow_d(e[0])))
            .collect();
        Ok(Self {
            dim,
            radius,
            edges,
            centers,
            volumes,
        })
    }

    pub fn shared(d: usize, radius: f64, cells: usize) -> Result<Arc<Self>> {
        Self::new(d, radius, cells).map(Arc::new)
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Radial cell width `Δr = R / N`.
    pub fn spacing(&self) -> f64 {
        self.radius / self.len() as f64
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Exact annulus volumes `w_i`.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Area of the sphere through the outer edge of cell `i`.
    pub fn interface_area(&self, i: usize) -> f64 {
        self.dim.sphere_area() * self.dim.radial_weight(self.edges[i + 1])
    }

    pub fn ball_volume(&self, r: f64) -> f64 {
        self.dim.ball_volume() * self.dim.pow_d(r)
    }

    /// Index of the cell containing radius `r` (clamped to the grid).
    pub fn cell_of(&self, r: f64) -> usize {
        let k = (r / self.spacing()).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.len() - 1)
        }
    }
}

/// Nonnegative piecewise-constant radial density on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidProfile(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidProfile(format!("cell {i} holds {v}")));
        }
        Ok(Self { grid, values })
    }

    /// Skips validation; callers guarantee finite nonnegative values.
    pub(crate) fn from_raw(grid: Arc<RadialGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self::from_raw(grid, vec![0.0; n])
    }

    pub fn constant(grid: Arc<RadialGrid>, c: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![c; n])
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.centers().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    /// Cell averages of the radial function `f`, computed with an 8-point
    /// Gauss rule on each annulus. This is the finite-volume projection of `f`.
    pub fn from_cell_averages(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let rule = gauss_legendre(8);
        let dim = grid.dim();
        let sigma = dim.sphere_area();
        let values = grid
            .edges()
            .windows(2)
            .zip(grid.volumes())
            .map(|(e, &w)| sigma * rule.integrate(|r| f(r) * dim.radial_weight(r), e[0], e[1]) / w)
            .collect();
        Self::new(grid, values)
    }

    /// Gaussian bump `exp(-r²/(2 width²))` projected onto the grid and scaled to `mass`.
    pub fn gaussian(grid: Arc<RadialGrid>, mass: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && mass >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gaussian needs width > 0 and mass >= 0, got width {width}, mass {mass}"
            )));
        }
        let p = Self::from_cell_averages(grid, |r| (-0.5 * r * r / (width * width)).exp())?;
        p.with_mass(mass)
    }

    /// Rescales the values so that the mass equals `mass`.
    pub fn with_mass(mut self, mass: f64) -> Result<Self> {
        let current = self.mass();
        if current <= 0.0 {
            return Err(Error::InvalidProfile("cannot normalize a zero profile".into()));
        }
        let s = mass / current;
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &Profile) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }

    /// `Σ u_i w_i`
    pub fn mass(&self) -> f64 {
        self.values.iter().zip(self.grid.volumes()).map(|(u, w)| u * w).sum()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// `L^p` norm of the step function; `p = ∞` gives the maximum.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidParameter(format!("L^p norm needs p >= 1, got {p}")));
        }
        if p.is_infinite() {
            return Ok(self.sup());
        }
        let sup = self.sup();
        if sup == 0.0 {
            return Ok(0.0);
        }
        // scale by the maximum so that large p does not overflow
        let s: f64 = self
            .values
            .iter()
            .zip(self.grid.volumes())
            .map(|(u, w)| (u / sup).powf(p) * w)
            .sum();
        Ok(sup * s.powf(1.0 / p))
    }

    /// Mass inside the ball of radius `rho`; the cell cut by the sphere
    /// contributes in proportion to the volume inside.
    pub fn concentration(&self, rho: f64) -> Result<f64> {
        let g = &self.grid;
        if !(0.0..=g.radius()).contains(&rho) {
            return Err(Error::InvalidParameter(format!(
                "concentration radius {rho} outside [0, {}]",
                g.radius()
            )));
        }
        if rho == g.radius() {
            return Ok(self.mass());
        }
        let k = g.cell_of(rho);
        let full: f64 = self.values[..k].iter().zip(&g.volumes()[..k]).map(|(u, w)| u * w).sum();
        let partial = self.values[k] * (g.ball_volume(rho) - g.ball_volume(g.edges()[k]));
        Ok(full + partial.max(0.0))
    }

    /// Mass in the outer `fraction` of radii, `R(1 - fraction) < r ≤ R`.
    pub fn boundary_mass(&self, fraction: f64) -> f64 {
        let g = &self.grid;
        let inner = g.radius() * (1.0 - fraction);
        self.mass() - self.concentration(inner.clamp(0.0, g.radius())).unwrap_or(0.0)
    }

    /// Mass-invariant rescaling `u_λ(r) = λ^d u(λ r)` resampled onto the same grid.
    ///
    /// The cumulative mass `C(ρ) = ∫_{B_ρ} u` is interpolated by a monotone
    /// cubic Hermite spline in `ρ` and the new cell masses are the increments
    /// `C(λ e_{i+1}) - C(λ e_i)`. Monotonicity of the spline keeps every cell
    /// nonnegative and the increments telescope, so mass is only lost when
    /// `λR` cuts into the support.
    pub fn rescale_mass_invariant(&self, lambda: f64) -> Result<Profile> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scaling factor must be positive, got {lambda}"
            )));
        }
        if lambda == 1.0 {
            return Ok(self.clone());
        }
        let cumulative = CumulativeMass::new(self);
        let g = &self.grid;
        let total = cumulative.total();
        let lost = total - cumulative.eval(lambda * g.radius());
        let tolerance = RESCALE_MASS_TOLERANCE * total;
        if lost > tolerance {
            return Err(Error::SupportOverflow { lost, tolerance });
        }
        let mut prev = 0.0;
        let values = g
            .edges()
            .iter()
            .skip(1)
            .zip(g.volumes())
            .map(|(&e, &w)| {
                let c = cumulative.eval(lambda * e);
                let v = ((c - prev) / w).max(0.0);
                prev = c;
                v
            })
            .collect();
        Ok(Profile::from_raw(Arc::clone(&self.grid), values))
    }

    /// Writes the profile as CSV: a `# d=.. R=.. N=..` line, optional extra
    /// comment lines, an `r,u` header and one row per cell.
    pub fn write_csv(&self, path: &Path, comments: &[String]) -> Result<()> {
        let mut out = Vec::new();
        self.write_csv_to(&mut out, comments).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn write_csv_to<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        let g = &self.grid;
        writeln!(w, "# d={} R={} N={}", g.dim(), g.radius(), g.len())?;
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "r,u")?;
        for (r, u) in g.centers().iter().zip(&self.values) {
            writeln!(w, "{r},{u}")?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Profile> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = BufReader::new(file);
        let mut first = String::new();
        reader.read_line(&mut first).map_err(|e| Error::io(path, e))?;
        let (d, radius, cells) = parse_grid_line(&first)
            .ok_or_else(|| Error::format(path, "first line must read '# d=<2|3> R=<radius> N=<cells>'"))?;
        let grid = RadialGrid::shared(d, radius, cells).map_err(|e| Error::format(path, e.to_string()))?;
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .has_headers(true)
            .from_reader(reader);
        let mut values = Vec::with_capacity(cells);
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
            if rec.len() != 2 {
                return Err(Error::format(path, format!("row {} has {} fields", i + 1, rec.len())));
            }
            let u: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|_| Error::format(path, format!("row {}: bad value '{}'", i + 1, &rec[1])))?;
            values.push(u);
        }
        Profile::new(grid, values).map_err(|e| Error::format(path, e.to_string()))
    }
}

fn parse_grid_line(line: &str) -> Option<(usize, f64, usize)> {
    let body = line.trim().strip_prefix('#')?;
    let (mut d, mut r, mut n) = (None, None, None);
    for tok in body.split_whitespace() {
        if let Some(v) = tok.strip_prefix("d=") {
            d = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("R=") {
            r = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("N=") {
            n = v.parse().ok();
        }
    }
    Some((d?, r?, n?))
}

/// Monotone cubic Hermite interpolant of the cumulative mass of a profile.
struct CumulativeMass<'a> {
    grid: &'a RadialGrid,
    knots: Vec<f64>,
    slopes: Vec<f64>,
}

impl<'a> CumulativeMass<'a> {
    fn new(p: &'a Profile) -> Self {
        let g = p.grid.as_ref();
        let n = g.len();
        let h = g.spacing();
        let dim = g.dim();
        let sigma = dim.sphere_area();
        let mut knots = Vec::with_capacity(n + 1);
        knots.push(0.0);
        let mut acc = 0.0;
        for (u, w) in p.values.iter().zip(g.volumes()) {
            acc += u * w;
            knots.push(acc);
        }
        let secant: Vec<f64> = knots.windows(2).map(|c| (c[1] - c[0]) / h).collect();
        let mut slopes = vec![0.0; n + 1];
        for k in 1..=n {
            let density = if k < n {
                0.5 * (p.values[k - 1] + p.values[k])
            } else {
                p.values[n - 1]
            };
            let raw = density * sigma * dim.radial_weight(g.edges()[k]);
            // Fritsch–Carlson bound keeps every cubic piece monotone.
            let left = secant[k - 1];
            let limit = if k < n { left.min(secant[k]) } else { left };
            slopes[k] = raw.min(3.0 * limit).max(0.0);
        }
        Self { grid: g, knots, slopes }
    }

    fn total(&self) -> f64 {
        *self.knots.last().expect("non-empty grid")
    }

    fn eval(&self, rho: f64) -> f64 {
        let g = self.grid;
        if rho >= g.radius() {
            return self.total();
        }
        if rho <= 0.0 {
            return 0.0;
        }
        let h = g.spacing();
        let k = g.cell_of(rho);
        let t = ((rho - g.edges()[k]) / h).clamp(0.0, 1.0);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let c = h00 * self.knots[k] + h10 * h * self.slopes[k] + h01 * self.knots[k + 1] + h11 * h * self.slopes[k + 1];
        c.clamp(self.knots[k], self.knots[k + 1])
    }
}
