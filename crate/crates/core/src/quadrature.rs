//! One-dimensional quadrature rules used by the kernel catalog and the
//! interaction operator.
//!
//! Three rules cover the integrands that occur here:
//! - Gauss–Legendre, optionally composed with a cosine map that turns
//!   `(t - a)^{k/2}` endpoint behaviour into an analytic integrand;
//! - tanh–sinh, for algebraic endpoint singularities of unknown order;
//! - adaptive Gauss–Kronrod (7/15), for everything that needs an error estimate.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Integrates over `[a, b]` after the substitution `t = a + (b-a)(1-cos θ)/2`.
    /// Integrands behaving like `|t - a|^{k/2}` or `|b - t|^{k/2}` become smooth in `θ`.
    pub fn integrate_cosine_mapped<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let len = b - a;
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let theta = 0.5 * PI * (x + 1.0);
            let (s, c) = theta.sin_cos();
            // Evaluate from the nearer end so that nodes never collapse onto the endpoints.
            let t = if c >= 0.0 {
                a + len * 0.5 * (1.0 - c)
            } else {
                b - len * 0.5 * (1.0 + c)
            };
            acc += w * f(t) * s;
        }
        acc * 0.25 * PI * len
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared rules, built once.
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (1..=64).map(GaussLegendre::new).collect());
    assert!((1..=64).contains(&n), "rule size {n} not tabulated");
    &rules[n - 1]
}

/// Fixed-level tanh–sinh rule on `[-1, 1]`, stored as (distance from the nearer
/// endpoint, sign, weight) so endpoint nodes keep full relative precision.
#[derive(Debug, Clone)]
pub struct TanhSinh {
    nodes: Vec<(f64, f64, f64)>,
}

impl TanhSinh {
    pub fn new(step: f64) -> Self {
        let mut nodes = Vec::new();
        let half_pi = 0.5 * PI;
        let mut k = 0i64;
        loop {
            let t = k as f64 * step;
            let u = half_pi * t.sinh();
            let cosh_u = u.cosh();
            let w = step * half_pi * t.cosh() / (cosh_u * cosh_u);
            // 1 - tanh(u) = 2 / (1 + e^{2u})
            let complement = 2.0 / (1.0 + (2.0 * u).exp());
            if w < 1e-300 || complement < 1e-300 {
                break;
            }
            if k == 0 {
                nodes.push((1.0, 0.0, w));
            } else {
                nodes.push((complement, 1.0, w));
                nodes.push((complement, -1.0, w));
            }
            k += 1;
        }
        Self { nodes }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for &(complement, sign, w) in &self.nodes {
            let t = if sign > 0.0 {
                b - half * complement
            } else if sign < 0.0 {
                a + half * complement
            } else {
                0.5 * (a + b)
            };
            acc += w * f(t);
        }
        acc * half
    }
}

pub fn tanh_sinh() -> &'static TanhSinh {
    static RULE: OnceLock<TanhSinh> = OnceLock::new();
    RULE.get_or_init(|| TanhSinh::new(1.0 / 12.0))
}

const XGK15: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG7: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK15[7] * fc;
    let mut gauss = WG7[3] * fc;
    for j in 0..7 {
        let dx = h * XGK15[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK15[j] * s;
        if j % 2 == 1 {
            gauss += WG7[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive Gauss–Kronrod 7/15 on `[a, b]`.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Estimate {
    if a == b {
        return Estimate { value: 0.0, error: 0.0 };
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let mut value = v;
    let mut error = e;
    let max_pieces = 4000;
    while error > abs_tol.max(rel_tol * value.abs()) && pieces.len() < max_pieces {
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, pv, pe) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            pieces.push((lo, hi, pv, 0.0));
            error -= pe;
            continue;
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        value += v1 + v2 - pv;
        error += e1 + e2 - pe;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    // Re-sum to shed the accumulated update rounding.
    let value = pieces.iter().map(|p| p.2).sum();
    let error = pieces.iter().map(|p| p.3).sum();
    Estimate { value, error }
}

/// Adaptive integration over consecutive pieces of a sorted breakpoint list.
pub fn adaptive_pieces<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Estimate {
    let mut total = Estimate { value: 0.0, error: 0.0 };
    for w in breaks.windows(2) {
        let e = adaptive(&mut f, w[0], w[1], abs_tol, rel_tol);
        total.value += e.value;
        total.error += e.error;
    }
    total
}
