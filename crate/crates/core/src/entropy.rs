//! Entropy densities `Φ(z)` built from power laws.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One term `c·z^e` of a power-sum entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTerm {
    pub coeff: f64,
    pub exponent: f64,
}

fn unit() -> f64 {
    1.0
}

/// Entropy laws as they appear in experiment configs, tagged by `form`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntropyLaw {
    /// `coeff·z^m/(m-1)`, `m > 1`.
    Power {
        m: f64,
        #[serde(default = "unit")]
        coeff: f64,
    },
    /// `χ₀·z²`
    Quadratic { chi0: f64 },
    /// `Σ c_k z^{e_k}` with `c_k > 0`, `e_k > 1`.
    PowerSum { terms: Vec<PowerTerm> },
}

/// Behaviour of `Φ(z)/z^q` as `z → ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthComparison {
    /// `Φ` grows faster than `z^q`: the ratio tends to `∞`.
    Faster,
    /// The ratio tends to this positive constant.
    Equal(f64),
    /// `Φ` grows slower: the ratio tends to `0`.
    Slower,
}

impl GrowthComparison {
    pub fn limit(&self) -> f64 {
        match *self {
            GrowthComparison::Faster => f64::INFINITY,
            GrowthComparison::Equal(c) => c,
            GrowthComparison::Slower => 0.0,
        }
    }
}

impl EntropyLaw {
    pub fn power(m: f64, coeff: f64) -> Result<Self> {
        let law = EntropyLaw::Power { m, coeff };
        law.validate()?;
        Ok(law)
    }

    pub fn quadratic(chi0: f64) -> Result<Self> {
        let law = EntropyLaw::Quadratic { chi0 };
        law.validate()?;
        Ok(law)
    }

    pub fn power_sum(terms: &[(f64, f64)]) -> Result<Self> {
        let law = EntropyLaw::PowerSum {
            terms: terms
                .iter()
                .map(|&(coeff, exponent)| PowerTerm { coeff, exponent })
                .collect(),
        };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            EntropyLaw::Power { m, coeff } => {
                if !(m.is_finite() && *m > 1.0) {
                    return bad(format!("power entropy needs m > 1, got {m}"));
                }
                if !(coeff.is_finite() && *coeff > 0.0) {
                    return bad(format!("power entropy needs a positive coefficient, got {coeff}"));
                }
            }
            EntropyLaw::Quadratic { chi0 } => {
                if !(chi0.is_finite() && *chi0 > 0.0) {
                    return bad(format!("quadratic entropy needs chi0 > 0, got {chi0}"));
                }
            }
            EntropyLaw::PowerSum { terms } => {
                if terms.is_empty() {
                    return bad("power sum entropy needs at least one term".into());
                }
                for t in terms {
                    if !(t.coeff.is_finite() && t.coeff > 0.0) {
                        return bad(format!("power sum coefficient must be positive, got {}", t.coeff));
                    }
                    if !(t.exponent.is_finite() && t.exponent > 1.0) {
                        return bad(format!("power sum exponent must exceed 1, got {}", t.exponent));
                    }
                }
            }
        }
        Ok(())
    }

    /// The law written as `Σ a_k z^{e_k}`.
    pub fn terms(&self) -> Vec<(f64, f64)> {
        match self {
            EntropyLaw::Power { m, coeff } => vec![(coeff / (m - 1.0), *m)],
            EntropyLaw::Quadratic { chi0 } => vec![(*chi0, 2.0)],
            EntropyLaw::PowerSum { terms } => terms.iter().map(|t| (t.coeff, t.exponent)).collect(),
        }
    }

    pub fn phi(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        self.terms().iter().map(|&(a, e)| a * z.powf(e)).sum()
    }

    pub fn phi_prime(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        self.terms().iter().map(|&(a, e)| a * e * z.powf(e - 1.0)).sum()
    }

    pub fn phi_second(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        self.terms()
            .iter()
            .map(|&(a, e)| a * e * (e - 1.0) * z.powf(e - 2.0))
            .sum()
    }

    /// `P(z) = zΦ'(z) - Φ(z)`; for the power law this is `coeff·z^m`.
    pub fn pressure(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        self.terms().iter().map(|&(a, e)| a * (e - 1.0) * z.powf(e)).sum()
    }

    /// `P'(z) = zΦ''(z)`
    pub fn pressure_slope(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        self.terms()
            .iter()
            .map(|&(a, e)| a * e * (e - 1.0) * z.powf(e - 1.0))
            .sum()
    }

    /// Smallest exponent: the growth order as `z → 0`.
    pub fn small_exponent(&self) -> f64 {
        self.terms().iter().map(|t| t.1).fold(f64::INFINITY, f64::min)
    }

    /// Largest exponent: the growth order as `z → ∞`.
    pub fn large_exponent(&self) -> f64 {
        self.terms().iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `χ = lim_{z→0} Φ(z)/z²`, which is `0`, a positive constant or `∞`.
    pub fn chi(&self) -> f64 {
        let g0 = self.small_exponent();
        if g0 > 2.0 {
            0.0
        } else if g0 < 2.0 {
            f64::INFINITY
        } else {
            self.coefficient_of(2.0)
        }
    }

    /// Sum of the coefficients whose exponent equals `e`.
    fn coefficient_of(&self, e: f64) -> f64 {
        self.terms().iter().filter(|t| t.1 == e).map(|t| t.0).sum()
    }

    /// Compares `Φ(z)` with `z^q` as `z → ∞`.
    pub fn growth_versus(&self, q: f64) -> GrowthComparison {
        let g = self.large_exponent();
        if g > q {
            GrowthComparison::Faster
        } else if g < q {
            GrowthComparison::Slower
        } else {
            GrowthComparison::Equal(self.coefficient_of(g))
        }
    }

    /// `Some(c)` when `Φ(z) = c·z²` exactly.
    pub fn pure_quadratic(&self) -> Option<f64> {
        let terms = self.terms();
        if terms.iter().all(|t| t.1 == 2.0) {
            Some(terms.iter().map(|t| t.0).sum())
        } else {
            None
        }
    }
}

impl fmt::Display for EntropyLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntropyLaw::Power { m, coeff } => write!(f, "power(m={m}, coeff={coeff})"),
            EntropyLaw::Quadratic { chi0 } => write!(f, "quadratic(chi0={chi0})"),
            EntropyLaw::PowerSum { terms } => {
                write!(f, "power_sum(")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{}z^{}", t.coeff, t.exponent)?;
                }
                write!(f, ")")
            }
        }
    }
}
