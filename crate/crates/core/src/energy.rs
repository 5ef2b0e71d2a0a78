//! Free energy `F(u) = S(u) - ½W(u)` and the interpolation chain that bounds `W`.

use std::sync::Arc;

use crate::entropy::EntropyLaw;
use crate::error::{Error, Result};
use crate::interaction::InteractionOperator;
use crate::kernel::Kernel;
use crate::radial::{Profile, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergyReport {
    pub entropy: f64,
    pub interaction: f64,
    pub free_energy: f64,
}

/// `S(u) = Σ Φ(u_i) w_i`
pub fn entropy_energy(law: &EntropyLaw, u: &Profile) -> f64 {
    entropy_of(law, u.values(), u.grid().volumes())
}

pub(crate) fn entropy_of(law: &EntropyLaw, u: &[f64], volumes: &[f64]) -> f64 {
    u.iter().zip(volumes).map(|(&v, w)| law.phi(v) * w).sum()
}

/// Entropy law paired with a prebuilt interaction operator.
#[derive(Debug, Clone)]
pub struct FreeEnergy {
    law: EntropyLaw,
    op: Arc<InteractionOperator>,
}

impl FreeEnergy {
    pub fn new(law: EntropyLaw, op: Arc<InteractionOperator>) -> Result<Self> {
        law.validate()?;
        Ok(Self { law, op })
    }

    /// Builds the operator for `kernel` on `grid`.
    pub fn build(law: EntropyLaw, kernel: &Kernel, grid: Arc<RadialGrid>) -> Result<Self> {
        let op = InteractionOperator::build(grid, kernel)?;
        Self::new(law, Arc::new(op))
    }

    pub fn law(&self) -> &EntropyLaw {
        &self.law
    }

    pub fn operator(&self) -> &Arc<InteractionOperator> {
        &self.op
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.op.grid()
    }

    pub fn evaluate(&self, u: &Profile) -> Result<FreeEnergyReport> {
        let w = self.op.energy(u)?;
        Ok(self.report(entropy_energy(&self.law, u), w))
    }

    fn report(&self, s: f64, w: f64) -> FreeEnergyReport {
        FreeEnergyReport {
            entropy: s,
            interaction: w,
            free_energy: s - 0.5 * w,
        }
    }

    /// `δF/δu = Φ'(u) - K*u`, cell by cell.
    pub fn first_variation(&self, u: &Profile) -> Result<Vec<f64>> {
        let conv = self.op.convolve(u)?;
        Ok(self.first_variation_from(u.values(), conv.values()))
    }

    pub(crate) fn first_variation_from(&self, u: &[f64], conv: &[f64]) -> Vec<f64> {
        u.iter().zip(conv).map(|(&v, c)| self.law.phi_prime(v) - c).collect()
    }
}

/// Terms of the chain `lhs ≤ C₀·mid ≤ C₀·rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationReport {
    /// `∬ u u K·1_{B_δ}`
    pub lhs: f64,
    /// `‖K·1_{B_δ}‖_{p,∞} ‖u‖²_{2p/(2p-1)}`
    pub mid: f64,
    /// `‖K·1_{B_δ}‖_{p,∞} ‖u‖₁^{2-m*} ‖u‖_{m*}^{m*}`
    pub rhs: f64,
    pub weak_norm: f64,
    pub p: f64,
    pub m_star: f64,
}

impl InterpolationReport {
    /// `lhs/mid`, a sample lower bound for the constant `C₀`.
    pub fn lhs_over_mid(&self) -> f64 {
        if self.mid > 0.0 {
            self.lhs / self.mid
        } else {
            0.0
        }
    }

    pub fn mid_over_rhs(&self) -> f64 {
        if self.rhs > 0.0 {
            self.mid / self.rhs
        } else {
            0.0
        }
    }

    /// The Hölder step `mid ≤ rhs` holds up to rounding.
    pub fn interpolation_holds(&self) -> bool {
        self.mid <= self.rhs * (1.0 + 1e-12) + f64::MIN_POSITIVE
    }
}

/// Builds the `δ`-truncated operator and evaluates the chain for `u`.
pub fn interpolation_check(u: &Profile, kernel: &Kernel, p: f64, delta: f64) -> Result<InterpolationReport> {
    let truncated = kernel.truncated(delta)?;
    let op = InteractionOperator::build(u.grid().clone(), &truncated)?;
    interpolation_check_with(&op, u, p)
}

/// Evaluates the chain with an operator whose kernel is already truncated.
pub fn interpolation_check_with(op: &InteractionOperator, u: &Profile, p: f64) -> Result<InterpolationReport> {
    let delta = op
        .kernel()
        .truncation()
        .ok_or_else(|| Error::InvalidParameter("interpolation chain needs a truncated kernel".into()))?;
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("exponent p must exceed 1, got {p}")));
    }
    let weak_norm = op.kernel().weak_lp_norm(p, delta)?;
    interpolation_terms(op.energy(u)?, weak_norm, u, p)
}

pub(crate) fn interpolation_terms(lhs: f64, weak_norm: f64, u: &Profile, p: f64) -> Result<InterpolationReport> {
    let m_star = if p.is_infinite() { 1.0 } else { (p + 1.0) / p };
    let q = if p.is_infinite() {
        1.0
    } else {
        2.0 * p / (2.0 * p - 1.0)
    };
    let mid = weak_norm * u.lp_norm(q)?.powi(2);
    let rhs = weak_norm * u.lp_norm(1.0)?.powf(2.0 - m_star) * u.lp_norm(m_star)?.powf(m_star);
    Ok(InterpolationReport {
        lhs,
        mid,
        rhs,
        weak_norm,
        p,
        m_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::RadialGrid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn zero_profile_has_zero_energy() {
        let grid = RadialGrid::shared(2, 5.0, 32).unwrap();
        let fe = FreeEnergy::build(
            EntropyLaw::power(2.0, 1.0).unwrap(),
            &Kernel::exponential(1.0, 1.0, 2).unwrap(),
            grid.clone(),
        )
        .unwrap();
        let r = fe.evaluate(&Profile::zeros(grid)).unwrap();
        assert_eq!((r.entropy, r.interaction, r.free_energy), (0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_cube_entropy() {
        let grid = RadialGrid::shared(3, 2.0, 40).unwrap();
        let u = Profile::constant(grid.clone(), 0.3).unwrap();
        let s = entropy_energy(&EntropyLaw::power(3.0, 1.0).unwrap(), &u);
        let exact = 0.3f64.powi(3) / 2.0 * (4.0 / 3.0 * PI * 8.0);
        assert!((s - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn quadratic_entropy_is_squared_l2_norm() {
        let grid = RadialGrid::shared(2, 4.0, 64).unwrap();
        let u = Profile::gaussian(grid, 2.0, 0.7).unwrap();
        let s = entropy_energy(&EntropyLaw::quadratic(1.0).unwrap(), &u);
        assert!((s - u.lp_norm(2.0).unwrap().powi(2)).abs() < 1e-12 * s);
    }

    #[test]
    fn zero_kernel_leaves_entropy() {
        let grid = RadialGrid::shared(2, 4.0, 32).unwrap();
        let k = Kernel::exponential(0.0, 1.0, 2).unwrap();
        let fe = FreeEnergy::build(EntropyLaw::power(2.0, 1.0).unwrap(), &k, grid.clone()).unwrap();
        let u = Profile::gaussian(grid, 1.0, 1.0).unwrap();
        let r = fe.evaluate(&u).unwrap();
        assert_eq!(r.interaction, 0.0);
        assert_eq!(r.free_energy, r.entropy);
        assert!(r.entropy > 0.0);
    }

    #[test]
    fn point_mass_convolution_with_tophat() {
        let grid = RadialGrid::shared(2, 3.0, 300).unwrap();
        let mut v = vec![0.0; 300];
        v[0] = 2.0 / grid.volumes()[0];
        let u = Profile::new(grid.clone(), v).unwrap();
        let op = InteractionOperator::build(grid.clone(), &Kernel::tophat(1.0, 1.0, 2).unwrap()).unwrap();
        let c = op.convolve(&u).unwrap();
        for (i, &r) in grid.centers().iter().enumerate() {
            if r < 0.97 {
                assert!((c.values()[i] - 2.0).abs() < 1e-10, "r={r}");
            } else if r > 1.03 {
                assert!(c.values()[i].abs() < 1e-12, "r={r}");
            }
        }
    }

    #[test]
    fn young_bound_for_quadratic_entropy() {
        let grid = RadialGrid::shared(2, 12.0, 256).unwrap();
        let k = Kernel::exponential(0.3, 1.0, 2).unwrap();
        let fe = FreeEnergy::build(EntropyLaw::quadratic(1.0).unwrap(), &k, grid.clone()).unwrap();
        let l1 = k.l1_norm();
        for width in [0.3, 1.0, 3.0] {
            let u = Profile::gaussian(grid.clone(), 1.0, width).unwrap();
            let l2 = u.lp_norm(2.0).unwrap().powi(2);
            let r = fe.evaluate(&u).unwrap();
            assert!(r.free_energy >= (1.0 - 0.5 * l1) * l2 - 1e-12 * l2);
        }
    }

    #[test]
    fn first_variation_matches_finite_difference() {
        let grid = RadialGrid::shared(2, 6.0, 48).unwrap();
        let k = Kernel::gaussian(1.0, 1.0, 2).unwrap();
        let fe = FreeEnergy::build(EntropyLaw::power(2.5, 1.0).unwrap(), &k, grid.clone()).unwrap();
        let u = Profile::gaussian(grid.clone(), 1.0, 1.0).unwrap();
        let g = fe.first_variation(&u).unwrap();
        let w = grid.volumes();
        for i in [0, 5, 20] {
            let h = 1e-6;
            let mut up = u.values().to_vec();
            up[i] += h;
            let mut dn = u.values().to_vec();
            dn[i] -= h;
            let fd = (fe
                .evaluate(&Profile::new(grid.clone(), up).unwrap())
                .unwrap()
                .free_energy
                - fe.evaluate(&Profile::new(grid.clone(), dn).unwrap())
                    .unwrap()
                    .free_energy)
                / (2.0 * h * w[i]);
            assert!(
                (fd - g[i]).abs() < 1e-5 * (1.0 + g[i].abs()),
                "cell {i}: {fd} vs {}",
                g[i]
            );
        }
    }

    #[test]
    fn interpolation_step_holds_on_random_profiles() {
        let grid = RadialGrid::shared(2, 8.0, 96).unwrap();
        let k = Kernel::power_law(1.0, 1.0, Some(1.0), 2).unwrap();
        let op = InteractionOperator::build(grid.clone(), &k.truncated(1.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let centre = rng.gen_range(0.0..6.0);
            let width = rng.gen_range(0.1..2.0);
            let u = Profile::from_cell_averages(grid.clone(), |r| {
                let x = (r - centre) / width;
                (-x * x).exp()
            })
            .unwrap();
            let rep = interpolation_check_with(&op, &u, 2.0).unwrap();
            assert!(rep.interpolation_holds(), "{rep:?}");
            assert!(rep.lhs.is_finite() && rep.lhs_over_mid().is_finite());
        }
    }

    #[test]
    fn interpolation_of_zero_profile() {
        let grid = RadialGrid::shared(2, 4.0, 32).unwrap();
        let k = Kernel::exponential(1.0, 1.0, 2).unwrap();
        let rep = interpolation_check(&Profile::zeros(grid), &k, 2.0, 1.0).unwrap();
        assert_eq!((rep.lhs, rep.mid, rep.rhs), (0.0, 0.0, 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn interaction_is_nonnegative_and_quadratic(values in proptest::collection::vec(0.0f64..3.0, 24), c in 0.1f64..4.0) {
            let grid = RadialGrid::shared(3, 4.0, 24).unwrap();
            let k = Kernel::exponential(1.0, 0.5, 3).unwrap();
            let op = InteractionOperator::build(grid.clone(), &k).unwrap();
            let u = Profile::new(grid.clone(), values.clone()).unwrap();
            let cu = Profile::new(grid, values.iter().map(|v| c * v).collect()).unwrap();
            let w = op.energy(&u).unwrap();
            prop_assert!(w >= 0.0);
            prop_assert!((op.energy(&cu).unwrap() - c * c * w).abs() <= 1e-12 * c * c * w + 1e-300);
        }
    }
}
