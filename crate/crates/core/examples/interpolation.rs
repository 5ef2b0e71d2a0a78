//! The chain ∬uu(K·1_{B_δ}) ≤ C₀·mid ≤ C₀·rhs on random profiles, with an
//! empirical lower bound for C₀ at two resolutions.

use aggmin::criticality::estimate_c0;
use aggmin::energy::interpolation_check_with;
use aggmin::ensemble::random_profile;
use aggmin::{InteractionOperator, Kernel, RadialGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> aggmin::Result<()> {
    let kernel = Kernel::power_law(1.0, 1.0, Some(1.0), 2)?;
    let (p, delta) = (2.0, 1.0);
    let grid = RadialGrid::shared(2, 20.0, 256)?;
    let op = InteractionOperator::build(grid.clone(), &kernel.truncated(delta)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let u = random_profile(&grid, &mut rng);
        let r = interpolation_check_with(&op, &u, p)?;
        println!("lhs/mid = {:.4}  mid/rhs = {:.4}", r.lhs_over_mid(), r.mid_over_rhs());
    }
    for cells in [128, 256] {
        let g = RadialGrid::shared(2, 20.0, cells)?;
        let est = estimate_c0(&kernel, p, delta, &g, 100, 11)?;
        println!("N = {cells}: C0 ≥ {:.4} from {} profiles", est.value, est.samples);
    }
    Ok(())
}
