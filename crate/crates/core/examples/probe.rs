//! Free energy along mass-preserving dilations of a bump: for a bounded
//! kernel and m > 2, F(φ_λ) turns negative and scales like λ^d as λ → 0.

use aggmin::criticality::{dyadic_lambdas, scaling_probe};
use aggmin::{EntropyLaw, FreeEnergy, Kernel, Profile, RadialGrid};

fn main() -> aggmin::Result<()> {
    let grid = RadialGrid::shared(2, 400.0, 512)?;
    let energy = FreeEnergy::build(
        EntropyLaw::power(3.0, 1.0)?,
        &Kernel::exponential(1.0, 1.0, 2)?,
        grid.clone(),
    )?;
    let phi = Profile::gaussian(grid, 1.0, 1.0)?;
    let result = scaling_probe(&phi, &energy, &dyadic_lambdas(6))?;
    for p in &result.points {
        println!(
            "λ = {:<9} S = {:.4e}  W = {:.4e}  F = {:+.4e}",
            p.lambda, p.entropy, p.interaction, p.free_energy
        );
    }
    println!(
        "fitted exponent {:?} over {:?}",
        result.fitted_exponent, result.fit_range
    );
    Ok(())
}
