//! Entropy, interaction and free energy of a Gaussian bump, plus the
//! first variation at a few radii.

use aggmin::{EntropyLaw, FreeEnergy, Kernel, Profile, RadialGrid};

fn main() -> aggmin::Result<()> {
    let grid = RadialGrid::shared(2, 20.0, 256)?;
    let kernel = Kernel::exponential(1.0, 1.0, 2)?;
    let energy = FreeEnergy::build(EntropyLaw::quadratic(1.0)?, &kernel, grid.clone())?;

    for width in [0.5, 1.0, 2.0, 4.0] {
        let u = Profile::gaussian(grid.clone(), 1.0, width)?;
        let r = energy.evaluate(&u)?;
        println!(
            "width {width:>4}: S = {:.6}  W = {:.6}  F = {:+.6}",
            r.entropy, r.interaction, r.free_energy
        );
    }

    let u = Profile::gaussian(grid.clone(), 1.0, 1.0)?;
    let g = energy.first_variation(&u)?;
    for i in [0, 10, 50] {
        println!("r = {:.3}: Φ'(u) - K*u = {:+.6}", grid.centers()[i], g[i]);
    }
    Ok(())
}
