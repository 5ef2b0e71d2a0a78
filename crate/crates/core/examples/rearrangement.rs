//! Symmetric decreasing rearrangement of an annular profile: mass is kept,
//! entropy does not grow and the interaction energy goes up.

use aggmin::rearrangement::symmetric_decreasing_rearrangement;
use aggmin::{EntropyLaw, FreeEnergy, Kernel, Profile, RadialGrid};

fn main() -> aggmin::Result<()> {
    let grid = RadialGrid::shared(2, 10.0, 256)?;
    let energy = FreeEnergy::build(
        EntropyLaw::power(2.0, 1.0)?,
        &Kernel::gaussian(1.0, 1.0, 2)?,
        grid.clone(),
    )?;
    let ring = Profile::from_cell_averages(grid, |r| (-(r - 4.0).powi(2)).exp())?;
    let star = symmetric_decreasing_rearrangement(&ring);
    for (name, u) in [("ring", &ring), ("rearranged", &star)] {
        let r = energy.evaluate(u)?;
        println!(
            "{name:>10}: mass {:.6}  S = {:.6}  W = {:.6}  F = {:+.6}",
            u.mass(),
            r.entropy,
            r.interaction,
            r.free_energy
        );
    }
    Ok(())
}
