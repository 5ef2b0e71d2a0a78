//! Amplitude sweep across ‖K‖₁ = 2χ: outcomes flip from vanishing to stationary.

use aggmin::minimizer::{infimum_estimate, FlowConfig, InfimumEstimate, Outcome, Scheme};
use aggmin::{EntropyLaw, FreeEnergy, InteractionOperator, Kernel, RadialGrid};
use std::sync::Arc;

fn outcome(est: &InfimumEstimate) -> Outcome {
    if est.all_vanished {
        Outcome::Vanishing
    } else {
        est.runs[est.best].outcome
    }
}

fn main() -> aggmin::Result<()> {
    let grid = RadialGrid::shared(2, 20.0, 256)?;
    let base = InteractionOperator::build(grid, &Kernel::exponential(1.0, 1.0, 2)?)?;
    let cfg = FlowConfig::new(Scheme::ProjectedDescent);
    for k in 0..9 {
        let l1 = 1.6 + 0.1 * k as f64;
        let op = base.with_amplitude(l1 / (2.0 * std::f64::consts::PI))?;
        let energy = FreeEnergy::new(EntropyLaw::quadratic(1.0)?, Arc::new(op))?;
        let est = infimum_estimate(1.0, &energy, &cfg)?;
        println!(
            "‖K‖₁ = {l1:.1}: {:<10} infimum estimate {:+.4e}",
            outcome(&est).to_string(),
            est.value
        );
    }
    Ok(())
}
