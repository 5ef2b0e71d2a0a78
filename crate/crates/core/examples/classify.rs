//! Regime classification for a handful of (entropy, kernel, mass) triples.

use aggmin::criticality::{classify, C0Source, LionsInputs};
use aggmin::{EntropyLaw, Kernel};

fn main() -> aggmin::Result<()> {
    let cases = [
        (
            "quadratic, ‖K‖₁ = 2π",
            EntropyLaw::quadratic(1.0)?,
            Kernel::exponential(1.0, 1.0, 2)?,
        ),
        (
            "quadratic, ‖K‖₁ = 1/2",
            EntropyLaw::quadratic(1.0)?,
            Kernel::exponential(0.25 / std::f64::consts::PI, 1.0, 2)?,
        ),
        (
            "m = 3, bounded kernel",
            EntropyLaw::power(3.0, 1.0)?,
            Kernel::exponential(1.0, 1.0, 2)?,
        ),
        (
            "m = 3/2, 1/r kernel",
            EntropyLaw::power(1.5, 1.0)?,
            Kernel::power_law(1.0, 1.0, Some(1.0), 2)?,
        ),
    ];
    for (name, law, kernel) in cases {
        let report = classify(&law, &kernel, 1.0, 1.0, 1.0, C0Source::Supplied, LionsInputs::default())?;
        println!(
            "{name}: {} (m* = {}, χ = {}, ‖K‖₁ = {:.4})",
            report.regime, report.m_star, report.chi, report.kernel_l1
        );
    }
    Ok(())
}
