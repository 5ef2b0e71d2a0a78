//! Seeded random test profiles: mixtures of central bumps, annular bumps and steps.

use std::sync::Arc;

use rand::Rng;

use crate::radial::{Profile, RadialGrid};

#[derive(Debug, Clone, Copy)]
enum Component {
    Bump { height: f64, width: f64 },
    Ring { height: f64, centre: f64, width: f64 },
    Step { height: f64, radius: f64 },
}

impl Component {
    fn eval(&self, r: f64) -> f64 {
        match *self {
            Component::Bump { height, width } => height * (-(r / width).powi(2)).exp(),
            Component::Ring { height, centre, width } => height * (-((r - centre) / width).powi(2)).exp(),
            Component::Step { height, radius } => {
                if r < radius {
                    height
                } else {
                    0.0
                }
            }
        }
    }
}

/// Draws a profile with one to three components whose length scales span
/// `[R/50, R/2]`, so that every sample stays well inside the grid.
pub fn random_profile<R: Rng + ?Sized>(grid: &Arc<RadialGrid>, rng: &mut R) -> Profile {
    let radius = grid.radius();
    let count = rng.gen_range(1..=3);
    let parts: Vec<Component> = (0..count)
        .map(|_| {
            let height = rng.gen_range(0.1..2.0);
            let width = radius * rng.gen_range(0.02..0.2);
            match rng.gen_range(0..3) {
                0 => Component::Bump { height, width },
                1 => Component::Ring {
                    height,
                    centre: radius * rng.gen_range(0.05..0.5),
                    width,
                },
                _ => Component::Step {
                    height,
                    radius: radius * rng.gen_range(0.02..0.5),
                },
            }
        })
        .collect();
    Profile::from_cell_averages(grid.clone(), |r| parts.iter().map(|c| c.eval(r)).sum())
        .expect("mixtures of nonnegative components are valid profiles")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn profiles_are_seeded_and_nonzero() {
        let g = RadialGrid::shared(2, 10.0, 64).unwrap();
        let a: Vec<Profile> = (0..5)
            .scan(ChaCha8Rng::seed_from_u64(3), |rng, _| Some(random_profile(&g, rng)))
            .collect();
        let b: Vec<Profile> = (0..5)
            .scan(ChaCha8Rng::seed_from_u64(3), |rng, _| Some(random_profile(&g, rng)))
            .collect();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.values(), y.values());
            assert!(x.mass() > 0.0);
        }
    }
}
