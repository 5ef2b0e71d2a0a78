//! Symmetric decreasing rearrangement of radial profiles on their own grid.

use crate::radial::Profile;

/// Returns `u*`: cell values sorted in decreasing order and poured into the
/// annuli from the centre outwards.
///
/// A target cell covered by a single source cell takes that value exactly; a
/// cell that straddles a level change takes the volume-weighted fill level.
/// Mass is preserved, and an already nonincreasing profile is returned unchanged.
pub fn symmetric_decreasing_rearrangement(u: &Profile) -> Profile {
    let v = u.values();
    let w = u.grid().volumes();
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]));

    let mut out = vec![0.0; n];
    let mut t = 0;
    let mut room = w[0];
    let mut acc = 0.0;
    let mut whole = true;
    for &s in &order {
        let val = v[s];
        let mut vol = w[s];
        while vol > 0.0 && t < n {
            if vol >= room * (1.0 - 1e-12) {
                out[t] = if whole && room == w[t] {
                    val
                } else {
                    (acc + val * room) / w[t]
                };
                vol -= room;
                t += 1;
                if t < n {
                    room = w[t];
                }
                acc = 0.0;
                whole = true;
            } else {
                acc += val * vol;
                room -= vol;
                vol = 0.0;
                whole = false;
            }
        }
    }
    if t < n && acc > 0.0 {
        out[t] = acc / w[t];
    }
    // rounding in the fill levels must not break monotonicity
    for i in 1..n {
        if out[i] > out[i - 1] {
            out[i] = out[i - 1];
        }
    }
    Profile::from_raw(u.grid().clone(), out)
}

/// `u_{i+1} ≤ u_i + 1e-12` for every cell.
pub fn is_nonincreasing(u: &Profile) -> bool {
    u.values().windows(2).all(|p| p[1] <= p[0] + 1e-12)
}

/// Worst-case `L^p` change from splitting one cell per level: `2·sup u·(max w)^{1/p}`.
pub fn splitting_tolerance(u: &Profile, p: f64) -> f64 {
    let wmax = u.grid().volumes().iter().fold(0.0f64, |m, &x| m.max(x));
    2.0 * u.sup() * wmax.powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::entropy_energy;
    use crate::entropy::EntropyLaw;
    use crate::interaction::InteractionOperator;
    use crate::kernel::Kernel;
    use crate::radial::RadialGrid;
    use proptest::prelude::*;
    use std::sync::{Arc, OnceLock};

    #[test]
    fn nonincreasing_profile_is_fixed() {
        let g = RadialGrid::shared(2, 5.0, 64).unwrap();
        let u = Profile::gaussian(g, 1.0, 1.2).unwrap();
        assert_eq!(symmetric_decreasing_rearrangement(&u).values(), u.values());
    }

    #[test]
    fn annulus_becomes_ball_of_equal_volume() {
        // cells of width 0.2: the annulus 0.8 < r < 1 has volume 0.36π, the disk r < 0.6 too
        let g = RadialGrid::shared(2, 2.0, 10).unwrap();
        let u = Profile::from_fn(g.clone(), |r| if r > 0.8 && r < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let s = symmetric_decreasing_rearrangement(&u);
        let expect: Vec<f64> = g.centers().iter().map(|&r| if r < 0.6 { 1.0 } else { 0.0 }).collect();
        for (a, b) in s.values().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn annulus_to_unit_disk_on_fine_grid() {
        // 1 < r < √2 has volume π, the same as the unit disk
        let g = RadialGrid::shared(2, 2.0, 512).unwrap();
        let u = Profile::from_cell_averages(g.clone(), |r| if r > 1.0 && r < 2f64.sqrt() { 1.0 } else { 0.0 }).unwrap();
        let s = symmetric_decreasing_rearrangement(&u);
        assert!((u.mass() - std::f64::consts::PI).abs() < 1e-3);
        assert!((s.mass() - u.mass()).abs() < 1e-12);
        assert!((s.concentration(1.0).unwrap() - std::f64::consts::PI).abs() < 0.02);
        for (i, &r) in g.centers().iter().enumerate() {
            if r < 0.99 {
                assert!((s.values()[i] - 1.0).abs() < 1e-12);
            } else if r > 1.01 {
                assert!(s.values()[i].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_level_refill() {
        // 1 on cells 2..4, 2 on cells 6..7 (d=3): layer-cake refill puts 2 in the
        // centre ball of the same volume, then 1 on the next shell
        let g = RadialGrid::shared(3, 1.0, 10).unwrap();
        let w = g.volumes();
        let mut v = vec![0.0; 10];
        for c in v.iter_mut().take(5).skip(2) {
            *c = 1.0;
        }
        for c in v.iter_mut().take(8).skip(6) {
            *c = 2.0;
        }
        let u = Profile::new(g.clone(), v).unwrap();
        let s = symmetric_decreasing_rearrangement(&u);
        let vol_two: f64 = w[6] + w[7];
        let vol_one: f64 = w[2] + w[3] + w[4];
        let ball = |vol: f64| (vol / (4.0 / 3.0 * std::f64::consts::PI)).cbrt();
        let (r2, r1) = (ball(vol_two), ball(vol_two + vol_one));
        let mut level_two = 0.0;
        let mut level_one = 0.0;
        for (i, &val) in s.values().iter().enumerate() {
            let (lo, hi) = (g.edges()[i], g.edges()[i + 1]);
            if hi <= r2 {
                assert_eq!(val, 2.0);
            } else if lo >= r2 && hi <= r1 {
                assert_eq!(val, 1.0);
            } else if lo >= r1 {
                assert_eq!(val, 0.0);
            }
            level_two += w[i] * (val - 1.0).clamp(0.0, 1.0);
            level_one += w[i] * val.min(1.0);
        }
        assert!((level_two - vol_two).abs() < 1e-12);
        assert!((level_one - vol_two - vol_one).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_predicate() {
        let g = RadialGrid::shared(2, 1.0, 2).unwrap();
        assert!(is_nonincreasing(&Profile::constant(g.clone(), 3.0).unwrap()));
        assert!(!is_nonincreasing(&Profile::new(g, vec![1.0, 2.0]).unwrap()));
    }

    fn riesz_ops() -> &'static Vec<InteractionOperator> {
        static OPS: OnceLock<Vec<InteractionOperator>> = OnceLock::new();
        OPS.get_or_init(|| {
            let g = RadialGrid::shared(2, 6.0, 40).unwrap();
            [
                Kernel::exponential(1.0, 1.0, 2).unwrap(),
                Kernel::gaussian(1.0, 0.8, 2).unwrap(),
                Kernel::tophat(1.0, 1.3, 2).unwrap(),
                Kernel::power_law(1.0, 1.2, Some(1.0), 2).unwrap(),
            ]
            .iter()
            .map(|k| InteractionOperator::build(g.clone(), k).unwrap())
            .collect()
        })
    }

    fn profile_strategy(d: usize, n: usize) -> impl Strategy<Value = Profile> {
        proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..5.0], n).prop_map(move |v| {
            let g: Arc<RadialGrid> = RadialGrid::shared(d, 6.0, n).unwrap();
            Profile::new(g, v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn rearrangement_invariants(u in profile_strategy(3, 64)) {
            let s = symmetric_decreasing_rearrangement(&u);
            prop_assert!(is_nonincreasing(&s));
            prop_assert!((s.mass() - u.mass()).abs() <= 1e-12 * u.mass().max(1.0));
            let twice = symmetric_decreasing_rearrangement(&s);
            prop_assert_eq!(twice.values(), s.values());
            prop_assert!(s.sup() == u.sup());
            for p in [2.0, 3.0] {
                let drift = (s.lp_norm(p).unwrap() - u.lp_norm(p).unwrap()).abs();
                prop_assert!(drift <= splitting_tolerance(&u, p) + 1e-12);
            }
            let law = EntropyLaw::power(2.0, 1.0).unwrap();
            prop_assert!(entropy_energy(&law, &s) <= entropy_energy(&law, &u) * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn rearrangement_raises_interaction(u in profile_strategy(2, 40)) {
            let s = symmetric_decreasing_rearrangement(&u);
            let s = Profile::new(riesz_ops()[0].grid().clone(), s.into_values()).unwrap();
            let u = Profile::new(riesz_ops()[0].grid().clone(), u.into_values()).unwrap();
            for op in riesz_ops() {
                let (wu, ws) = (op.energy(&u).unwrap(), op.energy(&s).unwrap());
                prop_assert!(ws >= wu * (1.0 - 1e-10), "{} : {} < {}", op.kernel(), ws, wu);
            }
        }
    }
}
