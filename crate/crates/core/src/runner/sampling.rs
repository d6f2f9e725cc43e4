//! Seeded random inputs for scenario checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cycles::{make_half_weighted, BsRequirement, CurveSpec, HalfWeightedCycle, Mode, Sign};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::surface::SymplecticSurface;

/// Independent seed for stream `stream`, item `index` (splitmix64 mixing).
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_modes(rng: &mut ChaCha8Rng, count: u32, amplitude: f64) -> Vec<Mode> {
    (1..=count)
        .map(|m| Mode {
            m,
            cos: rng.random_range(-1.0..1.0) * amplitude / m as f64,
            sin: rng.random_range(-1.0..1.0) * amplitude / m as f64,
        })
        .collect()
}

/// Curve from which [`random_bs_cycle`] starts: a wavy horizontal graph on
/// the torus, a wavy circle around a random centre on the sphere whose
/// enclosed area is close to a random integer in `[1, k - 1]`.
pub fn random_curve(surface: &SymplecticSurface, seed: u64) -> Result<(CurveSpec, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = surface.level() as f64;
    if surface.is_sphere() {
        if surface.level() < 2 {
            return Err(Error::Unsupported("level-1 sphere carries no regular Bohr-Sommerfeld circle".into()));
        }
        let m = rng.random_range(1..surface.level()) as f64;
        let r = (1.0 - 2.0 * m / k).acos();
        let c: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let modes = random_modes(&mut rng, 3, 0.03);
        Ok((CurveSpec::SphereCircle { center: c, angular_radius: r, modes }, m))
    } else {
        // Start close to a Bohr-Sommerfeld line so the correcting shift is small.
        let m = rng.random_range(0..surface.level()) as f64;
        let base = (m + rng.random_range(-0.1..0.1)) / k;
        let modes = random_modes(&mut rng, 3, 0.03);
        Ok((CurveSpec::TorusGraph { base, modes }, -m))
    }
}

/// Smooth positive raw weights `exp(sum a_m cos + b_m sin)` at the nodes.
pub fn random_weights(nodes: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = random_modes(&mut rng, 3, 0.3);
    (0..nodes)
        .map(|j| {
            let s = j as f64 / nodes as f64;
            let e: f64 = modes
                .iter()
                .map(|md| {
                    let a = 2.0 * PI * md.m as f64 * s;
                    md.cos * a.cos() + md.sin * a.sin()
                })
                .sum();
            e.exp()
        })
        .collect()
}

/// Random half-weighted Bohr-Sommerfeld cycle with `nodes` nodes. The same
/// seed at different `nodes` samples the same continuous data.
pub fn random_bs_cycle(surface: &SymplecticSurface, nodes: usize, seed: u64) -> Result<HalfWeightedCycle> {
    let (spec, target) = random_curve(surface, seed)?;
    let cycle = spec.sample(surface, nodes)?.shifted_to_action(target)?;
    let weights = random_weights(nodes, derive_seed(seed, 1, 0));
    let sign = if seed % 2 == 0 { Sign::Plus } else { Sign::Minus };
    make_half_weighted(cycle, &weights, sign, BsRequirement::default())
}

/// Random smooth field of degree 2 adapted to the surface.
pub fn random_field(surface: &SymplecticSurface, seed: u64) -> ScalarField {
    if surface.is_sphere() {
        ScalarField::random_sphere_poly(seed, 2)
    } else {
        ScalarField::random_trig(seed, 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles_are_bohr_sommerfeld() {
        for (s, seeds) in [(SymplecticSurface::torus(1).unwrap(), 0..6u64), (SymplecticSurface::sphere(4).unwrap(), 0..6)] {
            for seed in seeds {
                let hw = random_bs_cycle(&s, 64, seed).unwrap();
                let a = hw.cycle().action();
                assert!((a - a.round()).abs() < 1e-9, "{a}");
            }
        }
    }

    #[test]
    fn same_seed_same_curve_across_resolutions() {
        let s = SymplecticSurface::torus(2).unwrap();
        let a = random_bs_cycle(&s, 64, 9).unwrap();
        let b = random_bs_cycle(&s, 128, 9).unwrap();
        for j in 0..64 {
            assert!((a.cycle().embedded()[j] - b.cycle().embedded()[2 * j]).norm() < 1e-12);
        }
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
        assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 1, 0));
        assert_eq!(derive_seed(5, 2, 3), derive_seed(5, 2, 3));
    }
}
