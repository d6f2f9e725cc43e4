//! Prequantum connection with curvature `-2 pi i omega`: holonomy along
//! closed cycles and the Bohr-Sommerfeld test.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cycles::DiscretizedCycle;
use crate::error::{Error, Result};
use crate::surface::{SymplecticSurface, Vec3};

/// Default tolerance on the distance of the action to an integer.
pub const DEFAULT_BS_TOL: f64 = crate::cycles::DEFAULT_BS_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyResult {
    pub value: Complex64,
    /// Level-scaled symplectic action; only its class mod 1 is gauge invariant.
    pub action: f64,
    pub bs_defect: f64,
}

impl HolonomyResult {
    fn from_action(action: f64) -> Self {
        let frac = action - action.round();
        let value = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * frac);
        Self { value, action, bs_defect: frac.abs() }
    }
}

fn check_surface(surface: &SymplecticSurface, cycle: &DiscretizedCycle) {
    debug_assert_eq!(surface, cycle.surface(), "cycle sampled on another surface");
}

/// Holonomy `exp(2 pi i oint lambda)` with `d lambda = omega`.
pub fn holonomy(surface: &SymplecticSurface, cycle: &DiscretizedCycle) -> HolonomyResult {
    check_surface(surface, cycle);
    HolonomyResult::from_action(cycle.action())
}

/// Holonomy computed with the potential of the stereographic frame centred
/// at `center` (sphere) or with the seam placed at the first node (torus).
pub fn holonomy_in_frame(surface: &SymplecticSurface, cycle: &DiscretizedCycle, center: &Vec3) -> HolonomyResult {
    check_surface(surface, cycle);
    HolonomyResult::from_action(cycle.action_in(center))
}

/// Bohr-Sommerfeld test: `bs_defect <= tol`.
pub fn is_bohr_sommerfeld(surface: &SymplecticSurface, cycle: &DiscretizedCycle, tol: f64) -> Result<(bool, f64)> {
    if !(tol > 0.0 && tol < 0.5) {
        return Err(Error::Config(format!("BS tolerance {tol} outside (0, 0.5)")));
    }
    let h = holonomy(surface, cycle);
    Ok((h.bs_defect <= tol, h.bs_defect))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{CurveSpec, Mode};

    /// Shoelace area of the polygon, an independent oracle for smooth loops.
    fn shoelace(c: &DiscretizedCycle) -> f64 {
        let e = c.embedded();
        let n = e.len();
        (0..n).map(|j| {
            let (a, b) = (e[j], e[(j + 1) % n]);
            a.x * b.y - b.x * a.y
        }).sum::<f64>() / 2.0
    }

    #[test]
    fn unit_modulus_and_exponential() {
        let s = SymplecticSurface::torus(2).unwrap();
        let c = CurveSpec::TorusLoop { center: [0.4, 0.6], radius: 0.2, modes: vec![Mode { m: 3, cos: 0.02, sin: 0.0 }] }
            .sample(&s, 128)
            .unwrap();
        let h = holonomy(&s, &c);
        assert!((h.value.norm() - 1.0).abs() < 1e-12);
        let expect = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * h.action);
        assert!((h.value - expect).norm() < 1e-10);
    }

    #[test]
    fn half_area_loop_gives_minus_one() {
        let s = SymplecticSurface::torus(1).unwrap();
        let r = (0.5 / std::f64::consts::PI).sqrt();
        let c = CurveSpec::TorusLoop { center: [0.5, 0.5], radius: r, modes: vec![] }.sample(&s, 256).unwrap();
        let area = shoelace(&c);
        assert!((area - 0.5).abs() < 1e-3);
        let h = holonomy(&s, &c);
        assert!((h.value + 1.0).norm() < 1e-6);
    }

    #[test]
    fn level_multiplies_action() {
        let s = SymplecticSurface::torus(3).unwrap();
        let r = (1.0 / (3.0 * std::f64::consts::PI)).sqrt();
        let c = CurveSpec::TorusLoop { center: [0.5, 0.5], radius: r, modes: vec![] }.sample(&s, 256).unwrap();
        let h = holonomy(&s, &c);
        assert!((h.value - 1.0).norm() < 1e-6);
        assert!((h.action - 3.0 * shoelace(&c)).abs() < 1e-3);
    }

    #[test]
    fn latitude_type_loop_defect() {
        let s = SymplecticSurface::torus(3).unwrap();
        let r = (0.2 / std::f64::consts::PI).sqrt();
        let c = CurveSpec::TorusLoop { center: [0.5, 0.5], radius: r, modes: vec![] }.sample(&s, 256).unwrap();
        let (bs, d) = is_bohr_sommerfeld(&s, &c, 1e-6).unwrap();
        assert!(!bs);
        assert!((d - 0.4).abs() < 1e-9);
    }

    #[test]
    fn sphere_half_area_circle() {
        let s = SymplecticSurface::sphere(4).unwrap();
        let c = CurveSpec::sphere_circle(Vec3::new(1.0, 2.0, -0.5), std::f64::consts::FRAC_PI_2).sample(&s, 128).unwrap();
        assert!(is_bohr_sommerfeld(&s, &c, 1e-6).unwrap().0);
    }

    #[test]
    fn gauge_independence_on_sphere() {
        let s = SymplecticSurface::sphere(3).unwrap();
        let c = CurveSpec::sphere_circle(Vec3::new(0.5, 0.5, 0.1), 0.9).sample(&s, 128).unwrap();
        let a = holonomy_in_frame(&s, &c, &Vec3::z());
        let b = holonomy_in_frame(&s, &c, &Vec3::x());
        assert!((a.value - b.value).norm() < 1e-8);
    }

    #[test]
    fn zero_area_loop() {
        let s = SymplecticSurface::torus(1).unwrap();
        let c = CurveSpec::TorusLoop { center: [0.5, 0.5], radius: 1e-7, modes: vec![] }.sample(&s, 16).unwrap();
        let h = holonomy(&s, &c);
        assert!((h.value - 1.0).norm() < 1e-12);
        assert!(h.bs_defect < 1e-12);
    }

    #[test]
    fn bad_tolerance() {
        let s = SymplecticSurface::torus(1).unwrap();
        let c = CurveSpec::torus_line(0.0).sample(&s, 16).unwrap();
        assert!(is_bohr_sommerfeld(&s, &c, 0.5).is_err());
    }
}
