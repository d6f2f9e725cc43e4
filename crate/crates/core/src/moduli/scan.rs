use serde::{Deserialize, Serialize};

use super::{criticality_residual, special_value, ModuliConfig};
use crate::cycles::{make_half_weighted, orthonormal_frame, BsRequirement, CurveSpec, Sign};
use crate::error::{Error, Result};
use crate::field::{ScalarField, SpherePoly};
use crate::surface::{SymplecticSurface, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivisorPoint {
    pub point: [f64; 3],
    pub multiplicity: u32,
}

/// Effective divisor of degree `k` on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisorSpec {
    pub points: Vec<DivisorPoint>,
}

impl DivisorSpec {
    /// `k` times the north pole.
    pub fn north_pole(k: u32) -> Self {
        Self { points: vec![DivisorPoint { point: [0.0, 0.0, 1.0], multiplicity: k }] }
    }

    pub fn degree(&self) -> u32 {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    fn unit(p: &DivisorPoint) -> Vec3 {
        Vec3::new(p.point[0], p.point[1], p.point[2]).normalize()
    }

    pub fn validate(&self, surface: &SymplecticSurface) -> Result<()> {
        if !surface.is_sphere() {
            return Err(Error::Unsupported("divisor scans live on the sphere".into()));
        }
        if self.points.is_empty() || self.points.iter().any(|p| Vec3::new(p.point[0], p.point[1], p.point[2]).norm() == 0.0) {
            return Err(Error::Config("divisor needs nonzero points".into()));
        }
        if self.degree() != surface.level() {
            return Err(Error::Config(format!("divisor degree {} differs from level {}", self.degree(), surface.level())));
        }
        Ok(())
    }

    /// `f_Y = |s|^2` for the unit-normalized section with zero set `Y`:
    /// the product of `((1 - q . p) / 2)^m` over the divisor points.
    pub fn f_y(&self) -> ScalarField {
        let mut poly = SpherePoly::constant(1.0);
        for dp in &self.points {
            let q = Self::unit(dp);
            let mut lin = SpherePoly::constant(0.5);
            for axis in 0..3 {
                lin = lin.add(&SpherePoly::coordinate(axis).scale(-0.5 * q[axis]));
            }
            poly = poly.mul(&lin.pow(dp.multiplicity));
        }
        ScalarField::Sphere(poly)
    }

    fn anchor(&self) -> Vec3 {
        Self::unit(&self.points[0])
    }
}

/// Circles shrinking onto the first divisor point: angular radius `t` runs
/// from `max_radius` down to `min_radius`; the centre sits at angle
/// `tilt * t` from the divisor point (`tilt = 0`: concentric latitudes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilySpec {
    pub count: usize,
    pub min_radius: f64,
    pub max_radius: f64,
    pub tilt: f64,
    pub nodes: usize,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self { count: 24, min_radius: 0.05, max_radius: 2.5, tilt: 0.0, nodes: 128 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub parameter: f64,
    pub special_value: f64,
    pub stddev: f64,
    /// `stddev / mean` of `f_Y` on the cycle.
    pub normalized_stddev: f64,
    pub lie_residual: f64,
    /// The cycle is (numerically) a level set of `f_Y`.
    pub level_set: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    /// `F_{f_Y}` strictly decreasing as the family shrinks.
    pub monotone: bool,
    pub min_interior_stddev: f64,
    pub min_interior_normalized: f64,
    pub coincidences: Vec<usize>,
}

const LEVEL_SET_TOL: f64 = 1e-9;

/// Evaluate `F_{f_Y}` and the criticality residuals along a family of
/// circles contracting onto the divisor.
pub fn boundary_contraction_scan(
    surface: &SymplecticSurface,
    divisor: &DivisorSpec,
    family: &FamilySpec,
    cfg: &ModuliConfig,
) -> Result<ScanTable> {
    divisor.validate(surface)?;
    if family.count < 3 || !(0.0 < family.min_radius && family.min_radius < family.max_radius && family.max_radius < std::f64::consts::PI) {
        return Err(Error::Config(format!("bad family {family:?}")));
    }
    let f = divisor.f_y();
    let q = divisor.anchor();
    let (e1, _) = orthonormal_frame(&q);
    let mut rows = Vec::with_capacity(family.count);
    for i in 0..family.count {
        let t = family.max_radius + (family.min_radius - family.max_radius) * i as f64 / (family.count - 1) as f64;
        let phi = family.tilt * t;
        let center = q * phi.cos() + e1 * phi.sin();
        let cyc = CurveSpec::sphere_circle(center, t).sample(surface, family.nodes)?;
        let hw = make_half_weighted(cyc, &vec![1.0; family.nodes], Sign::Plus, BsRequirement::Waived)?;
        let fv = special_value(&f, &hw, cfg);
        let (sd, lie) = criticality_residual(&f, &hw);
        let mean = fv / cfg.tau;
        let normalized = if mean > 0.0 { sd / mean } else { f64::INFINITY };
        rows.push(ScanRow {
            parameter: t,
            special_value: fv,
            stddev: sd,
            normalized_stddev: normalized,
            lie_residual: lie,
            level_set: normalized < LEVEL_SET_TOL,
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].special_value < w[0].special_value);
    let interior = &rows[1..rows.len() - 1];
    let min_interior_stddev = interior.iter().map(|r| r.stddev).fold(f64::INFINITY, f64::min);
    let min_interior_normalized = interior.iter().map(|r| r.normalized_stddev).fold(f64::INFINITY, f64::min);
    let coincidences = rows.iter().enumerate().filter(|(_, r)| r.level_set).map(|(i, _)| i).collect();
    Ok(ScanTable { rows, monotone, min_interior_stddev, min_interior_normalized, coincidences })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre_on;

    #[test]
    fn f_y_vanishes_on_divisor() {
        let d = DivisorSpec { points: vec![
            DivisorPoint { point: [0.0, 0.0, 1.0], multiplicity: 2 },
            DivisorPoint { point: [1.0, 0.0, 0.0], multiplicity: 1 },
        ] };
        let f = d.f_y();
        assert_eq!(f.eval(&Vec3::z()), 0.0);
        assert!(f.eval(&Vec3::x()).abs() < 1e-16);
        assert!((f.eval(&-Vec3::z()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn concentric_latitudes_are_level_sets() {
        let s = SymplecticSurface::sphere(3).unwrap();
        let cfg = ModuliConfig::for_surface(&s);
        let table = boundary_contraction_scan(&s, &DivisorSpec::north_pole(3), &FamilySpec { count: 8, ..FamilySpec::default() }, &cfg).unwrap();
        assert!(table.monotone);
        assert_eq!(table.coincidences.len(), 8);
        // F on a latitude of angular radius t is tau ((1 - cos t) / 2)^k.
        for r in &table.rows {
            let expect = cfg.tau * ((1.0 - r.parameter.cos()) / 2.0).powi(3);
            assert!((r.special_value - expect).abs() < 1e-14);
        }
        assert!(table.rows.last().unwrap().special_value < 1e-6);
    }

    #[test]
    fn tilted_family_separates_from_level_sets() {
        let s = SymplecticSurface::sphere(2).unwrap();
        let cfg = ModuliConfig::for_surface(&s);
        let fam = FamilySpec { count: 10, tilt: 0.5, ..FamilySpec::default() };
        let table = boundary_contraction_scan(&s, &DivisorSpec::north_pole(2), &fam, &cfg).unwrap();
        assert!(table.coincidences.is_empty());
        assert!(table.min_interior_normalized > 1e-2);
        // Mean of f_Y over the circle by Gauss-Legendre in the angle.
        let f = DivisorSpec::north_pole(2).f_y();
        let r = table.rows[3];
        let q = Vec3::z();
        let (e1, _) = orthonormal_frame(&q);
        let c = q * (0.5 * r.parameter).cos() + e1 * (0.5 * r.parameter).sin();
        let (d1, d2) = orthonormal_frame(&c);
        let (x, w) = gauss_legendre_on(40, 0.0, 1.0);
        let mean: f64 = x.iter().zip(&w).map(|(s, w)| {
            let a = 2.0 * std::f64::consts::PI * s;
            w * f.eval(&(c * r.parameter.cos() + (d1 * a.cos() + d2 * a.sin()) * r.parameter.sin()))
        }).sum();
        assert!((r.special_value - cfg.tau * mean).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_degree() {
        let s = SymplecticSurface::sphere(3).unwrap();
        let cfg = ModuliConfig::for_surface(&s);
        assert!(boundary_contraction_scan(&s, &DivisorSpec::north_pole(2), &FamilySpec::default(), &cfg).is_err());
    }
}
