use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operators::{eigen_decomposition, toeplitz_matrix};
use super::{connection_form, Frame, SectionVector, ToeplitzData};
use crate::cycles::{HalfWeightedCycle, DEFAULT_BS_TOL};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::spectral;

/// Smallest distance `1 -+ z` to the singular pole of the chosen frame.
const POLE_MARGIN: f64 = 1e-2;

/// Projection of the half-weighted cycle onto the holomorphic sections:
/// `c_i = sum_j conj(s_i(p_j)) xi_j theta_j / N` with `xi` the flat unit
/// section along the cycle, `xi_0 = 1`.
pub fn bpu_map(data: &ToeplitzData, hw: &HalfWeightedCycle) -> Result<SectionVector> {
    let cycle = hw.cycle();
    let surface = cycle.surface();
    if !surface.is_sphere() || surface.level() != data.level() {
        return Err(Error::Unsupported(format!(
            "cycle on {:?} at level {} does not match sections of level {}",
            surface.model(),
            surface.level(),
            data.level()
        )));
    }
    let action = cycle.action();
    let defect = (action - action.round()).abs();
    if defect > DEFAULT_BS_TOL {
        return Err(Error::NotBohrSommerfeld { defect, tol: DEFAULT_BS_TOL });
    }
    let pts = cycle.embedded();
    let to_south = pts.iter().map(|p| 1.0 + p.z).fold(f64::INFINITY, f64::min);
    let to_north = pts.iter().map(|p| 1.0 - p.z).fold(f64::INFINITY, f64::min);
    let frame = if to_south >= to_north { Frame::North } else { Frame::South };
    if to_south.max(to_north) < POLE_MARGIN {
        return Err(Error::Unsupported("cycle passes near both poles; no single frame covers it".into()));
    }
    let k = data.level();
    let tangents = cycle.tangents();
    // Imaginary connection form along the cycle; xi' = -g xi.
    let g: Vec<f64> = pts.iter().zip(&tangents).map(|(p, t)| connection_form(k, p, t, frame).im).collect();
    let gbar = spectral::mean(&g);
    let centred: Vec<f64> = g.iter().map(|v| v - gbar).collect();
    let prim = spectral::antiderivative(&centred);
    let n = pts.len();
    let theta = hw.theta();
    let dim = data.dimension();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); dim];
    for j in 0..n {
        let s = j as f64 / n as f64;
        let phase = -(gbar * s + prim[j] - prim[0]);
        let xi = Complex64::from_polar(1.0, phase);
        let b = data.basis_at(&pts[j], frame);
        for i in 0..dim {
            coeffs[i] += b[i].conj() * xi * theta[j];
        }
    }
    SectionVector::new(coeffs.into_iter().map(|c| c / n as f64).collect())
}

/// Angle between the ray of `v` and the ray of `e`.
pub fn angular_distance(v: &SectionVector, e: &SectionVector) -> Result<f64> {
    let v = v.normalized()?;
    let e = e.normalized()?;
    let ip = e.inner(&v);
    let perp: f64 = v.coeffs.iter().zip(&e.coeffs).map(|(a, b)| (a - b * ip).norm_sqr()).sum::<f64>().sqrt();
    Ok(perp.atan2(ip.norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop4Row {
    pub index: usize,
    pub image_norm: f64,
    pub eigen_index: usize,
    pub eigenvalue: f64,
    pub distance: f64,
}

/// Distance of each BPU image to the nearest eigenray of `T_f`.
pub fn prop4_distance(data: &ToeplitzData, f: &ScalarField, points: &[HalfWeightedCycle]) -> Result<Vec<Prop4Row>> {
    let t = toeplitz_matrix(data, f)?;
    let eig = eigen_decomposition(&t);
    points
        .iter()
        .enumerate()
        .map(|(index, hw)| {
            let v = bpu_map(data, hw)?;
            let mut best = (usize::MAX, f64::INFINITY);
            for (i, e) in eig.vectors.iter().enumerate() {
                let d = angular_distance(&v, e)?;
                if d < best.1 {
                    best = (i, d);
                }
            }
            Ok(Prop4Row { index, image_norm: v.norm(), eigen_index: best.0, eigenvalue: eig.values[best.0], distance: best.1 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{default_order, holomorphic_basis};
    use crate::cycles::{make_half_weighted, BsRequirement, CurveSpec, Sign};
    use crate::real::{enumerate_bs_fibers, Fibration};
    use crate::surface::{SymplecticSurface, Vec3};

    fn latitude(k: i64, z: f64, sign: Sign) -> HalfWeightedCycle {
        let s = SymplecticSurface::sphere(k).unwrap();
        let c = CurveSpec::SphereLatitude { z }.sample(&s, 64).unwrap();
        make_half_weighted(c, &[1.0; 64], sign, BsRequirement::default()).unwrap()
    }

    #[test]
    fn equator_concentrates_on_middle_vector() {
        let d = holomorphic_basis(4, default_order(4)).unwrap();
        let v = bpu_map(&d, &latitude(4, 0.0, Sign::Plus)).unwrap();
        let mut mags: Vec<(f64, usize)> = v.coeffs.iter().map(|c| c.norm()).zip(0..).collect();
        mags.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        assert_eq!(mags[0].1, 2);
        assert!(mags[0].0 >= 10.0 * mags[1].0);
    }

    #[test]
    fn sign_flip_negates() {
        let d = holomorphic_basis(4, default_order(4)).unwrap();
        let a = bpu_map(&d, &latitude(4, 0.5, Sign::Plus)).unwrap();
        let b = bpu_map(&d, &latitude(4, 0.5, Sign::Minus)).unwrap();
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            assert_eq!(*x, -*y);
        }
        assert!(angular_distance(&a, &b).unwrap() < 1e-10);
    }

    #[test]
    fn level_two_nonzero() {
        let d = holomorphic_basis(2, default_order(2)).unwrap();
        assert!(bpu_map(&d, &latitude(2, 0.0, Sign::Plus)).unwrap().norm() > 1e-3);
    }

    #[test]
    fn non_bs_refused() {
        let d = holomorphic_basis(2, default_order(2)).unwrap();
        let s = SymplecticSurface::sphere(2).unwrap();
        let c = CurveSpec::SphereLatitude { z: 0.3 }.sample(&s, 64).unwrap();
        let hw = make_half_weighted(c, &[1.0; 64], Sign::Plus, BsRequirement::Waived).unwrap();
        assert!(matches!(bpu_map(&d, &hw), Err(Error::NotBohrSommerfeld { .. })));
    }

    #[test]
    fn south_frame_matches_north_frame() {
        // A southern BS circle, tilted so that the flat section is not a pure phase.
        let k = 4;
        let s = SymplecticSurface::sphere(k).unwrap();
        let c = CurveSpec::sphere_circle(Vec3::new(0.3, 0.1, -1.0), 0.9).sample(&s, 128).unwrap().bs_corrected().unwrap();
        let hw = make_half_weighted(c, &[1.0; 128], Sign::Plus, BsRequirement::default()).unwrap();
        let d = holomorphic_basis(k, default_order(4)).unwrap();
        let v = bpu_map(&d, &hw).unwrap();
        // Rotating the whole configuration about z by an angle a multiplies
        // coefficient j by e^{-i j a} up to one global phase.
        let rot = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), 0.7);
        let pts: Vec<Vec3> = hw.cycle().embedded().iter().map(|p| rot * p).collect();
        let c2 = hw.cycle().with_points_unchecked(pts).unwrap();
        let hw2 = make_half_weighted(c2, &[1.0; 128], Sign::Plus, BsRequirement::default()).unwrap();
        let w = bpu_map(&d, &hw2).unwrap();
        let undo = SectionVector { coeffs: w.coeffs.iter().enumerate().map(|(j, c)| c * Complex64::from_polar(1.0, 0.7 * j as f64)).collect() };
        assert!(angular_distance(&v, &undo).unwrap() < 1e-9);
        assert!(v.norm() > 1e-3);
    }

    #[test]
    fn prop4_on_bs_latitudes() {
        let k = 4;
        let s = SymplecticSurface::sphere(k).unwrap();
        let d = holomorphic_basis(k, default_order(4)).unwrap();
        let fibers = enumerate_bs_fibers(&s, Fibration::SphereZ, 64, 64).unwrap();
        assert_eq!(fibers.len(), 3);
        let pts: Vec<HalfWeightedCycle> = fibers.iter().flat_map(|r| [r.plus.clone(), r.minus.clone()]).collect();
        let rows = prop4_distance(&d, &ScalarField::z(), &pts).unwrap();
        for r in &rows {
            assert!(r.distance <= 1e-2);
        }
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].eigen_index, pair[1].eigen_index);
        }
    }
}
