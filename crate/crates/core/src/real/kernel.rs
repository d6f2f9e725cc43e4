use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::cycles::HalfWeightedCycle;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::moduli::tangential_component;

/// Null space of `g -> Lie_{W_f} g = a g'` on trigonometric polynomials of
/// degree `< N / 2` (the Nyquist mode has no derivative and is left out).
#[derive(Debug, Clone, PartialEq)]
pub struct LieKernel {
    pub dimension: usize,
    /// Singular values in ascending order.
    pub singular_values: Vec<f64>,
    /// Node values of the kernel vector with the smallest singular value,
    /// scaled to unit sup norm.
    pub kernel_function: Vec<f64>,
    /// `max |g - mean g|` of that kernel vector.
    pub constant_deviation: f64,
}

/// Relative singular-value threshold for the kernel.
pub const KERNEL_REL_TOL: f64 = 1e-10;

pub fn lie_kernel(f: &ScalarField, hw: &HalfWeightedCycle) -> Result<LieKernel> {
    let n = hw.len();
    let a = tangential_component(f, hw);
    let modes = n / 2 - 1;
    let cols = 1 + 2 * modes;
    let s = |i: usize| i as f64 / n as f64;
    let basis = DMatrix::from_fn(n, cols, |i, j| match j {
        0 => 1.0,
        _ => {
            let m = ((j + 1) / 2) as f64;
            let t = 2.0 * PI * m * s(i);
            if j % 2 == 1 { t.cos() } else { t.sin() }
        }
    });
    let op = DMatrix::from_fn(n, cols, |i, j| match j {
        0 => 0.0,
        _ => {
            let m = ((j + 1) / 2) as f64;
            let t = 2.0 * PI * m * s(i);
            let d = if j % 2 == 1 { -2.0 * PI * m * t.sin() } else { 2.0 * PI * m * t.cos() };
            a[i] * d
        }
    });
    let svd = op.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::NotEnoughData("SVD did not return V".into()))?;
    let mut sv: Vec<(f64, usize)> = svd.singular_values.iter().copied().zip(0..).collect();
    sv.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite singular values"));
    let smax = sv.last().map(|x| x.0).unwrap_or(0.0);
    let dimension = sv.iter().filter(|x| x.0 <= KERNEL_REL_TOL * smax).count();
    let v = v_t.row(sv[0].1).transpose();
    let g = &basis * v;
    let sup = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let g: Vec<f64> = g.iter().map(|x| x / sup).collect();
    let mean = g.iter().sum::<f64>() / n as f64;
    let constant_deviation = g.iter().fold(0.0f64, |m, x| m.max((x - mean).abs()));
    Ok(LieKernel {
        dimension,
        singular_values: sv.iter().map(|x| x.0).collect(),
        kernel_function: g,
        constant_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{make_half_weighted, BsRequirement, CurveSpec, Sign};
    use crate::surface::SymplecticSurface;

    #[test]
    fn kernel_is_the_constants() {
        let s = SymplecticSurface::sphere(4).unwrap();
        let c = CurveSpec::SphereLatitude { z: 0.5 }.sample(&s, 64).unwrap();
        let hw = make_half_weighted(c, &[1.0; 64], Sign::Plus, BsRequirement::default()).unwrap();
        let k = lie_kernel(&ScalarField::z(), &hw).unwrap();
        assert_eq!(k.dimension, 1);
        assert!(k.constant_deviation < 1e-12);
        assert_eq!(k.singular_values.len(), 63);
    }

    #[test]
    fn vanishing_field_has_full_kernel() {
        let s = SymplecticSurface::sphere(4).unwrap();
        let c = CurveSpec::SphereLatitude { z: 0.0 }.sample(&s, 32).unwrap();
        let hw = make_half_weighted(c, &[1.0; 32], Sign::Plus, BsRequirement::default()).unwrap();
        // X_x is normal to the equator: W_x = 0.
        let k = lie_kernel(&ScalarField::x(), &hw).unwrap();
        assert_eq!(k.dimension, 31);
    }
}
