//! Complex polarization on the sphere: holomorphic sections of the level-`k`
//! bundle, Toeplitz and Souriau-Kostant matrices, expectation values and the
//! projection of half-weighted Bohr-Sommerfeld cycles onto sections.
//!
//! Sections are stored through their values in a unitary frame: the north
//! frame (regular away from the south pole) with connection form
//! `-i k (1 - z) / 2 dλ`, or the south frame `e^{-ikλ}` times it, with form
//! `i k (1 + z) / 2 dλ`. The curvature is `-2 pi i omega`. The monomial
//! sections `cos(φ/2)^{k-j} sin(φ/2)^j e^{ijλ}` are ordered by increasing
//! `j`, i.e. by decreasing weight of the z-rotation.

mod bpu;
mod operators;

pub use bpu::{angular_distance, bpu_map, prop4_distance, Prop4Row};
pub use operators::{
    eigen_decomposition, expectation_function, sk_operator_matrix, toeplitz_matrix, Eigen, MatrixRecord,
};

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::gauss_legendre_on;
use crate::surface::Vec3;

/// Gram residual accepted for the orthonormalized basis.
pub const GRAM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Frame {
    North,
    South,
}

impl Frame {
    pub(crate) fn for_point(p: &Vec3) -> Self {
        if p.z >= 0.0 { Frame::North } else { Frame::South }
    }
}

/// Monomial section values `cos(φ/2)^{k-j} sin(φ/2)^j e^{ijλ}` in `frame`.
pub(crate) fn monomials(k: u32, p: &Vec3, frame: Frame) -> Vec<Complex64> {
    let c = ((1.0 + p.z) / 2.0).max(0.0).sqrt();
    let s = ((1.0 - p.z) / 2.0).max(0.0).sqrt();
    let lam = p.y.atan2(p.x);
    let shift = match frame {
        Frame::North => 0.0,
        Frame::South => k as f64,
    };
    (0..=k)
        .map(|j| {
            let amp = c.powi((k - j) as i32) * s.powi(j as i32);
            Complex64::from_polar(amp, (j as f64 - shift) * lam)
        })
        .collect()
}

/// Connection form of `frame` evaluated on the tangent vector `v` at `p`.
pub(crate) fn connection_form(k: u32, p: &Vec3, v: &Vec3, frame: Frame) -> Complex64 {
    let rot = p.x * v.y - p.y * v.x;
    let k = k as f64;
    match frame {
        Frame::North => Complex64::new(0.0, -0.5 * k * rot / (1.0 + p.z)),
        Frame::South => Complex64::new(0.0, 0.5 * k * rot / (1.0 - p.z)),
    }
}

/// Orthonormal holomorphic basis with its quadrature grid.
#[derive(Debug, Clone)]
pub struct ToeplitzData {
    level: u32,
    order: usize,
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
    frames: Vec<Frame>,
    /// `C` with orthonormal sections `s = s_hat C`.
    transform: DMatrix<Complex64>,
    /// Orthonormal section values, one row per node.
    values: DMatrix<Complex64>,
    gram_residual: f64,
}

fn grid(level: u32, order: usize) -> (Vec<Vec3>, Vec<f64>) {
    let (zs, wz) = gauss_legendre_on(order, -1.0, 1.0);
    let m = 2 * order;
    let scale = level as f64 / (4.0 * PI) * 2.0 * PI / m as f64;
    let mut nodes = Vec::with_capacity(order * m);
    let mut weights = Vec::with_capacity(order * m);
    for (z, w) in zs.iter().zip(&wz) {
        let r = (1.0 - z * z).sqrt();
        for j in 0..m {
            let lam = 2.0 * PI * (j as f64 + 0.5) / m as f64;
            nodes.push(Vec3::new(r * lam.cos(), r * lam.sin(), *z));
            weights.push(w * scale);
        }
    }
    (nodes, weights)
}

fn monomial_matrix(level: u32, nodes: &[Vec3], frames: &[Frame]) -> DMatrix<Complex64> {
    let d = level as usize + 1;
    let mut m = DMatrix::zeros(nodes.len(), d);
    for (i, (p, f)) in nodes.iter().zip(frames).enumerate() {
        for (j, v) in monomials(level, p, *f).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

/// `V^* diag(w) W` for node-value matrices.
pub(crate) fn weighted_inner(v: &DMatrix<Complex64>, w: &DMatrix<Complex64>, weights: &[f64]) -> DMatrix<Complex64> {
    let mut ww = w.clone();
    for (i, q) in weights.iter().enumerate() {
        ww.row_mut(i).scale_mut(*q);
    }
    v.adjoint() * ww
}

fn identity_residual(g: &DMatrix<Complex64>) -> f64 {
    let d = g.nrows();
    (g - DMatrix::<Complex64>::identity(d, d)).iter().fold(0.0, |m, x| m.max(x.norm()))
}

/// Orthonormalize the monomial sections of level `k` on a Gauss-Legendre
/// (in z) by uniform (in longitude) grid with `order x 2 order` nodes.
pub fn holomorphic_basis(k: i64, order: usize) -> Result<ToeplitzData> {
    if k < 1 || k > u32::MAX as i64 {
        return Err(Error::InvalidLevel(k));
    }
    let level = k as u32;
    if order < 1 {
        return Err(Error::Config("quadrature order must be positive".into()));
    }
    let build = |order: usize| {
        let (nodes, weights) = grid(level, order);
        let frames: Vec<Frame> = nodes.iter().map(Frame::for_point).collect();
        let m = monomial_matrix(level, &nodes, &frames);
        (nodes, weights, frames, m)
    };
    let (nodes, weights, frames, mono) = build(order);
    let gram = weighted_inner(&mono, &mono, &weights);
    let chol = gram.clone().cholesky().ok_or(Error::UnderResolved { residual: f64::INFINITY, suggested: 2 * order })?;
    let l = chol.l();
    let d = level as usize + 1;
    let linv = l
        .solve_lower_triangular(&DMatrix::<Complex64>::identity(d, d))
        .ok_or(Error::UnderResolved { residual: f64::INFINITY, suggested: 2 * order })?;
    let transform = linv.adjoint();
    let values = &mono * &transform;

    // Check against the doubled grid.
    let (_, w2, _, mono2) = build(2 * order);
    let v2 = &mono2 * &transform;
    let gram2 = weighted_inner(&v2, &v2, &w2);
    let gram_residual = identity_residual(&gram2);
    if gram_residual > GRAM_TOL {
        return Err(Error::UnderResolved { residual: gram_residual, suggested: 2 * order });
    }
    Ok(ToeplitzData { level, order, nodes, weights, frames, transform, values, gram_residual })
}

/// Default quadrature order for fields of polynomial degree up to 8.
pub fn default_order(k: u32) -> usize {
    k as usize + 8
}

impl ToeplitzData {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dimension(&self) -> usize {
        self.level as usize + 1
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn gram_residual(&self) -> f64 {
        self.gram_residual
    }

    /// Gram matrix of the orthonormal basis on the working grid.
    pub fn gram(&self) -> DMatrix<Complex64> {
        weighted_inner(&self.values, &self.values, &self.weights)
    }

    pub(crate) fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub(crate) fn values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    pub(crate) fn transform(&self) -> &DMatrix<Complex64> {
        &self.transform
    }

    /// Orthonormal basis values at an arbitrary point, in `frame`.
    pub(crate) fn basis_at(&self, p: &Vec3, frame: Frame) -> Vec<Complex64> {
        let m = monomials(self.level, p, frame);
        (0..self.dimension())
            .map(|i| (0..self.dimension()).map(|j| m[j] * self.transform[(j, i)]).sum())
            .collect()
    }

    /// Pointwise values of a section at the grid nodes.
    pub(crate) fn section_values(&self, s: &SectionVector) -> Vec<Complex64> {
        let c = nalgebra::DVector::from_vec(s.coeffs.clone());
        (&self.values * c).iter().copied().collect()
    }
}

/// Coefficients of a holomorphic section in the orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionVector {
    pub coeffs: Vec<Complex64>,
}

impl SectionVector {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Config("non-finite section coefficient".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); dim];
        coeffs[i] = Complex64::new(1.0, 0.0);
        Self { coeffs }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroSection);
        }
        Ok(Self { coeffs: self.coeffs.iter().map(|c| c / n).collect() })
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Gaussian random unit section.
    pub fn random_unit(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..dim)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        Self { coeffs }.normalized().expect("nonzero with probability one")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(holomorphic_basis(1, 8).unwrap().dimension(), 2);
        assert_eq!(holomorphic_basis(4, 12).unwrap().dimension(), 5);
        assert!(holomorphic_basis(0, 8).is_err());
    }

    #[test]
    fn gram_is_identity() {
        let d = holomorphic_basis(3, 11).unwrap();
        assert!(identity_residual(&d.gram()) < 1e-10);
        assert!(d.gram_residual() < 1e-10);
    }

    #[test]
    fn coarse_grid_is_refused() {
        assert!(matches!(holomorphic_basis(6, 2), Err(Error::UnderResolved { suggested: 4, .. })));
    }

    #[test]
    fn frames_agree_up_to_phase() {
        let p = Vec3::new(0.3, -0.4, 0.1).normalize();
        let a = monomials(5, &p, Frame::North);
        let b = monomials(5, &p, Frame::South);
        let lam = p.y.atan2(p.x);
        for (x, y) in a.iter().zip(&b) {
            assert!((x * Complex64::from_polar(1.0, -5.0 * lam) - y).norm() < 1e-14);
        }
    }

    #[test]
    fn total_mass_is_level() {
        let d = holomorphic_basis(4, 12).unwrap();
        assert!((d.weights().iter().sum::<f64>() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_section() {
        assert!(matches!(SectionVector::new(vec![Complex64::new(0.0, 0.0); 3]).unwrap().normalized(), Err(Error::ZeroSection)));
    }
}
