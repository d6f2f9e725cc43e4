use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{connection_form, monomials, weighted_inner, Frame, SectionVector, ToeplitzData};
use crate::error::{Error, Result};
use crate::field::{GradientField, ScalarField};
use crate::surface::{SymplecticSurface, Vec3};

fn sphere_field(f: &ScalarField) -> Result<()> {
    match f {
        ScalarField::Sphere(_) => Ok(()),
        ScalarField::Torus(_) => Err(Error::Unsupported("complex polarization is implemented on the sphere".into())),
    }
}

/// `T_ij = <s_i, f s_j>` by quadrature.
pub fn toeplitz_matrix(data: &ToeplitzData, f: &ScalarField) -> Result<DMatrix<Complex64>> {
    sphere_field(f)?;
    let fw: Vec<f64> = data.nodes().iter().zip(data.weights()).map(|(p, w)| w * f.eval(p)).collect();
    Ok(weighted_inner(data.values(), data.values(), &fw))
}

/// Flow step used to differentiate sections along `X_f`.
const FLOW_STEP: f64 = 2.5e-4;
/// RK4 substeps per flow evaluation.
const FLOW_SUBSTEPS: usize = 2;
/// Relative residual of `Q_f s` outside the holomorphic sections that is
/// still accepted.
const QUANTIZABLE_TOL: f64 = 1e-6;

fn flowed_monomials(surface: &SymplecticSurface, grad: &GradientField, p: &Vec3, t: f64, frame: Frame) -> Vec<Complex64> {
    let q = surface.flow_ambient(grad, p, t, FLOW_SUBSTEPS);
    monomials(surface.level(), &q, frame)
}

/// `X_f` applied to the frame values of the monomial sections, by central
/// differences along the flow at steps `h`, `h / 2`, `h / 4` with two
/// Richardson levels (error `O(h^6)`).
fn flow_derivative(surface: &SymplecticSurface, grad: &GradientField, p: &Vec3, frame: Frame) -> Vec<Complex64> {
    let central = |h: f64| -> Vec<Complex64> {
        let plus = flowed_monomials(surface, grad, p, h, frame);
        let minus = flowed_monomials(surface, grad, p, -h, frame);
        plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    };
    let rich = |a: &[Complex64], b: &[Complex64], f: f64| -> Vec<Complex64> {
        a.iter().zip(b).map(|(a, b)| (f * b - a) / (f - 1.0)).collect()
    };
    let d1 = central(FLOW_STEP);
    let d2 = central(FLOW_STEP / 2.0);
    let d4 = central(FLOW_STEP / 4.0);
    rich(&rich(&d1, &d2, 4.0), &rich(&d2, &d4, 4.0), 16.0)
}

/// Matrix of `Q_f = nabla_{X_f} + 2 pi i f` on the holomorphic sections.
/// Fails with [`Error::NotQuantizable`] when `Q_f` leaves the section space.
pub fn sk_operator_matrix(data: &ToeplitzData, f: &ScalarField) -> Result<DMatrix<Complex64>> {
    sphere_field(f)?;
    let k = data.level();
    let surface = SymplecticSurface::sphere(k as i64)?;
    let grad = f.gradient_field();
    let d = data.dimension();
    let n = data.nodes().len();
    let mut q_mono = DMatrix::<Complex64>::zeros(n, d);
    for (i, (p, frame)) in data.nodes().iter().zip(data.frames()).enumerate() {
        let x = surface.hamiltonian_vector_ambient(&grad.eval(p), p);
        let a = connection_form(k, p, &x, *frame);
        let m = monomials(k, p, *frame);
        let dm = flow_derivative(&surface, &grad, p, *frame);
        let mult = a + Complex64::new(0.0, 2.0 * std::f64::consts::PI * f.eval(p));
        for j in 0..d {
            q_mono[(i, j)] = dm[j] + mult * m[j];
        }
    }
    let q_vals = q_mono * data.transform();
    let q = weighted_inner(data.values(), &q_vals, data.weights());

    // Part of Q_f s_j orthogonal to the holomorphic sections.
    let outside = &q_vals - data.values() * &q;
    let norms = |m: &DMatrix<Complex64>, j: usize| -> f64 {
        m.column(j).iter().zip(data.weights()).map(|(v, w)| w * v.norm_sqr()).sum::<f64>().sqrt()
    };
    for j in 0..d {
        let total = norms(&q_vals, j);
        let off = norms(&outside, j);
        if off > QUANTIZABLE_TOL * total.max(1.0) {
            return Err(Error::NotQuantizable(format!(
                "Q_f maps basis section {j} off the holomorphic sections (residual {off:.3e}); its flow does not preserve the complex structure"
            )));
        }
    }
    Ok(q)
}

/// `∫ f |s|^2 dmu` for a unit section `s`.
pub fn expectation_function(data: &ToeplitzData, f: &ScalarField, s: &SectionVector) -> Result<f64> {
    sphere_field(f)?;
    if s.coeffs.len() != data.dimension() {
        return Err(Error::Config(format!("section has {} coefficients, expected {}", s.coeffs.len(), data.dimension())));
    }
    let n = s.norm();
    if n == 0.0 {
        return Err(Error::ZeroSection);
    }
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::Config(format!("section norm {n} is not 1")));
    }
    let vals = data.section_values(s);
    Ok(data.nodes().iter().zip(data.weights()).zip(&vals).map(|((p, w), v)| w * f.eval(p) * v.norm_sqr()).sum())
}

/// Eigenpairs of a Hermitian matrix, ascending, each eigenvector with its
/// largest component real and positive.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<SectionVector>,
}

pub fn eigen_decomposition(t: &DMatrix<Complex64>) -> Eigen {
    let herm = (t + t.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].partial_cmp(&eig.eigenvalues[*b]).expect("finite eigenvalues"));
    let values = order.iter().map(|i| eig.eigenvalues[*i]).collect();
    let vectors = order
        .iter()
        .map(|i| {
            let col: DVector<Complex64> = eig.eigenvectors.column(*i).into_owned();
            let lead = col.iter().fold(Complex64::new(0.0, 0.0), |m, c| if c.norm() > m.norm() + 1e-12 { *c } else { m });
            let phase = if lead.norm() > 0.0 { lead.conj() / lead.norm() } else { Complex64::new(1.0, 0.0) };
            SectionVector { coeffs: col.iter().map(|c| c * phase).collect() }
        })
        .collect();
    Eigen { values, vectors }
}

/// JSON layout of an operator matrix: row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub basis: String,
    pub dim: usize,
    pub rows: Vec<Vec<[f64; 2]>>,
}

pub const BASIS_CONVENTION: &str =
    "orthonormal monomial sections cos(phi/2)^(k-j) sin(phi/2)^j e^(i j lambda), j ascending";

impl MatrixRecord {
    pub fn from_matrix(m: &DMatrix<Complex64>) -> Self {
        let rows = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
        Self { basis: BASIS_CONVENTION.into(), dim: m.nrows(), rows }
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| Complex64::new(self.rows[i][j][0], self.rows[i][j][1]))
    }
}
