//! Scalar fields on the model surfaces.
//!
//! Torus fields are real trigonometric polynomials in the fundamental-domain
//! coordinates, stored as complex exponential coefficients with Hermitian
//! symmetry. Sphere fields are polynomials in the ambient coordinates of the
//! unit sphere. Both families are closed under products and derivatives, so
//! Poisson brackets stay inside the family.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `f(x, y) = a x + b y + Re sum c_{m,n} exp(2 pi i (m x + n y))`.
///
/// The linear part is multivalued on the torus; only its differential is
/// global. It is evaluated on lifted (unwrapped) coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPoly {
    linear: [f64; 2],
    coeffs: BTreeMap<(i32, i32), Complex64>,
}

impl TrigPoly {
    pub fn constant(c: f64) -> Self {
        let mut p = Self::default();
        p.push((0, 0), Complex64::new(c, 0.0));
        p
    }

    /// `amp * cos(2 pi (m x + n y))`
    pub fn cos(m: i32, n: i32, amp: f64) -> Self {
        let mut p = Self::default();
        p.push((m, n), Complex64::new(amp / 2.0, 0.0));
        p.push((-m, -n), Complex64::new(amp / 2.0, 0.0));
        p
    }

    /// `amp * sin(2 pi (m x + n y))`
    pub fn sin(m: i32, n: i32, amp: f64) -> Self {
        let mut p = Self::default();
        p.push((m, n), Complex64::new(0.0, -amp / 2.0));
        p.push((-m, -n), Complex64::new(0.0, amp / 2.0));
        p
    }

    /// `a x + b y`
    pub fn linear(a: f64, b: f64) -> Self {
        Self { linear: [a, b], coeffs: BTreeMap::new() }
    }

    pub fn linear_part(&self) -> [f64; 2] {
        self.linear
    }

    fn push(&mut self, key: (i32, i32), c: Complex64) {
        let e = self.coeffs.entry(key).or_insert(Complex64::new(0.0, 0.0));
        *e += c;
        if e.norm() == 0.0 {
            self.coeffs.remove(&key);
        }
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&(i32, i32), &Complex64)> {
        self.coeffs.iter()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.linear[0] * x
            + self.linear[1] * y
            + self
                .coeffs
                .iter()
                .map(|(&(m, n), c)| {
                    let ph = 2.0 * PI * (m as f64 * x + n as f64 * y);
                    c.re * ph.cos() - c.im * ph.sin()
                })
                .sum::<f64>()
    }

    /// Partial derivative in x (`axis = 0`) or y (`axis = 1`).
    pub fn partial(&self, axis: usize) -> Self {
        let mut out = Self::constant(self.linear[axis]);
        for (&(m, n), c) in &self.coeffs {
            let k = if axis == 0 { m } else { n };
            if k != 0 {
                out.push((m, n), c * Complex64::new(0.0, 2.0 * PI * k as f64));
            }
        }
        out
    }

    /// Product of two periodic polynomials; linear parts are ignored.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (&(m1, n1), a) in &self.coeffs {
            for (&(m2, n2), b) in &other.coeffs {
                out.push((m1 + m2, n1 + n2), a * b);
            }
        }
        out.prune();
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.linear[0] += other.linear[0];
        out.linear[1] += other.linear[1];
        for (&k, c) in &other.coeffs {
            out.push(k, *c);
        }
        out.prune();
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::linear(self.linear[0] * s, self.linear[1] * s);
        for (&k, c) in &self.coeffs {
            out.push(k, c * s);
        }
        out
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, c| c.norm() > 1e-300);
    }

    pub fn degree(&self) -> i32 {
        self.coeffs
            .keys()
            .map(|(m, n)| m.abs().max(n.abs()))
            .max()
            .unwrap_or(0)
    }
}

/// `f(x, y, z) = sum a_{i,j,l} x^i y^j z^l` restricted to the unit sphere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpherePoly {
    coeffs: BTreeMap<[u32; 3], f64>,
}

impl SpherePoly {
    pub fn constant(c: f64) -> Self {
        Self::monomial([0, 0, 0], c)
    }

    pub fn monomial(exp: [u32; 3], c: f64) -> Self {
        let mut p = Self::default();
        p.push(exp, c);
        p
    }

    /// The ambient coordinate `axis` (0 = x, 1 = y, 2 = z).
    pub fn coordinate(axis: usize) -> Self {
        let mut e = [0; 3];
        e[axis] = 1;
        Self::monomial(e, 1.0)
    }

    fn push(&mut self, exp: [u32; 3], c: f64) {
        let e = self.coeffs.entry(exp).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.coeffs.remove(&exp);
        }
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&[u32; 3], &f64)> {
        self.coeffs.iter()
    }

    pub fn eval(&self, p: &Vector3<f64>) -> f64 {
        self.coeffs
            .iter()
            .map(|(e, c)| c * p.x.powi(e[0] as i32) * p.y.powi(e[1] as i32) * p.z.powi(e[2] as i32))
            .sum()
    }

    pub fn partial(&self, axis: usize) -> Self {
        let mut out = Self::default();
        for (e, c) in &self.coeffs {
            if e[axis] > 0 {
                let mut d = *e;
                d[axis] -= 1;
                out.push(d, c * e[axis] as f64);
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                out.push([a[0] + b[0], a[1] + b[1], a[2] + b[2]], ca * cb);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.coeffs {
            out.push(*e, *c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::default();
        for (e, c) in &self.coeffs {
            out.push(*e, c * s);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(1.0), |acc, _| acc.mul(self))
    }

    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }
}

/// A smooth real function on one of the model surfaces.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    Torus(TrigPoly),
    Sphere(SpherePoly),
}

impl ScalarField {
    pub fn torus_constant(c: f64) -> Self {
        Self::Torus(TrigPoly::constant(c))
    }

    pub fn sphere_constant(c: f64) -> Self {
        Self::Sphere(SpherePoly::constant(c))
    }

    /// Torus fibration function `y` (multivalued; see [`TrigPoly`]).
    pub fn torus_y() -> Self {
        Self::Torus(TrigPoly::linear(0.0, 1.0))
    }

    pub fn x() -> Self {
        Self::Sphere(SpherePoly::coordinate(0))
    }

    pub fn y() -> Self {
        Self::Sphere(SpherePoly::coordinate(1))
    }

    pub fn z() -> Self {
        Self::Sphere(SpherePoly::coordinate(2))
    }

    pub fn eval(&self, p: &Vector3<f64>) -> f64 {
        match self {
            Self::Torus(t) => t.eval(p.x, p.y),
            Self::Sphere(s) => s.eval(p),
        }
    }

    /// Ambient gradient; for the torus the third component is zero.
    pub fn grad(&self, p: &Vector3<f64>) -> Vector3<f64> {
        match self {
            Self::Torus(t) => Vector3::new(t.partial(0).eval(p.x, p.y), t.partial(1).eval(p.x, p.y), 0.0),
            Self::Sphere(s) => Vector3::new(s.partial(0).eval(p), s.partial(1).eval(p), s.partial(2).eval(p)),
        }
    }

    /// Gradient evaluator with the partial derivatives built once.
    pub fn gradient_field(&self) -> GradientField {
        match self {
            Self::Torus(t) => GradientField::Torus([t.partial(0), t.partial(1)]),
            Self::Sphere(s) => GradientField::Sphere([s.partial(0), s.partial(1), s.partial(2)]),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (Self::Torus(a), Self::Torus(b)) => Ok(Self::Torus(a.add(b))),
            (Self::Sphere(a), Self::Sphere(b)) => Ok(Self::Sphere(a.add(b))),
            _ => Err(mismatch()),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (Self::Torus(a), Self::Torus(b)) => {
                if a.linear != [0.0; 2] || b.linear != [0.0; 2] {
                    return Err(Error::Unsupported("product with a multivalued torus field".into()));
                }
                Ok(Self::Torus(a.mul(b)))
            }
            (Self::Sphere(a), Self::Sphere(b)) => Ok(Self::Sphere(a.mul(b))),
            _ => Err(mismatch()),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        match self {
            Self::Torus(a) => Self::Torus(a.scale(s)),
            Self::Sphere(a) => Self::Sphere(a.scale(s)),
        }
    }

    /// Value of the field if it is a constant polynomial.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Self::Torus(t) => {
                let mut it = t.coefficients();
                if t.linear != [0.0; 2] {
                    return None;
                }
                match (it.next(), it.next()) {
                    (None, _) => Some(0.0),
                    (Some((&(0, 0), c)), None) => Some(c.re),
                    _ => None,
                }
            }
            Self::Sphere(s) => {
                let mut it = s.coefficients();
                match (it.next(), it.next()) {
                    (None, _) => Some(0.0),
                    (Some((&[0, 0, 0], c)), None) => Some(*c),
                    _ => None,
                }
            }
        }
    }

    /// Random real trigonometric polynomial on the torus with modes
    /// `|m|, |n| <= degree`, amplitudes decaying like `1 / (1 + m^2 + n^2)`.
    pub fn random_trig(seed: u64, degree: i32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = TrigPoly::default();
        for m in 0..=degree {
            for n in -degree..=degree {
                if m == 0 && n <= 0 {
                    continue;
                }
                let decay = 1.0 / (1.0 + (m * m + n * n) as f64);
                let a: f64 = rng.random_range(-1.0..1.0) * decay;
                let b: f64 = rng.random_range(-1.0..1.0) * decay;
                p = p.add(&TrigPoly::cos(m, n, a)).add(&TrigPoly::sin(m, n, b));
            }
        }
        Self::Torus(p)
    }

    /// Random polynomial of total degree `<= degree` in the ambient coordinates.
    pub fn random_sphere_poly(seed: u64, degree: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = SpherePoly::default();
        for i in 0..=degree {
            for j in 0..=(degree - i) {
                for l in 0..=(degree - i - j) {
                    if i + j + l == 0 {
                        continue;
                    }
                    p = p.add(&SpherePoly::monomial([i, j, l], rng.random_range(-1.0..1.0)));
                }
            }
        }
        Self::Sphere(p)
    }

    pub fn spec(&self) -> FieldSpec {
        match self {
            Self::Torus(t) => FieldSpec::Torus {
                linear: t.linear,
                terms: t
                    .coefficients()
                    .filter(|(&(m, n), _)| m > 0 || (m == 0 && n >= 0))
                    .map(|(&(m, n), c)| {
                        let scale = if m == 0 && n == 0 { 1.0 } else { 2.0 };
                        TrigTerm { m, n, cos: c.re * scale, sin: -c.im * scale }
                    })
                    .collect(),
            },
            Self::Sphere(s) => FieldSpec::Sphere {
                terms: s.coefficients().map(|(e, c)| PolyTerm { exp: *e, coef: *c }).collect(),
            },
        }
    }
}

fn mismatch() -> Error {
    Error::Unsupported("fields live on different surface models".into())
}

/// Precomputed partial derivatives.
#[derive(Debug, Clone)]
pub enum GradientField {
    Torus([TrigPoly; 2]),
    Sphere([SpherePoly; 3]),
}

impl GradientField {
    pub fn eval(&self, p: &Vector3<f64>) -> Vector3<f64> {
        match self {
            Self::Torus([dx, dy]) => Vector3::new(dx.eval(p.x, p.y), dy.eval(p.x, p.y), 0.0),
            Self::Sphere([dx, dy, dz]) => Vector3::new(dx.eval(p), dy.eval(p), dz.eval(p)),
        }
    }
}

/// Serializable description of a field, used by scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FieldSpec {
    /// `a x + b y + sum cos * cos(2 pi (m x + n y)) + sin * sin(2 pi (m x + n y))`
    Torus {
        #[serde(default)]
        linear: [f64; 2],
        terms: Vec<TrigTerm>,
    },
    /// `sum coef * x^i y^j z^l`
    Sphere { terms: Vec<PolyTerm> },
    /// Seeded random torus trigonometric polynomial.
    RandomTrig { seed: u64, degree: i32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub m: i32,
    pub n: i32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub exp: [u32; 3],
    pub coef: f64,
}

impl FieldSpec {
    pub fn build(&self) -> ScalarField {
        match self {
            Self::Torus { linear, terms } => {
                let mut p = TrigPoly::linear(linear[0], linear[1]);
                for t in terms {
                    if t.m == 0 && t.n == 0 {
                        p = p.add(&TrigPoly::constant(t.cos));
                    } else {
                        p = p.add(&TrigPoly::cos(t.m, t.n, t.cos)).add(&TrigPoly::sin(t.m, t.n, t.sin));
                    }
                }
                ScalarField::Torus(p)
            }
            Self::Sphere { terms } => {
                let mut p = SpherePoly::default();
                for t in terms {
                    p = p.add(&SpherePoly::monomial(t.exp, t.coef));
                }
                ScalarField::Sphere(p)
            }
            Self::RandomTrig { seed, degree } => ScalarField::random_trig(*seed, *degree),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_gradient_matches_central_differences() {
        let f = ScalarField::random_trig(7, 3);
        let h = 1e-5;
        for &(x, y) in &[(0.1, 0.7), (0.55, 0.2), (0.9, 0.95)] {
            let p = Vector3::new(x, y, 0.0);
            let g = f.grad(&p);
            let fx = (f.eval(&Vector3::new(x + h, y, 0.0)) - f.eval(&Vector3::new(x - h, y, 0.0))) / (2.0 * h);
            let fy = (f.eval(&Vector3::new(x, y + h, 0.0)) - f.eval(&Vector3::new(x, y - h, 0.0))) / (2.0 * h);
            assert!((g.x - fx).abs() < 1e-6 * (1.0 + fx.abs()));
            assert!((g.y - fy).abs() < 1e-6 * (1.0 + fy.abs()));
        }
    }

    #[test]
    fn trig_products_are_pointwise_products() {
        let a = ScalarField::random_trig(1, 2);
        let b = ScalarField::random_trig(2, 2);
        let ab = a.mul(&b).unwrap();
        for &(x, y) in &[(0.3, 0.4), (0.77, 0.01)] {
            let p = Vector3::new(x, y, 0.0);
            assert!((ab.eval(&p) - a.eval(&p) * b.eval(&p)).abs() < 1e-12);
        }
    }

    #[test]
    fn sin_and_cos_constructors() {
        let s = TrigPoly::sin(1, 0, 2.0);
        assert!((s.eval(0.25, 0.0) - 2.0).abs() < 1e-14);
        let c = TrigPoly::cos(0, 1, 1.0);
        assert!((c.eval(0.0, 0.5) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn spec_round_trips_fields() {
        let f = ScalarField::random_trig(3, 2);
        let g = f.spec().build();
        let p = Vector3::new(0.31, 0.67, 0.0);
        assert!((f.eval(&p) - g.eval(&p)).abs() < 1e-14);
        let h = ScalarField::random_sphere_poly(4, 3);
        let q = Vector3::new(0.6, 0.0, 0.8);
        assert!((h.eval(&q) - h.spec().build().eval(&q)).abs() < 1e-14);
    }

    #[test]
    fn constants_are_detected() {
        assert_eq!(ScalarField::torus_constant(2.5).as_constant(), Some(2.5));
        assert_eq!(ScalarField::z().as_constant(), None);
        assert_eq!(ScalarField::sphere_constant(0.0).as_constant(), Some(0.0));
    }
}
