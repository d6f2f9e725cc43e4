//! Model symplectic surfaces at integer level `k`.
//!
//! * Flat torus: fundamental square `[0, 1)^2`, `omega = k dx ^ dy`.
//! * Round sphere: unit sphere with `omega = (k / 4 pi) dA`, covered by two
//!   orientation-preserving stereographic charts. `North` has its origin at
//!   the north pole, `w = (x + i y) / (1 + z)`; `South` has its origin at the
//!   south pole, `w' = (x - i y) / (1 - z) = 1 / w`.
//!
//! Both surfaces are handled through an ambient embedding in `R^3` (lifted
//! fundamental-domain coordinates for the torus), where the symplectic form
//! reads `omega(a, b) = c * N . (a x b)` with `N` the unit normal and `c` the
//! constant density (`k` or `k / 4 pi`).
//!
//! Sign convention: `omega(X_f, .) = -df`, so that `X_f(g) = {f, g}` and
//! `{f, g} = omega(X_f, X_g)`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, SpherePoly};
use crate::quad::gauss_legendre_on;

pub type Vec3 = Vector3<f64>;

/// Chart coordinates beyond this radius trigger a switch to the other chart.
pub const CHART_SWITCH_RADIUS: f64 = 5.0;
/// Largest chart radius accepted for a stored point.
pub const CHART_MAX_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceModel {
    FlatTorus,
    RoundSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartId {
    Torus,
    North,
    South,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub chart: ChartId,
    pub coords: [f64; 2],
}

impl SurfacePoint {
    pub fn torus(x: f64, y: f64) -> Self {
        Self { chart: ChartId::Torus, coords: [x.rem_euclid(1.0), y.rem_euclid(1.0)] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymplecticSurface {
    model: SurfaceModel,
    level: u32,
}

impl SymplecticSurface {
    pub fn new(model: SurfaceModel, level: i64) -> Result<Self> {
        if level < 1 || level > u32::MAX as i64 {
            return Err(Error::InvalidLevel(level));
        }
        Ok(Self { model, level: level as u32 })
    }

    pub fn torus(level: i64) -> Result<Self> {
        Self::new(SurfaceModel::FlatTorus, level)
    }

    pub fn sphere(level: i64) -> Result<Self> {
        Self::new(SurfaceModel::RoundSphere, level)
    }

    pub fn model(&self) -> SurfaceModel {
        self.model
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn is_sphere(&self) -> bool {
        self.model == SurfaceModel::RoundSphere
    }

    /// Constant `c` in `omega(a, b) = c * N . (a x b)`.
    pub fn omega_scale(&self) -> f64 {
        match self.model {
            SurfaceModel::FlatTorus => self.level as f64,
            SurfaceModel::RoundSphere => self.level as f64 / (4.0 * PI),
        }
    }

    /// Unit normal at an embedded point.
    pub fn normal(&self, p: &Vec3) -> Vec3 {
        match self.model {
            SurfaceModel::FlatTorus => Vec3::z(),
            SurfaceModel::RoundSphere => p.normalize(),
        }
    }

    pub fn omega(&self, p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
        self.omega_scale() * self.normal(p).dot(&a.cross(b))
    }

    /// Project an ambient vector onto the tangent plane at `p`.
    pub fn tangent_part(&self, p: &Vec3, v: &Vec3) -> Vec3 {
        let n = self.normal(p);
        v - n * n.dot(v)
    }

    /// Density `rho` of `omega = rho du ^ dv` in the chart hosting `p`.
    pub fn area_density(&self, p: &SurfacePoint) -> f64 {
        match p.chart {
            ChartId::Torus => self.level as f64,
            ChartId::North | ChartId::South => {
                let r2 = p.coords[0].powi(2) + p.coords[1].powi(2);
                self.level as f64 / (PI * (1.0 + r2).powi(2))
            }
        }
    }

    /// Total symplectic area by quadrature over the chart partition
    /// (unit square, or the two unit disks of the stereographic charts).
    pub fn total_area(&self) -> f64 {
        match self.model {
            SurfaceModel::FlatTorus => {
                let (x, w) = gauss_legendre_on(8, 0.0, 1.0);
                let mut sum = 0.0;
                for (xi, wi) in x.iter().zip(&w) {
                    for (yj, wj) in x.iter().zip(&w) {
                        sum += wi * wj * self.area_density(&SurfacePoint::torus(*xi, *yj));
                    }
                }
                sum
            }
            SurfaceModel::RoundSphere => {
                let (r, wr) = gauss_legendre_on(24, 0.0, 1.0);
                let n_theta = 16;
                let mut sum = 0.0;
                for chart in [ChartId::North, ChartId::South] {
                    for (ri, wi) in r.iter().zip(&wr) {
                        for j in 0..n_theta {
                            let th = 2.0 * PI * j as f64 / n_theta as f64;
                            let p = SurfacePoint { chart, coords: [ri * th.cos(), ri * th.sin()] };
                            sum += wi * ri * self.area_density(&p) * 2.0 * PI / n_theta as f64;
                        }
                    }
                }
                sum
            }
        }
    }

    pub fn validate(&self, p: &SurfacePoint) -> Result<()> {
        let ok = match (self.model, p.chart) {
            (SurfaceModel::FlatTorus, ChartId::Torus) => {
                p.coords.iter().all(|c| (0.0..1.0).contains(c))
            }
            (SurfaceModel::RoundSphere, ChartId::North | ChartId::South) => {
                p.coords.iter().all(|c| c.is_finite())
                    && p.coords[0].hypot(p.coords[1]) <= CHART_MAX_RADIUS
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPoint(format!("{p:?} on {:?}", self.model)))
        }
    }

    /// Ambient position (torus: fundamental-domain coordinates, z = 0).
    pub fn embed(&self, p: &SurfacePoint) -> Vec3 {
        let [u, v] = p.coords;
        match p.chart {
            ChartId::Torus => Vec3::new(u, v, 0.0),
            ChartId::North => {
                let d = 1.0 + u * u + v * v;
                Vec3::new(2.0 * u / d, 2.0 * v / d, 2.0 / d - 1.0)
            }
            ChartId::South => {
                let d = 1.0 + u * u + v * v;
                Vec3::new(2.0 * u / d, -2.0 * v / d, 1.0 - 2.0 / d)
            }
        }
    }

    /// Chart point for an ambient position; sphere points go to the chart
    /// centred on the nearer pole.
    pub fn point(&self, e: &Vec3) -> SurfacePoint {
        match self.model {
            SurfaceModel::FlatTorus => SurfacePoint::torus(e.x, e.y),
            SurfaceModel::RoundSphere => {
                let e = e.normalize();
                if e.z >= 0.0 {
                    self.sphere_point_in(ChartId::North, &e)
                } else {
                    self.sphere_point_in(ChartId::South, &e)
                }
            }
        }
    }

    /// Coordinates of an ambient sphere point in a given stereographic chart.
    pub fn sphere_point_in(&self, chart: ChartId, e: &Vec3) -> SurfacePoint {
        let coords = match chart {
            ChartId::North => [e.x / (1.0 + e.z), e.y / (1.0 + e.z)],
            ChartId::South => [e.x / (1.0 - e.z), -e.y / (1.0 - e.z)],
            ChartId::Torus => [e.x, e.y],
        };
        SurfacePoint { chart, coords }
    }

    /// Re-express a point in another chart (identity on the torus).
    pub fn to_chart(&self, p: &SurfacePoint, chart: ChartId) -> SurfacePoint {
        if p.chart == chart || self.model == SurfaceModel::FlatTorus {
            return *p;
        }
        self.sphere_point_in(chart, &self.embed(p))
    }

    /// Columns `dE/du`, `dE/dv` of the chart embedding.
    pub fn chart_jacobian(&self, p: &SurfacePoint) -> (Vec3, Vec3) {
        let [u, v] = p.coords;
        match p.chart {
            ChartId::Torus => (Vec3::x(), Vec3::y()),
            ChartId::North | ChartId::South => {
                let d = 1.0 + u * u + v * v;
                let d2 = d * d;
                let du = Vec3::new(2.0 / d - 4.0 * u * u / d2, -4.0 * u * v / d2, -4.0 * u / d2);
                let dv = Vec3::new(-4.0 * u * v / d2, 2.0 / d - 4.0 * v * v / d2, -4.0 * v / d2);
                if p.chart == ChartId::North {
                    (du, dv)
                } else {
                    (
                        Vec3::new(du.x, -du.y, -du.z),
                        Vec3::new(dv.x, -dv.y, -dv.z),
                    )
                }
            }
        }
    }

    /// Chart components of a tangent vector given in ambient form.
    pub fn chart_components(&self, p: &SurfacePoint, v: &Vec3) -> [f64; 2] {
        let (ju, jv) = self.chart_jacobian(p);
        // The stereographic charts are conformal: J^T J = |J_u|^2 I.
        let s = ju.norm_squared();
        [ju.dot(v) / s, jv.dot(v) / s]
    }

    /// `(df/du, df/dv)` from the ambient gradient.
    pub fn chart_gradient(&self, f: &ScalarField, p: &SurfacePoint) -> [f64; 2] {
        let g = f.grad(&self.embed(p));
        let (ju, jv) = self.chart_jacobian(p);
        [g.dot(&ju), g.dot(&jv)]
    }

    fn check_family(&self, f: &ScalarField) -> Result<()> {
        match (self.model, f) {
            (SurfaceModel::FlatTorus, ScalarField::Torus(_))
            | (SurfaceModel::RoundSphere, ScalarField::Sphere(_)) => Ok(()),
            _ => Err(Error::Unsupported(format!("field family does not match {:?}", self.model))),
        }
    }

    /// Hamiltonian vector field in chart components: `X = (-f_v, f_u) / rho`.
    pub fn hamiltonian_vector(&self, f: &ScalarField, p: &SurfacePoint) -> Result<[f64; 2]> {
        self.validate(p)?;
        self.check_family(f)?;
        let [fu, fv] = self.chart_gradient(f, p);
        let rho = self.area_density(p);
        Ok([-fv / rho, fu / rho])
    }

    /// Hamiltonian vector field in ambient form: `X = (N x grad f) / c`.
    pub fn hamiltonian_vector_ambient(&self, grad: &Vec3, p: &Vec3) -> Vec3 {
        self.normal(p).cross(grad) / self.omega_scale()
    }

    /// `{f, g} = omega(X_f, X_g)`, returned as a field of the same family.
    pub fn poisson_bracket(&self, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
        self.check_family(f)?;
        self.check_family(g)?;
        let k = self.level as f64;
        match (f, g) {
            (ScalarField::Torus(a), ScalarField::Torus(b)) => {
                let t = a.partial(0).mul(&b.partial(1)).add(&a.partial(1).mul(&b.partial(0)).scale(-1.0));
                Ok(ScalarField::Torus(t.scale(1.0 / k)))
            }
            (ScalarField::Sphere(a), ScalarField::Sphere(b)) => {
                let da = [a.partial(0), a.partial(1), a.partial(2)];
                let db = [b.partial(0), b.partial(1), b.partial(2)];
                let cross = |i: usize, j: usize| da[i].mul(&db[j]).add(&da[j].mul(&db[i]).scale(-1.0));
                let det = SpherePoly::coordinate(0)
                    .mul(&cross(1, 2))
                    .add(&SpherePoly::coordinate(1).mul(&cross(2, 0)))
                    .add(&SpherePoly::coordinate(2).mul(&cross(0, 1)));
                Ok(ScalarField::Sphere(det.scale(4.0 * PI / k)))
            }
            _ => unreachable!("families checked above"),
        }
    }

    /// Pointwise bracket through the vector fields, `omega(X_f, X_g)(p)`.
    pub fn poisson_bracket_at(&self, f: &ScalarField, g: &ScalarField, p: &SurfacePoint) -> Result<f64> {
        let e = self.embed(p);
        let xf = self.hamiltonian_vector_ambient(&f.grad(&e), &e);
        let xg = self.hamiltonian_vector_ambient(&g.grad(&e), &e);
        Ok(self.omega(&e, &xf, &xg))
    }

    /// Transport `p` for time `t` along `X_f` with classical RK4 in chart
    /// coordinates, step at most `dt`. Sphere points switch charts whenever
    /// the chart radius exceeds [`CHART_SWITCH_RADIUS`].
    pub fn flow_point(&self, f: &ScalarField, p: &SurfacePoint, t: f64, dt: f64) -> Result<SurfacePoint> {
        if !(dt > 0.0) {
            return Err(Error::InvalidPoint(format!("flow step must be positive, got {dt}")));
        }
        self.validate(p)?;
        self.check_family(f)?;
        if t == 0.0 {
            return Ok(*p);
        }
        let steps = (t.abs() / dt).ceil().max(1.0) as usize;
        let h = t / steps as f64;
        let grad = f.gradient_field();
        let field = |q: &SurfacePoint| -> [f64; 2] {
            let e = self.embed(q);
            let g = grad.eval(&e);
            let (ju, jv) = self.chart_jacobian(q);
            let rho = self.area_density(q);
            [-g.dot(&jv) / rho, g.dot(&ju) / rho]
        };
        let mut q = *p;
        for _ in 0..steps {
            if q.chart != ChartId::Torus && q.coords[0].hypot(q.coords[1]) > CHART_SWITCH_RADIUS {
                let other = if q.chart == ChartId::North { ChartId::South } else { ChartId::North };
                q = self.to_chart(&q, other);
            }
            let shifted = |base: &SurfacePoint, d: [f64; 2], s: f64| SurfacePoint {
                chart: base.chart,
                coords: [base.coords[0] + s * d[0], base.coords[1] + s * d[1]],
            };
            let k1 = field(&q);
            let k2 = field(&shifted(&q, k1, h / 2.0));
            let k3 = field(&shifted(&q, k2, h / 2.0));
            let k4 = field(&shifted(&q, k3, h));
            for i in 0..2 {
                q.coords[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if !q.coords.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidPoint("flow left every chart".into()));
            }
        }
        Ok(match q.chart {
            ChartId::Torus => SurfacePoint::torus(q.coords[0], q.coords[1]),
            _ if q.coords[0].hypot(q.coords[1]) > CHART_SWITCH_RADIUS => {
                let other = if q.chart == ChartId::North { ChartId::South } else { ChartId::North };
                self.to_chart(&q, other)
            }
            _ => q,
        })
    }

    /// Flow an ambient point (lifted for the torus, no wrapping) with RK4.
    pub fn flow_ambient(&self, grad: &crate::field::GradientField, p: &Vec3, t: f64, steps: usize) -> Vec3 {
        let h = t / steps as f64;
        let x = |q: &Vec3| self.hamiltonian_vector_ambient(&grad.eval(q), q);
        let mut q = *p;
        for _ in 0..steps {
            let k1 = x(&q);
            let k2 = x(&(q + k1 * (h / 2.0)));
            let k3 = x(&(q + k2 * (h / 2.0)));
            let k4 = x(&(q + k3 * h));
            q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            if self.is_sphere() {
                q = q.normalize();
            }
        }
        q
    }

    /// Default Planck-type parameter `tau = 1 / (2k)`.
    pub fn default_tau(&self) -> f64 {
        1.0 / (2.0 * self.level as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_levels() {
        assert_eq!(SymplecticSurface::torus(0), Err(Error::InvalidLevel(0)));
        assert!(SymplecticSurface::sphere(-3).is_err());
    }

    #[test]
    fn total_area_equals_level() {
        assert!((SymplecticSurface::torus(1).unwrap().total_area() - 1.0).abs() < 1e-8);
        let s = SymplecticSurface::sphere(4).unwrap();
        // Closed form: (k / 4 pi) * 4 pi.
        assert!((s.total_area() - 4.0).abs() < 1e-8 * 4.0);
    }

    #[test]
    fn charts_agree_on_overlap() {
        let s = SymplecticSurface::sphere(3).unwrap();
        let f = ScalarField::random_sphere_poly(11, 3);
        let e = Vec3::new(0.3, -0.5, 0.2).normalize();
        let a = s.sphere_point_in(ChartId::North, &e);
        let b = s.sphere_point_in(ChartId::South, &e);
        assert!((s.embed(&a) - s.embed(&b)).norm() < 1e-14);
        assert!((f.eval(&s.embed(&a)) - f.eval(&s.embed(&b))).abs() < 1e-12);
        let g = ScalarField::random_sphere_poly(12, 2);
        let pa = s.poisson_bracket_at(&f, &g, &a).unwrap();
        let pb = s.poisson_bracket_at(&f, &g, &b).unwrap();
        assert!((pa - pb).abs() < 1e-10);
        // The chart densities describe the same form: omega(J_u, J_v) = rho.
        for p in [a, b] {
            let (ju, jv) = s.chart_jacobian(&p);
            assert!((s.omega(&s.embed(&p), &ju, &jv) - s.area_density(&p)).abs() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_vector_on_critical_line_vanishes() {
        let s = SymplecticSurface::torus(1).unwrap();
        let f = ScalarField::Torus(crate::field::TrigPoly::sin(1, 0, 1.0));
        let v = s.hamiltonian_vector(&f, &SurfacePoint::torus(0.25, 0.3)).unwrap();
        assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12);
    }

    #[test]
    fn sign_convention_is_minus_df() {
        let s = SymplecticSurface::sphere(2).unwrap();
        let f = ScalarField::random_sphere_poly(5, 2);
        let p = s.point(&Vec3::new(0.2, 0.4, 0.7).normalize());
        let e = s.embed(&p);
        let x = s.hamiltonian_vector(&f, &p).unwrap();
        let (ju, jv) = s.chart_jacobian(&p);
        let xa = ju * x[0] + jv * x[1];
        for w in [ju, jv] {
            assert!((s.omega(&e, &xa, &w) + f.grad(&e).dot(&w)).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_torus_flow() {
        let s = SymplecticSurface::torus(1).unwrap();
        let f = ScalarField::torus_y();
        let p = SurfacePoint::torus(0.2, 0.6);
        let q = s.flow_point(&f, &p, 0.3, 0.01).unwrap();
        assert!((q.coords[0] - (0.2 - 0.3f64).rem_euclid(1.0)).abs() < 1e-10);
        assert!((q.coords[1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn constant_field_does_not_move_points() {
        let s = SymplecticSurface::sphere(3).unwrap();
        let p = s.point(&Vec3::new(1.0, 2.0, -0.5).normalize());
        let q = s.flow_point(&ScalarField::sphere_constant(4.0), &p, 2.0, 0.1).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn rotation_returns_after_one_period() {
        // X_z = (4 pi / k) p x e_z: angular speed 4 pi / k, period k / 2.
        let s = SymplecticSurface::sphere(2).unwrap();
        let p = s.point(&Vec3::new(0.6, 0.0, 0.8));
        let q = s.flow_point(&ScalarField::z(), &p, 1.0, 1e-3).unwrap();
        assert!((s.embed(&p) - s.embed(&q)).norm() < 1e-6);
    }

    #[test]
    fn flow_crosses_pole_by_switching_charts() {
        let s = SymplecticSurface::sphere(1).unwrap();
        let p = s.point(&Vec3::new(0.0, 0.3, 0.95).normalize());
        // Rotation about the x axis passes through both poles.
        let q = s.flow_point(&ScalarField::x(), &p, 0.25, 1e-3).unwrap();
        assert!(s.validate(&q).is_ok());
        let f = ScalarField::x();
        assert!((f.eval(&s.embed(&q)) - f.eval(&s.embed(&p))).abs() < 1e-8);
    }
}
