//! Discretized closed cycles, half-weights, tangent pairs and the moduli
//! deformation step.

mod curve;
mod intersect;
mod snapshot;
mod weighted;

pub use curve::{sample_cycle, CurveSpec, Mode};
pub(crate) use curve::orthonormal_frame;
pub use snapshot::CycleSnapshot;
pub use weighted::{
    deform_step, make_half_weighted, random_tangent_pair, BsRequirement, HalfWeightedCycle, Sign, DEFAULT_BS_TOL,
    TangentPair, MU_MIN,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;
use crate::surface::{ChartId, SurfaceModel, SurfacePoint, SymplecticSurface, Vec3};

/// Minimum number of samples on a cycle.
pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Homology {
    Contractible,
    /// Winding numbers in x and y of a torus cycle.
    Torus { m: i32, n: i32 },
}

impl Homology {
    fn offset(&self) -> [f64; 2] {
        match *self {
            Homology::Contractible => [0.0, 0.0],
            Homology::Torus { m, n } => [m as f64, n as f64],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Positive,
    Negative,
}

/// Closed oriented polyline with uniform parameter `s_j = j / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedCycle {
    surface: SymplecticSurface,
    points: Vec<SurfacePoint>,
    homology: Homology,
    orientation: Orientation,
    intersections_waived: bool,
    /// Lifted coordinates (torus) or ambient unit vectors (sphere).
    embedded: Vec<Vec3>,
}

/// Per-node frame: position, parameter tangent `t = d gamma / ds` and the
/// transversal `n` with `omega(n, t) = 1`.
#[derive(Debug, Clone)]
pub struct CycleFrame {
    pub positions: Vec<Vec3>,
    pub tangents: Vec<Vec3>,
    pub transversals: Vec<Vec3>,
}

impl DiscretizedCycle {
    /// Build from chart points. Torus points are unwrapped node to node, so
    /// consecutive samples must be closer than half a period.
    pub fn new(
        surface: SymplecticSurface,
        points: Vec<SurfacePoint>,
        homology: Homology,
        orientation: Orientation,
        waive_intersections: bool,
    ) -> Result<Self> {
        for p in &points {
            surface.validate(p)?;
        }
        let embedded = match surface.model() {
            SurfaceModel::FlatTorus => unwrap_torus(&points),
            SurfaceModel::RoundSphere => points.iter().map(|p| surface.embed(p)).collect(),
        };
        Self::assemble(surface, points, embedded, homology, orientation, waive_intersections)
    }

    /// Build from embedded positions (lifted torus coordinates or points on
    /// the unit sphere).
    pub fn from_embedded(
        surface: SymplecticSurface,
        embedded: Vec<Vec3>,
        homology: Homology,
        orientation: Orientation,
        waive_intersections: bool,
    ) -> Result<Self> {
        let embedded: Vec<Vec3> = match surface.model() {
            SurfaceModel::FlatTorus => embedded,
            SurfaceModel::RoundSphere => embedded
                .iter()
                .map(|e| if (e.norm() - 1.0).abs() > 1e-15 { e.normalize() } else { *e })
                .collect(),
        };
        let points: Vec<SurfacePoint> = embedded.iter().map(|e| surface.point(e)).collect();
        Self::assemble(surface, points, embedded, homology, orientation, waive_intersections)
    }

    fn assemble(
        surface: SymplecticSurface,
        points: Vec<SurfacePoint>,
        embedded: Vec<Vec3>,
        homology: Homology,
        orientation: Orientation,
        waive_intersections: bool,
    ) -> Result<Self> {
        let n = points.len();
        if n < MIN_SAMPLES || n % 2 != 0 {
            return Err(Error::InvalidCycle(format!("need an even number >= {MIN_SAMPLES} of samples, got {n}")));
        }
        match (surface.model(), homology) {
            (SurfaceModel::RoundSphere, Homology::Torus { .. }) => {
                return Err(Error::InvalidCycle("sphere cycles are contractible".into()))
            }
            (SurfaceModel::FlatTorus, Homology::Torus { m, n }) if m == 0 && n == 0 => {
                return Err(Error::InvalidCycle("use Homology::Contractible for class (0, 0)".into()))
            }
            _ => {}
        }
        let off = homology.offset();
        for j in 0..n {
            let a = embedded[j];
            let mut b = embedded[(j + 1) % n];
            if j + 1 == n && surface.model() == SurfaceModel::FlatTorus {
                b += Vec3::new(off[0], off[1], 0.0);
            }
            if (b - a).norm() < 1e-14 {
                return Err(Error::InvalidCycle(format!("nodes {j} and {} coincide", (j + 1) % n)));
            }
        }
        if surface.model() == SurfaceModel::FlatTorus {
            // The closing step must match the recorded class.
            let close = embedded[0] + Vec3::new(off[0], off[1], 0.0) - embedded[n - 1];
            let step = (embedded[1] - embedded[0]).norm().max((embedded[n - 1] - embedded[n - 2]).norm());
            if close.norm() > 0.5 || close.norm() > 10.0 * step + 1e-12 {
                return Err(Error::InvalidCycle(format!("closing step {close:?} inconsistent with {homology:?}")));
            }
        }
        let cycle = Self { surface, points, homology, orientation, intersections_waived: waive_intersections, embedded };
        if !waive_intersections {
            if let Some((i, j)) = intersect::find_self_intersection(&cycle) {
                return Err(Error::SelfIntersection(i, j));
            }
        }
        Ok(cycle)
    }

    pub fn surface(&self) -> &SymplecticSurface {
        &self.surface
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SurfacePoint] {
        &self.points
    }

    pub fn embedded(&self) -> &[Vec3] {
        &self.embedded
    }

    pub fn homology(&self) -> Homology {
        self.homology
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn intersections_waived(&self) -> bool {
        self.intersections_waived
    }

    /// Parameter values `s_j = j / N`.
    pub fn parameters(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (0..self.len()).map(|j| j as f64 / n).collect()
    }

    /// Periodic part of the embedded coordinates, `gamma(s) - s * (m, n)`.
    fn periodic_components(&self) -> [Vec<f64>; 3] {
        let off = self.homology.offset();
        let s = self.parameters();
        let mut out = [Vec::new(), Vec::new(), Vec::new()];
        for (e, s) in self.embedded.iter().zip(&s) {
            out[0].push(e.x - s * off[0]);
            out[1].push(e.y - s * off[1]);
            out[2].push(e.z);
        }
        out
    }

    /// Spectral parameter derivative of the cycle.
    pub fn tangents(&self) -> Vec<Vec3> {
        let off = self.homology.offset();
        let comps = self.periodic_components();
        let d: Vec<Vec<f64>> = comps.iter().map(|c| spectral::derivative(c)).collect();
        (0..self.len())
            .map(|j| {
                let raw = Vec3::new(d[0][j] + off[0], d[1][j] + off[1], d[2][j]);
                self.surface.tangent_part(&self.embedded[j], &raw)
            })
            .collect()
    }

    pub fn frame(&self) -> CycleFrame {
        let tangents = self.tangents();
        let c = self.surface.omega_scale();
        let transversals = tangents
            .iter()
            .zip(&self.embedded)
            .map(|(t, p)| t.cross(&self.surface.normal(p)) / (c * t.norm_squared()))
            .collect();
        CycleFrame { positions: self.embedded.clone(), tangents, transversals }
    }

    /// Same cycle traversed backwards (node 0 kept).
    pub fn reversed(&self) -> Result<Self> {
        let n = self.len();
        let off = self.homology.offset();
        let embedded: Vec<Vec3> = (0..n)
            .map(|j| {
                if j == 0 {
                    self.embedded[0]
                } else {
                    self.embedded[n - j]
                        - if self.surface.model() == SurfaceModel::FlatTorus {
                            Vec3::new(off[0], off[1], 0.0)
                        } else {
                            Vec3::zeros()
                        }
                }
            })
            .collect();
        let homology = match self.homology {
            Homology::Contractible => Homology::Contractible,
            Homology::Torus { m, n } => Homology::Torus { m: -m, n: -n },
        };
        let orientation = match self.orientation {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        };
        Self::from_embedded(self.surface, embedded, homology, orientation, self.intersections_waived)
    }

    /// Trigonometric resampling onto `m` nodes.
    pub fn resample(&self, m: usize) -> Result<Self> {
        let off = self.homology.offset();
        let comps = self.periodic_components();
        let r: Vec<Vec<f64>> = comps.iter().map(|c| spectral::resample(c, m)).collect();
        let embedded = (0..m)
            .map(|j| {
                let s = j as f64 / m as f64;
                Vec3::new(r[0][j] + s * off[0], r[1][j] + s * off[1], r[2][j])
            })
            .collect();
        Self::from_embedded(self.surface, embedded, self.homology, self.orientation, self.intersections_waived)
    }

    /// Same geometry starting from node `shift`.
    pub fn rotated_start(&self, shift: usize) -> Result<Self> {
        let n = self.len();
        let off = self.homology.offset();
        let embedded = (0..n)
            .map(|j| {
                let idx = j + shift;
                let wrap = (idx / n) as f64;
                let mut e = self.embedded[idx % n];
                if self.surface.model() == SurfaceModel::FlatTorus {
                    e += Vec3::new(off[0] * wrap, off[1] * wrap, 0.0);
                }
                e
            })
            .collect();
        Self::from_embedded(self.surface, embedded, self.homology, self.orientation, self.intersections_waived)
    }

    /// Largest chart radius of the nodes in the chart frame centred at `center`.
    pub fn max_chart_radius(&self, center: &Vec3) -> f64 {
        self.embedded
            .iter()
            .map(|p| {
                let q = rotate_to_north(center, p);
                (q.x * q.x + q.y * q.y).sqrt() / (1.0 + q.z)
            })
            .fold(0.0, f64::max)
    }

    /// Centre of the stereographic frame used for sphere line integrals:
    /// the north chart when the cycle stays inside radius 10 there, else
    /// the south chart, else the axis frame with the smallest radius.
    pub fn chart_center(&self) -> Vec3 {
        let candidates = [Vec3::z(), -Vec3::z(), Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y()];
        for c in &candidates[..2] {
            if self.max_chart_radius(c) <= crate::surface::CHART_MAX_RADIUS {
                return *c;
            }
        }
        let mut best = candidates[0];
        let mut best_r = f64::INFINITY;
        for c in candidates {
            let r = self.max_chart_radius(&c);
            if r < best_r {
                best = c;
                best_r = r;
            }
        }
        best
    }

    /// Chart points of the nodes in the frame centred at `center` (sphere).
    pub(crate) fn chart_coords(&self, center: &Vec3) -> (Vec<f64>, Vec<f64>) {
        self.embedded
            .iter()
            .map(|p| {
                let q = rotate_to_north(center, p);
                (q.x / (1.0 + q.z), q.y / (1.0 + q.z))
            })
            .unzip()
    }

    /// Symplectic line integral `oint lambda` with `d lambda = omega`.
    ///
    /// Torus: `lambda = -k y dx` on lifted coordinates plus the seam
    /// correction `k n x_0` of the bundle gluing; for contractible loops this
    /// is the enclosed area. Sphere: the stereographic primitive
    /// `(k / 2 pi) (u dv - v du) / (1 + r^2)` of the frame centred at
    /// `center`, i.e. the area to the left of the cycle, modulo `k`.
    pub fn action_in(&self, center: &Vec3) -> f64 {
        let k = self.surface.level() as f64;
        match self.surface.model() {
            SurfaceModel::FlatTorus => {
                let [mx, ny] = self.homology.offset();
                let comps = self.periodic_components();
                let dx = spectral::derivative(&comps[0]);
                let integrand: Vec<f64> = comps[1].iter().zip(&dx).map(|(y, d)| y * (d + mx)).collect();
                -k * spectral::mean(&integrand) + k * ny * spectral::mean(&comps[0]) - k * ny * mx / 2.0
            }
            SurfaceModel::RoundSphere => {
                let (u, v) = self.chart_coords(center);
                let du = spectral::derivative(&u);
                let dv = spectral::derivative(&v);
                let integrand: Vec<f64> = (0..self.len())
                    .map(|j| (u[j] * dv[j] - v[j] * du[j]) / (1.0 + u[j] * u[j] + v[j] * v[j]))
                    .collect();
                k / (2.0 * std::f64::consts::PI) * spectral::mean(&integrand)
            }
        }
    }

    /// Symplectic line integral in the default frame (see [`Self::chart_center`]).
    pub fn action(&self) -> f64 {
        let center = if self.surface.is_sphere() { self.chart_center() } else { Vec3::z() };
        self.action_in(&center)
    }

    /// Uniform transversal shift `gamma + delta n` with action `target`
    /// (modulo `k` on the sphere). The action changes at unit rate along
    /// `n`, so Newton on `delta` converges in a few iterations for small
    /// corrections.
    pub fn shifted_to_action(&self, target: f64) -> Result<Self> {
        let base = self.frame();
        let sphere = self.surface.is_sphere();
        let k = self.surface.level() as f64;
        let center = if sphere { self.chart_center() } else { Vec3::z() };
        let defect = |c: &Self| {
            let e = target - c.action_in(&center);
            if sphere { e - k * (e / k).round() } else { e }
        };
        let tol = 1e-14 * k.max(1.0);
        let mut shift = 0.0;
        let mut current = self.clone();
        for _ in 0..30 {
            let err = defect(&current);
            if err.abs() <= tol {
                return Ok(current);
            }
            shift += err;
            let pts = base
                .positions
                .iter()
                .zip(&base.transversals)
                .map(|(p, n)| {
                    let q = p + n * shift;
                    if sphere { q.normalize() } else { q }
                })
                .collect();
            current = self.with_points_unchecked(pts)?;
        }
        let err = defect(&current).abs();
        if err > 1e-10 {
            return Err(Error::InvalidCycle(format!("action correction stalled with defect {err:e}")));
        }
        Ok(current)
    }

    /// Shift onto the nearest Bohr-Sommerfeld level.
    pub fn bs_corrected(&self) -> Result<Self> {
        self.shifted_to_action(self.action().round())
    }

    pub(crate) fn with_points_unchecked(&self, embedded: Vec<Vec3>) -> Result<Self> {
        Self::from_embedded(self.surface, embedded, self.homology, self.orientation, self.intersections_waived)
    }
}

/// Signed symplectic area enclosed by the cycle (the level-scaled action;
/// torus cycles with nonzero class use the seam-corrected primitive). Refuses
/// cycles whose self-intersection check was waived and that do intersect.
pub fn enclosed_area(surface: &SymplecticSurface, cycle: &DiscretizedCycle) -> Result<f64> {
    if surface != cycle.surface() {
        return Err(Error::InvalidCycle("cycle sampled on another surface".into()));
    }
    if cycle.intersections_waived() {
        if let Some((i, j)) = intersect::find_self_intersection(cycle) {
            return Err(Error::SelfIntersection(i, j));
        }
    }
    Ok(cycle.action())
}

/// Rotation taking `center` to the north pole, applied to `p`.
pub(crate) fn rotate_to_north(center: &Vec3, p: &Vec3) -> Vec3 {
    let c = center.normalize();
    let z = Vec3::z();
    let cos = c.dot(&z);
    if cos > 1.0 - 1e-15 {
        return *p;
    }
    if cos < -1.0 + 1e-15 {
        // Half turn about x: the north frame of the result is the south chart.
        return Vec3::new(p.x, -p.y, -p.z);
    }
    let axis = c.cross(&z).normalize();
    let angle = cos.acos();
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_unchecked(axis), angle) * p
}

fn unwrap_torus(points: &[SurfacePoint]) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = Vec::with_capacity(points.len());
    for p in points {
        let [x, y] = p.coords;
        let e = match out.last() {
            None => Vec3::new(x, y, 0.0),
            Some(prev) => Vec3::new(
                x + (prev.x - x).round(),
                y + (prev.y - y).round(),
                0.0,
            ),
        };
        out.push(e);
    }
    out
}

/// Chart helpers for callers that need the stored chart of each node.
pub fn nodes_in_chart(cycle: &DiscretizedCycle, chart: ChartId) -> Vec<SurfacePoint> {
    cycle.points.iter().map(|p| cycle.surface.to_chart(p, chart)).collect()
}
