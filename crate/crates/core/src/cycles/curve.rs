use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{DiscretizedCycle, Homology, Orientation};
use crate::error::{Error, Result};
use crate::surface::{SurfaceModel, SymplecticSurface, Vec3};

/// One Fourier mode `cos * cos(2 pi m s) + sin * sin(2 pi m s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub m: u32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

fn modes_eval(modes: &[Mode], s: f64) -> f64 {
    modes
        .iter()
        .map(|md| {
            let a = 2.0 * PI * md.m as f64 * s;
            md.cos * a.cos() + md.sin * a.sin()
        })
        .sum()
}

/// Built-in curve families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CurveSpec {
    /// `y = base + phi(x)`, class (1, 0).
    TorusGraph {
        base: f64,
        #[serde(default)]
        modes: Vec<Mode>,
    },
    /// `x = base + phi(y)`, class (0, 1).
    TorusVerticalGraph {
        base: f64,
        #[serde(default)]
        modes: Vec<Mode>,
    },
    /// Star-shaped contractible loop `r(s) = radius + phi(s)`, counterclockwise.
    TorusLoop {
        center: [f64; 2],
        radius: f64,
        #[serde(default)]
        modes: Vec<Mode>,
    },
    /// Axis-aligned square traversed counterclockwise at constant speed.
    TorusSquare { center: [f64; 2], side: f64 },
    /// Lissajous figure-eight `(a sin 2 pi s, b sin 4 pi s)`.
    TorusFigureEight { center: [f64; 2], width: f64, height: f64 },
    /// Latitude `z = const`, traversed with increasing longitude.
    SphereLatitude { z: f64 },
    /// Circle of given angular radius, counterclockwise around `center`,
    /// optionally with a radial perturbation.
    SphereCircle {
        center: [f64; 3],
        angular_radius: f64,
        #[serde(default)]
        modes: Vec<Mode>,
    },
}

impl CurveSpec {
    pub fn torus_line(y: f64) -> Self {
        CurveSpec::TorusGraph { base: y, modes: Vec::new() }
    }

    pub fn sphere_circle(center: Vec3, angular_radius: f64) -> Self {
        CurveSpec::SphereCircle { center: [center.x, center.y, center.z], angular_radius, modes: Vec::new() }
    }

    fn model(&self) -> SurfaceModel {
        match self {
            CurveSpec::SphereLatitude { .. } | CurveSpec::SphereCircle { .. } => SurfaceModel::RoundSphere,
            _ => SurfaceModel::FlatTorus,
        }
    }

    pub fn homology(&self) -> Homology {
        match self {
            CurveSpec::TorusGraph { .. } => Homology::Torus { m: 1, n: 0 },
            CurveSpec::TorusVerticalGraph { .. } => Homology::Torus { m: 0, n: 1 },
            _ => Homology::Contractible,
        }
    }

    /// Embedded position at parameter `s` in `[0, 1)`.
    pub fn position(&self, s: f64) -> Vec3 {
        let t = 2.0 * PI * s;
        match self {
            CurveSpec::TorusGraph { base, modes } => Vec3::new(s, base + modes_eval(modes, s), 0.0),
            CurveSpec::TorusVerticalGraph { base, modes } => Vec3::new(base + modes_eval(modes, s), s, 0.0),
            CurveSpec::TorusLoop { center, radius, modes } => {
                let r = radius + modes_eval(modes, s);
                Vec3::new(center[0] + r * t.cos(), center[1] + r * t.sin(), 0.0)
            }
            CurveSpec::TorusSquare { center, side } => {
                let h = side / 2.0;
                let q = (4.0 * s).rem_euclid(4.0);
                let side_idx = q.floor() as usize % 4;
                let f = q - q.floor();
                let (a, b) = match side_idx {
                    0 => ([h, -h], [h, h]),
                    1 => ([h, h], [-h, h]),
                    2 => ([-h, h], [-h, -h]),
                    _ => ([-h, -h], [h, -h]),
                };
                Vec3::new(
                    center[0] + a[0] + f * (b[0] - a[0]),
                    center[1] + a[1] + f * (b[1] - a[1]),
                    0.0,
                )
            }
            CurveSpec::TorusFigureEight { center, width, height } => {
                Vec3::new(center[0] + width * t.sin(), center[1] + height * (2.0 * t).sin(), 0.0)
            }
            CurveSpec::SphereLatitude { z } => {
                let r = (1.0 - z * z).max(0.0).sqrt();
                Vec3::new(r * t.cos(), r * t.sin(), *z)
            }
            CurveSpec::SphereCircle { center, angular_radius, modes } => {
                let c = Vec3::new(center[0], center[1], center[2]).normalize();
                let (e1, e2) = orthonormal_frame(&c);
                let r = angular_radius + modes_eval(modes, s);
                c * r.cos() + (e1 * t.cos() + e2 * t.sin()) * r.sin()
            }
        }
    }

    fn validate(&self, surface: &SymplecticSurface) -> Result<()> {
        if self.model() != surface.model() {
            return Err(Error::InvalidCycle(format!("curve family {self:?} does not live on {:?}", surface.model())));
        }
        let ok = match self {
            CurveSpec::TorusLoop { radius, .. } => *radius > 0.0 && *radius < 0.5,
            CurveSpec::TorusSquare { side, .. } => *side > 0.0 && *side < 1.0,
            CurveSpec::SphereLatitude { z } => z.abs() < 1.0,
            CurveSpec::SphereCircle { center, angular_radius, .. } => {
                *angular_radius > 0.0 && *angular_radius < PI && Vec3::new(center[0], center[1], center[2]).norm() > 0.0
            }
            _ => true,
        };
        if !ok {
            return Err(Error::InvalidCycle(format!("degenerate curve parameters {self:?}")));
        }
        Ok(())
    }

    /// Sample `n` nodes at `s_j = j / n`.
    pub fn sample(&self, surface: &SymplecticSurface, n: usize) -> Result<DiscretizedCycle> {
        self.sample_with(surface, n, false)
    }

    /// As [`Self::sample`] with an explicit self-intersection waiver.
    pub fn sample_with(&self, surface: &SymplecticSurface, n: usize, waive_intersections: bool) -> Result<DiscretizedCycle> {
        self.validate(surface)?;
        let pts: Vec<Vec3> = (0..n).map(|j| self.position(j as f64 / n as f64)).collect();
        DiscretizedCycle::from_embedded(*surface, pts, self.homology(), Orientation::Positive, waive_intersections)
    }
}

/// Orthonormal `e1, e2` with `e1 x e2 = c`.
pub(crate) fn orthonormal_frame(c: &Vec3) -> (Vec3, Vec3) {
    let helper = if c.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = (helper - c * c.dot(&helper)).normalize();
    let e2 = c.cross(&e1);
    (e1, e2)
}

/// Sample a built-in curve family.
pub fn sample_cycle(surface: &SymplecticSurface, spec: &CurveSpec, n: usize) -> Result<DiscretizedCycle> {
    spec.sample(surface, n)
}
