use serde::{Deserialize, Serialize};

use super::{make_half_weighted, BsRequirement, DiscretizedCycle, HalfWeightedCycle, Homology, Orientation, Sign};
use crate::error::{Error, Result};
use crate::surface::{SurfaceModel, SymplecticSurface, Vec3};

/// Serialized half-weighted cycle. `points` holds lifted torus coordinates
/// or unit vectors on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSnapshot {
    pub surface: SurfaceModel,
    pub level: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub points: Vec<[f64; 3]>,
    pub mu: Vec<f64>,
    pub sigma: Sign,
    pub homology: Homology,
    pub orientation: Orientation,
    pub bs: BsRequirement,
    #[serde(default)]
    pub intersections_waived: bool,
}

impl CycleSnapshot {
    pub fn capture(hw: &HalfWeightedCycle) -> Self {
        let c = hw.cycle();
        Self {
            surface: c.surface().model(),
            level: c.surface().level(),
            n: c.len(),
            points: c.embedded().iter().map(|e| [e.x, e.y, e.z]).collect(),
            mu: hw.mu().to_vec(),
            sigma: hw.sign(),
            homology: c.homology(),
            orientation: c.orientation(),
            bs: hw.bs_requirement(),
            intersections_waived: c.intersections_waived(),
        }
    }

    /// Rebuild; weights are taken as stored (already normalized).
    pub fn restore(&self) -> Result<HalfWeightedCycle> {
        if self.points.len() != self.n || self.mu.len() != self.n {
            return Err(Error::InvalidCycle(format!("snapshot declares N = {} but stores {} points", self.n, self.points.len())));
        }
        let surface = SymplecticSurface::new(self.surface, self.level as i64)?;
        let pts = self.points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
        let cycle = DiscretizedCycle::from_embedded(surface, pts, self.homology, self.orientation, self.intersections_waived)?;
        let hw = make_half_weighted(cycle, &self.mu, self.sigma, self.bs)?;
        Ok(hw.replace_weights_unchecked(self.mu.clone()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidCycle(format!("bad snapshot: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{random_tangent_pair, deform_step, CurveSpec};

    #[test]
    fn bit_stable_roundtrip() {
        let s = SymplecticSurface::sphere(3).unwrap();
        let c = CurveSpec::sphere_circle(Vec3::new(0.2, 0.3, 0.9), 1.0).sample(&s, 64).unwrap();
        let w: Vec<f64> = (0..64).map(|j| 1.0 + 0.3 * (j as f64 * 0.1).sin()).collect();
        let hw = make_half_weighted(c, &w, Sign::Minus, BsRequirement::Waived).unwrap();
        let p = random_tangent_pair(&hw, 9, 4).unwrap();
        let hw = deform_step(&hw, &p, 1e-2).unwrap();
        let snap = CycleSnapshot::capture(&hw);
        let text = snap.to_json();
        let back = CycleSnapshot::from_json(&text).unwrap();
        assert_eq!(back, snap);
        let restored = back.restore().unwrap();
        assert_eq!(restored, hw);
        assert_eq!(CycleSnapshot::capture(&restored).to_json(), text);
    }
}
