//! Real polarization at one degree of freedom: Bohr-Sommerfeld fibers of a
//! fibration, their invariant half-weights, and the resulting basis.

mod kernel;

pub use kernel::{lie_kernel, LieKernel};

use serde::{Deserialize, Serialize};

use crate::cycles::{make_half_weighted, BsRequirement, CurveSpec, DiscretizedCycle, HalfWeightedCycle, Sign};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::moduli::{criticality_residual, tangential_component};
use crate::surface::{SurfaceModel, SymplecticSurface};

/// Built-in integrable systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fibration {
    /// `f = y` on the torus; fibers are the horizontal circles.
    TorusY,
    /// `f = z` on the sphere; fibers are latitudes, the poles are degenerate.
    SphereZ,
}

impl Fibration {
    pub fn for_surface(surface: &SymplecticSurface) -> Self {
        match surface.model() {
            SurfaceModel::FlatTorus => Fibration::TorusY,
            SurfaceModel::RoundSphere => Fibration::SphereZ,
        }
    }

    pub fn field(&self) -> ScalarField {
        match self {
            Fibration::TorusY => ScalarField::torus_y(),
            Fibration::SphereZ => ScalarField::z(),
        }
    }

    fn check(&self, surface: &SymplecticSurface) -> Result<()> {
        if Self::for_surface(surface) != *self {
            return Err(Error::Unsupported(format!("{self:?} on {:?}", surface.model())));
        }
        Ok(())
    }

    /// Fiber over the value `c` of the fibration function.
    pub fn fiber(&self, surface: &SymplecticSurface, c: f64, nodes: usize) -> Result<DiscretizedCycle> {
        self.check(surface)?;
        match self {
            Fibration::TorusY => CurveSpec::torus_line(c).sample(surface, nodes),
            Fibration::SphereZ => {
                if c.abs() >= 1.0 {
                    return Err(Error::DegenerateFiber(format!("z = {c} is a pole")));
                }
                CurveSpec::SphereLatitude { z: c }.sample(surface, nodes)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FiberRecord {
    /// Index `l` in decreasing order of the fibration value.
    pub index: usize,
    /// Fibration value of the fiber.
    pub coordinate: f64,
    /// Level-scaled action.
    pub action: f64,
    pub is_bs: bool,
    pub cycle: DiscretizedCycle,
    pub plus: HalfWeightedCycle,
    pub minus: HalfWeightedCycle,
}

impl FiberRecord {
    /// Action divided by the level.
    pub fn area(&self) -> f64 {
        self.action / self.cycle.surface().level() as f64
    }
}

const ACTION_TOL: f64 = 1e-12;

fn bisect(mut lo: f64, mut hi: f64, target: f64, action: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    // action is decreasing in the fibration value.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let a = action(mid)?;
        if (a - target).abs() <= ACTION_TOL || hi - lo < 1e-16 {
            return Ok(mid);
        }
        if a > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All regular fibers with integral level-scaled action, found by scanning
/// the (monotone) action on `scan_resolution` intervals and bisecting.
pub fn enumerate_bs_fibers(
    surface: &SymplecticSurface,
    fibration: Fibration,
    nodes: usize,
    scan_resolution: usize,
) -> Result<Vec<FiberRecord>> {
    fibration.check(surface)?;
    if scan_resolution < 2 {
        return Err(Error::ScanTooCoarse(format!("scan resolution {scan_resolution}")));
    }
    let k = surface.level() as f64;
    // Sphere actions are defined mod k; regular latitudes have a unique representative in (0, k).
    let wrap = |a: f64| match fibration {
        Fibration::TorusY => a,
        Fibration::SphereZ => a.rem_euclid(k),
    };
    let action = |c: f64| -> Result<f64> { Ok(wrap(fibration.fiber(surface, c, nodes)?.action())) };
    // Values and actions on the grid, ordered by decreasing action.
    let (lo, hi) = match fibration {
        Fibration::TorusY => (0.0, 1.0),
        Fibration::SphereZ => (-1.0, 1.0),
    };
    let mut grid: Vec<(f64, f64)> = Vec::with_capacity(scan_resolution + 1);
    for i in 0..=scan_resolution {
        let c = lo + (hi - lo) * i as f64 / scan_resolution as f64;
        let a = match (fibration, i) {
            // The torus family is periodic: the fiber at y = 1 is the fiber at 0.
            (Fibration::TorusY, i) if i == scan_resolution => grid[0].1 - k,
            // Degenerate fibers at the poles: area k below the south pole, 0 at the north.
            (Fibration::SphereZ, 0) => k,
            (Fibration::SphereZ, i) if i == scan_resolution => 0.0,
            _ => action(c)?,
        };
        grid.push((c, a));
    }
    let mut found: Vec<(f64, f64)> = Vec::new();
    for w in grid.windows(2) {
        let ((c0, a0), (c1, a1)) = (w[0], w[1]);
        // Integers m with a0 >= m > a1 (torus), strictly inside (0, k) on the sphere.
        let mut m = a0.floor();
        let mut count = 0;
        while m > a1 {
            let regular = match fibration {
                Fibration::TorusY => true,
                Fibration::SphereZ => m > 0.0 && m < k,
            };
            if regular {
                count += 1;
                let c = if (a0 - m).abs() <= ACTION_TOL { c0 } else { bisect(c0, c1, m, &action)? };
                found.push((c, m));
            }
            m -= 1.0;
        }
        if count > 1 {
            return Err(Error::ScanTooCoarse(format!(
                "interval [{c0}, {c1}] holds {count} Bohr-Sommerfeld fibers; increase the scan resolution"
            )));
        }
    }
    found.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite"));
    found
        .into_iter()
        .enumerate()
        .map(|(index, (c, _))| {
            let cycle = fibration.fiber(surface, c, nodes)?;
            let action = wrap(cycle.action());
            let is_bs = (action - action.round()).abs() <= 1e-10;
            let (plus, minus) = invariant_half_weight(surface, fibration, &cycle)?;
            Ok(FiberRecord { index, coordinate: c, action, is_bs, cycle, plus, minus })
        })
        .collect()
}

/// Invariant half-weights `+-theta` on a regular fiber: the flow-time
/// density of `W_f`, `mu ∝ 1 / |a|`.
pub fn invariant_half_weight(
    surface: &SymplecticSurface,
    fibration: Fibration,
    fiber: &DiscretizedCycle,
) -> Result<(HalfWeightedCycle, HalfWeightedCycle)> {
    fibration.check(surface)?;
    let f = fibration.field();
    let probe = make_half_weighted(fiber.clone(), &vec![1.0; fiber.len()], Sign::Plus, BsRequirement::Waived)?;
    let a = tangential_component(&f, &probe);
    let amax = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let amin = a.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let same_sign = a.iter().all(|v| *v > 0.0) || a.iter().all(|v| *v < 0.0);
    if !(amax > 0.0) || amin <= 1e-12 * amax || !same_sign {
        return Err(Error::DegenerateFiber("the flow of the fibration stops on this fiber".into()));
    }
    let raw: Vec<f64> = a.iter().map(|v| 1.0 / v.abs()).collect();
    let bs = if (fiber.action() - fiber.action().round()).abs() <= crate::cycles::DEFAULT_BS_TOL {
        BsRequirement::default()
    } else {
        BsRequirement::Waived
    };
    let plus = make_half_weighted(fiber.clone(), &raw, Sign::Plus, bs)?;
    let minus = make_half_weighted(fiber.clone(), &raw, Sign::Minus, bs)?;
    Ok((plus, minus))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSummary {
    pub index: usize,
    pub coordinate: f64,
    pub action: f64,
    pub kernel_dimension: usize,
    pub residual_f: f64,
    pub residual_lie: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealHilbert {
    pub dimension: usize,
    pub fibers: Vec<FiberSummary>,
    /// Number of critical points `(S_i, +-theta_i)`.
    pub critical_points: usize,
    /// Conjugate pairs `(2i, 2i + 1)` of critical-point indices.
    pub pairs: Vec<(usize, usize)>,
    pub all_critical: bool,
    /// Level-scaled actions of the degenerate fibers (sphere poles).
    pub degenerate_actions: Vec<f64>,
}

/// Threshold on the criticality residuals of the basis points.
pub const BASIS_CRITICAL_TOL: f64 = 1e-8;

/// Basis summary `H = sum C <S_i>` of the real polarization.
pub fn build_real_hilbert(
    surface: &SymplecticSurface,
    fibration: Fibration,
    nodes: usize,
    scan_resolution: usize,
) -> Result<RealHilbert> {
    let records = enumerate_bs_fibers(surface, fibration, nodes, scan_resolution)?;
    let f = fibration.field();
    let mut fibers = Vec::with_capacity(records.len());
    let mut all_critical = true;
    for r in &records {
        let (p1, p2) = criticality_residual(&f, &r.plus);
        let (m1, m2) = criticality_residual(&f, &r.minus);
        let kernel = lie_kernel(&f, &r.plus)?;
        let (r1, r2) = (p1.max(m1), p2.max(m2));
        all_critical &= r1 <= BASIS_CRITICAL_TOL && r2 <= BASIS_CRITICAL_TOL;
        fibers.push(FiberSummary {
            index: r.index,
            coordinate: r.coordinate,
            action: r.action,
            kernel_dimension: kernel.dimension,
            residual_f: r1,
            residual_lie: r2,
        });
    }
    let l = records.len();
    let degenerate_actions = match fibration {
        Fibration::TorusY => Vec::new(),
        Fibration::SphereZ => vec![0.0, surface.level() as f64],
    };
    Ok(RealHilbert {
        dimension: l,
        fibers,
        critical_points: 2 * l,
        pairs: (0..l).map(|i| (2 * i, 2 * i + 1)).collect(),
        all_critical,
        degenerate_actions,
    })
}

/// Fiber table as CSV: `action, level_action, coordinate, l_index`, with
/// `action` the unscaled enclosed symplectic action.
pub fn fibers_to_csv(records: &[FiberRecord]) -> String {
    let mut out = String::from("action,level_action,coordinate,l_index\n");
    for r in records {
        out.push_str(&format!("{:.15e},{:.15e},{:.15e},{}\n", r.area(), r.action, r.coordinate, r.index));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_level_three() {
        let s = SymplecticSurface::torus(3).unwrap();
        let fibers = enumerate_bs_fibers(&s, Fibration::TorusY, 32, 64).unwrap();
        let mut ys: Vec<f64> = fibers.iter().map(|r| r.coordinate).collect();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (y, expect) in ys.iter().zip([0.0, 1.0 / 3.0, 2.0 / 3.0]) {
            assert!((y - expect).abs() < 1e-10, "{ys:?}");
        }
        assert_eq!(ys.len(), 3);
        assert!(fibers.iter().all(|r| r.is_bs));
    }

    #[test]
    fn sphere_level_five() {
        let s = SymplecticSurface::sphere(5).unwrap();
        let fibers = enumerate_bs_fibers(&s, Fibration::SphereZ, 64, 64).unwrap();
        let areas: Vec<f64> = fibers.iter().map(|r| r.action).collect();
        assert_eq!(areas.len(), 4);
        for (a, e) in areas.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((a - e).abs() < 1e-10);
        }
    }

    #[test]
    fn sphere_level_one_has_no_regular_fibers() {
        let s = SymplecticSurface::sphere(1).unwrap();
        assert!(enumerate_bs_fibers(&s, Fibration::SphereZ, 32, 16).unwrap().is_empty());
        let h = build_real_hilbert(&s, Fibration::SphereZ, 32, 16).unwrap();
        assert_eq!(h.dimension, 0);
        assert_eq!(h.degenerate_actions, vec![0.0, 1.0]);
    }

    #[test]
    fn coarse_scan_is_reported() {
        let s = SymplecticSurface::torus(8).unwrap();
        assert!(matches!(enumerate_bs_fibers(&s, Fibration::TorusY, 32, 2), Err(Error::ScanTooCoarse(_))));
    }

    #[test]
    fn invariant_weights_are_uniform_on_symmetric_fibers() {
        let s = SymplecticSurface::torus(3).unwrap();
        let c = Fibration::TorusY.fiber(&s, 1.0 / 3.0, 32).unwrap();
        let (p, m) = invariant_half_weight(&s, Fibration::TorusY, &c).unwrap();
        assert!(p.mu().iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert_eq!(p.mu(), m.mu());
        assert_eq!((p.sign(), m.sign()), (Sign::Plus, Sign::Minus));

        let s = SymplecticSurface::sphere(4).unwrap();
        let c = Fibration::SphereZ.fiber(&s, 0.0, 64).unwrap();
        let (p, _) = invariant_half_weight(&s, Fibration::SphereZ, &c).unwrap();
        assert!(p.mu().iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn non_uniform_parametrization_gets_speed_density() {
        // Latitude sampled at a non-uniform longitude: mu must follow the speed.
        let s = SymplecticSurface::sphere(4).unwrap();
        let n = 64;
        let pts = (0..n)
            .map(|j| {
                let u = j as f64 / n as f64;
                let lam = 2.0 * std::f64::consts::PI * u + 0.3 * (2.0 * std::f64::consts::PI * u).sin();
                crate::surface::Vec3::new(lam.cos(), lam.sin(), 0.0)
            })
            .collect();
        let c = DiscretizedCycle::from_embedded(s, pts, crate::cycles::Homology::Contractible, crate::cycles::Orientation::Positive, false).unwrap();
        let (p, _) = invariant_half_weight(&s, Fibration::SphereZ, &c).unwrap();
        let (r1, r2) = criticality_residual(&ScalarField::z(), &p);
        assert!(r1 < 1e-12 && r2 < 1e-8);
        let speed: Vec<f64> = c.tangents().iter().map(|t| t.norm()).collect();
        let ratio = p.mu()[5] / speed[5];
        assert!(p.mu().iter().zip(&speed).all(|(m, v)| (m / v - ratio).abs() < 1e-10));
    }

    #[test]
    fn hilbert_summaries() {
        for (s, l) in [
            (SymplecticSurface::torus(3).unwrap(), 3),
            (SymplecticSurface::sphere(5).unwrap(), 4),
            (SymplecticSurface::torus(1).unwrap(), 1),
        ] {
            let h = build_real_hilbert(&s, Fibration::for_surface(&s), 64, 64).unwrap();
            assert_eq!(h.dimension, l);
            assert_eq!(h.critical_points, 2 * l);
            assert_eq!(h.pairs.len(), l);
            assert!(h.all_critical);
            assert!(h.fibers.iter().all(|f| f.kernel_dimension == 1));
        }
    }

    #[test]
    fn csv_layout() {
        let s = SymplecticSurface::sphere(3).unwrap();
        let fibers = enumerate_bs_fibers(&s, Fibration::SphereZ, 32, 32).unwrap();
        let csv = fibers_to_csv(&fibers);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "action,level_action,coordinate,l_index");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with(",0"));
    }
}
