use serde::{Deserialize, Serialize};

use super::{half_weight_lie, node_values, tangential_component, ModuliConfig};
use crate::cycles::{deform_step, HalfWeightedCycle, TangentPair};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::spectral;

/// `(stddev of f|_S under mu, sup |Lie_{W_f} theta / theta|)`.
pub fn criticality_residual(f: &ScalarField, hw: &HalfWeightedCycle) -> (f64, f64) {
    let fv = node_values(f, hw);
    let centred = hw.project_zero_mean(&fv);
    let var = hw.integrate(&centred.iter().map(|v| v * v).collect::<Vec<_>>());
    let lie = half_weight_lie(&tangential_component(f, hw), hw);
    (var.max(0.0).sqrt(), lie.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Whether `pair` is tangent to the critical set of `F_f` at a critical
/// `hw`: both `Lie_{W_f} psi_i = a psi_i'` vanish to `cfg.tangent_tol`.
pub fn critical_tangent_test(f: &ScalarField, hw: &HalfWeightedCycle, pair: &TangentPair, cfg: &ModuliConfig) -> Result<bool> {
    if !pair.is_attached_to(hw) {
        return Err(Error::DetachedPair);
    }
    let (r1, r2) = criticality_residual(f, hw);
    if r1 > cfg.critical_tol || r2 > cfg.critical_tol {
        return Err(Error::NotCritical(r1, r2));
    }
    let a = tangential_component(f, hw);
    let sup = |psi: &[f64]| {
        spectral::derivative(psi).iter().zip(&a).fold(0.0f64, |m, (d, a)| m.max((d * a).abs()))
    };
    Ok(sup(pair.psi1()) <= cfg.tangent_tol && sup(pair.psi2()) <= cfg.tangent_tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub step: f64,
    pub residual_f: f64,
    pub residual_lie: f64,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub point: HalfWeightedCycle,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
}

impl SearchOutcome {
    pub fn residuals(&self) -> (f64, f64) {
        self.trace.last().map(|t| (t.residual_f, t.residual_lie)).unwrap_or((0.0, 0.0))
    }

    pub fn into_result(self) -> Result<HalfWeightedCycle> {
        if self.converged {
            Ok(self.point)
        } else {
            let (r1, r2) = self.residuals();
            Err(Error::NotConverged { iterations: self.iterations, residual: r1.max(r2) })
        }
    }
}

const MIN_STEP: f64 = 1e-12;

/// Gauss-Newton direction: a transversal move flattening `f|_S` and a
/// weight change flattening `a mu`.
fn descent_direction(f: &ScalarField, hw: &HalfWeightedCycle) -> Result<TangentPair> {
    let fv = node_values(f, hw);
    let a = tangential_component(f, hw);
    let c = hw.integrate(&fv);
    let amax = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let amin = a.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let same_sign = a.iter().all(|v| *v > 0.0) || a.iter().all(|v| *v < 0.0);

    // Moving node j by h_j n_j changes f by h_j a_j to first order.
    let h: Vec<f64> = if amax == 0.0 {
        vec![0.0; fv.len()]
    } else if same_sign && amin > 0.1 * amax {
        fv.iter().zip(&a).map(|(v, a)| -(v - c) / a).collect()
    } else {
        let a2 = spectral::mean(&a.iter().map(|v| v * v).collect::<Vec<_>>());
        fv.iter().zip(&a).map(|(v, a)| -(v - c) * a / a2).collect()
    };
    let hbar = spectral::mean(&h);
    let h: Vec<f64> = h.iter().map(|v| v - hbar).collect();
    let psi1 = spectral::antiderivative(&h);

    // mu (1 + 2 beta) = C / a makes a mu constant.
    let amu: Vec<f64> = a.iter().zip(hw.mu()).map(|(a, m)| a * m).collect();
    let psi2: Vec<f64> = if amax == 0.0 {
        vec![0.0; fv.len()]
    } else if same_sign {
        let inv: f64 = a.iter().map(|v| 1.0 / v).sum::<f64>();
        let cst = a.len() as f64 / inv;
        amu.iter().map(|v| 0.5 * (cst / v - 1.0)).collect()
    } else {
        let scale = spectral::mean(&amu.iter().map(|v| v.abs()).collect::<Vec<_>>());
        let cst = spectral::mean(&amu);
        amu.iter().map(|v| -0.5 * (v - cst) / scale).collect()
    };
    TangentPair::projected(hw, &psi1, &psi2)
}

/// Damped Gauss-Newton descent on the squared criticality residuals using
/// repeated [`deform_step`]. The step halves whenever the residual grows or
/// the step is rejected, and doubles back (up to 1) after a success.
pub fn find_critical_point(f: &ScalarField, hw0: &HalfWeightedCycle, cfg: &ModuliConfig) -> SearchOutcome {
    let tol = cfg.critical_tol;
    let objective = |r: (f64, f64)| r.0 * r.0 + r.1 * r.1;
    let mut hw = hw0.clone();
    let mut res = criticality_residual(f, &hw);
    let mut trace = vec![TraceEntry { iteration: 0, step: 0.0, residual_f: res.0, residual_lie: res.1 }];
    let mut step = 1.0f64;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        if res.0 <= tol && res.1 <= tol {
            return SearchOutcome { point: hw, converged: true, iterations, trace };
        }
        if step < MIN_STEP {
            break;
        }
        iterations += 1;
        let dir = match descent_direction(f, &hw) {
            Ok(d) => d,
            Err(_) => break,
        };
        match deform_step(&hw, &dir, step) {
            Ok(next) => {
                let r = criticality_residual(f, &next);
                if objective(r) < objective(res) {
                    hw = next;
                    res = r;
                    step = (2.0 * step).min(1.0);
                } else {
                    step *= 0.5;
                }
            }
            Err(_) => step *= 0.5,
        }
        trace.push(TraceEntry { iteration: iterations, step, residual_f: res.0, residual_lie: res.1 });
    }
    let converged = res.0 <= tol && res.1 <= tol;
    SearchOutcome { point: hw, converged, iterations, trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::{make_half_weighted, BsRequirement, CurveSpec, Mode, Sign};
    use crate::surface::{SymplecticSurface, Vec3};
    use std::f64::consts::PI;

    fn latitude(k: i64, z: f64, weights: &[f64]) -> HalfWeightedCycle {
        let s = SymplecticSurface::sphere(k).unwrap();
        let cyc = CurveSpec::SphereLatitude { z }.sample(&s, weights.len()).unwrap();
        make_half_weighted(cyc, weights, Sign::Plus, BsRequirement::default()).unwrap()
    }

    #[test]
    fn constant_field_has_zero_residual() {
        let hw = latitude(4, 0.0, &[1.0; 64]);
        assert_eq!(criticality_residual(&ScalarField::sphere_constant(2.0), &hw), (0.0, 0.0));
    }

    #[test]
    fn bs_latitude_is_critical_for_z() {
        let hw = latitude(4, 0.5, &[1.0; 64]);
        let (r1, r2) = criticality_residual(&ScalarField::z(), &hw);
        assert!(r1 <= 1e-8 && r2 <= 1e-8);
        let w: Vec<f64> = (0..64).map(|j| 1.0 + 0.01 * (2.0 * PI * j as f64 / 64.0).cos()).collect();
        let hw = latitude(4, 0.5, &w);
        assert!(criticality_residual(&ScalarField::z(), &hw).1 >= 1e-3);
    }

    #[test]
    fn tangent_test_examples() {
        let hw = latitude(4, 0.0, &[1.0; 64]);
        let cfg = ModuliConfig::default();
        let z = ScalarField::z();
        let zero = TangentPair::new(&hw, vec![0.0; 64], vec![0.0; 64]).unwrap();
        assert!(critical_tangent_test(&z, &hw, &zero, &cfg).unwrap());
        let c: Vec<f64> = (0..64).map(|j| (2.0 * PI * j as f64 / 64.0).cos()).collect();
        let p = TangentPair::new(&hw, c.clone(), c).unwrap();
        assert!(!critical_tangent_test(&z, &hw, &p, &cfg).unwrap());
        let x = ScalarField::x();
        assert!(matches!(critical_tangent_test(&x, &hw, &zero, &cfg), Err(Error::NotCritical(_, _))));
    }

    #[test]
    fn critical_seed_is_returned_unchanged() {
        let hw = latitude(4, 0.0, &[1.0; 64]);
        let out = find_critical_point(&ScalarField::z(), &hw, &ModuliConfig::default());
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.point, hw);
    }

    #[test]
    fn descent_reaches_bs_latitude() {
        let s = SymplecticSurface::sphere(4).unwrap();
        let spec = CurveSpec::SphereCircle { center: [0.05, 0.0, 1.0], angular_radius: PI / 2.0, modes: vec![Mode { m: 2, cos: 0.02, sin: 0.01 }] };
        let cyc = spec.sample(&s, 64).unwrap().bs_corrected().unwrap();
        let w: Vec<f64> = (0..64).map(|j| 1.0 + 0.1 * (3.0 * j as f64).sin()).collect();
        let hw = make_half_weighted(cyc, &w, Sign::Minus, BsRequirement::default()).unwrap();
        let out = find_critical_point(&ScalarField::z(), &hw, &ModuliConfig::default());
        assert!(out.converged, "{:?}", out.trace.last());
        let p = out.point;
        assert!(p.cycle().embedded().iter().all(|e| e.z.abs() < 1e-6));
        // Nodes ride with the flow: mu ds is the arclength measure, mu = c |t|.
        let t = p.cycle().tangents();
        let dens: Vec<f64> = p.mu().iter().zip(&t).map(|(m, t)| m / t.norm()).collect();
        let m0 = dens.iter().sum::<f64>() / 64.0;
        assert!(dens.iter().all(|d| (d / m0 - 1.0).abs() < 1e-5));
        assert_eq!(p.sign(), Sign::Minus);
    }

    #[test]
    fn exhaustion_is_reported() {
        let s = SymplecticSurface::sphere(4).unwrap();
        let cyc = CurveSpec::sphere_circle(Vec3::new(0.3, 0.0, 1.0), PI / 2.0).sample(&s, 64).unwrap().bs_corrected().unwrap();
        let hw = make_half_weighted(cyc, &[1.0; 64], Sign::Plus, BsRequirement::default()).unwrap();
        let cfg = ModuliConfig { max_iterations: 1, ..ModuliConfig::default() };
        let out = find_critical_point(&ScalarField::z(), &hw, &cfg);
        assert!(!out.converged);
        assert_eq!(out.trace.len(), 2);
        assert!(matches!(out.into_result(), Err(Error::NotConverged { iterations: 1, .. })));
    }
}
