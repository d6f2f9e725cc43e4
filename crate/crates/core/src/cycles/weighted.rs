use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::DiscretizedCycle;
use crate::error::{Error, Result};
use crate::spectral;
use crate::surface::{SurfaceModel, Vec3};

/// Smallest admissible node density.
pub const MU_MIN: f64 = 1e-12;

/// Default Bohr-Sommerfeld tolerance.
pub const DEFAULT_BS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(format!("sign must be +1 or -1, got {v}")),
        }
    }
}

/// Whether the underlying cycle must satisfy the Bohr-Sommerfeld condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BsRequirement {
    Enforce { tol: f64 },
    Waived,
}

impl Default for BsRequirement {
    fn default() -> Self {
        BsRequirement::Enforce { tol: DEFAULT_BS_TOL }
    }
}

/// Cycle with a normalized half-weight `theta = sigma sqrt(mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfWeightedCycle {
    cycle: DiscretizedCycle,
    mu: Vec<f64>,
    sign: Sign,
    bs: BsRequirement,
}

fn defect(action: f64) -> f64 {
    (action - action.round()).abs()
}

/// Rescale raw positive weights to `sum mu / N = 1` and attach them.
pub fn make_half_weighted(
    cycle: DiscretizedCycle,
    raw_weights: &[f64],
    sign: Sign,
    bs: BsRequirement,
) -> Result<HalfWeightedCycle> {
    if raw_weights.len() != cycle.len() {
        return Err(Error::InvalidWeights(format!("{} weights for {} nodes", raw_weights.len(), cycle.len())));
    }
    if let Some((j, w)) = raw_weights.iter().enumerate().find(|(_, w)| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidWeights(format!("weight {j} is {w}")));
    }
    let m = spectral::mean(raw_weights);
    let mu: Vec<f64> = raw_weights.iter().map(|w| w / m).collect();
    if let Some(w) = mu.iter().find(|w| **w < MU_MIN) {
        return Err(Error::InvalidWeights(format!("normalized weight {w} below {MU_MIN}")));
    }
    if let BsRequirement::Enforce { tol } = bs {
        if !(tol > 0.0 && tol < 0.5) {
            return Err(Error::InvalidWeights(format!("BS tolerance {tol} outside (0, 0.5)")));
        }
        let d = defect(cycle.action());
        if d > tol {
            return Err(Error::NotBohrSommerfeld { defect: d, tol });
        }
    }
    Ok(HalfWeightedCycle { cycle, mu, sign, bs })
}

impl HalfWeightedCycle {
    pub fn cycle(&self) -> &DiscretizedCycle {
        &self.cycle
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn bs_requirement(&self) -> BsRequirement {
        self.bs
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Half-weight samples `sigma sqrt(mu_j)`.
    pub fn theta(&self) -> Vec<f64> {
        self.mu.iter().map(|m| self.sign.value() * m.sqrt()).collect()
    }

    /// Quadrature `sum v_j mu_j / N`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        spectral::weighted_mean(values, &self.mu)
    }

    /// Subtract the weighted mean.
    pub fn project_zero_mean(&self, values: &[f64]) -> Vec<f64> {
        let m = self.integrate(values);
        values.iter().map(|v| v - m).collect()
    }

    /// Stable identity of the geometry and weights, used to anchor tangent pairs.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for e in self.cycle.embedded() {
            for c in e.iter() {
                c.to_bits().hash(&mut h);
            }
        }
        for m in &self.mu {
            m.to_bits().hash(&mut h);
        }
        self.sign.hash(&mut h);
        h.finish()
    }

    pub(crate) fn replace_weights_unchecked(&self, mu: Vec<f64>) -> Self {
        Self { cycle: self.cycle.clone(), mu, sign: self.sign, bs: self.bs }
    }
}

/// Tangent vector `(psi_1, psi_2)` at a half-weighted cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPair {
    psi1: Vec<f64>,
    psi2: Vec<f64>,
    anchor: u64,
}

impl TangentPair {
    /// Validating constructor: both components must have zero weighted mean
    /// within `1e-10`.
    pub fn new(hw: &HalfWeightedCycle, psi1: Vec<f64>, psi2: Vec<f64>) -> Result<Self> {
        if psi1.len() != hw.len() || psi2.len() != hw.len() {
            return Err(Error::InvalidWeights("tangent pair length mismatch".into()));
        }
        for (name, v) in [("psi1", &psi1), ("psi2", &psi2)] {
            let m = hw.integrate(v);
            if m.abs() > 1e-10 {
                return Err(Error::InvalidWeights(format!("{name} has weighted mean {m:e}")));
            }
        }
        Ok(Self { psi1, psi2, anchor: hw.fingerprint() })
    }

    /// Project both components to zero weighted mean and attach.
    pub fn projected(hw: &HalfWeightedCycle, psi1: &[f64], psi2: &[f64]) -> Result<Self> {
        Self::new(hw, hw.project_zero_mean(psi1), hw.project_zero_mean(psi2))
    }

    pub fn psi1(&self) -> &[f64] {
        &self.psi1
    }

    pub fn psi2(&self) -> &[f64] {
        &self.psi2
    }

    pub fn anchor(&self) -> u64 {
        self.anchor
    }

    pub fn is_attached_to(&self, hw: &HalfWeightedCycle) -> bool {
        self.anchor == hw.fingerprint()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            psi1: self.psi1.iter().map(|v| v * s).collect(),
            psi2: self.psi2.iter().map(|v| v * s).collect(),
            anchor: self.anchor,
        }
    }

    /// `(psi_1, 0)` part.
    pub fn geometric_part(&self) -> Self {
        Self { psi1: self.psi1.clone(), psi2: vec![0.0; self.psi2.len()], anchor: self.anchor }
    }

    /// `(0, psi_2)` part.
    pub fn weight_part(&self) -> Self {
        Self { psi1: vec![0.0; self.psi1.len()], psi2: self.psi2.clone(), anchor: self.anchor }
    }
}

/// Random trigonometric polynomials of degree `mode_cutoff` in the cycle
/// parameter, amplitudes `N(0, 1) / m`, projected to zero weighted mean.
pub fn random_tangent_pair(hw: &HalfWeightedCycle, seed: u64, mode_cutoff: usize) -> Result<TangentPair> {
    let n = hw.len();
    if mode_cutoff == 0 || 2 * mode_cutoff >= n {
        return Err(Error::InvalidWeights(format!("mode cutoff {mode_cutoff} must lie in [1, N/2)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Vec<f64> {
        let coeffs: Vec<(f64, f64)> = (1..=mode_cutoff)
            .map(|m| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                (a / m as f64, b / m as f64)
            })
            .collect();
        (0..n)
            .map(|j| {
                let s = j as f64 / n as f64;
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, (a, b))| {
                        let t = 2.0 * PI * (i + 1) as f64 * s;
                        a * t.cos() + b * t.sin()
                    })
                    .sum()
            })
            .collect()
    };
    let p1 = draw();
    let p2 = draw();
    TangentPair::projected(hw, &p1, &p2)
}

fn displaced(cycle: &DiscretizedCycle, base: &[Vec3], dirs: &[Vec3], amount: &[f64]) -> Vec<Vec3> {
    let sphere = cycle.surface().model() == SurfaceModel::RoundSphere;
    base.iter()
        .zip(dirs)
        .zip(amount)
        .map(|((p, d), a)| {
            let q = p + d * *a;
            if sphere { q.normalize() } else { q }
        })
        .collect()
}

/// One explicit step along a tangent pair: nodes move by
/// `eps psi_1'(s_j) n_j`, densities by `mu_j (1 + 2 eps psi_2_j)`, then the
/// weights are renormalized and a uniform transversal shift restores the
/// action of the input (to the nearest integer when BS is enforced).
pub fn deform_step(hw: &HalfWeightedCycle, pair: &TangentPair, eps: f64) -> Result<HalfWeightedCycle> {
    if !pair.is_attached_to(hw) {
        return Err(Error::DetachedPair);
    }
    if eps == 0.0 {
        return Ok(hw.clone());
    }
    let too_large = |e: Error| Error::StepTooLarge(format!("eps = {eps}: {e}"));

    let raw: Vec<f64> = hw.mu.iter().zip(&pair.psi2).map(|(m, b)| m * (1.0 + 2.0 * eps * b)).collect();
    if raw.iter().any(|w| *w < MU_MIN) {
        return Err(Error::StepTooLarge(format!("eps = {eps} drives a density below {MU_MIN}")));
    }

    let dpsi = spectral::derivative(&pair.psi1);
    let moves = dpsi.iter().any(|v| *v != 0.0);
    let cycle = if moves {
        let old_action = hw.cycle.action();
        let target = match hw.bs {
            BsRequirement::Enforce { .. } => old_action.round(),
            BsRequirement::Waived => old_action,
        };
        let frame = hw.cycle.frame();
        let amount: Vec<f64> = dpsi.iter().map(|v| eps * v).collect();
        let moved = displaced(&hw.cycle, &frame.positions, &frame.transversals, &amount);
        let moved = hw.cycle.with_points_unchecked(moved).map_err(too_large)?;
        moved.shifted_to_action(target).map_err(too_large)?
    } else {
        hw.cycle.clone()
    };
    make_half_weighted(cycle, &raw, hw.sign, hw.bs).map_err(too_large)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::CurveSpec;
    use crate::surface::SymplecticSurface;

    fn line_hw(k: i64, c: f64) -> HalfWeightedCycle {
        let s = SymplecticSurface::torus(k).unwrap();
        let cyc = CurveSpec::torus_line(c).sample(&s, 64).unwrap();
        make_half_weighted(cyc, &[1.0; 64], Sign::Plus, BsRequirement::default()).unwrap()
    }

    #[test]
    fn uniform_and_scaled_weights() {
        let hw = line_hw(1, 0.0);
        assert!(hw.mu().iter().all(|m| *m == 1.0));
        let cyc = hw.cycle().clone();
        let hw2 = make_half_weighted(cyc, &[2.0; 64], Sign::Plus, BsRequirement::default()).unwrap();
        assert_eq!(hw.mu(), hw2.mu());
    }

    #[test]
    fn negative_weight_rejected() {
        let hw = line_hw(1, 0.0);
        let mut w = vec![1.0; 64];
        w[5] = -1.0;
        assert!(make_half_weighted(hw.cycle().clone(), &w, Sign::Plus, BsRequirement::default()).is_err());
    }

    #[test]
    fn non_bs_cycle_rejected() {
        let s = SymplecticSurface::torus(1).unwrap();
        let cyc = CurveSpec::torus_line(0.3).sample(&s, 32).unwrap();
        assert!(matches!(
            make_half_weighted(cyc.clone(), &[1.0; 32], Sign::Plus, BsRequirement::default()),
            Err(Error::NotBohrSommerfeld { .. })
        ));
        assert!(make_half_weighted(cyc, &[1.0; 32], Sign::Plus, BsRequirement::Waived).is_ok());
    }

    #[test]
    fn random_pair_is_deterministic_and_centred() {
        let hw = line_hw(2, 0.5);
        let a = random_tangent_pair(&hw, 7, 5).unwrap();
        let b = random_tangent_pair(&hw, 7, 5).unwrap();
        assert_eq!(a, b);
        assert!(hw.integrate(a.psi1()).abs() < 1e-12);
        assert!(hw.integrate(a.psi2()).abs() < 1e-12);
        assert!(random_tangent_pair(&hw, 7, 32).is_err());
    }

    #[test]
    fn first_harmonic_cutoff() {
        let hw = line_hw(1, 0.0);
        let p = random_tangent_pair(&hw, 3, 1).unwrap();
        // A first harmonic satisfies psi'' = -(2 pi)^2 psi.
        let d2 = spectral::derivative(&spectral::derivative(p.psi1()));
        for (a, b) in d2.iter().zip(p.psi1()) {
            assert!((a + 4.0 * PI * PI * b).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_step_is_identity() {
        let hw = line_hw(1, 0.0);
        let p = random_tangent_pair(&hw, 1, 4).unwrap();
        assert_eq!(deform_step(&hw, &p, 0.0).unwrap(), hw);
    }

    #[test]
    fn weight_only_step_keeps_geometry() {
        let hw = line_hw(1, 0.0);
        let p = random_tangent_pair(&hw, 2, 4).unwrap().weight_part();
        let eps = 1e-3;
        let out = deform_step(&hw, &p, eps).unwrap();
        assert_eq!(out.cycle(), hw.cycle());
        assert_ne!(out.mu(), hw.mu());
        let drift: f64 = hw.mu().iter().zip(p.psi2()).map(|(m, b)| m * (1.0 + 2.0 * eps * b)).sum::<f64>() / 64.0 - 1.0;
        assert!(drift.abs() < 1e-12);
    }

    #[test]
    fn first_harmonic_step_stays_bohr_sommerfeld() {
        let hw = line_hw(1, 0.0);
        let n = hw.len();
        let psi: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).cos()).collect();
        let p = TangentPair::new(&hw, psi, vec![0.0; n]).unwrap();
        let out = deform_step(&hw, &p, 1e-3).unwrap();
        assert!(defect(out.cycle().action()) <= 1e-8);
        assert!(out.cycle() != hw.cycle());
    }

    #[test]
    fn detached_pair_rejected() {
        let a = line_hw(1, 0.0);
        let b = line_hw(2, 0.5);
        let p = random_tangent_pair(&a, 1, 3).unwrap();
        assert!(matches!(deform_step(&b, &p, 1e-3), Err(Error::DetachedPair)));
    }
}
