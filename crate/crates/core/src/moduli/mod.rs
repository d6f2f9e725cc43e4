//! Special functions on the moduli space of half-weighted Bohr-Sommerfeld
//! cycles, the moduli symplectic form, Hamiltonian vector fields and
//! criticality.

mod critical;
mod report;
mod scan;

pub use critical::{
    critical_tangent_test, criticality_residual, find_critical_point, SearchOutcome, TraceEntry,
};
pub use report::VerificationRecord;
pub use scan::{boundary_contraction_scan, DivisorPoint, DivisorSpec, FamilySpec, ScanRow, ScanTable};

use serde::{Deserialize, Serialize};

use crate::cycles::{make_half_weighted, HalfWeightedCycle, TangentPair};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::spectral;
use crate::surface::SymplecticSurface;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModuliConfig {
    pub tau: f64,
    /// Relative tolerance for bracket and duality identities.
    pub identity_tol: f64,
    /// Residual threshold for criticality.
    pub critical_tol: f64,
    /// Sup-norm threshold for Lie derivatives of tangent pairs.
    pub tangent_tol: f64,
    pub max_iterations: usize,
}

impl Default for ModuliConfig {
    fn default() -> Self {
        Self { tau: 0.5, identity_tol: 1e-7, critical_tol: 1e-6, tangent_tol: 1e-8, max_iterations: 10_000 }
    }
}

impl ModuliConfig {
    /// Defaults with `tau = 1 / (2k)`.
    pub fn for_surface(surface: &SymplecticSurface) -> Self {
        Self { tau: surface.default_tau(), ..Self::default() }
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {tau}")));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Values of `f` at the nodes.
pub fn node_values(f: &ScalarField, hw: &HalfWeightedCycle) -> Vec<f64> {
    hw.cycle().embedded().iter().map(|p| f.eval(p)).collect()
}

/// Tangential component `a_j = df(n_j)` of `X_f = a t + b n` along the cycle.
pub fn tangential_component(f: &ScalarField, hw: &HalfWeightedCycle) -> Vec<f64> {
    let grad = f.gradient_field();
    let frame = hw.cycle().frame();
    frame.positions.iter().zip(&frame.transversals).map(|(p, n)| grad.eval(p).dot(n)).collect()
}

/// `F_f = tau sum f mu / N`.
pub fn special_value(f: &ScalarField, hw: &HalfWeightedCycle, cfg: &ModuliConfig) -> f64 {
    cfg.tau * hw.integrate(&node_values(f, hw))
}

fn check_attached(hw: &HalfWeightedCycle, pairs: &[&TangentPair]) -> Result<()> {
    if pairs.iter().all(|p| p.is_attached_to(hw)) {
        Ok(())
    } else {
        Err(Error::DetachedPair)
    }
}

/// `Omega((alpha, beta), (gamma, delta)) = sum (alpha delta - beta gamma) mu / N`.
pub fn omega_form(hw: &HalfWeightedCycle, a: &TangentPair, b: &TangentPair) -> Result<f64> {
    check_attached(hw, &[a, b])?;
    let v: Vec<f64> = (0..hw.len()).map(|j| a.psi1()[j] * b.psi2()[j] - a.psi2()[j] * b.psi1()[j]).collect();
    Ok(hw.integrate(&v))
}

/// `dF_f(alpha, beta) = tau sum 2 f beta mu / N + tau sum alpha' a mu / N`.
pub fn differential_pairing(f: &ScalarField, hw: &HalfWeightedCycle, pair: &TangentPair, cfg: &ModuliConfig) -> Result<f64> {
    check_attached(hw, &[pair])?;
    let fv = node_values(f, hw);
    let a = tangential_component(f, hw);
    let da = spectral::derivative(pair.psi1());
    let v: Vec<f64> = (0..hw.len()).map(|j| 2.0 * fv[j] * pair.psi2()[j] + da[j] * a[j]).collect();
    Ok(cfg.tau * hw.integrate(&v))
}

/// `(aμ)' / (2μ)`: the Lie derivative of the half-weight along `W_f = a t`,
/// divided by the half-weight.
pub(crate) fn half_weight_lie(a: &[f64], hw: &HalfWeightedCycle) -> Vec<f64> {
    let amu: Vec<f64> = a.iter().zip(hw.mu()).map(|(a, m)| a * m).collect();
    spectral::derivative(&amu).iter().zip(hw.mu()).map(|(d, m)| d / (2.0 * m)).collect()
}

/// Components `(f|_S - c, (a mu)' / (2 mu))` of the vector field induced on
/// the moduli space by the flow of `f`.
pub fn theta_bs_components(f: &ScalarField, hw: &HalfWeightedCycle) -> TangentPair {
    let fv = node_values(f, hw);
    let psi1 = hw.project_zero_mean(&fv);
    let psi2 = hw.project_zero_mean(&half_weight_lie(&tangential_component(f, hw), hw));
    TangentPair::new(hw, psi1, psi2).expect("projected components are centred")
}

/// Hamiltonian vector field of `F_f` for `Omega`, converted componentwise:
/// the weight term of `dF_f` pairs with `psi_1 = 2 tau (f - c)` and the
/// geometric term, after summation by parts, with `psi_2 = tau (a mu)' / mu`.
pub fn moduli_ham_field(f: &ScalarField, hw: &HalfWeightedCycle, cfg: &ModuliConfig) -> TangentPair {
    let fv = node_values(f, hw);
    let psi1: Vec<f64> = hw.project_zero_mean(&fv).iter().map(|v| 2.0 * cfg.tau * v).collect();
    let a = tangential_component(f, hw);
    let amu: Vec<f64> = a.iter().zip(hw.mu()).map(|(a, m)| a * m).collect();
    let psi2: Vec<f64> = spectral::derivative(&amu).iter().zip(hw.mu()).map(|(d, m)| cfg.tau * d / m).collect();
    let psi2 = hw.project_zero_mean(&psi2);
    TangentPair::new(hw, psi1, psi2).expect("projected components are centred")
}

/// `{F_f, F_g}_Omega = Omega(X_{F_f}, X_{F_g})`.
pub fn moduli_bracket(f: &ScalarField, g: &ScalarField, hw: &HalfWeightedCycle, cfg: &ModuliConfig) -> f64 {
    let xf = moduli_ham_field(f, hw, cfg);
    let xg = moduli_ham_field(g, hw, cfg);
    omega_form(hw, &xf, &xg).expect("fields built on hw")
}

/// Transport by the time-`t` flow of `X_f` on the surface: nodes move along
/// the flow, densities ride with their nodes.
pub fn flow_transport(f: &ScalarField, hw: &HalfWeightedCycle, t: f64, steps: usize) -> Result<HalfWeightedCycle> {
    let surface = *hw.cycle().surface();
    let grad = f.gradient_field();
    let pts = hw.cycle().embedded().iter().map(|p| surface.flow_ambient(&grad, p, t, steps)).collect();
    let cycle = hw.cycle().with_points_unchecked(pts)?;
    make_half_weighted(cycle, hw.mu(), hw.sign(), hw.bs_requirement())
}
