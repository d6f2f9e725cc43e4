use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cycles::{CurveSpec, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::moduli::{DivisorSpec, FamilySpec};
use crate::surface::{SurfaceModel, SymplecticSurface};

/// Check ids with one-line descriptions, sorted.
pub const CHECKS: &[(&str, &str)] = &[
    ("boundary-scan", "F_{f_Y} and criticality residual along circles contracting onto the divisor (sphere)"),
    ("bs-fibers", "Bohr-Sommerfeld fibers of the coordinate fibration: count and integrality"),
    ("convergence", "refinement study of the bracket identity (and the square-loop area on the torus)"),
    ("eq4", "bracket correspondence {F_f, F_g} = 2 tau F_{f,g} on random BS cycles"),
    ("eq5", "first variation of F_f against finite differences of deform_step"),
    ("prop1", "moduli Hamiltonian field equals 2 tau Theta_BS; Omega-duality on random pairs"),
    ("prop3", "Lie kernel dimension, criticality of +-theta and critical-point search per fiber"),
    ("prop4", "BPU images of the BS latitudes against the eigenrays of T_z (sphere)"),
    ("toeplitz", "T_1 = I, hermiticity, expectation consistency, Souriau-Kostant brackets (sphere)"),
];

const SPHERE_ONLY: &[&str] = &["boundary-scan", "prop4", "toeplitz"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub model: SurfaceModel,
    pub level: i64,
}

/// Upper tolerances (scaled by `--tol-scale`) and the two lower bounds
/// `order_min` and `scan_residual` (never scaled).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub identity: f64,
    pub nodewise: f64,
    pub duality: f64,
    pub variation_slope: f64,
    pub variation_floor: f64,
    pub action: f64,
    pub critical: f64,
    pub search: f64,
    pub identity_operator: f64,
    pub hermitian: f64,
    pub expectation: f64,
    pub commutator: f64,
    pub prop4: f64,
    pub ray: f64,
    pub scan_residual: f64,
    pub order_min: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-7,
            nodewise: 1e-8,
            duality: 1e-8,
            variation_slope: 10.0,
            variation_floor: 1e-8,
            action: 1e-10,
            critical: 1e-8,
            search: 1e-5,
            identity_operator: 1e-10,
            hermitian: 1e-12,
            expectation: 1e-8,
            commutator: 1e-6,
            prop4: 1e-2,
            ray: 1e-10,
            scan_residual: 1e-3,
            order_min: 1.8,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            identity: self.identity * s,
            nodewise: self.nodewise * s,
            duality: self.duality * s,
            variation_slope: self.variation_slope * s,
            variation_floor: self.variation_floor * s,
            action: self.action * s,
            critical: self.critical * s,
            search: self.search * s,
            identity_operator: self.identity_operator * s,
            hermitian: self.hermitian * s,
            expectation: self.expectation * s,
            commutator: self.commutator * s,
            prop4: self.prop4 * s,
            ray: self.ray * s,
            ..*self
        }
    }
}

/// Sample counts and random-input amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Samples {
    pub cycles: usize,
    pub field_pairs: usize,
    pub tangent_pairs: usize,
    pub tangent_modes: usize,
    pub variation_pairs: usize,
    pub pair_amplitude: f64,
    pub epsilons: Vec<f64>,
    pub seeds_per_fiber: usize,
    pub perturbation: f64,
    pub sections: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Self {
            cycles: 20,
            field_pairs: 10,
            tangent_pairs: 50,
            tangent_modes: 4,
            variation_pairs: 3,
            pair_amplitude: 0.05,
            epsilons: vec![1e-3, 1e-4],
            seeds_per_fiber: 10,
            perturbation: 0.02,
            sections: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSpec {
    pub family: FamilySpec,
    /// Defaults to `k` times the north pole.
    pub divisor: Option<DivisorSpec>,
    /// Starting points for the critical-point search on `f_Y`.
    pub search_seeds: usize,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self { family: FamilySpec::default(), divisor: None, search_seeds: 3 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

/// One scenario: a single declarative JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub seed: u64,
    pub checks: Vec<String>,
    #[serde(default = "default_nodes", rename = "N")]
    pub nodes: usize,
    /// Resolutions of the convergence study.
    #[serde(default, rename = "N_values")]
    pub n_values: Vec<usize>,
    /// Defaults to `1 / (2k)`.
    #[serde(default)]
    pub tau: Option<f64>,
    /// Explicit fields, taken in consecutive pairs; random when empty.
    #[serde(default)]
    pub fields: Vec<FieldSpec>,
    /// Explicit cycles (moved to the nearest integer action); random when empty.
    #[serde(default)]
    pub cycles: Vec<CurveSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub samples: Samples,
    #[serde(default)]
    pub scan: ScanSpec,
    #[serde(default = "default_resolution")]
    pub scan_resolution: usize,
    /// Quadrature order of the holomorphic layer; `k + 8` when absent.
    #[serde(default)]
    pub quadrature_order: Option<usize>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_nodes() -> usize {
    256
}

fn default_resolution() -> usize {
    256
}

fn check_nodes(what: &str, n: usize) -> Result<()> {
    if n < MIN_SAMPLES || n % 2 != 0 {
        return Err(Error::Config(format!("{what} = {n}: node counts must be even and at least {MIN_SAMPLES}")));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn surface(&self) -> Result<SymplecticSurface> {
        SymplecticSurface::new(self.surface.model, self.surface.level).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let surface = self.surface()?;
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name == "." || self.name == ".." {
            return Err(Error::Config(format!("scenario name {:?} must be a plain file name", self.name)));
        }
        if self.checks.is_empty() {
            return Err(Error::Config("no checks selected".into()));
        }
        for id in &self.checks {
            if !CHECKS.iter().any(|(c, _)| c == id) {
                return Err(Error::Config(format!("unknown check id {id:?}")));
            }
            if SPHERE_ONLY.contains(&id.as_str()) && !surface.is_sphere() {
                return Err(Error::Config(format!("check {id:?} needs the sphere")));
            }
        }
        let mut sorted = self.checks.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.checks.len() {
            return Err(Error::Config("duplicate check id".into()));
        }
        check_nodes("N", self.nodes)?;
        for n in &self.n_values {
            check_nodes("N_values entry", *n)?;
        }
        if self.checks.iter().any(|c| c == "convergence") {
            let mut ns = self.n_values.clone();
            ns.sort();
            ns.dedup();
            if ns.len() < 3 {
                return Err(Error::Config("the convergence check needs at least three distinct N_values".into()));
            }
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(Error::Config(format!("tau must be positive, got {tau}")));
            }
        }
        if self.fields.len() % 2 != 0 {
            return Err(Error::Config("fields are taken in pairs; give an even number".into()));
        }
        for spec in &self.fields {
            if matches!(spec.build(), crate::field::ScalarField::Sphere(_)) != surface.is_sphere() {
                return Err(Error::Config(format!("field {spec:?} does not live on {:?}", surface.model())));
            }
        }
        let s = &self.samples;
        if self.cycles.is_empty() && s.cycles == 0 {
            return Err(Error::Config("samples.cycles must be positive".into()));
        }
        if self.fields.is_empty() && s.field_pairs == 0 {
            return Err(Error::Config("samples.field_pairs must be positive".into()));
        }
        if s.tangent_modes == 0 || 2 * s.tangent_modes >= self.nodes {
            return Err(Error::Config("samples.tangent_modes must lie in [1, N/2)".into()));
        }
        if s.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) || !(s.pair_amplitude > 0.0) || !(s.perturbation >= 0.0) {
            return Err(Error::Config("epsilons, pair_amplitude and perturbation must be positive".into()));
        }
        if self.scan_resolution < 2 {
            return Err(Error::Config("scan_resolution must be at least 2".into()));
        }
        if surface.is_sphere() && self.checks.iter().any(|c| c == "boundary-scan") {
            check_nodes("scan.family.nodes", self.scan.family.nodes)?;
            let divisor = self.divisor(&surface);
            divisor.validate(&surface).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(q) = self.quadrature_order {
            if q < 2 {
                return Err(Error::Config("quadrature_order must be at least 2".into()));
            }
        }
        Ok(())
    }

    pub fn divisor(&self, surface: &SymplecticSurface) -> DivisorSpec {
        self.scan.divisor.clone().unwrap_or_else(|| DivisorSpec::north_pole(surface.level()))
    }
}
