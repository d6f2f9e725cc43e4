//! Scenario checks. Each returns a [`CheckReport`] and its table files.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::config::{ScenarioConfig, Tolerances};
use super::convergence::{emit_convergence, SECOND_ORDER};
use super::report::{CheckReport, Gate, ReportRecord};
use super::sampling::{derive_seed, random_bs_cycle, random_field, random_weights};
use crate::complex::{
    angular_distance, bpu_map, default_order, expectation_function, holomorphic_basis, prop4_distance, sk_operator_matrix,
    toeplitz_matrix, SectionVector, ToeplitzData,
};
use crate::cycles::{
    deform_step, enclosed_area, make_half_weighted, random_tangent_pair, BsRequirement, CurveSpec, HalfWeightedCycle, Sign,
    TangentPair,
};
use crate::error::Result;
use crate::field::ScalarField;
use crate::moduli::{
    boundary_contraction_scan, criticality_residual, differential_pairing, find_critical_point, moduli_bracket,
    moduli_ham_field, omega_form, special_value, theta_bs_components, ModuliConfig,
};
use crate::real::{enumerate_bs_fibers, fibers_to_csv, invariant_half_weight, lie_kernel, Fibration};
use crate::surface::{SymplecticSurface, Vec3};

/// Named text file produced by a check.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

pub struct CheckOutput {
    pub report: CheckReport,
    pub artifacts: Vec<Artifact>,
}

impl CheckOutput {
    fn plain(report: CheckReport) -> Self {
        Self { report, artifacts: Vec::new() }
    }
}

// Random streams.
const CYCLES: u64 = 1;
const FIELDS: u64 = 2;
const PAIRS: u64 = 3;
const SECTIONS: u64 = 4;
const SEARCH: u64 = 5;

pub struct Context<'a> {
    pub config: &'a ScenarioConfig,
    pub surface: SymplecticSurface,
    pub seed: u64,
    pub tol: Tolerances,
    pub moduli: ModuliConfig,
}

impl Context<'_> {
    fn cycles(&self, nodes: usize) -> Result<Vec<(u64, HalfWeightedCycle)>> {
        if self.config.cycles.is_empty() {
            (0..self.config.samples.cycles as u64)
                .map(|i| {
                    let seed = derive_seed(self.seed, CYCLES, i);
                    Ok((seed, random_bs_cycle(&self.surface, nodes, seed)?))
                })
                .collect()
        } else {
            self.config
                .cycles
                .iter()
                .map(|spec| {
                    let c = spec.sample(&self.surface, nodes)?.bs_corrected()?;
                    Ok((0, make_half_weighted(c, &vec![1.0; nodes], Sign::Plus, BsRequirement::default())?))
                })
                .collect()
        }
    }

    fn field_pairs(&self) -> Vec<(u64, ScalarField, ScalarField)> {
        if self.config.fields.is_empty() {
            (0..self.config.samples.field_pairs as u64)
                .map(|i| {
                    let a = derive_seed(self.seed, FIELDS, 2 * i);
                    let b = derive_seed(self.seed, FIELDS, 2 * i + 1);
                    (a, random_field(&self.surface, a), random_field(&self.surface, b))
                })
                .collect()
        } else {
            self.config.fields.chunks(2).map(|p| (0, p[0].build(), p[1].build())).collect()
        }
    }

    fn nodes(&self) -> usize {
        self.config.nodes
    }

    fn holomorphic(&self) -> Result<ToeplitzData> {
        let k = self.surface.level();
        holomorphic_basis(k as i64, self.config.quadrature_order.unwrap_or_else(|| default_order(k)))
    }
}

/// Run one check by id; an `Err` becomes a failed check with its message.
pub fn run_check(id: &str, ctx: &Context) -> CheckOutput {
    let out = match id {
        "eq4" => eq4(ctx),
        "prop1" => prop1(ctx),
        "eq5" => eq5(ctx),
        "bs-fibers" => bs_fibers(ctx),
        "prop3" => prop3(ctx),
        "toeplitz" => toeplitz(ctx),
        "prop4" => prop4(ctx),
        "boundary-scan" => boundary_scan(ctx),
        "convergence" => convergence(ctx),
        other => Err(crate::Error::Config(format!("unknown check id {other:?}"))),
    };
    out.unwrap_or_else(|e| CheckOutput::plain(CheckReport::failed(id, e.to_string())))
}

fn bracket_records(
    id: &str,
    ctx: &Context,
    nodes: usize,
    cycles: &[(u64, HalfWeightedCycle)],
) -> Result<Vec<ReportRecord>> {
    let mut out = Vec::new();
    for (j, (fseed, f, g)) in ctx.field_pairs().into_iter().enumerate() {
        let fg = ctx.surface.poisson_bracket(&f, &g)?;
        for (i, (cseed, hw)) in cycles.iter().enumerate() {
            let lhs = moduli_bracket(&f, &g, hw, &ctx.moduli);
            let rhs = 2.0 * ctx.moduli.tau * special_value(&fg, hw, &ctx.moduli);
            let seed = derive_seed(*cseed, FIELDS, fseed);
            out.push(ReportRecord::new(id, format!("c{i}/p{j}"), nodes, seed, lhs, rhs, Gate::Relative, ctx.tol.identity));
        }
    }
    Ok(out)
}

fn eq4(ctx: &Context) -> Result<CheckOutput> {
    let cycles = ctx.cycles(ctx.nodes())?;
    let records = bracket_records("eq4", ctx, ctx.nodes(), &cycles)?;
    Ok(CheckOutput::plain(CheckReport::from_records("eq4", records, Vec::new())))
}

fn prop1(ctx: &Context) -> Result<CheckOutput> {
    let n = ctx.nodes();
    let tau = ctx.moduli.tau;
    let mut records = Vec::new();
    for (i, (cseed, hw)) in ctx.cycles(n)?.iter().enumerate() {
        for (j, (fseed, f, _)) in ctx.field_pairs().iter().enumerate() {
            let x = moduli_ham_field(f, hw, &ctx.moduli);
            let t = theta_bs_components(f, hw);
            let sup = (0..n)
                .map(|m| (x.psi1()[m] - 2.0 * tau * t.psi1()[m]).abs().max((x.psi2()[m] - 2.0 * tau * t.psi2()[m]).abs()))
                .fold(0.0, f64::max);
            let seed = derive_seed(*cseed, FIELDS, *fseed);
            records.push(ReportRecord::new("prop1", format!("c{i}/f{j}/nodewise"), n, seed, sup, 0.0, Gate::Absolute, ctx.tol.nodewise));
            let mut worst: Option<(f64, f64)> = None;
            for q in 0..ctx.config.samples.tangent_pairs as u64 {
                let pair = random_tangent_pair(hw, derive_seed(seed, PAIRS, q), ctx.config.samples.tangent_modes)?;
                let lhs = omega_form(hw, &x, &pair)?;
                let rhs = differential_pairing(f, hw, &pair, &ctx.moduli)?;
                if worst.is_none_or(|(a, b)| (lhs - rhs).abs() > (a - b).abs()) {
                    worst = Some((lhs, rhs));
                }
            }
            if let Some((lhs, rhs)) = worst {
                records.push(ReportRecord::new("prop1", format!("c{i}/f{j}/duality"), n, seed, lhs, rhs, Gate::Absolute, ctx.tol.duality));
            }
        }
    }
    Ok(CheckOutput::plain(CheckReport::from_records("prop1", records, Vec::new())))
}

fn eq5(ctx: &Context) -> Result<CheckOutput> {
    let n = ctx.nodes();
    let s = &ctx.config.samples;
    let mut records = Vec::new();
    for (i, (cseed, hw)) in ctx.cycles(n)?.iter().enumerate() {
        for (j, (fseed, f, _)) in ctx.field_pairs().iter().enumerate() {
            let f0 = special_value(f, hw, &ctx.moduli);
            for q in 0..s.variation_pairs as u64 {
                let seed = derive_seed(derive_seed(*cseed, FIELDS, *fseed), PAIRS, q);
                let pair = sized_pair(hw, seed, s.tangent_modes, s.pair_amplitude)?;
                let rhs = differential_pairing(f, hw, &pair, &ctx.moduli)?;
                for eps in &s.epsilons {
                    let moved = deform_step(hw, &pair, *eps)?;
                    let lhs = (special_value(f, &moved, &ctx.moduli) - f0) / eps;
                    let tol = ctx.tol.variation_slope * eps + ctx.tol.variation_floor;
                    records.push(ReportRecord::new("eq5", format!("c{i}/f{j}/q{q}/eps{eps:e}"), n, seed, lhs, rhs, Gate::Absolute, tol));
                }
            }
        }
    }
    Ok(CheckOutput::plain(CheckReport::from_records("eq5", records, Vec::new())))
}

fn expected_fibers(surface: &SymplecticSurface) -> usize {
    let k = surface.level() as usize;
    if surface.is_sphere() { k - 1 } else { k }
}

fn bs_fibers(ctx: &Context) -> Result<CheckOutput> {
    let n = ctx.nodes();
    let fib = Fibration::for_surface(&ctx.surface);
    let fibers = enumerate_bs_fibers(&ctx.surface, fib, n, ctx.config.scan_resolution)?;
    let mut records = vec![ReportRecord::new(
        "bs-fibers",
        "count",
        n,
        ctx.seed,
        fibers.len() as f64,
        expected_fibers(&ctx.surface) as f64,
        Gate::Absolute,
        0.0,
    )];
    for r in &fibers {
        records.push(ReportRecord::new("bs-fibers", format!("fiber{}/action", r.index), n, ctx.seed, r.action, r.action.round(), Gate::Absolute, ctx.tol.action));
    }
    let mut dat = String::new();
    for r in &fibers {
        dat.push_str(&format!("{:.15e} {:.15e}\n", r.coordinate, r.action));
    }
    let artifacts = vec![
        Artifact { name: "fibers.csv".into(), contents: fibers_to_csv(&fibers) },
        Artifact { name: "fibers.dat".into(), contents: dat },
    ];
    Ok(CheckOutput { report: CheckReport::from_records("bs-fibers", records, Vec::new()), artifacts })
}

/// Largest distance of the cycle's nodes from the fiber at fibration value `c`.
fn fiber_distance(fib: Fibration, hw: &HalfWeightedCycle, c: f64) -> f64 {
    hw.cycle()
        .embedded()
        .iter()
        .map(|p| match fib {
            Fibration::TorusY => ((p.y - c + 0.5).rem_euclid(1.0) - 0.5).abs(),
            Fibration::SphereZ => (p.z - c).abs(),
        })
        .fold(0.0, f64::max)
}

/// Whether a search from a perturbed seed landed on the fiber with the
/// invariant half-weight of the seed's sign.
pub fn landed_on_fiber(surface: &SymplecticSurface, fib: Fibration, out: &HalfWeightedCycle, c: f64, sign: Sign, tol: f64) -> bool {
    if out.sign() != sign || fiber_distance(fib, out, c) > tol {
        return false;
    }
    match invariant_half_weight(surface, fib, out.cycle()) {
        Ok((plus, _)) => {
            let top = plus.mu().iter().fold(0.0f64, |m, v| m.max(*v));
            plus.mu().iter().zip(out.mu()).all(|(a, b)| (a - b).abs() <= tol * top)
        }
        Err(_) => false,
    }
}

/// Sup-norm of a pair as a deformation: `max(|psi_1'|, |psi_2|)`.
fn pair_size(pair: &TangentPair) -> f64 {
    crate::spectral::derivative(pair.psi1()).iter().chain(pair.psi2()).fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Random tangent pair rescaled to `pair_size == amplitude`.
pub fn sized_pair(hw: &HalfWeightedCycle, seed: u64, modes: usize, amplitude: f64) -> Result<TangentPair> {
    let pair = random_tangent_pair(hw, seed, modes)?;
    let size = pair_size(&pair);
    Ok(if size > 0.0 { pair.scaled(amplitude / size) } else { pair })
}

/// Seed for the critical-point search: one unit step along a random
/// tangent pair of size `amplitude`.
pub fn perturbed_seed(hw: &HalfWeightedCycle, seed: u64, modes: usize, amplitude: f64) -> Result<HalfWeightedCycle> {
    deform_step(hw, &sized_pair(hw, seed, modes, amplitude)?, 1.0)
}

fn prop3(ctx: &Context) -> Result<CheckOutput> {
    let n = ctx.nodes();
    let fib = Fibration::for_surface(&ctx.surface);
    let f = fib.field();
    let fibers = enumerate_bs_fibers(&ctx.surface, fib, n, ctx.config.scan_resolution)?;
    let s = &ctx.config.samples;
    let mut records = Vec::new();
    let mut notes = Vec::new();
    for r in &fibers {
        let kernel = lie_kernel(&f, &r.plus)?;
        records.push(ReportRecord::new("prop3", format!("fiber{}/kernel", r.index), n, ctx.seed, kernel.dimension as f64, 1.0, Gate::Absolute, 0.0));
        for (name, hw) in [("plus", &r.plus), ("minus", &r.minus)] {
            let (r1, r2) = criticality_residual(&f, hw);
            records.push(ReportRecord::new("prop3", format!("fiber{}/{name}/residual", r.index), n, ctx.seed, r1.max(r2), 0.0, Gate::Absolute, ctx.tol.critical));
        }
        let mut landed = 0;
        for q in 0..s.seeds_per_fiber as u64 {
            let seed = derive_seed(ctx.seed, SEARCH, 1000 * r.index as u64 + q);
            let base = if q % 2 == 0 { &r.plus } else { &r.minus };
            let start = perturbed_seed(base, seed, s.tangent_modes, s.perturbation)?;
            let out = find_critical_point(&f, &start, &ctx.moduli);
            if out.converged && landed_on_fiber(&ctx.surface, fib, &out.point, r.coordinate, base.sign(), ctx.tol.search) {
                landed += 1;
            } else {
                let (a, b) = out.residuals();
                notes.push(format!("fiber {} seed {q}: converged = {}, residuals ({a:.3e}, {b:.3e})", r.index, out.converged));
            }
        }
        records.push(ReportRecord::new("prop3", format!("fiber{}/search", r.index), n, ctx.seed, landed as f64, s.seeds_per_fiber as f64, Gate::Absolute, 0.0));
    }
    Ok(CheckOutput::plain(CheckReport::from_records("prop3", records, notes)))
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn quadratic_form(t: &DMatrix<Complex64>, s: &SectionVector) -> f64 {
    let v = DVector::from_column_slice(&s.coeffs);
    (v.adjoint() * t * &v)[(0, 0)].re
}

fn toeplitz(ctx: &Context) -> Result<CheckOutput> {
    let data = ctx.holomorphic()?;
    let dim = data.dimension();
    let id = "toeplitz";
    let seed = ctx.seed;
    let mut records = Vec::new();
    let one = toeplitz_matrix(&data, &ScalarField::sphere_constant(1.0))?;
    records.push(ReportRecord::new(id, "identity", dim, seed, max_abs(&(one - DMatrix::identity(dim, dim))), 0.0, Gate::Absolute, ctx.tol.identity_operator));
    let fseed = derive_seed(seed, FIELDS, 0);
    let named = [
        ("x", ScalarField::x()),
        ("y", ScalarField::y()),
        ("z", ScalarField::z()),
        ("random", ScalarField::random_sphere_poly(fseed, 3)),
    ];
    for (name, f) in &named {
        let t = toeplitz_matrix(&data, f)?;
        records.push(ReportRecord::new(id, format!("{name}/hermitian"), dim, seed, max_abs(&(&t - t.adjoint())), 0.0, Gate::Absolute, ctx.tol.hermitian));
        let mut worst: (f64, f64) = (0.0, 0.0);
        for i in 0..ctx.config.samples.sections as u64 {
            let s = SectionVector::random_unit(dim, derive_seed(seed, SECTIONS, i));
            let lhs = expectation_function(&data, f, &s)?;
            let rhs = quadratic_form(&t, &s);
            if (lhs - rhs).abs() >= (worst.0 - worst.1).abs() {
                worst = (lhs, rhs);
            }
        }
        if ctx.config.samples.sections > 0 {
            records.push(ReportRecord::new(id, format!("{name}/expectation"), dim, seed, worst.0, worst.1, Gate::Absolute, ctx.tol.expectation));
        }
    }
    let coords = &named[..3];
    for a in 0..3 {
        for b in (a + 1)..3 {
            let (fa, fb) = (&coords[a], &coords[b]);
            let qa = sk_operator_matrix(&data, &fa.1)?;
            let qb = sk_operator_matrix(&data, &fb.1)?;
            let qab = sk_operator_matrix(&data, &ctx.surface.poisson_bracket(&fa.1, &fb.1)?)?;
            let err = max_abs(&(&qa * &qb - &qb * &qa - qab));
            records.push(ReportRecord::new(id, format!("[{},{}]/souriau-kostant", fa.0, fb.0), dim, seed, err, 0.0, Gate::Absolute, ctx.tol.commutator));
        }
    }
    Ok(CheckOutput::plain(CheckReport::from_records(id, records, Vec::new())))
}

fn prop4(ctx: &Context) -> Result<CheckOutput> {
    let n = ctx.nodes();
    let data = ctx.holomorphic()?;
    let fibers = enumerate_bs_fibers(&ctx.surface, Fibration::SphereZ, n, ctx.config.scan_resolution)?;
    let plus: Vec<HalfWeightedCycle> = fibers.iter().map(|r| r.plus.clone()).collect();
    let rows = prop4_distance(&data, &ScalarField::z(), &plus)?;
    let mut records = Vec::new();
    let mut csv = String::from("index,coordinate,image_norm,eigen_index,eigenvalue,distance\n");
    for (r, row) in fibers.iter().zip(&rows) {
        records.push(ReportRecord::new("prop4", format!("fiber{}/distance", r.index), n, ctx.seed, row.distance, 0.0, Gate::Absolute, ctx.tol.prop4));
        let vp = bpu_map(&data, &r.plus)?;
        let vm = bpu_map(&data, &r.minus)?;
        let ray = angular_distance(&vp, &vm)?;
        records.push(ReportRecord::new("prop4", format!("fiber{}/pair-ray", r.index), n, ctx.seed, ray, 0.0, Gate::Absolute, ctx.tol.ray));
        csv.push_str(&format!(
            "{},{:.15e},{:.15e},{},{:.15e},{:.15e}\n",
            r.index, r.coordinate, row.image_norm, row.eigen_index, row.eigenvalue, row.distance
        ));
    }
    Ok(CheckOutput {
        report: CheckReport::from_records("prop4", records, Vec::new()),
        artifacts: vec![Artifact { name: "prop4.csv".into(), contents: csv }],
    })
}

fn boundary_scan(ctx: &Context) -> Result<CheckOutput> {
    let id = "boundary-scan";
    let divisor = ctx.config.divisor(&ctx.surface);
    let family = ctx.config.scan.family;
    let table = boundary_contraction_scan(&ctx.surface, &divisor, &family, &ctx.moduli)?;
    let n = family.nodes;
    let mut records = vec![
        ReportRecord::new(id, "monotone", n, ctx.seed, if table.monotone { 1.0 } else { 0.0 }, 1.0, Gate::Absolute, 0.0),
        ReportRecord::new(id, "interior-residual", n, ctx.seed, table.min_interior_normalized, ctx.tol.scan_residual, Gate::AtLeast, 0.0),
    ];
    let mut notes = Vec::new();
    let level_sets = table.rows.iter().filter(|r| r.level_set).count();
    if level_sets > 0 {
        notes.push(format!("{level_sets} of {} family members are level sets of f_Y", table.rows.len()));
    }
    let f = divisor.f_y();
    let k = ctx.surface.level();
    let p = divisor.points[0].point;
    let q = Vec3::new(p[0], p[1], p[2]).normalize();
    if k >= 2 {
        for i in 0..ctx.config.scan.search_seeds as u64 {
            let seed = derive_seed(ctx.seed, SEARCH, i);
            let m = 1 + (i % (k as u64 - 1)) as u32;
            let r = (1.0 - 2.0 * m as f64 / k as f64).acos();
            let cyc = CurveSpec::sphere_circle(q, r).sample(&ctx.surface, n)?.shifted_to_action(m as f64)?;
            let hw = make_half_weighted(cyc, &random_weights(n, seed), Sign::Plus, BsRequirement::default())?;
            let start = perturbed_seed(&hw, seed, ctx.config.samples.tangent_modes, ctx.config.samples.perturbation)?;
            let out = find_critical_point(&f, &start, &ctx.moduli);
            let (a, b) = out.residuals();
            notes.push(format!("search {i} from area {m}: converged = {} after {} iterations, residuals ({a:.3e}, {b:.3e})", out.converged, out.iterations));
            records.push(ReportRecord::new(id, format!("search{i}/converged"), n, seed, if out.converged { 1.0 } else { 0.0 }, 0.0, Gate::Absolute, 0.0));
        }
    } else {
        notes.push("level 1: no regular Bohr-Sommerfeld circle to start a search from".into());
    }
    let mut csv = String::from("parameter,special_value,stddev,normalized_stddev,lie_residual,level_set\n");
    let mut dat = String::new();
    let mut res = String::new();
    for r in &table.rows {
        csv.push_str(&format!(
            "{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{}\n",
            r.parameter, r.special_value, r.stddev, r.normalized_stddev, r.lie_residual, r.level_set
        ));
        dat.push_str(&format!("{:.15e} {:.15e}\n", r.parameter, r.special_value));
        res.push_str(&format!("{:.15e} {:.15e}\n", r.parameter, r.normalized_stddev));
    }
    Ok(CheckOutput {
        report: CheckReport::from_records(id, records, notes),
        artifacts: vec![
            Artifact { name: "scan.csv".into(), contents: csv },
            Artifact { name: "scan.dat".into(), contents: dat },
            Artifact { name: "scan_residual.dat".into(), contents: res },
        ],
    })
}

/// Exact value of the square-loop action used by the refinement study.
const SQUARE_SIDE: f64 = 0.5;

fn convergence(ctx: &Context) -> Result<CheckOutput> {
    let id = "convergence";
    debug_assert!(SECOND_ORDER.contains(&id));
    let mut ns = ctx.config.n_values.clone();
    ns.sort();
    ns.dedup();
    let n_max = *ns.last().expect("validated N_values");
    let mut records = Vec::new();
    for &n in &ns {
        let cycles = ctx.cycles(n)?;
        let worst = bracket_records(id, ctx, n, &cycles)?
            .into_iter()
            .max_by(|a, b| a.error().total_cmp(&b.error()))
            .expect("at least one cycle and pair");
        // The identity tolerance applies at the finest N; coarser levels get
        // the slack a second-order method would need.
        let tol = worst.tol * (n_max as f64 / n as f64).powi(2);
        records.push(ReportRecord::new(id, "bracket-max", n, ctx.seed, worst.lhs, worst.rhs, worst.gate, tol));
        if !ctx.surface.is_sphere() {
            let sq = CurveSpec::TorusSquare { center: [0.5, 0.5], side: SQUARE_SIDE }.sample(&ctx.surface, n)?;
            let exact = ctx.surface.level() as f64 * SQUARE_SIDE * SQUARE_SIDE;
            // Second-order at the corners; tolerance matches 2e-3 at N = 64.
            let tol = 2e-3 * (64.0 / n as f64).powi(2);
            records.push(ReportRecord::new(id, "square-area", n, ctx.seed, enclosed_area(&ctx.surface, &sq)?, exact, Gate::Absolute, tol));
        }
    }
    let table = emit_convergence(&records, ctx.tol.order_min)?;
    for row in &table.rows {
        records.push(ReportRecord::order(id, format!("{}/order", row.label), 0, ctx.seed, row.order, ctx.tol.order_min));
    }
    let mut artifacts = vec![Artifact { name: "convergence.csv".into(), contents: table.to_csv() }];
    artifacts.extend(table.dat_files());
    Ok(CheckOutput { report: CheckReport::from_records(id, records, Vec::new()), artifacts })
}
