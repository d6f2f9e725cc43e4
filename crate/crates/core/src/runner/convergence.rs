use std::collections::BTreeMap;

use super::checks::Artifact;
use super::report::{Gate, Order, ReportRecord};
use crate::error::{Error, Result};

/// Checks whose discretization error is documented as second order; a
/// fitted slope below the threshold is flagged.
pub const SECOND_ORDER: &[&str] = &["convergence", "eq4", "prop1"];

/// Errors at or below this are roundoff.
pub const EXACT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub check: String,
    pub label: String,
    pub n_values: Vec<usize>,
    pub errors: Vec<f64>,
    pub order: Order,
    pub second_order: bool,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

/// Least-squares slope of `-log(err)` against `log(N)` over the errors above
/// the roundoff floor; `Exact` when fewer than two remain.
pub fn fit_order(ns: &[usize], errors: &[f64]) -> Order {
    let pts: Vec<(f64, f64)> =
        ns.iter().zip(errors).filter(|(_, e)| **e > EXACT_FLOOR).map(|(n, e)| ((*n as f64).ln(), e.ln())).collect();
    if pts.len() < 2 {
        return Order::Exact;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    Order::Slope(-sxy / sxx)
}

/// Group records by `(check, label)`, take the worst error per `N`, and fit
/// an order for every group spanning at least three resolutions.
pub fn emit_convergence(records: &[ReportRecord], min_order: f64) -> Result<ConvergenceTable> {
    let mut groups: BTreeMap<(String, String), BTreeMap<usize, f64>> = BTreeMap::new();
    let gated: Vec<&ReportRecord> = records.iter().filter(|r| matches!(r.gate, Gate::Absolute | Gate::Relative)).collect();
    for r in &gated {
        let e = groups.entry((r.check.clone(), r.label.clone())).or_default().entry(r.n).or_insert(0.0);
        let err = r.error();
        *e = if err.is_nan() { f64::NAN } else { e.max(err) };
    }
    let mut distinct: Vec<usize> = gated.iter().map(|r| r.n).collect();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::NotEnoughData(format!("convergence needs at least three values of N, got {distinct:?}")));
    }
    let rows: Vec<ConvergenceRow> = groups
        .into_iter()
        .filter(|(_, per_n)| per_n.len() >= 3)
        .map(|((check, label), per_n)| {
            let n_values: Vec<usize> = per_n.keys().copied().collect();
            let errors: Vec<f64> = per_n.values().copied().collect();
            let order = if errors.iter().any(|e| e.is_nan()) { Order::Slope(f64::NAN) } else { fit_order(&n_values, &errors) };
            let second_order = SECOND_ORDER.contains(&check.as_str());
            let flagged = second_order
                && match order {
                    Order::Exact => false,
                    Order::Slope(s) => !(s >= min_order),
                };
            ConvergenceRow { check, label, n_values, errors, order, second_order, flagged }
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::NotEnoughData("no check was evaluated at three or more values of N".into()));
    }
    Ok(ConvergenceTable { rows })
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,label,n_values,errors,order,second_order,flagged\n");
        for r in &self.rows {
            let ns: Vec<String> = r.n_values.iter().map(|n| n.to_string()).collect();
            let es: Vec<String> = r.errors.iter().map(|e| format!("{e:.6e}")).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.check,
                r.label,
                ns.join(";"),
                es.join(";"),
                r.order,
                r.second_order,
                r.flagged
            ));
        }
        out
    }

    /// One two-column `N error` file per group.
    pub fn dat_files(&self) -> Vec<Artifact> {
        self.rows
            .iter()
            .map(|r| {
                let mut contents = String::new();
                for (n, e) in r.n_values.iter().zip(&r.errors) {
                    contents.push_str(&format!("{n} {e:.15e}\n"));
                }
                Artifact { name: format!("convergence_{}_{}.dat", file_stem(&r.check), file_stem(&r.label)), contents }
            })
            .collect()
    }

    pub fn flagged(&self) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(|r| r.flagged)
    }
}
