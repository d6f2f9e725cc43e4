use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::config::SurfaceSpec;

/// Below this `|rhs|` relative gates fall back to the absolute error.
pub const REL_FLOOR: f64 = 1e-6;

/// How `lhs` is compared with `rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    /// `|lhs - rhs| <= tol`.
    Absolute,
    /// `|lhs - rhs| / |rhs| <= tol`, absolute when `|rhs| <= REL_FLOOR`.
    Relative,
    /// `lhs >= rhs`.
    AtLeast,
    /// Observed order `lhs >= rhs`, or an exact result.
    Order,
}

/// Observed convergence order: a least-squares slope or `"exact"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Slope(f64),
    Exact,
}

impl Serialize for Order {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Order::Slope(v) => s.serialize_f64(*v),
            Order::Exact => s.serialize_str("exact"),
        }
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Order::Slope(v)),
            Raw::Text(t) if t == "exact" => Ok(Order::Exact),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("unknown order {t:?}"))),
        }
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Order::Slope(v) => write!(f, "{v:.3}"),
            Order::Exact => f.write_str("exact"),
        }
    }
}

// Non-finite numbers are written as null by serde_json; read them back as NaN.
fn nullable<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub check: String,
    pub label: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    #[serde(deserialize_with = "nullable")]
    pub lhs: f64,
    #[serde(deserialize_with = "nullable")]
    pub rhs: f64,
    #[serde(deserialize_with = "nullable")]
    pub abs_err: f64,
    #[serde(deserialize_with = "nullable")]
    pub rel_err: f64,
    pub gate: Gate,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Order>,
    pub pass: bool,
}

impl ReportRecord {
    pub fn new(check: &str, label: impl Into<String>, n: usize, seed: u64, lhs: f64, rhs: f64, gate: Gate, tol: f64) -> Self {
        let abs_err = (lhs - rhs).abs();
        let rel_err = if rhs != 0.0 { abs_err / rhs.abs() } else { abs_err };
        let pass = match gate {
            Gate::Absolute => abs_err <= tol,
            Gate::Relative if rhs.abs() > REL_FLOOR => rel_err <= tol,
            Gate::Relative => abs_err <= tol,
            Gate::AtLeast | Gate::Order => lhs >= rhs,
        };
        Self { check: check.into(), label: label.into(), n, seed, lhs, rhs, abs_err, rel_err, gate, tol, order: None, pass }
    }

    /// Order record: passes when exact or when the slope reaches `min_order`.
    pub fn order(check: &str, label: impl Into<String>, n: usize, seed: u64, order: Order, min_order: f64) -> Self {
        let slope = match order {
            Order::Slope(v) => v,
            Order::Exact => f64::INFINITY,
        };
        let mut r = Self::new(check, label, n, seed, slope.min(f64::MAX), min_order, Gate::Order, 0.0);
        r.abs_err = 0.0;
        r.rel_err = 0.0;
        r.pass = order == Order::Exact || slope >= min_order;
        r.order = Some(order);
        r
    }

    /// Error used for convergence fits.
    pub fn error(&self) -> f64 {
        match self.gate {
            Gate::Relative if self.rhs.abs() > REL_FLOOR => self.rel_err,
            _ => self.abs_err,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub records: Vec<ReportRecord>,
}

impl CheckReport {
    pub fn from_records(id: &str, records: Vec<ReportRecord>, notes: Vec<String>) -> Self {
        let pass = !records.is_empty() && records.iter().all(|r| r.pass);
        Self { id: id.into(), pass, error: None, notes, records }
    }

    pub fn failed(id: &str, error: String) -> Self {
        Self { id: id.into(), pass: false, error: Some(error), notes: Vec::new(), records: Vec::new() }
    }

    /// First failing records, for diagnostics.
    pub fn failures(&self) -> impl Iterator<Item = &ReportRecord> {
        self.records.iter().filter(|r| !r.pass)
    }
}

/// Deterministic scenario report; wall times live in a separate file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub surface: SurfaceSpec,
    #[serde(rename = "N")]
    pub n: usize,
    pub tau: f64,
    pub tol_scale: f64,
    pub checks: Vec<CheckReport>,
    pub pass: bool,
}

impl ScenarioReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::Error::Config(format!("unreadable report: {e}")))
    }

    pub fn check(&self, id: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gates() {
        assert!(ReportRecord::new("c", "l", 16, 0, 1.0 + 1e-9, 1.0, Gate::Relative, 1e-8).pass);
        assert!(!ReportRecord::new("c", "l", 16, 0, 1.1, 1.0, Gate::Relative, 1e-8).pass);
        assert!(ReportRecord::new("c", "l", 16, 0, 1e-9, 0.0, Gate::Relative, 1e-8).pass);
        assert!(ReportRecord::new("c", "l", 16, 0, 2e-3, 1e-3, Gate::AtLeast, 0.0).pass);
        assert!(!ReportRecord::new("c", "l", 16, 0, 0.0, 1e-3, Gate::AtLeast, 0.0).pass);
        assert!(ReportRecord::order("c", "l", 0, 0, Order::Exact, 1.8).pass);
        assert!(!ReportRecord::order("c", "l", 0, 0, Order::Slope(1.2), 1.8).pass);
    }

    #[test]
    fn order_round_trip() {
        let r = ReportRecord::order("c", "l", 0, 0, Order::Exact, 1.8);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"exact\""));
        assert_eq!(serde_json::from_str::<ReportRecord>(&text).unwrap(), r);
        let r = ReportRecord::order("c", "l", 0, 0, Order::Slope(2.01), 1.8);
        assert_eq!(serde_json::from_str::<ReportRecord>(&serde_json::to_string(&r).unwrap()).unwrap(), r);
    }

    #[test]
    fn non_finite_values_survive() {
        let r = ReportRecord::new("c", "l", 16, 0, f64::NAN, 1.0, Gate::Absolute, 1e-8);
        assert!(!r.pass);
        let back: ReportRecord = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert!(back.lhs.is_nan() && !back.pass);
    }
}
