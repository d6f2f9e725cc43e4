use serde::{Deserialize, Serialize};

/// One identity check: `lhs` against `rhs` with absolute and relative error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub check: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub seeds: Vec<u64>,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub pass: bool,
}

/// Denominator below which the absolute error decides.
pub const REL_FLOOR: f64 = 1e-6;

impl VerificationRecord {
    /// Gate on the relative error when `|rhs| > 1e-6`, else on the absolute error.
    pub fn new(check: impl Into<String>, n: usize, seeds: Vec<u64>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let abs_err = (lhs - rhs).abs();
        let rel_err = if rhs.abs() > 0.0 { abs_err / rhs.abs() } else { abs_err };
        let pass = if rhs.abs() > REL_FLOOR { rel_err <= tol } else { abs_err <= tol };
        Self { check: check.into(), n, seeds, lhs, rhs, abs_err, rel_err, pass }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gating() {
        assert!(VerificationRecord::new("a", 16, vec![], 1.0 + 1e-9, 1.0, 1e-8).pass);
        assert!(!VerificationRecord::new("a", 16, vec![], 1.1, 1.0, 1e-8).pass);
        assert!(VerificationRecord::new("a", 16, vec![], 1e-9, 0.0, 1e-8).pass);
    }
}
