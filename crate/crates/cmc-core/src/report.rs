//! Structured pass/fail results for verification runs.
//!
//! Every verification routine returns a list of [`CheckReport`]s, one per
//! verified identity (or per index family), carrying a stable check name,
//! the indices it covers, and — on failure — a short textual sample of the
//! offending residual for diagnostics.

use serde_json::{json, Value};

use crate::diffring::DiffPoly;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub check: String,
    pub indices: Vec<i64>,
    pub residual_zero: bool,
    pub residual_sample: Option<String>,
}

impl CheckReport {
    pub fn pass(check: impl Into<String>, indices: Vec<i64>) -> Self {
        CheckReport {
            check: check.into(),
            indices,
            residual_zero: true,
            residual_sample: None,
        }
    }

    pub fn fail(check: impl Into<String>, indices: Vec<i64>, sample: impl Into<String>) -> Self {
        CheckReport {
            check: check.into(),
            indices,
            residual_zero: false,
            residual_sample: Some(sample.into()),
        }
    }

    /// Report on a polynomial residual that should vanish.
    pub fn from_residual(check: impl Into<String>, indices: Vec<i64>, residual: &DiffPoly) -> Self {
        if residual.is_zero() {
            CheckReport::pass(check, indices)
        } else {
            CheckReport::fail(check, indices, truncate_poly(residual))
        }
    }

    pub fn to_json(&self) -> Value {
        let mut obj = json!({
            "check": self.check,
            "indices": self.indices,
            "residual_zero": self.residual_zero,
        });
        if let Some(s) = &self.residual_sample {
            obj["residual_sample"] = json!(s);
        }
        obj
    }
}

/// A short display form of a residual: its first term and term count.
pub fn truncate_poly(p: &DiffPoly) -> String {
    match p.terms().next() {
        None => "0".to_string(),
        Some((m, c)) => {
            let n = p.num_terms();
            if n == 1 {
                format!("({c})·{m}")
            } else {
                format!("({c})·{m} + {} more terms", n - 1)
            }
        }
    }
}

/// `true` when every report passed.
pub fn all_zero(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.residual_zero)
}

/// Report on a loop-matrix residual over an explicit degree band; errors if
/// any degree in the band is uncertified.
pub fn matrix_report<const N: usize>(
    check: &str,
    indices: Vec<i64>,
    residual: &crate::loopalg::LoopMat<DiffPoly, N>,
    lo: i64,
    hi: i64,
) -> crate::error::Result<CheckReport> {
    if residual.zero_on(lo, hi)? {
        Ok(CheckReport::pass(check, indices))
    } else {
        let (d, m) = residual
            .stored()
            .find(|(d, _)| **d >= lo && **d <= hi)
            .expect("nonzero coefficient must exist");
        let entry = m
            .e
            .iter()
            .flatten()
            .find(|p| !p.is_zero())
            .expect("nonzero entry must exist");
        Ok(CheckReport::fail(
            check,
            indices,
            format!("λ^{d}: {}", truncate_poly(entry)),
        ))
    }
}

/// Report on a loop-matrix residual over its own certified band.  A loop
/// with no certified band passes only if it stores nothing.
pub fn matrix_band_report<const N: usize>(
    check: &str,
    indices: Vec<i64>,
    residual: &crate::loopalg::LoopMat<DiffPoly, N>,
) -> crate::error::Result<CheckReport> {
    match residual.certified_band() {
        None => {
            if residual.is_stored_zero() {
                Ok(CheckReport::pass(check, indices))
            } else {
                Ok(CheckReport::fail(check, indices, "uncertified nonzero residual"))
            }
        }
        Some((lo, hi)) => matrix_report(check, indices, residual, lo, hi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    #[test]
    fn report_json_shape() {
        let r = CheckReport::pass("xi-a", vec![3]);
        let v = r.to_json();
        assert_eq!(v["check"], "xi-a");
        assert_eq!(v["residual_zero"], true);
        assert!(v.get("residual_sample").is_none());

        let res = DiffPoly::h(3).scale(&Scalar::i());
        let f = CheckReport::from_residual("xi-b", vec![1, 2], &res);
        assert!(!f.residual_zero);
        assert!(f.residual_sample.as_deref().unwrap().contains("h3"));
        assert!(!all_zero(&[r, f]));
    }
}
