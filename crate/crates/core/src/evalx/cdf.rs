use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_sig6;

/// Empirical CDF sampled at the sorted unique values of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfCurve {
    pub thresholds: Vec<f64>,
    pub fractions: Vec<f64>,
}

/// `F(v) = #{e ≤ v} / n` at every distinct value (right-continuous steps).
pub fn cdf(series: &[f64]) -> Result<CdfCurve> {
    if series.is_empty() {
        return Err(Error::Empty("cdf of an empty series".into()));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(
            "cdf of a series with non-finite values".into(),
        ));
    }
    let mut s = series.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut curve = CdfCurve {
        thresholds: Vec::new(),
        fractions: Vec::new(),
    };
    for (i, &v) in s.iter().enumerate() {
        if s.get(i + 1) != Some(&v) {
            curve.thresholds.push(v);
            curve.fractions.push((i + 1) as f64 / n);
        }
    }
    Ok(curve)
}

impl CdfCurve {
    /// Fraction of the series at or below `threshold`.
    pub fn at(&self, threshold: f64) -> f64 {
        let k = self.thresholds.partition_point(|&t| t <= threshold);
        if k == 0 {
            0.0
        } else {
            self.fractions[k - 1]
        }
    }

    /// `threshold,fraction` rows, thresholds scaled by `unit`.
    pub fn to_csv(&self, unit: f64) -> String {
        let mut s = String::from("threshold,fraction\n");
        for (t, f) in self.thresholds.iter().zip(&self.fractions) {
            s.push_str(&format!("{},{}\n", fmt_sig6(t * unit), fmt_sig6(*f)));
        }
        s
    }
}
