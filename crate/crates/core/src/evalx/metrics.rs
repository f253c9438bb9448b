use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Position2D, Trajectory};

/// Per-sample absolute errors, metres.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorSeries {
    /// Euclidean error `√(Δx² + Δy²)`.
    pub r: Vec<f64>,
    /// `|Δx|`
    pub x: Vec<f64>,
    /// `|Δy|`
    pub y: Vec<f64>,
}

impl ErrorSeries {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn extend(&mut self, other: &ErrorSeries) {
        self.r.extend_from_slice(&other.r);
        self.x.extend_from_slice(&other.x);
        self.y.extend_from_slice(&other.y);
    }

    /// `(axis name, series)` for X, Y and R.
    pub fn axes(&self) -> [(&'static str, &[f64]); 3] {
        [("x", &self.x), ("y", &self.y), ("r", &self.r)]
    }

    pub fn median_r(&self) -> Result<f64> {
        median(&self.r)
    }
}

pub fn median(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Empty("median of an empty series".into()));
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Ok(if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    })
}

/// Point-wise errors of `pred` against `truth`. Both must have the same
/// length with timestamps agreeing to within half of the truth's shortest
/// sampling interval.
pub fn euclid_errors(pred: &Trajectory, truth: &Trajectory) -> Result<ErrorSeries> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "prediction has {} samples, truth has {}",
            pred.len(),
            truth.len()
        )));
    }
    let ts: Vec<f64> = truth.times().collect();
    let tick = ts
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let tol = if tick.is_finite() { 0.5 * tick } else { 1e-9 };
    let mut out = ErrorSeries::default();
    for (p, t) in pred.samples().iter().zip(truth.samples()) {
        if (p.t - t.t).abs() > tol {
            return Err(Error::Domain(format!(
                "timestamps differ: prediction {} vs truth {}",
                p.t, t.t
            )));
        }
        let (dx, dy) = (p.p.x - t.p.x, p.p.y - t.p.y);
        out.r.push(dx.hypot(dy));
        out.x.push(dx.abs());
        out.y.push(dy.abs());
    }
    Ok(out)
}

fn non_empty(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        Err(Error::Empty("metric of an empty series".into()))
    } else {
        Ok(())
    }
}

/// Mean absolute value of an error series.
pub fn mae(errors: &[f64]) -> Result<f64> {
    non_empty(errors)?;
    Ok(errors.iter().map(|e| e.abs()).sum::<f64>() / errors.len() as f64)
}

/// Root mean square of an error series.
pub fn rmse(errors: &[f64]) -> Result<f64> {
    non_empty(errors)?;
    Ok((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}

/// Coefficient of determination pooled over both coordinates:
/// `1 − Σ‖p − t‖² / Σ‖t − t̄‖²` with `t̄` the per-axis truth mean.
pub fn r2(pred: &[Position2D], truth: &[Position2D]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} truths",
            pred.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Empty("r2 of an empty series".into()));
    }
    let n = truth.len() as f64;
    let mx = truth.iter().map(|p| p.x).sum::<f64>() / n;
    let my = truth.iter().map(|p| p.y).sum::<f64>() / n;
    let ss_tot: f64 = truth
        .iter()
        .map(|p| (p.x - mx).powi(2) + (p.y - my).powi(2))
        .sum();
    // a constant series can leave a rounding-sized ss_tot behind the mean
    let constant = truth.iter().all(|p| p.x == truth[0].x && p.y == truth[0].y);
    if constant || !(ss_tot > 0.0) {
        return Err(Error::Undefined(
            "r2 of a constant truth series has no variance".into(),
        ));
    }
    let ss_res: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p.x - t.x).powi(2) + (p.y - t.y).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Table-style summary. MAE and RMSE pool the x and y coordinate errors and
/// are reported in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub mae: f64,
    pub rmse: f64,
    pub r2: f64,
    pub n: usize,
}

impl MetricsRecord {
    pub fn from_positions(pred: &[Position2D], truth: &[Position2D]) -> Result<Self> {
        let r2 = r2(pred, truth)?;
        let coord: Vec<f64> = pred
            .iter()
            .zip(truth)
            .flat_map(|(p, t)| [1000.0 * (p.x - t.x), 1000.0 * (p.y - t.y)])
            .collect();
        Ok(MetricsRecord {
            mae: mae(&coord)?,
            rmse: rmse(&coord)?,
            r2,
            n: pred.len(),
        })
    }
}
