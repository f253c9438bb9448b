use rand::seq::index::sample;
use serde::Serialize;

use super::params::ParamStore;
use crate::error::Result;
use crate::rng::Rng;

/// Central-difference step on 64-bit reals.
pub const GRAD_CHECK_STEP: f64 = 1e-5;

/// Denominator floor of the relative error, so that gradients that are zero
/// up to round-off are not reported as failures.
pub const GRAD_CHECK_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckEntry {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst: Option<GradCheckEntry>,
    pub failures: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR)
}

/// Compares the analytic gradients written by `eval` against central finite
/// differences.
///
/// `eval(store, backward)` must return the scalar loss at the current
/// parameter values and, when `backward` is true, accumulate its gradient
/// into the (already zeroed) gradient slots. Up to `per_param` coordinates of
/// every parameter are probed (all when `None`); inputs can be checked by
/// registering them as parameters.
pub fn grad_check<F>(
    store: &mut ParamStore,
    mut eval: F,
    tolerance: f64,
    per_param: Option<usize>,
    rng: &mut Rng,
) -> Result<GradCheckReport>
where
    F: FnMut(&mut ParamStore, bool) -> Result<f64>,
{
    store.zero_grad();
    eval(store, true)?;
    let ids: Vec<_> = store.ids().collect();
    let mut report = GradCheckReport {
        tolerance,
        checked: 0,
        max_rel_error: 0.0,
        worst: None,
        failures: Vec::new(),
    };
    for id in ids {
        let n = store.value(id).len();
        let picks: Vec<usize> = match per_param {
            Some(k) if k < n => {
                let mut v = sample(rng, n, k).into_vec();
                v.sort_unstable();
                v
            }
            _ => (0..n).collect(),
        };
        for i in picks {
            let orig = store.value(id).data()[i];
            store.value_mut(id).data_mut()[i] = orig + GRAD_CHECK_STEP;
            let plus = eval(store, false)?;
            store.value_mut(id).data_mut()[i] = orig - GRAD_CHECK_STEP;
            let minus = eval(store, false)?;
            store.value_mut(id).data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * GRAD_CHECK_STEP);
            let analytic = store.grad(id).data()[i];
            let rel = relative_error(analytic, numeric);
            let entry = GradCheckEntry {
                param: store.name(id).to_string(),
                index: i,
                analytic,
                numeric,
                rel_error: rel,
            };
            report.checked += 1;
            if !(rel < tolerance) {
                report.failures.push(entry.clone());
            }
            if !(rel <= report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst = Some(entry);
            }
        }
    }
    Ok(report)
}
