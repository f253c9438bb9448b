//! Finite-difference checks of every layer kind and of an assembled model,
//! packaged for the command line and the acceptance run.

use rand::Rng as _;
use serde::Serialize;

use super::config::ConformerConfig;
use super::model::{grad_check_model, RecoveryModel};
use crate::config::SystemConfig;
use crate::error::Result;
use crate::neural::modules::{DepthwiseConv, FeedForward, LayerNorm, Linear, SelfAttention};
use crate::neural::{grad_check, GradCheckReport, ParamStore, Tensor};
use crate::rng::{seeded_rng, Rng};

/// Tolerance for purely affine layers.
pub const LINEAR_TOLERANCE: f64 = 1e-6;
/// Tolerance for everything else.
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteEntry {
    pub name: String,
    pub report: GradCheckReport,
}

impl SuiteEntry {
    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

fn rand_t(shape: &[usize], rng: &mut Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("shape matches length")
}

fn probe(y: &Tensor, r: &Tensor) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

/// Checks one layer under the probe loss `Σ y ⊙ R`, with its input
/// registered as a parameter so the input gradient is checked as well.
fn layer_check<F>(
    name: &str,
    in_shape: &[usize],
    out_cols: usize,
    tol: f64,
    seed: u64,
    build: F,
) -> Result<SuiteEntry>
where
    F: FnOnce(
        &mut ParamStore,
        &mut Rng,
    ) -> Result<
        Box<dyn Fn(&mut ParamStore, &Tensor, &Tensor, bool) -> Result<(Tensor, Tensor)>>,
    >,
{
    let mut rng = seeded_rng(seed, name);
    let mut ps = ParamStore::new();
    let run = build(&mut ps, &mut rng)?;
    // move biases and gains off their trivial initial values
    for id in ps.ids().collect::<Vec<_>>() {
        if ps.value(id).data().iter().all(|v| *v == 0.0 || *v == 1.0) {
            *ps.value_mut(id) = rand_t(ps.value(id).shape(), &mut rng);
        }
    }
    let x = ps.add("input", rand_t(in_shape, &mut rng))?;
    let r = rand_t(&[in_shape[0], out_cols], &mut rng);
    let report = grad_check(
        &mut ps,
        |ps, backward| {
            let xv = ps.value(x).clone();
            let (y, dx) = run(ps, &xv, &r, backward)?;
            if backward {
                ps.accumulate(x, &dx);
            }
            Ok(probe(&y, &r))
        },
        tol,
        None,
        &mut rng,
    )?;
    Ok(SuiteEntry {
        name: name.into(),
        report,
    })
}

/// Runs the layer checks and a whole-model check of `config`.
///
/// `per_param` limits how many coordinates of each model tensor are probed
/// (`None` probes all of them).
pub fn gradient_suite(
    config: &ConformerConfig,
    cfg: &SystemConfig,
    seed: u64,
    per_param: Option<usize>,
) -> Result<Vec<SuiteEntry>> {
    let (rows, d, seq) = (6, 8, 3);
    let mut out = vec![
        layer_check(
            "linear",
            &[rows, 5],
            3,
            LINEAR_TOLERANCE,
            seed,
            |ps, rng| {
                let l = Linear::new(ps, "linear", 5, 3, rng)?;
                Ok(Box::new(move |ps, x, r, bw| {
                    let y = l.forward(ps, x)?;
                    let dx = if bw {
                        l.backward(ps, x, r)
                    } else {
                        Tensor::zeros(x.shape())
                    };
                    Ok((y, dx))
                }))
            },
        )?,
        layer_check(
            "layer_norm",
            &[rows, d],
            d,
            DEFAULT_TOLERANCE,
            seed,
            |ps, _| {
                let l = LayerNorm::new(ps, "layer_norm", d)?;
                Ok(Box::new(move |ps, x, r, bw| {
                    let (y, cache) = l.forward(ps, x)?;
                    let dx = if bw {
                        l.backward(ps, &cache, r)
                    } else {
                        Tensor::zeros(x.shape())
                    };
                    Ok((y, dx))
                }))
            },
        )?,
        layer_check(
            "feed_forward",
            &[rows, d],
            d,
            DEFAULT_TOLERANCE,
            seed,
            |ps, rng| {
                let l = FeedForward::new(ps, "feed_forward", d, 2 * d, rng)?;
                Ok(Box::new(move |ps, x, r, bw| {
                    let (y, cache) = l.forward(ps, x)?;
                    let dx = if bw {
                        l.backward(ps, &cache, r)
                    } else {
                        Tensor::zeros(x.shape())
                    };
                    Ok((y, dx))
                }))
            },
        )?,
        layer_check(
            "depthwise_conv",
            &[rows, d],
            d,
            DEFAULT_TOLERANCE,
            seed,
            |ps, rng| {
                let l = DepthwiseConv::new(ps, "depthwise_conv", d, 3, rng)?;
                Ok(Box::new(move |ps, x, r, bw| {
                    let (y, cache) = l.forward(ps, x, seq)?;
                    let dx = if bw {
                        l.backward(ps, &cache, r)
                    } else {
                        Tensor::zeros(x.shape())
                    };
                    Ok((y, dx))
                }))
            },
        )?,
        layer_check(
            "self_attention",
            &[rows, d],
            d,
            DEFAULT_TOLERANCE,
            seed,
            |ps, rng| {
                let l = SelfAttention::new(ps, "self_attention", d, 2, rng)?;
                Ok(Box::new(move |ps, x, r, bw| {
                    let (y, cache) = l.forward(ps, x, seq)?;
                    let dx = if bw {
                        l.backward(ps, &cache, r)
                    } else {
                        Tensor::zeros(x.shape())
                    };
                    Ok((y, dx))
                }))
            },
        )?,
    ];

    let mut rng = seeded_rng(seed, "suite-model");
    let mut model = RecoveryModel::new(config, cfg.n_antennas(), cfg.channel_plan.count, &mut rng)?;
    let (t, n) = (8, cfg.n_antennas());
    let x = rand_t(&[2 * t, model.input_width()], &mut rng);
    let (yp, yr) = (
        rand_t(&[2 * t, 2 * n], &mut rng),
        rand_t(&[2 * t, n], &mut rng),
    );
    let report = grad_check_model(
        &mut model,
        &x,
        &yp,
        &yr,
        t,
        0.1,
        DEFAULT_TOLERANCE,
        per_param,
        &mut rng,
    )?;
    out.push(SuiteEntry {
        name: "model".into(),
        report,
    });
    Ok(out)
}
