//! Direct position regressors that skip signal recovery. They see the same
//! hopped window features as the recovery network and predict the tag
//! position at every tick of the window.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Position2D, Trajectory};
use crate::neural::modules::{DepthwiseConv, Linear};
use crate::neural::ops::mse_loss;
use crate::neural::{adam_step, AdamConfig, AdamState, ParamStore, Tensor};
use crate::recovery::features::window_inputs;
use crate::rfsim::Window;
use crate::rng::{seeded_rng, seeded_rng_indexed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselineSpec {
    /// Flattened window → one hidden ReLU layer → all tick positions.
    Mlp {
        hidden: usize,
        epochs: usize,
        learning_rate: f64,
        batch_size: usize,
    },
    /// Per-tick embedding → depthwise temporal convolutions → position head.
    Cnn {
        channels: usize,
        kernel: usize,
        layers: usize,
        epochs: usize,
        learning_rate: f64,
        batch_size: usize,
    },
    /// Linear ε-insensitive support-vector regression on the flattened
    /// window, trained by subgradient descent.
    SvrLinear {
        epsilon: f64,
        c: f64,
        epochs: usize,
        learning_rate: f64,
    },
}

impl BaselineSpec {
    pub const NAMES: [&'static str; 3] = ["svr_linear", "mlp", "cnn"];

    pub fn mlp() -> Self {
        BaselineSpec::Mlp {
            hidden: 64,
            epochs: 30,
            learning_rate: 1e-3,
            batch_size: 32,
        }
    }

    pub fn cnn() -> Self {
        BaselineSpec::Cnn {
            channels: 32,
            kernel: 7,
            layers: 2,
            epochs: 30,
            learning_rate: 1e-3,
            batch_size: 32,
        }
    }

    pub fn svr_linear() -> Self {
        BaselineSpec::SvrLinear {
            epsilon: 0.001,
            c: 1.0,
            epochs: 30,
            learning_rate: 0.01,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "mlp" => Ok(Self::mlp()),
            "cnn" => Ok(Self::cnn()),
            "svr_linear" | "svr" | "svm" => Ok(Self::svr_linear()),
            _ => Err(Error::Unknown {
                what: "baseline kind",
                name: name.into(),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaselineSpec::Mlp { .. } => "mlp",
            BaselineSpec::Cnn { .. } => "cnn",
            BaselineSpec::SvrLinear { .. } => "svr_linear",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            BaselineSpec::Mlp {
                hidden,
                epochs,
                learning_rate,
                batch_size,
            } => hidden > 0 && epochs > 0 && learning_rate > 0.0 && batch_size > 0,
            BaselineSpec::Cnn {
                channels,
                kernel,
                layers,
                epochs,
                learning_rate,
                batch_size,
            } => {
                channels > 0
                    && kernel % 2 == 1
                    && layers > 0
                    && epochs > 0
                    && learning_rate > 0.0
                    && batch_size > 0
            }
            BaselineSpec::SvrLinear {
                epsilon,
                c,
                epochs,
                learning_rate,
            } => epsilon >= 0.0 && c > 0.0 && epochs > 0 && learning_rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid hyperparameters for baseline {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone)]
enum Net {
    Mlp {
        l1: Linear,
        l2: Linear,
    },
    Cnn {
        embed: Linear,
        convs: Vec<(DepthwiseConv, Linear)>,
        head: Linear,
    },
    Svr {
        w: Tensor,
        b: Tensor,
    },
}

/// A trained baseline.
#[derive(Debug, Clone)]
pub struct BaselineModel {
    pub spec: BaselineSpec,
    n_antennas: usize,
    n_channels: usize,
    window_len: usize,
    /// Targets are `(p − center) / scale`.
    center: Position2D,
    scale: f64,
    params: ParamStore,
    net: Net,
}

struct Encoded {
    x: Vec<Tensor>,
    y: Vec<Tensor>,
}

fn encode(
    windows: &[Window],
    n_antennas: usize,
    n_channels: usize,
    center: Position2D,
    scale: f64,
) -> Result<Encoded> {
    let mut enc = Encoded {
        x: Vec::new(),
        y: Vec::new(),
    };
    for w in windows {
        enc.x.push(window_inputs(w, n_antennas, n_channels)?);
        let mut y = Tensor::zeros(&[w.truth.len(), 2]);
        for (i, s) in w.truth.iter().enumerate() {
            y.row_mut(i)
                .copy_from_slice(&[(s.p.x - center.x) / scale, (s.p.y - center.y) / scale]);
        }
        enc.y.push(y);
    }
    Ok(enc)
}

fn stack(parts: &[Tensor], idx: &[usize], rows_per: usize) -> Tensor {
    let cols = parts[idx[0]].len() / rows_per;
    let data: Vec<f64> = idx
        .iter()
        .flat_map(|&i| parts[i].data().iter().copied())
        .collect();
    Tensor::from_vec(&[idx.len() * rows_per, cols], data).expect("consistent shapes")
}

impl BaselineModel {
    fn forward(&self, x: &Tensor, seq_len: usize) -> Result<(Tensor, Vec<Tensor>)> {
        let ps = &self.params;
        match &self.net {
            Net::Mlp { l1, l2 } => {
                let flat = x
                    .clone()
                    .reshape(&[x.rows() / seq_len, seq_len * x.cols()])?;
                let h = l1.forward(ps, &flat)?.map(|v| v.max(0.0));
                let y = l2.forward(ps, &h)?;
                let y = y.reshape(&[x.rows(), 2])?;
                Ok((y, vec![flat, h]))
            }
            Net::Cnn { embed, convs, head } => {
                let mut acts = vec![x.clone()];
                let mut h = embed.forward(ps, x)?;
                for (conv, mix) in convs {
                    acts.push(h.clone());
                    let (c, _) = conv.forward(ps, &h, seq_len)?;
                    acts.push(c.clone());
                    h = mix.forward(ps, &c)?;
                }
                acts.push(h.clone());
                Ok((head.forward(ps, &h)?, acts))
            }
            Net::Svr { w, b } => {
                let flat = x
                    .clone()
                    .reshape(&[x.rows() / seq_len, seq_len * x.cols()])?;
                let y = crate::neural::linear_forward(&flat, w, b)?;
                Ok((y.reshape(&[x.rows(), 2])?, vec![flat]))
            }
        }
    }

    fn backward(&mut self, acts: &[Tensor], dy: &Tensor, seq_len: usize) -> Result<()> {
        let ps = &mut self.params;
        match &self.net {
            Net::Mlp { l1, l2 } => {
                let dy = dy.clone().reshape(&[acts[0].rows(), 2 * seq_len])?;
                let mut dh = l2.backward(ps, &acts[1], &dy);
                for (g, h) in dh.data_mut().iter_mut().zip(acts[1].data()) {
                    if *h <= 0.0 {
                        *g = 0.0;
                    }
                }
                l1.backward(ps, &acts[0], &dh);
            }
            Net::Cnn { embed, convs, head } => {
                let mut dh = head.backward(ps, &acts[acts.len() - 1], dy);
                for (k, (conv, mix)) in convs.iter().enumerate().rev() {
                    let dc = mix.backward(ps, &acts[2 + 2 * k], &dh);
                    let (_, cache) = conv.forward(ps, &acts[1 + 2 * k], seq_len)?;
                    dh = conv.backward(ps, &cache, &dc);
                }
                embed.backward(ps, &acts[0], &dh);
            }
            Net::Svr { .. } => unreachable!("trained by subgradient descent"),
        }
        Ok(())
    }

    /// Predicted path for one window (timestamps from the window's ticks).
    pub fn predict(&self, w: &Window) -> Result<Trajectory> {
        if w.truth.len() != self.window_len {
            return Err(Error::Shape(format!(
                "window has {} ticks, baseline was trained on {}",
                w.truth.len(),
                self.window_len
            )));
        }
        let x = window_inputs(w, self.n_antennas, self.n_channels)?;
        let (y, _) = self.forward(&x, self.window_len)?;
        let points: Vec<Position2D> = (0..y.rows())
            .map(|r| {
                Position2D::new(
                    self.center.x + self.scale * y.row(r)[0],
                    self.center.y + self.scale * y.row(r)[1],
                )
            })
            .collect();
        let times: Vec<f64> = w.truth.iter().map(|s| s.t).collect();
        Trajectory::from_points(&times, &points)
    }

    /// Weight vector of the linear SVR (empty for other kinds).
    pub fn svr_weights(&self) -> &[f64] {
        match &self.net {
            Net::Svr { w, .. } => w.data(),
            _ => &[],
        }
    }
}

/// Trains a baseline on dataset windows (all of equal length).
pub fn baseline_train(
    spec: &BaselineSpec,
    windows: &[Window],
    n_antennas: usize,
    n_channels: usize,
    workspace_center: Position2D,
    seed: u64,
) -> Result<BaselineModel> {
    spec.validate()?;
    let first = windows
        .first()
        .ok_or_else(|| Error::Empty("no windows for the baseline".into()))?;
    let window_len = first.truth.len();
    if windows.iter().any(|w| w.truth.len() != window_len) {
        return Err(Error::Shape("baseline windows differ in length".into()));
    }
    let scale = 0.5;
    let enc = encode(windows, n_antennas, n_channels, workspace_center, scale)?;
    let f = enc.x[0].cols();
    let mut rng = seeded_rng(seed, spec.name());
    let mut ps = ParamStore::new();
    let net = match *spec {
        BaselineSpec::Mlp { hidden, .. } => Net::Mlp {
            l1: Linear::new(&mut ps, "mlp.l1", window_len * f, hidden, &mut rng)?,
            l2: Linear::new(&mut ps, "mlp.l2", hidden, 2 * window_len, &mut rng)?,
        },
        BaselineSpec::Cnn {
            channels,
            kernel,
            layers,
            ..
        } => Net::Cnn {
            embed: Linear::new(&mut ps, "cnn.embed", f, channels, &mut rng)?,
            convs: (0..layers)
                .map(|i| {
                    Ok((
                        DepthwiseConv::new(
                            &mut ps,
                            &format!("cnn.{i}.dw"),
                            channels,
                            kernel,
                            &mut rng,
                        )?,
                        Linear::new(
                            &mut ps,
                            &format!("cnn.{i}.mix"),
                            channels,
                            channels,
                            &mut rng,
                        )?,
                    ))
                })
                .collect::<Result<_>>()?,
            head: Linear::new(&mut ps, "cnn.head", channels, 2, &mut rng)?,
        },
        BaselineSpec::SvrLinear { .. } => Net::Svr {
            w: Tensor::zeros(&[window_len * f, 2 * window_len]),
            b: Tensor::zeros(&[2 * window_len]),
        },
    };
    let mut model = BaselineModel {
        spec: *spec,
        n_antennas,
        n_channels,
        window_len,
        center: workspace_center,
        scale,
        params: ps,
        net,
    };
    match *spec {
        BaselineSpec::Mlp {
            epochs,
            learning_rate,
            batch_size,
            ..
        }
        | BaselineSpec::Cnn {
            epochs,
            learning_rate,
            batch_size,
            ..
        } => fit_adam(&mut model, &enc, epochs, learning_rate, batch_size, seed)?,
        BaselineSpec::SvrLinear {
            epsilon,
            c,
            epochs,
            learning_rate,
        } => fit_svr(&mut model, &enc, epsilon, c, epochs, learning_rate, seed)?,
    }
    Ok(model)
}

fn fit_adam(
    model: &mut BaselineModel,
    enc: &Encoded,
    epochs: usize,
    lr: f64,
    batch: usize,
    seed: u64,
) -> Result<()> {
    let t = model.window_len;
    let mut adam = AdamState::new(
        &model.params,
        AdamConfig {
            lr,
            ..Default::default()
        },
    );
    let mut order: Vec<usize> = (0..enc.x.len()).collect();
    for epoch in 1..=epochs {
        order.shuffle(&mut seeded_rng_indexed(
            seed,
            "baseline-order",
            epoch as u64,
        ));
        for (b, chunk) in order.chunks(batch).enumerate() {
            let x = stack(&enc.x, chunk, t);
            let y = stack(&enc.y, chunk, t);
            let (pred, acts) = model.forward(&x, t)?;
            let (l, g) = mse_loss(&pred, &y)?;
            if !l.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            model.params.zero_grad();
            model.backward(&acts, &g, t)?;
            adam_step(&mut model.params, &mut adam)?;
        }
    }
    Ok(())
}

/// Minimizes `½‖W‖² + C Σ max(0, |y − xW − b| − ε)` (targets in metres)
/// with per-sample-averaged subgradient steps of size `lr/√t`.
fn fit_svr(
    model: &mut BaselineModel,
    enc: &Encoded,
    epsilon: f64,
    c: f64,
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<()> {
    let t = model.window_len;
    let n = enc.x.len();
    let xs: Vec<Tensor> = enc
        .x
        .iter()
        .map(|x| x.clone().reshape(&[1, x.len()]))
        .collect::<Result<_>>()?;
    let ys: Vec<Vec<f64>> = enc
        .y
        .iter()
        .map(|y| y.data().iter().map(|v| v * model.scale).collect())
        .collect();
    let outputs = 2 * t;
    let Net::Svr { w, b } = &mut model.net else {
        unreachable!("svr spec builds an svr net")
    };
    // start the intercept at the target mean
    for (o, bo) in b.data_mut().iter_mut().enumerate() {
        *bo = ys.iter().map(|y| y[o]).sum::<f64>() / n as f64;
    }
    let d = xs[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0u64;
    for epoch in 1..=epochs {
        order.shuffle(&mut seeded_rng_indexed(seed, "svr-order", epoch as u64));
        for &i in &order {
            step += 1;
            let eta = lr / (step as f64).sqrt();
            let x = xs[i].data();
            let mut g_out = vec![0.0; outputs];
            for (o, g) in g_out.iter_mut().enumerate() {
                let mut pred = b.data()[o];
                for k in 0..d {
                    pred += x[k] * w.data()[k * outputs + o];
                }
                let r = ys[i][o] - pred;
                if r.abs() > epsilon {
                    *g = -c * r.signum();
                }
            }
            let wd = w.data_mut();
            for k in 0..d {
                for o in 0..outputs {
                    let grad = wd[k * outputs + o] / n as f64 + g_out[o] * x[k];
                    wd[k * outputs + o] -= eta * grad;
                }
            }
            for (bo, g) in b.data_mut().iter_mut().zip(&g_out) {
                *bo -= eta * g;
            }
        }
    }
    // predictions are rescaled by `scale` in `predict`
    let inv = 1.0 / model.scale;
    w.data_mut().iter_mut().for_each(|v| *v *= inv);
    b.data_mut().iter_mut().for_each(|v| *v *= inv);
    Ok(())
}

/// Predicted and true paths for every window of `windows`.
pub fn baseline_predict(
    model: &BaselineModel,
    windows: &[Window],
) -> Result<Vec<(Trajectory, Trajectory)>> {
    windows
        .iter()
        .map(|w| Ok((model.predict(w)?, Trajectory::new(w.truth.clone())?)))
        .collect()
}
