use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ConformerConfig;
use super::features::{denormalize_rssi, input_width};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geom::wrap_phase;
use crate::neural::checkpoint::{read_checkpoint, restore, write_checkpoint};
use crate::neural::layers::{ConvCache, FfnCache, LayerNormCache, MhsaCache};
use crate::neural::modules::{DepthwiseConv, FeedForward, LayerNorm, Linear, SelfAttention};
use crate::neural::ops::{dropout, dropout_backward, mse_loss, DropoutMask, Mode};
use crate::neural::{sinusoidal_encoding, ParamStore, Tensor};
use crate::rng::Rng;

/// Pre-norm convolution module: LN → expand → depthwise conv + ReLU → project.
#[derive(Debug, Clone)]
struct ConvModule {
    ln: LayerNorm,
    expand: Linear,
    dw: DepthwiseConv,
    project: Linear,
}

#[derive(Debug, Clone)]
enum Sublayer {
    Ffn(LayerNorm, FeedForward),
    Attention(LayerNorm, SelfAttention),
    Conv(ConvModule),
}

enum SubCache {
    Ffn(LayerNormCache, FfnCache),
    Attention(LayerNormCache, MhsaCache),
    Conv {
        ln: LayerNormCache,
        normed: Tensor,
        expanded: ConvCache,
        conv_out: Tensor,
    },
}

impl Sublayer {
    fn forward(&self, ps: &ParamStore, x: &Tensor, seq_len: usize) -> Result<(Tensor, SubCache)> {
        match self {
            Sublayer::Ffn(ln, ffn) => {
                let (h, lc) = ln.forward(ps, x)?;
                let (y, fc) = ffn.forward(ps, &h)?;
                Ok((y, SubCache::Ffn(lc, fc)))
            }
            Sublayer::Attention(ln, att) => {
                let (h, lc) = ln.forward(ps, x)?;
                let (y, ac) = att.forward(ps, &h, seq_len)?;
                Ok((y, SubCache::Attention(lc, ac)))
            }
            Sublayer::Conv(m) => {
                let (normed, ln) = m.ln.forward(ps, x)?;
                let e = m.expand.forward(ps, &normed)?;
                let (conv_out, expanded) = m.dw.forward(ps, &e, seq_len)?;
                let y = m.project.forward(ps, &conv_out)?;
                Ok((
                    y,
                    SubCache::Conv {
                        ln,
                        normed,
                        expanded,
                        conv_out,
                    },
                ))
            }
        }
    }

    fn backward(&self, ps: &mut ParamStore, cache: &SubCache, dy: &Tensor) -> Tensor {
        match (self, cache) {
            (Sublayer::Ffn(ln, ffn), SubCache::Ffn(lc, fc)) => {
                let dh = ffn.backward(ps, fc, dy);
                ln.backward(ps, lc, &dh)
            }
            (Sublayer::Attention(ln, att), SubCache::Attention(lc, ac)) => {
                let dh = att.backward(ps, ac, dy);
                ln.backward(ps, lc, &dh)
            }
            (
                Sublayer::Conv(m),
                SubCache::Conv {
                    ln,
                    normed,
                    expanded,
                    conv_out,
                },
            ) => {
                let dc = m.project.backward(ps, conv_out, dy);
                let de = m.dw.backward(ps, expanded, &dc);
                let dn = m.expand.backward(ps, normed, &de);
                m.ln.backward(ps, ln, &dn)
            }
            _ => unreachable!("cache built by a different sublayer"),
        }
    }
}

/// One stage of the trunk: `x + scale·dropout(sub(x))`, or a plain norm.
#[derive(Debug, Clone)]
enum Step {
    Residual { scale: f64, sub: Sublayer },
    Norm(LayerNorm),
}

enum StepCache {
    Residual(SubCache, DropoutMask),
    Norm(LayerNormCache),
}

/// Per-row outputs of the two heads.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    /// `rows × 2N`, `(sin, cos)` per antenna.
    pub phase: Tensor,
    /// `rows × N`, normalized RSSI.
    pub rssi: Tensor,
}

pub struct ForwardCache {
    input: Tensor,
    steps: Vec<StepCache>,
    trunk_out: Tensor,
}

/// Loss split into its two terms; `total = phase + aux_weight · aux`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub phase: f64,
    pub aux: f64,
}

/// Recovered reference-frequency signals for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    /// Wrapped phase per step per antenna, radians in `[0, 2π)`.
    pub phase: Vec<Vec<f64>>,
    /// RSSI per step per antenna, dBm.
    pub rssi: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RecoveryModel {
    pub config: ConformerConfig,
    pub n_antennas: usize,
    pub n_channels: usize,
    pub params: ParamStore,
    embed: Linear,
    steps: Vec<Step>,
    phase_head: Linear,
    rssi_head: Linear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointMeta {
    kind: String,
    config: ConformerConfig,
    n_antennas: usize,
    n_channels: usize,
}

const CHECKPOINT_KIND: &str = "recovery-model";

/// Builds a freshly initialized model for the antenna array and channel plan
/// of `cfg`.
pub fn build_model(
    config: &ConformerConfig,
    cfg: &SystemConfig,
    rng: &mut Rng,
) -> Result<RecoveryModel> {
    RecoveryModel::new(config, cfg.n_antennas(), cfg.channel_plan.count, rng)
}

impl RecoveryModel {
    pub fn new(
        config: &ConformerConfig,
        n_antennas: usize,
        n_channels: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        config.validate()?;
        if n_antennas < 1 || n_channels < 1 {
            return Err(Error::Config(
                "model needs at least one antenna and one channel".into(),
            ));
        }
        let c = *config;
        let d = c.d_model;
        let mut ps = ParamStore::new();
        let embed = Linear::new(
            &mut ps,
            "embed",
            input_width(n_antennas, n_channels),
            d,
            rng,
        )?;
        let mut steps = Vec::new();

        let conv_module = |ps: &mut ParamStore,
                           name: &str,
                           mult: usize,
                           rng: &mut Rng|
         -> Result<Sublayer> {
            Ok(Sublayer::Conv(ConvModule {
                ln: LayerNorm::new(ps, &format!("{name}.ln"), d)?,
                expand: Linear::new(ps, &format!("{name}.expand"), d, d * mult, rng)?,
                dw: DepthwiseConv::new(ps, &format!("{name}.dw"), d * mult, c.conv_kernel, rng)?,
                project: Linear::new(ps, &format!("{name}.project"), d * mult, d, rng)?,
            }))
        };
        let ffn = |ps: &mut ParamStore, name: &str, rng: &mut Rng| -> Result<Sublayer> {
            Ok(Sublayer::Ffn(
                LayerNorm::new(ps, &format!("{name}.ln"), d)?,
                FeedForward::new(ps, &format!("{name}.ffn"), d, d * c.ffn_expansion, rng)?,
            ))
        };
        let attention = |ps: &mut ParamStore, name: &str, rng: &mut Rng| -> Result<Sublayer> {
            Ok(Sublayer::Attention(
                LayerNorm::new(ps, &format!("{name}.ln"), d)?,
                SelfAttention::new(ps, &format!("{name}.mhsa"), d, c.n_heads, rng)?,
            ))
        };

        if c.use_cnn_preproc {
            for i in 0..c.n_pre_cnn_layers {
                let sub = conv_module(
                    &mut ps,
                    &format!("pre_cnn.{i}"),
                    c.cnn_width_multiplier,
                    rng,
                )?;
                steps.push(Step::Residual { scale: 1.0, sub });
            }
        }
        if c.use_transformer_preproc {
            let sub = attention(&mut ps, "pre_tf.attn", rng)?;
            steps.push(Step::Residual { scale: 1.0, sub });
            let sub = ffn(&mut ps, "pre_tf.ff", rng)?;
            steps.push(Step::Residual { scale: 1.0, sub });
        }
        for b in 0..c.n_conformer_blocks {
            let sub = ffn(&mut ps, &format!("block.{b}.ff1"), rng)?;
            steps.push(Step::Residual { scale: 0.5, sub });
            if c.block_attention {
                let sub = attention(&mut ps, &format!("block.{b}.attn"), rng)?;
                steps.push(Step::Residual { scale: 1.0, sub });
            }
            let sub = conv_module(&mut ps, &format!("block.{b}.conv"), 1, rng)?;
            steps.push(Step::Residual { scale: 1.0, sub });
            let sub = ffn(&mut ps, &format!("block.{b}.ff2"), rng)?;
            steps.push(Step::Residual { scale: 0.5, sub });
            steps.push(Step::Norm(LayerNorm::new(
                &mut ps,
                &format!("block.{b}.ln"),
                d,
            )?));
        }
        let phase_head = Linear::new(&mut ps, "head.phase", d, 2 * n_antennas, rng)?;
        let rssi_head = Linear::new(&mut ps, "head.rssi", d, n_antennas, rng)?;
        Ok(RecoveryModel {
            config: c,
            n_antennas,
            n_channels,
            params: ps,
            embed,
            steps,
            phase_head,
            rssi_head,
        })
    }

    pub fn input_width(&self) -> usize {
        input_width(self.n_antennas, self.n_channels)
    }

    /// Runs a batch of `rows / seq_len` sequences stacked row-wise.
    /// `rng` drives dropout and is untouched in eval mode.
    pub fn forward(
        &self,
        x: &Tensor,
        seq_len: usize,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<(Outputs, ForwardCache)> {
        if x.shape().len() != 2 || x.cols() != self.input_width() {
            return Err(Error::Shape(format!(
                "input has shape {:?}, model expects width {}",
                x.shape(),
                self.input_width()
            )));
        }
        if x.rows() == 0 || seq_len == 0 || !x.rows().is_multiple_of(seq_len) {
            return Err(Error::Shape(format!(
                "{} input rows do not form sequences of length {seq_len}",
                x.rows()
            )));
        }
        let ps = &self.params;
        let mut h = self.embed.forward(ps, x)?;
        let pe = sinusoidal_encoding(seq_len, self.config.d_model);
        for r in 0..h.rows() {
            for (v, p) in h.row_mut(r).iter_mut().zip(pe.row(r % seq_len)) {
                *v += p;
            }
        }
        let mut caches = Vec::with_capacity(self.steps.len());
        for step in &self.steps {
            match step {
                Step::Residual { scale, sub } => {
                    let (y, sc) = sub.forward(ps, &h, seq_len)?;
                    let (y, mask) = dropout(&y, self.config.dropout, mode, rng)?;
                    for (v, u) in h.data_mut().iter_mut().zip(y.data()) {
                        *v += scale * u;
                    }
                    caches.push(StepCache::Residual(sc, mask));
                }
                Step::Norm(ln) => {
                    let (y, lc) = ln.forward(ps, &h)?;
                    h = y;
                    caches.push(StepCache::Norm(lc));
                }
            }
        }
        let out = Outputs {
            phase: self.phase_head.forward(ps, &h)?,
            rssi: self.rssi_head.forward(ps, &h)?,
        };
        Ok((
            out,
            ForwardCache {
                input: x.clone(),
                steps: caches,
                trunk_out: h,
            },
        ))
    }

    /// Accumulates parameter gradients for output gradients `d_phase`,
    /// `d_rssi`.
    pub fn backward(&mut self, cache: &ForwardCache, d_phase: &Tensor, d_rssi: &Tensor) {
        let ps = &mut self.params;
        let mut dh = self.phase_head.backward(ps, &cache.trunk_out, d_phase);
        dh.add_assign(&self.rssi_head.backward(ps, &cache.trunk_out, d_rssi));
        for (step, sc) in self.steps.iter().zip(&cache.steps).rev() {
            match (step, sc) {
                (Step::Residual { scale, sub }, StepCache::Residual(c, mask)) => {
                    let dy = dropout_backward(mask, &dh.scaled(*scale));
                    let dx = sub.backward(ps, c, &dy);
                    dh.add_assign(&dx);
                }
                (Step::Norm(ln), StepCache::Norm(c)) => {
                    dh = ln.backward(ps, c, &dh);
                }
                _ => unreachable!("cache built by a different step"),
            }
        }
        // Positional encoding is constant, so it passes the gradient through.
        self.embed.backward(ps, &cache.input, &dh);
    }

    /// Recovers reference-frequency phase and RSSI for one sequence of
    /// input rows (eval mode).
    pub fn recover(&self, x: &Tensor) -> Result<Recovered> {
        if x.rows() == 0 {
            return Err(Error::Empty("zero-length window".into()));
        }
        let mut unused = crate::rng::seeded_rng(0, "eval");
        let (out, _) = self.forward(x, x.rows(), Mode::Eval, &mut unused)?;
        Ok(self.decode(&out))
    }

    /// Batched [`recover`](Self::recover) over equal-length sequences.
    pub fn recover_batch(&self, x: &Tensor, seq_len: usize) -> Result<Vec<Recovered>> {
        let mut unused = crate::rng::seeded_rng(0, "eval");
        let (out, _) = self.forward(x, seq_len, Mode::Eval, &mut unused)?;
        let all = self.decode(&out);
        let mut res = Vec::new();
        for s in 0..x.rows() / seq_len {
            let range = s * seq_len..(s + 1) * seq_len;
            res.push(Recovered {
                phase: all.phase[range.clone()].to_vec(),
                rssi: all.rssi[range].to_vec(),
            });
        }
        Ok(res)
    }

    fn decode(&self, out: &Outputs) -> Recovered {
        let n = self.n_antennas;
        let mut phase = Vec::with_capacity(out.phase.rows());
        let mut rssi = Vec::with_capacity(out.phase.rows());
        for r in 0..out.phase.rows() {
            let row = out.phase.row(r);
            phase.push(
                (0..n)
                    .map(|a| {
                        let (s, c) = unit_pair(row[2 * a], row[2 * a + 1]);
                        wrap_phase(s.atan2(c)).unwrap_or(0.0)
                    })
                    .collect(),
            );
            rssi.push(
                out.rssi
                    .row(r)
                    .iter()
                    .map(|&v| denormalize_rssi(v))
                    .collect(),
            );
        }
        Recovered { phase, rssi }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = CheckpointMeta {
            kind: CHECKPOINT_KIND.into(),
            config: self.config,
            n_antennas: self.n_antennas,
            n_channels: self.n_channels,
        };
        let meta = serde_json::to_value(meta).map_err(|e| Error::json("checkpoint metadata", e))?;
        write_checkpoint(path, &self.params, meta)
    }

    /// Loads a checkpoint written by [`save`](Self::save).
    pub fn load(path: &Path) -> Result<Self> {
        let ck = read_checkpoint(path)?;
        let meta: CheckpointMeta = serde_json::from_value(ck.meta.clone()).map_err(|e| {
            Error::CorruptCheckpoint(format!("{}: bad metadata: {e}", path.display()))
        })?;
        if meta.kind != CHECKPOINT_KIND {
            return Err(Error::CorruptCheckpoint(format!(
                "{}: holds a `{}`, not a recovery model",
                path.display(),
                meta.kind
            )));
        }
        let mut rng = crate::rng::seeded_rng(0, "checkpoint-skeleton");
        let mut model =
            RecoveryModel::new(&meta.config, meta.n_antennas, meta.n_channels, &mut rng)?;
        restore(&mut model.params, &ck)?;
        Ok(model)
    }

    /// Loads a checkpoint and checks it fits the array and channel plan of
    /// `cfg`. A mismatch is reported against the output head or embedding
    /// whose shape differs.
    pub fn load_for(path: &Path, cfg: &SystemConfig) -> Result<Self> {
        let model = Self::load(path)?;
        model.check_compatible(cfg)?;
        Ok(model)
    }

    pub fn check_compatible(&self, cfg: &SystemConfig) -> Result<()> {
        let n = cfg.n_antennas();
        if self.n_antennas != n {
            let w = self.params.value(self.phase_head.w).shape();
            return Err(Error::Shape(format!(
                "head.phase.w has shape {w:?} for {} antennas, configuration has {n} antennas (expects [{}, {}])",
                self.n_antennas,
                self.config.d_model,
                2 * n
            )));
        }
        if self.n_channels != cfg.channel_plan.count {
            let w = self.params.value(self.embed.w).shape();
            return Err(Error::Shape(format!(
                "embed.w has shape {w:?} for {} channels, configuration has {}",
                self.n_channels, cfg.channel_plan.count
            )));
        }
        Ok(())
    }
}

/// Normalizes a `(sin, cos)` pair to unit length; the zero pair maps to
/// angle zero.
pub fn unit_pair(s: f64, c: f64) -> (f64, f64) {
    let norm = s.hypot(c);
    if norm > 0.0 && norm.is_finite() {
        (s / norm, c / norm)
    } else {
        (0.0, 1.0)
    }
}

/// Combined loss `MSE_phase + aux_weight · MSE_rssi` and its gradients with
/// respect to both head outputs.
pub fn loss(
    out: &Outputs,
    phase_target: &Tensor,
    rssi_target: &Tensor,
    aux_weight: f64,
) -> Result<(LossParts, Tensor, Tensor)> {
    let (lp, gp) = mse_loss(&out.phase, phase_target)?;
    let (la, ga) = mse_loss(&out.rssi, rssi_target)?;
    Ok((
        LossParts {
            total: lp + aux_weight * la,
            phase: lp,
            aux: la,
        },
        gp,
        ga.scaled(aux_weight),
    ))
}

#[allow(clippy::too_many_arguments)]
/// Finite-difference check of the whole model on one batch (eval mode, so
/// dropout is off). Probes up to `per_param` coordinates of every tensor.
pub fn grad_check_model(
    model: &mut RecoveryModel,
    x: &Tensor,
    phase_target: &Tensor,
    rssi_target: &Tensor,
    seq_len: usize,
    aux_weight: f64,
    tolerance: f64,
    per_param: Option<usize>,
    rng: &mut Rng,
) -> Result<crate::neural::GradCheckReport> {
    let mut params = std::mem::take(&mut model.params);
    let report = crate::neural::grad_check(
        &mut params,
        |ps, backward| {
            std::mem::swap(&mut model.params, ps);
            let result = (|| {
                let mut unused = crate::rng::seeded_rng(0, "eval");
                let (out, cache) = model.forward(x, seq_len, Mode::Eval, &mut unused)?;
                let (l, gp, gr) = loss(&out, phase_target, rssi_target, aux_weight)?;
                if backward {
                    model.backward(&cache, &gp, &gr);
                }
                Ok(l.total)
            })();
            std::mem::swap(&mut model.params, ps);
            result
        },
        tolerance,
        per_param,
        rng,
    );
    model.params = params;
    report
}
