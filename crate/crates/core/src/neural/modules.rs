//! Layers bound to parameters in a [`ParamStore`]. Each `backward` adds its
//! parameter gradients into the store and returns the input gradient.

use super::layers::*;
use super::params::{xavier_init, ParamId, ParamStore};
use super::tensor::Tensor;
use crate::error::Result;
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        d_in: usize,
        d_out: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        Ok(Linear {
            w: ps.add(format!("{name}.w"), xavier_init(&[d_in, d_out], rng)?)?,
            b: ps.add(format!("{name}.b"), Tensor::zeros(&[d_out]))?,
        })
    }

    pub fn forward(&self, ps: &ParamStore, x: &Tensor) -> Result<Tensor> {
        linear_forward(x, ps.value(self.w), ps.value(self.b))
    }

    /// `x` is the input given to the matching `forward`.
    pub fn backward(&self, ps: &mut ParamStore, x: &Tensor, dy: &Tensor) -> Tensor {
        let g = linear_backward(x, ps.value(self.w), dy);
        ps.accumulate(self.w, &g.dw);
        ps.accumulate(self.b, &g.db);
        g.dx
    }
}

#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl LayerNorm {
    pub fn new(ps: &mut ParamStore, name: &str, d: usize) -> Result<Self> {
        Ok(LayerNorm {
            gain: ps.add(format!("{name}.gain"), Tensor::filled(&[d], 1.0))?,
            bias: ps.add(format!("{name}.bias"), Tensor::zeros(&[d]))?,
        })
    }

    pub fn forward(&self, ps: &ParamStore, x: &Tensor) -> Result<(Tensor, LayerNormCache)> {
        layer_norm(x, ps.value(self.gain), ps.value(self.bias))
    }

    pub fn backward(&self, ps: &mut ParamStore, cache: &LayerNormCache, dy: &Tensor) -> Tensor {
        let g = layer_norm_backward(cache, ps.value(self.gain), dy);
        ps.accumulate(self.gain, &g.dgain);
        ps.accumulate(self.bias, &g.dbias);
        g.dx
    }
}

#[derive(Debug, Clone)]
pub struct FeedForward {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

impl FeedForward {
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        d: usize,
        hidden: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        Ok(FeedForward {
            w1: ps.add(format!("{name}.w1"), xavier_init(&[d, hidden], rng)?)?,
            b1: ps.add(format!("{name}.b1"), Tensor::zeros(&[hidden]))?,
            w2: ps.add(format!("{name}.w2"), xavier_init(&[hidden, d], rng)?)?,
            b2: ps.add(format!("{name}.b2"), Tensor::zeros(&[d]))?,
        })
    }

    pub fn forward(&self, ps: &ParamStore, x: &Tensor) -> Result<(Tensor, FfnCache)> {
        ffn_forward(
            x,
            ps.value(self.w1),
            ps.value(self.b1),
            ps.value(self.w2),
            ps.value(self.b2),
        )
    }

    pub fn backward(&self, ps: &mut ParamStore, cache: &FfnCache, dy: &Tensor) -> Tensor {
        let g = ffn_backward(cache, ps.value(self.w1), ps.value(self.w2), dy);
        ps.accumulate(self.w1, &g.dw1);
        ps.accumulate(self.b1, &g.db1);
        ps.accumulate(self.w2, &g.dw2);
        ps.accumulate(self.b2, &g.db2);
        g.dx
    }
}

#[derive(Debug, Clone)]
pub struct SelfAttention {
    pub wq: ParamId,
    pub bq: ParamId,
    pub wk: ParamId,
    pub bk: ParamId,
    pub wv: ParamId,
    pub bv: ParamId,
    pub wo: ParamId,
    pub bo: ParamId,
    pub n_heads: usize,
}

impl SelfAttention {
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        d: usize,
        n_heads: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut pair = |tag: &str| -> Result<(ParamId, ParamId)> {
            Ok((
                ps.add(format!("{name}.w{tag}"), xavier_init(&[d, d], rng)?)?,
                ps.add(format!("{name}.b{tag}"), Tensor::zeros(&[d]))?,
            ))
        };
        let (wq, bq) = pair("q")?;
        let (wk, bk) = pair("k")?;
        let (wv, bv) = pair("v")?;
        let (wo, bo) = pair("o")?;
        Ok(SelfAttention {
            wq,
            bq,
            wk,
            bk,
            wv,
            bv,
            wo,
            bo,
            n_heads,
        })
    }

    fn params<'a>(&self, ps: &'a ParamStore) -> MhsaParams<'a> {
        MhsaParams {
            wq: ps.value(self.wq),
            bq: ps.value(self.bq),
            wk: ps.value(self.wk),
            bk: ps.value(self.bk),
            wv: ps.value(self.wv),
            bv: ps.value(self.bv),
            wo: ps.value(self.wo),
            bo: ps.value(self.bo),
        }
    }

    pub fn forward(
        &self,
        ps: &ParamStore,
        x: &Tensor,
        seq_len: usize,
    ) -> Result<(Tensor, MhsaCache)> {
        mhsa_forward(x, self.params(ps), self.n_heads, seq_len)
    }

    pub fn backward(&self, ps: &mut ParamStore, cache: &MhsaCache, dy: &Tensor) -> Tensor {
        let g = mhsa_backward(cache, self.params(ps), dy);
        for (id, t) in [
            (self.wq, &g.dwq),
            (self.bq, &g.dbq),
            (self.wk, &g.dwk),
            (self.bk, &g.dbk),
            (self.wv, &g.dwv),
            (self.bv, &g.dbv),
            (self.wo, &g.dwo),
            (self.bo, &g.dbo),
        ] {
            ps.accumulate(id, t);
        }
        g.dx
    }
}

#[derive(Debug, Clone)]
pub struct DepthwiseConv {
    pub kernel: ParamId,
    pub bias: ParamId,
}

impl DepthwiseConv {
    pub fn new(
        ps: &mut ParamStore,
        name: &str,
        channels: usize,
        k: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        Ok(DepthwiseConv {
            kernel: ps.add(format!("{name}.kernel"), xavier_init(&[k, channels], rng)?)?,
            bias: ps.add(format!("{name}.bias"), Tensor::zeros(&[channels]))?,
        })
    }

    pub fn forward(
        &self,
        ps: &ParamStore,
        x: &Tensor,
        seq_len: usize,
    ) -> Result<(Tensor, ConvCache)> {
        depthwise_conv1d_forward(x, ps.value(self.kernel), ps.value(self.bias), seq_len)
    }

    pub fn backward(&self, ps: &mut ParamStore, cache: &ConvCache, dy: &Tensor) -> Tensor {
        let g = depthwise_conv1d_backward(cache, ps.value(self.kernel), dy);
        ps.accumulate(self.kernel, &g.dkernel);
        ps.accumulate(self.bias, &g.dbias);
        g.dx
    }
}
