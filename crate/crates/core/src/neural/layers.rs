//! Layer kernels with explicit forward caches and hand-written backward
//! passes. Sequence inputs are stacked row-wise: a batch of `B` sequences of
//! length `T` is a `(B·T) × d` matrix and `seq_len = T`.

use super::ops::softmax_in_place;
use super::tensor::{gemm, MatRef, Tensor};
use crate::error::{Error, Result};

pub const LAYER_NORM_EPS: f64 = 1e-5;

fn check_matrix(name: &str, t: &Tensor, rows: Option<usize>, cols: usize) -> Result<()> {
    let ok = t.shape().len() == 2 && t.cols() == cols && rows.is_none_or(|r| t.rows() == r);
    if ok {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "{name} has shape {:?}, expected {}×{cols}",
            t.shape(),
            rows.map_or("n".to_string(), |r| r.to_string())
        )))
    }
}

fn check_vector(name: &str, t: &Tensor, len: usize) -> Result<()> {
    if t.shape() == [len] {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "{name} has shape {:?}, expected [{len}]",
            t.shape()
        )))
    }
}

fn check_seq(x: &Tensor, seq_len: usize) -> Result<()> {
    if seq_len == 0 || !x.rows().is_multiple_of(seq_len) || x.rows() == 0 {
        return Err(Error::Shape(format!(
            "{} rows are not a whole number of length-{seq_len} sequences",
            x.rows()
        )));
    }
    Ok(())
}

fn column_sums(t: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(&[t.cols()]);
    for r in 0..t.rows() {
        for (o, v) in out.data_mut().iter_mut().zip(t.row(r)) {
            *o += v;
        }
    }
    out
}

fn add_row_bias(y: &mut Tensor, b: &Tensor) {
    for r in 0..y.rows() {
        for (v, bb) in y.row_mut(r).iter_mut().zip(b.data()) {
            *v += bb;
        }
    }
}

/// `x·w + b` for `x: n × i`, `w: i × o`, `b: o`.
pub fn linear_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    check_matrix("weight", w, None, w.cols())?;
    check_matrix("input", x, None, w.rows())?;
    check_vector("bias", b, w.cols())?;
    let mut y = Tensor::zeros(&[x.rows(), w.cols()]);
    let n = w.cols();
    gemm(1.0, MatRef::of(x), MatRef::of(w), 0.0, y.data_mut(), 0, n);
    add_row_bias(&mut y, b);
    Ok(y)
}

pub struct LinearGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

pub fn linear_backward(x: &Tensor, w: &Tensor, dy: &Tensor) -> LinearGrads {
    let mut dx = Tensor::zeros(&[x.rows(), x.cols()]);
    let mut dw = Tensor::zeros(w.shape());
    gemm(
        1.0,
        MatRef::of(dy),
        MatRef::of(w).t(),
        0.0,
        dx.data_mut(),
        0,
        x.cols(),
    );
    gemm(
        1.0,
        MatRef::of(x).t(),
        MatRef::of(dy),
        0.0,
        dw.data_mut(),
        0,
        w.cols(),
    );
    LinearGrads {
        dx,
        dw,
        db: column_sums(dy),
    }
}

pub struct LayerNormCache {
    xhat: Tensor,
    inv_std: Vec<f64>,
}

/// Per-row standardization followed by an elementwise affine map.
pub fn layer_norm(x: &Tensor, gain: &Tensor, bias: &Tensor) -> Result<(Tensor, LayerNormCache)> {
    let d = x.cols();
    if d < 2 {
        return Err(Error::Shape(
            "layer norm needs at least two features".into(),
        ));
    }
    check_vector("gain", gain, d)?;
    check_vector("bias", bias, d)?;
    let mut xhat = x.clone();
    let mut y = Tensor::zeros(x.shape());
    let mut inv_std = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = xhat.row_mut(r);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64;
        let s = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        row.iter_mut().for_each(|v| *v = (*v - mean) * s);
        inv_std.push(s);
        let xr = xhat.row(r);
        for (j, o) in y.row_mut(r).iter_mut().enumerate() {
            *o = xr[j] * gain.data()[j] + bias.data()[j];
        }
    }
    Ok((y, LayerNormCache { xhat, inv_std }))
}

pub struct LayerNormGrads {
    pub dx: Tensor,
    pub dgain: Tensor,
    pub dbias: Tensor,
}

pub fn layer_norm_backward(cache: &LayerNormCache, gain: &Tensor, dy: &Tensor) -> LayerNormGrads {
    let d = dy.cols();
    let mut dx = Tensor::zeros(dy.shape());
    let mut dgain = Tensor::zeros(&[d]);
    let dbias = column_sums(dy);
    let mut dxhat = vec![0.0; d];
    for r in 0..dy.rows() {
        let (g, xh) = (dy.row(r), cache.xhat.row(r));
        let mut mean_dxhat = 0.0;
        let mut mean_dxhat_xhat = 0.0;
        for j in 0..d {
            dgain.data_mut()[j] += g[j] * xh[j];
            dxhat[j] = g[j] * gain.data()[j];
            mean_dxhat += dxhat[j];
            mean_dxhat_xhat += dxhat[j] * xh[j];
        }
        mean_dxhat /= d as f64;
        mean_dxhat_xhat /= d as f64;
        let s = cache.inv_std[r];
        for (j, o) in dx.row_mut(r).iter_mut().enumerate() {
            *o = s * (dxhat[j] - mean_dxhat - xh[j] * mean_dxhat_xhat);
        }
    }
    LayerNormGrads { dx, dgain, dbias }
}

pub struct FfnCache {
    x: Tensor,
    h: Tensor,
}

/// `max(0, x·w1 + b1)·w2 + b2`.
pub fn ffn_forward(
    x: &Tensor,
    w1: &Tensor,
    b1: &Tensor,
    w2: &Tensor,
    b2: &Tensor,
) -> Result<(Tensor, FfnCache)> {
    if w1.cols() != w2.rows() {
        return Err(Error::Shape(format!(
            "inner widths differ: {:?} then {:?}",
            w1.shape(),
            w2.shape()
        )));
    }
    let mut h = linear_forward(x, w1, b1)?;
    h.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    let y = linear_forward(&h, w2, b2)?;
    Ok((y, FfnCache { x: x.clone(), h }))
}

pub struct FfnGrads {
    pub dx: Tensor,
    pub dw1: Tensor,
    pub db1: Tensor,
    pub dw2: Tensor,
    pub db2: Tensor,
}

pub fn ffn_backward(cache: &FfnCache, w1: &Tensor, w2: &Tensor, dy: &Tensor) -> FfnGrads {
    let second = linear_backward(&cache.h, w2, dy);
    let mut dh = second.dx;
    for (g, h) in dh.data_mut().iter_mut().zip(cache.h.data()) {
        if *h <= 0.0 {
            *g = 0.0;
        }
    }
    let first = linear_backward(&cache.x, w1, &dh);
    FfnGrads {
        dx: first.dx,
        dw1: first.dw,
        db1: first.db,
        dw2: second.dw,
        db2: second.db,
    }
}

pub struct ConvCache {
    x: Tensor,
    z: Tensor,
    seq_len: usize,
}

/// Same-length depthwise 1-D convolution over time followed by ReLU:
/// `y[t,c] = max(0, b[c] + Σ_j w[j,c]·x[t+j−k/2, c])` with zero padding.
pub fn depthwise_conv1d_forward(
    x: &Tensor,
    kernel: &Tensor,
    bias: &Tensor,
    seq_len: usize,
) -> Result<(Tensor, ConvCache)> {
    let k = kernel.rows();
    if kernel.shape().len() != 2 || k.is_multiple_of(2) {
        return Err(Error::Shape(format!(
            "depthwise kernel must be k×d with odd k, got {:?}",
            kernel.shape()
        )));
    }
    let c = x.cols();
    check_matrix("kernel", kernel, Some(k), c)?;
    check_vector("bias", bias, c)?;
    check_seq(x, seq_len)?;
    let half = k / 2;
    let mut z = Tensor::zeros(x.shape());
    let (xd, wd) = (x.data(), kernel.data());
    let zd = z.data_mut();
    for s in 0..x.rows() / seq_len {
        let base = s * seq_len;
        for t in 0..seq_len {
            let out = &mut zd[(base + t) * c..(base + t + 1) * c];
            out.copy_from_slice(bias.data());
            for j in 0..k {
                let src = t as isize + j as isize - half as isize;
                if src < 0 || src >= seq_len as isize {
                    continue;
                }
                let xr = &xd[(base + src as usize) * c..(base + src as usize + 1) * c];
                let wr = &wd[j * c..(j + 1) * c];
                for ch in 0..c {
                    out[ch] += wr[ch] * xr[ch];
                }
            }
        }
    }
    let y = z.map(|v| v.max(0.0));
    Ok((
        y,
        ConvCache {
            x: x.clone(),
            z,
            seq_len,
        },
    ))
}

pub struct ConvGrads {
    pub dx: Tensor,
    pub dkernel: Tensor,
    pub dbias: Tensor,
}

pub fn depthwise_conv1d_backward(cache: &ConvCache, kernel: &Tensor, dy: &Tensor) -> ConvGrads {
    let (k, c, seq_len) = (kernel.rows(), dy.cols(), cache.seq_len);
    let half = k / 2;
    let mut dz = dy.clone();
    for (g, z) in dz.data_mut().iter_mut().zip(cache.z.data()) {
        if *z <= 0.0 {
            *g = 0.0;
        }
    }
    let dbias = column_sums(&dz);
    let mut dx = Tensor::zeros(dy.shape());
    let mut dkernel = Tensor::zeros(kernel.shape());
    let (xd, wd, dzd) = (cache.x.data(), kernel.data(), dz.data());
    let dxd = dx.data_mut();
    let dkd = dkernel.data_mut();
    for s in 0..dy.rows() / seq_len {
        let base = s * seq_len;
        for t in 0..seq_len {
            let g = &dzd[(base + t) * c..(base + t + 1) * c];
            for j in 0..k {
                let src = t as isize + j as isize - half as isize;
                if src < 0 || src >= seq_len as isize {
                    continue;
                }
                let row = (base + src as usize) * c;
                for ch in 0..c {
                    dkd[j * c + ch] += g[ch] * xd[row + ch];
                    dxd[row + ch] += g[ch] * wd[j * c + ch];
                }
            }
        }
    }
    ConvGrads { dx, dkernel, dbias }
}

/// Parameters of multi-head self-attention; all projections are `d × d`.
#[derive(Clone, Copy)]
pub struct MhsaParams<'a> {
    pub wq: &'a Tensor,
    pub bq: &'a Tensor,
    pub wk: &'a Tensor,
    pub bk: &'a Tensor,
    pub wv: &'a Tensor,
    pub bv: &'a Tensor,
    pub wo: &'a Tensor,
    pub bo: &'a Tensor,
}

pub struct MhsaCache {
    x: Tensor,
    q: Tensor,
    k: Tensor,
    v: Tensor,
    attn: Vec<f64>,
    concat: Tensor,
    n_heads: usize,
    seq_len: usize,
}

impl MhsaCache {
    /// Attention weights of sequence `s`, head `h` as a `T × T` row-major block.
    pub fn attention(&self, s: usize, h: usize) -> &[f64] {
        let tt = self.seq_len * self.seq_len;
        let off = (s * self.n_heads + h) * tt;
        &self.attn[off..off + tt]
    }
}

/// Multi-head scaled dot-product self-attention within each sequence.
pub fn mhsa_forward(
    x: &Tensor,
    p: MhsaParams<'_>,
    n_heads: usize,
    seq_len: usize,
) -> Result<(Tensor, MhsaCache)> {
    let d = x.cols();
    if n_heads == 0 || !d.is_multiple_of(n_heads) {
        return Err(Error::Shape(format!(
            "width {d} not divisible by {n_heads} heads"
        )));
    }
    for (name, w) in [("W_Q", p.wq), ("W_K", p.wk), ("W_V", p.wv), ("W_O", p.wo)] {
        check_matrix(name, w, Some(d), d)?;
    }
    check_seq(x, seq_len)?;
    let q = linear_forward(x, p.wq, p.bq)?;
    let k = linear_forward(x, p.wk, p.bk)?;
    let v = linear_forward(x, p.wv, p.bv)?;
    let dk = d / n_heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let n_seq = x.rows() / seq_len;
    let tt = seq_len * seq_len;
    let mut attn = vec![0.0; n_seq * n_heads * tt];
    let mut concat = Tensor::zeros(x.shape());
    for s in 0..n_seq {
        for h in 0..n_heads {
            let off = s * seq_len * d + h * dk;
            let a_off = (s * n_heads + h) * tt;
            let qv = MatRef::new(q.data(), off, seq_len, dk, d);
            let kv = MatRef::new(k.data(), off, seq_len, dk, d);
            gemm(scale, qv, kv.t(), 0.0, &mut attn, a_off, seq_len);
            for r in 0..seq_len {
                softmax_in_place(&mut attn[a_off + r * seq_len..a_off + (r + 1) * seq_len]);
            }
            let av = MatRef::new(&attn, a_off, seq_len, seq_len, seq_len);
            let vv = MatRef::new(v.data(), off, seq_len, dk, d);
            gemm(1.0, av, vv, 0.0, concat.data_mut(), off, d);
        }
    }
    let y = linear_forward(&concat, p.wo, p.bo)?;
    Ok((
        y,
        MhsaCache {
            x: x.clone(),
            q,
            k,
            v,
            attn,
            concat,
            n_heads,
            seq_len,
        },
    ))
}

pub struct MhsaGrads {
    pub dx: Tensor,
    pub dwq: Tensor,
    pub dbq: Tensor,
    pub dwk: Tensor,
    pub dbk: Tensor,
    pub dwv: Tensor,
    pub dbv: Tensor,
    pub dwo: Tensor,
    pub dbo: Tensor,
}

pub fn mhsa_backward(cache: &MhsaCache, p: MhsaParams<'_>, dy: &Tensor) -> MhsaGrads {
    let (d, t, nh) = (cache.x.cols(), cache.seq_len, cache.n_heads);
    let dk = d / nh;
    let scale = 1.0 / (dk as f64).sqrt();
    let out = linear_backward(&cache.concat, p.wo, dy);
    let dconcat = out.dx;
    let mut dq = Tensor::zeros(cache.x.shape());
    let mut dkm = Tensor::zeros(cache.x.shape());
    let mut dv = Tensor::zeros(cache.x.shape());
    let mut da = vec![0.0; t * t];
    for s in 0..cache.x.rows() / t {
        for h in 0..nh {
            let off = s * t * d + h * dk;
            let a_off = (s * nh + h) * t * t;
            let a = MatRef::new(&cache.attn, a_off, t, t, t);
            let dov = MatRef::new(dconcat.data(), off, t, dk, d);
            let vv = MatRef::new(cache.v.data(), off, t, dk, d);
            gemm(1.0, dov, vv.t(), 0.0, &mut da, 0, t);
            gemm(1.0, a.t(), dov, 0.0, dv.data_mut(), off, d);
            // softmax backward: dS = A ⊙ (dA − rowsum(dA ⊙ A))
            for r in 0..t {
                let ar = &cache.attn[a_off + r * t..a_off + (r + 1) * t];
                let dr = &mut da[r * t..(r + 1) * t];
                let dot: f64 = ar.iter().zip(dr.iter()).map(|(x, y)| x * y).sum();
                for (g, w) in dr.iter_mut().zip(ar) {
                    *g = w * (*g - dot);
                }
            }
            let ds = MatRef::new(&da, 0, t, t, t);
            let qv = MatRef::new(cache.q.data(), off, t, dk, d);
            let kv = MatRef::new(cache.k.data(), off, t, dk, d);
            gemm(scale, ds, kv, 0.0, dq.data_mut(), off, d);
            gemm(scale, ds.t(), qv, 0.0, dkm.data_mut(), off, d);
        }
    }
    let gq = linear_backward(&cache.x, p.wq, &dq);
    let gk = linear_backward(&cache.x, p.wk, &dkm);
    let gv = linear_backward(&cache.x, p.wv, &dv);
    let mut dx = gq.dx;
    dx.add_assign(&gk.dx);
    dx.add_assign(&gv.dx);
    MhsaGrads {
        dx,
        dwq: gq.dw,
        dbq: gq.db,
        dwk: gk.dw,
        dbk: gk.db,
        dwv: gv.dw,
        dbv: gv.db,
        dwo: out.dw,
        dbo: out.db,
    }
}
