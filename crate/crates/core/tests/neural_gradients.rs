//! Finite-difference checks of every layer's backward pass. Each fragment is
//! reduced to the scalar probe loss `Σ y ⊙ R` for a fixed random `R`, and the
//! layer input is registered as a parameter so its gradient is checked too.

use hopscatter::neural::modules::*;
use hopscatter::neural::*;
use hopscatter::rng::{seeded_rng, Rng};
use rand::Rng as _;

fn rand_t(shape: &[usize], rng: &mut Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn probe(y: &Tensor, r: &Tensor) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

fn check<F>(ps: &mut ParamStore, tol: f64, f: F) -> GradCheckReport
where
    F: FnMut(&mut ParamStore, bool) -> hopscatter::Result<f64>,
{
    let mut rng = seeded_rng(0, "probe-coords");
    let rep = grad_check(ps, f, tol, None, &mut rng).unwrap();
    assert!(rep.passed(), "{:#?}", rep.failures.first());
    assert!(rep.checked > 0);
    rep
}

#[test]
fn linear_layer() {
    let mut rng = seeded_rng(1, "gc-linear");
    let mut ps = ParamStore::new();
    let layer = Linear::new(&mut ps, "lin", 5, 3, &mut rng).unwrap();
    ps.value_mut(layer.b)
        .data_mut()
        .copy_from_slice(&[0.1, -0.2, 0.3]);
    let x = ps.add("input", rand_t(&[4, 5], &mut rng)).unwrap();
    let r = rand_t(&[4, 3], &mut rng);
    let rep = check(&mut ps, 1e-7, |ps, bw| {
        let xv = ps.value(x).clone();
        let y = layer.forward(ps, &xv)?;
        if bw {
            let dx = layer.backward(ps, &xv, &r);
            ps.accumulate(x, &dx);
        }
        Ok(probe(&y, &r))
    });
    assert!(rep.max_rel_error < 1e-7);
}

#[test]
fn feed_forward_away_from_kinks() {
    let mut rng = seeded_rng(2, "gc-ffn");
    let mut ps = ParamStore::new();
    let ffn = FeedForward::new(&mut ps, "ffn", 4, 8, &mut rng).unwrap();
    let x = ps.add("input", rand_t(&[3, 4], &mut rng)).unwrap();
    let r = rand_t(&[3, 4], &mut rng);
    let pre = linear_forward(ps.value(x), ps.value(ffn.w1), ps.value(ffn.b1)).unwrap();
    assert!(
        pre.data().iter().all(|v| v.abs() > 1e-3),
        "probe point sits on a ReLU kink"
    );
    check(&mut ps, 1e-6, |ps, bw| {
        let xv = ps.value(x).clone();
        let (y, cache) = ffn.forward(ps, &xv)?;
        if bw {
            let dx = ffn.backward(ps, &cache, &r);
            ps.accumulate(x, &dx);
        }
        Ok(probe(&y, &r))
    });
}

#[test]
fn layer_norm_layer() {
    let mut rng = seeded_rng(3, "gc-ln");
    let mut ps = ParamStore::new();
    let ln = LayerNorm::new(&mut ps, "ln", 6).unwrap();
    *ps.value_mut(ln.gain) = rand_t(&[6], &mut rng);
    *ps.value_mut(ln.bias) = rand_t(&[6], &mut rng);
    let x = ps.add("input", rand_t(&[4, 6], &mut rng)).unwrap();
    let r = rand_t(&[4, 6], &mut rng);
    check(&mut ps, 1e-6, |ps, bw| {
        let xv = ps.value(x).clone();
        let (y, cache) = ln.forward(ps, &xv)?;
        if bw {
            let dx = ln.backward(ps, &cache, &r);
            ps.accumulate(x, &dx);
        }
        Ok(probe(&y, &r))
    });
}

#[test]
fn depthwise_conv_layer() {
    let mut rng = seeded_rng(4, "gc-conv");
    let mut ps = ParamStore::new();
    let conv = DepthwiseConv::new(&mut ps, "conv", 3, 5, &mut rng).unwrap();
    *ps.value_mut(conv.bias) = rand_t(&[3], &mut rng);
    let x = ps.add("input", rand_t(&[12, 3], &mut rng)).unwrap();
    let r = rand_t(&[12, 3], &mut rng);
    check(&mut ps, 1e-6, |ps, bw| {
        let xv = ps.value(x).clone();
        let (y, cache) = conv.forward(ps, &xv, 6)?;
        if bw {
            let dx = conv.backward(ps, &cache, &r);
            ps.accumulate(x, &dx);
        }
        Ok(probe(&y, &r))
    });
}

#[test]
fn self_attention_layer() {
    let mut rng = seeded_rng(5, "gc-mhsa");
    let mut ps = ParamStore::new();
    let att = SelfAttention::new(&mut ps, "att", 8, 2, &mut rng).unwrap();
    for id in [att.bq, att.bk, att.bv, att.bo] {
        *ps.value_mut(id) = rand_t(&[8], &mut rng);
    }
    let x = ps.add("input", rand_t(&[8, 8], &mut rng)).unwrap();
    let r = rand_t(&[8, 8], &mut rng);
    check(&mut ps, 1e-6, |ps, bw| {
        let xv = ps.value(x).clone();
        let (y, cache) = att.forward(ps, &xv, 4)?;
        if bw {
            let dx = att.backward(ps, &cache, &r);
            ps.accumulate(x, &dx);
        }
        Ok(probe(&y, &r))
    });
}

#[test]
fn dropout_and_mse_chain() {
    let mut rng = seeded_rng(6, "gc-drop");
    let mut ps = ParamStore::new();
    let x = ps.add("input", rand_t(&[5, 4], &mut rng)).unwrap();
    let target = rand_t(&[5, 4], &mut rng);
    check(&mut ps, 1e-6, |ps, bw| {
        // Same mask on every evaluation: the stream is re-seeded each call.
        let mut drng = seeded_rng(7, "mask");
        let (y, mask) = dropout(ps.value(x), 0.3, Mode::Train, &mut drng)?;
        let (loss, g) = mse_loss(&y, &target)?;
        if bw {
            let dx = dropout_backward(&mask, &g);
            ps.accumulate(x, &dx);
        }
        Ok(loss)
    });
}
