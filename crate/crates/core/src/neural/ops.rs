use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;
use rand::Rng as _;

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(m: &Tensor) -> Tensor {
    let mut out = m.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    out
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Mean squared error and its gradient with respect to `pred`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Empty("mse of an empty tensor".into()));
    }
    let n = pred.len() as f64;
    let mut grad = Tensor::zeros(pred.shape());
    let mut loss = 0.0;
    for ((g, p), t) in grad
        .data_mut()
        .iter_mut()
        .zip(pred.data())
        .zip(target.data())
    {
        let d = p - t;
        loss += d * d;
        *g = 2.0 * d / n;
    }
    Ok((loss / n, grad))
}

/// Whether stochastic layers are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Multiplicative mask applied by [`dropout`]; `None` means identity.
#[derive(Debug, Clone)]
pub struct DropoutMask(Option<Vec<f64>>);

/// Inverted dropout: in training each entry is zeroed with probability
/// `rate` and survivors are scaled by `1/(1-rate)`.
pub fn dropout(x: &Tensor, rate: f64, mode: Mode, rng: &mut Rng) -> Result<(Tensor, DropoutMask)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Domain(format!("dropout rate {rate} outside [0, 1)")));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((x.clone(), DropoutMask(None)));
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..x.len())
        .map(|_| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                keep
            }
        })
        .collect();
    let mut y = x.clone();
    for (v, m) in y.data_mut().iter_mut().zip(&mask) {
        *v *= m;
    }
    Ok((y, DropoutMask(Some(mask))))
}

pub fn dropout_backward(mask: &DropoutMask, dy: &Tensor) -> Tensor {
    match &mask.0 {
        None => dy.clone(),
        Some(m) => {
            let mut dx = dy.clone();
            for (v, k) in dx.data_mut().iter_mut().zip(m) {
                *v *= k;
            }
            dx
        }
    }
}

/// Sinusoidal position table of shape `len × d`.
pub fn sinusoidal_encoding(len: usize, d: usize) -> Tensor {
    let mut pe = Tensor::zeros(&[len, d]);
    for t in 0..len {
        let row = pe.row_mut(t);
        for i in (0..d).step_by(2) {
            let angle = t as f64 / 10000f64.powf(i as f64 / d as f64);
            row[i] = angle.sin();
            if i + 1 < d {
                row[i + 1] = angle.cos();
            }
        }
    }
    pe
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    #[test]
    fn softmax_examples() {
        let m = Tensor::from_vec(&[2, 3], vec![1., 2., 3., 5., 5., 5.]).unwrap();
        let s = softmax_rows(&m);
        // e^k / (e + e² + e³)
        let z = 1f64.exp() + 2f64.exp() + 3f64.exp();
        for (k, want) in [1f64, 2., 3.].iter().enumerate() {
            assert!((s.row(0)[k] - want.exp() / z).abs() < 1e-15);
        }
        assert!((s.row(0)[0] - 0.09003).abs() < 5e-6);
        assert!((s.row(0)[1] - 0.24473).abs() < 5e-6);
        assert!((s.row(0)[2] - 0.66524).abs() < 5e-6);
        assert!(s.row(1).iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let col = softmax_rows(&Tensor::from_vec(&[3, 1], vec![-4., 0., 900.]).unwrap());
        assert_eq!(col.data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn mse_examples() {
        let p = Tensor::from_vec(&[2, 2], vec![1., 2., 3., 4.]).unwrap();
        assert_eq!(mse_loss(&p, &p).unwrap().0, 0.0);
        let t = p.map(|v| v + 2.0);
        let (l, g) = mse_loss(&p, &t).unwrap();
        assert_eq!(l, 4.0);
        assert!(g.data().iter().all(|&v| v == -1.0));
        assert!(mse_loss(&p, &Tensor::zeros(&[4])).is_err());
    }

    #[test]
    fn dropout_modes() {
        let x = Tensor::filled(&[100_000], 1.0);
        let mut rng = seeded_rng(3, "dropout");
        assert_eq!(dropout(&x, 0.0, Mode::Train, &mut rng).unwrap().0, x);
        assert_eq!(dropout(&x, 0.5, Mode::Eval, &mut rng).unwrap().0, x);
        assert!(dropout(&x, 1.0, Mode::Train, &mut rng).is_err());
        let (y, mask) = dropout(&x, 0.1, Mode::Train, &mut rng).unwrap();
        let zeros = y.data().iter().filter(|&&v| v == 0.0).count() as f64 / 1e5;
        assert!((0.09..=0.11).contains(&zeros), "{zeros}");
        assert!(y
            .data()
            .iter()
            .all(|&v| v == 0.0 || (v - 1.0 / 0.9).abs() < 1e-15));
        assert_eq!(dropout_backward(&mask, &x), y);
    }

    #[test]
    fn positional_table() {
        let pe = sinusoidal_encoding(4, 6);
        assert_eq!(pe.row(0), &[0., 1., 0., 1., 0., 1.]);
        assert!((pe.row(2)[0] - 2f64.sin()).abs() < 1e-15);
        assert!((pe.row(3)[3] - (3.0 / 10000f64.powf(2.0 / 6.0)).cos()).abs() < 1e-15);
    }
}
