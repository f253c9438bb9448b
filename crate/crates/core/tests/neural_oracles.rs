//! Layer forwards against naive, loop-by-loop reference evaluations.

use hopscatter::neural::layers::LAYER_NORM_EPS;
use hopscatter::neural::*;
use hopscatter::rng::{seeded_rng, Rng};
use proptest::prelude::*;
use rand::Rng as _;

fn rand_t(shape: &[usize], rng: &mut Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn at(t: &Tensor, r: usize, c: usize) -> f64 {
    t.data()[r * t.cols() + c]
}

fn naive_matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum())
                .collect()
        })
        .collect()
}

fn rows(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

fn affine(x: &[Vec<f64>], w: &Tensor, b: &Tensor) -> Vec<Vec<f64>> {
    let mut y = naive_matmul(x, &rows(w));
    for row in &mut y {
        for (v, bb) in row.iter_mut().zip(b.data()) {
            *v += bb;
        }
    }
    y
}

fn assert_close(got: &Tensor, want: &[Vec<f64>], tol: f64) {
    for (r, wr) in want.iter().enumerate() {
        for (c, w) in wr.iter().enumerate() {
            let g = at(got, r, c);
            assert!((g - w).abs() <= tol, "({r},{c}): {g} vs {w}");
        }
    }
}

#[test]
fn mhsa_matches_step_by_step_evaluation() {
    let mut rng = seeded_rng(11, "mhsa-oracle");
    let (t, d, heads) = (4, 8, 2);
    let x = rand_t(&[t, d], &mut rng);
    let ws: Vec<Tensor> = (0..4).map(|_| rand_t(&[d, d], &mut rng)).collect();
    let bs: Vec<Tensor> = (0..4).map(|_| rand_t(&[d], &mut rng)).collect();
    let p = MhsaParams {
        wq: &ws[0],
        bq: &bs[0],
        wk: &ws[1],
        bk: &bs[1],
        wv: &ws[2],
        bv: &bs[2],
        wo: &ws[3],
        bo: &bs[3],
    };
    let (y, _) = mhsa_forward(&x, p, heads, t).unwrap();

    let xr = rows(&x);
    let q = affine(&xr, &ws[0], &bs[0]);
    let k = affine(&xr, &ws[1], &bs[1]);
    let v = affine(&xr, &ws[2], &bs[2]);
    let dk = d / heads;
    let mut concat = vec![vec![0.0; d]; t];
    for h in 0..heads {
        for i in 0..t {
            let scores: Vec<f64> = (0..t)
                .map(|j| {
                    (0..dk)
                        .map(|c| q[i][h * dk + c] * k[j][h * dk + c])
                        .sum::<f64>()
                        / (dk as f64).sqrt()
                })
                .collect();
            let z: f64 = scores.iter().map(|s| s.exp()).sum();
            for c in 0..dk {
                concat[i][h * dk + c] =
                    (0..t).map(|j| scores[j].exp() / z * v[j][h * dk + c]).sum();
            }
        }
    }
    let want = affine(&concat, &ws[3], &bs[3]);
    assert_close(&y, &want, 1e-10);
}

#[test]
fn depthwise_conv_matches_sliding_window() {
    let mut rng = seeded_rng(12, "conv-oracle");
    let (t, d, k) = (5, 2, 3);
    let x = rand_t(&[t, d], &mut rng);
    let w = rand_t(&[k, d], &mut rng);
    let b = rand_t(&[d], &mut rng);
    let (y, _) = depthwise_conv1d_forward(&x, &w, &b, t).unwrap();
    let mut want = vec![vec![0.0; d]; t];
    for (ti, row) in want.iter_mut().enumerate() {
        for (c, out) in row.iter_mut().enumerate() {
            let mut s = b.data()[c];
            for j in 0..k {
                let src = ti as i64 + j as i64 - 1;
                if (0..t as i64).contains(&src) {
                    s += at(&w, j, c) * at(&x, src as usize, c);
                }
            }
            *out = s.max(0.0);
        }
    }
    assert_close(&y, &want, 1e-12);
}

#[test]
fn depthwise_conv_keeps_sequences_apart() {
    let mut rng = seeded_rng(13, "conv-batch");
    let x = rand_t(&[6, 3], &mut rng);
    let w = rand_t(&[3, 3], &mut rng);
    let b = rand_t(&[3], &mut rng);
    let (joint, _) = depthwise_conv1d_forward(&x, &w, &b, 3).unwrap();
    for s in 0..2 {
        let part = Tensor::from_vec(&[3, 3], x.data()[s * 9..(s + 1) * 9].to_vec()).unwrap();
        let (y, _) = depthwise_conv1d_forward(&part, &w, &b, 3).unwrap();
        assert_eq!(y.data(), &joint.data()[s * 9..(s + 1) * 9]);
    }
}

#[test]
fn ffn_matches_direct_evaluation() {
    let mut rng = seeded_rng(14, "ffn-oracle");
    let x = rand_t(&[3, 4], &mut rng);
    let w1 = rand_t(&[4, 6], &mut rng);
    let b1 = rand_t(&[6], &mut rng);
    let w2 = rand_t(&[6, 4], &mut rng);
    let b2 = rand_t(&[4], &mut rng);
    let (y, _) = ffn_forward(&x, &w1, &b1, &w2, &b2).unwrap();
    let mut h = affine(&rows(&x), &w1, &b1);
    h.iter_mut().flatten().for_each(|v| *v = v.max(0.0));
    assert_close(&y, &affine(&h, &w2, &b2), 1e-12);
}

#[test]
fn layer_norm_matches_definition() {
    let mut rng = seeded_rng(15, "ln-oracle");
    let x = rand_t(&[5, 7], &mut rng);
    let g = rand_t(&[7], &mut rng);
    let b = rand_t(&[7], &mut rng);
    let (y, _) = layer_norm(&x, &g, &b).unwrap();
    let want: Vec<Vec<f64>> = rows(&x)
        .iter()
        .map(|r| {
            let mean = r.iter().sum::<f64>() / 7.0;
            let var = r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 7.0;
            r.iter()
                .enumerate()
                .map(|(j, v)| {
                    (v - mean) / (var + LAYER_NORM_EPS).sqrt() * g.data()[j] + b.data()[j]
                })
                .collect()
        })
        .collect();
    assert_close(&y, &want, 1e-10);
    let (plain, _) = layer_norm(&x, &Tensor::filled(&[7], 1.0), &Tensor::zeros(&[7])).unwrap();
    for r in 0..5 {
        assert!((plain.row(r).iter().sum::<f64>() / 7.0).abs() < 1e-9);
    }
}

#[test]
fn mse_matches_direct_evaluation() {
    let mut rng = seeded_rng(16, "mse-oracle");
    let p = rand_t(&[4, 5], &mut rng);
    let t = rand_t(&[4, 5], &mut rng);
    let (l, g) = mse_loss(&p, &t).unwrap();
    let want: f64 = p
        .data()
        .iter()
        .zip(t.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / 20.0;
    assert!((l - want).abs() < 1e-12);
    for ((gi, a), b) in g.data().iter().zip(p.data()).zip(t.data()) {
        assert!((gi - (a - b) / 10.0).abs() < 1e-15);
    }
}

fn matrix(max_rows: usize, cols: usize) -> impl Strategy<Value = Tensor> {
    (1..=max_rows).prop_flat_map(move |r| {
        prop::collection::vec(-30.0..30.0f64, r * cols)
            .prop_map(move |d| Tensor::from_vec(&[r, cols], d).unwrap())
    })
}

proptest! {
    #[test]
    fn softmax_rows_normalize_and_ignore_shifts(m in matrix(6, 5), shift in -50.0..50.0f64) {
        let s = softmax_rows(&m);
        let shifted = softmax_rows(&m.map(|v| v + shift));
        for r in 0..m.rows() {
            prop_assert!((s.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(s.row(r).iter().all(|&v| v >= 0.0));
            for (a, b) in s.row(r).iter().zip(shifted.row(r)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mhsa_is_permutation_equivariant(seed in 0u64..1000, perm in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle()) {
        let mut rng = seeded_rng(seed, "perm");
        let x = rand_t(&[5, 4], &mut rng);
        let ws: Vec<Tensor> = (0..8).map(|i| if i % 2 == 0 { rand_t(&[4, 4], &mut rng) } else { rand_t(&[4], &mut rng) }).collect();
        let p = MhsaParams { wq: &ws[0], bq: &ws[1], wk: &ws[2], bk: &ws[3], wv: &ws[4], bv: &ws[5], wo: &ws[6], bo: &ws[7] };
        let (y, _) = mhsa_forward(&x, p, 2, 5).unwrap();
        let xp = Tensor::from_vec(&[5, 4], perm.iter().flat_map(|&i| x.row(i).to_vec()).collect()).unwrap();
        let (yp, _) = mhsa_forward(&xp, p, 2, 5).unwrap();
        for (r, &src) in perm.iter().enumerate() {
            for (a, b) in yp.row(r).iter().zip(y.row(src)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adam_without_gradient_or_decay_is_identity(vals in prop::collection::vec(-5.0..5.0f64, 1..20), steps in 1usize..30) {
        let mut ps = ParamStore::new();
        let id = ps.add("p", Tensor::from_vec(&[vals.len()], vals.clone()).unwrap()).unwrap();
        let mut st = AdamState::new(&ps, AdamConfig { weight_decay: 0.0, ..Default::default() });
        for _ in 0..steps {
            adam_step(&mut ps, &mut st).unwrap();
        }
        prop_assert_eq!(ps.value(id).data(), &vals[..]);
    }
}
