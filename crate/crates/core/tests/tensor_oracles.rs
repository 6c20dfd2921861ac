mod common;

use fforge::tensor::{dot, BatchNormMode, Graph, Tensor};
use proptest::prelude::*;
use rand::Rng;

fn max_abs_diff(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn conv2d_matches_direct_loops() {
    let mut r = common::rng(1);
    for &(n, cin, cout, h, w, k, s, p) in &[
        (1, 1, 1, 5, 5, 3, 1, 0),
        (2, 3, 4, 7, 6, 3, 2, 1),
        (1, 2, 3, 8, 8, 1, 1, 0),
        (2, 2, 2, 9, 7, 5, 3, 2),
        (1, 4, 2, 6, 6, 2, 2, 0),
    ] {
        let x = common::random_tensor(&mut r, [n, cin, h, w]);
        let wt = common::random_tensor(&mut r, [cout, cin, k, k]);
        let mut g = Graph::new();
        let (xv, wv) = (g.constant(x.clone()), g.constant(wt.clone()));
        let y = g.conv2d(xv, wv, None, s, p).unwrap();
        assert!(max_abs_diff(g.value(y), &common::conv2d(&x, &wt, s, p)) < 1e-12);
    }
}

#[test]
fn conv_transpose2d_matches_scatter_definition() {
    let mut r = common::rng(2);
    for &(n, cin, cout, h, w, k, s, p, op) in &[
        (1, 1, 1, 3, 3, 3, 2, 1, 1),
        (2, 3, 2, 4, 5, 2, 2, 0, 0),
        (1, 2, 3, 5, 4, 3, 1, 1, 0),
        (1, 2, 2, 3, 3, 4, 3, 1, 2),
    ] {
        let x = common::random_tensor(&mut r, [n, cin, h, w]);
        let wt = common::random_tensor(&mut r, [cin, cout, k, k]);
        let mut g = Graph::new();
        let (xv, wv) = (g.constant(x.clone()), g.constant(wt.clone()));
        let y = g.conv_transpose2d(xv, wv, None, s, p, op).unwrap();
        assert!(max_abs_diff(g.value(y), &common::conv_transpose2d(&x, &wt, s, p, op)) < 1e-12);
    }
}

/// The transpose convolution equals the transpose of the explicit conv matrix.
#[test]
fn conv_transpose_is_the_explicit_adjoint_matrix() {
    let mut r = common::rng(3);
    let (cin, cout, h, w, k, s, p) = (2, 3, 6, 6, 3, 2, 1);
    let wt = common::random_tensor(&mut r, [cout, cin, k, k]);
    let x_shape = [1, cin, h, w];
    let n_in: usize = x_shape.iter().product();
    let columns: Vec<Tensor<f64>> = (0..n_in)
        .map(|j| {
            let mut e = vec![0.0; n_in];
            e[j] = 1.0;
            common::conv2d(&Tensor::new(x_shape, e).unwrap(), &wt, s, p)
        })
        .collect();
    let y_shape = columns[0].shape();
    let n_out = columns[0].len();
    let op = (h + 2 * p - k) % s;
    for i in 0..n_out {
        let mut e = vec![0.0; n_out];
        e[i] = 1.0;
        let mut g = Graph::new();
        let yv = g.constant(Tensor::new(y_shape, e).unwrap());
        let wv = g.constant(wt.clone());
        let row = g.conv_transpose2d(yv, wv, None, s, p, op).unwrap();
        assert_eq!(g.shape(row), x_shape);
        for j in 0..n_in {
            assert!((g.value(row).data()[j] - columns[j].data()[i]).abs() < 1e-14);
        }
    }
}

#[test]
fn batchnorm_matches_definition() {
    let mut r = common::rng(4);
    let x = common::random_tensor(&mut r, [3, 2, 4, 5]);
    let gamma = [1.5, -0.5];
    let beta = [0.1, 0.2];
    let mut g = Graph::new();
    let xv = g.constant(x.clone());
    let gv = g.constant(Tensor::vector(gamma.to_vec()));
    let bv = g.constant(Tensor::vector(beta.to_vec()));
    let (y, stats) = g.batchnorm2d(xv, gv, bv, None, BatchNormMode::Train, 1e-5).unwrap();
    assert!(max_abs_diff(g.value(y), &common::batchnorm(&x, &gamma, &beta, 1e-5)) < 1e-12);
    let (mean, var) = stats.unwrap();
    // Running-stat update uses the unbiased variance.
    let m = 3 * 4 * 5;
    let ch0: Vec<f64> = (0..3).flat_map(|b| x.data()[b * 40..b * 40 + 20].to_vec()).collect();
    let mu = ch0.iter().sum::<f64>() / m as f64;
    let unbiased = ch0.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (m - 1) as f64;
    assert!((mean[0] - mu).abs() < 1e-14 && (var[0] - unbiased).abs() < 1e-14);

    let rm = [0.3, -0.2];
    let rv = [2.0, 0.5];
    let (ye, _) = g
        .batchnorm2d(xv, gv, bv, Some((&rm, &rv)), BatchNormMode::Eval, 1e-5)
        .unwrap();
    let k = 7;
    let expect = (x.data()[k] - rm[0]) / (rv[0] + 1e-5f64).sqrt() * gamma[0] + beta[0];
    assert!((g.value(ye).data()[k] - expect).abs() < 1e-14);
}

#[test]
fn fully_connected_matches_matmul() {
    let mut r = common::rng(5);
    let x = common::random_tensor(&mut r, [4, 3, 2, 2]);
    let w = common::random_tensor(&mut r, [12, 5, 1, 1]);
    let b: Vec<f64> = (0..5).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut g = Graph::new();
    let (xv, wv, bv) = (g.constant(x.clone()), g.constant(w.clone()), g.constant(Tensor::vector(b.clone())));
    let y = g.fully_connected(xv, wv, bv).unwrap();
    assert!(max_abs_diff(g.value(y), &common::fully_connected(&x, &w, &b)) < 1e-12);
}

#[test]
fn tv_and_mse_match_loops() {
    let mut r = common::rng(6);
    let a = common::random_tensor(&mut r, [2, 1, 5, 7]);
    let b = common::random_tensor(&mut r, [2, 1, 5, 7]);
    let mut g = Graph::new();
    let (av, bv) = (g.constant(a.clone()), g.constant(b.clone()));
    let tv = fforge::objectives::tv_norm(&mut g, av);
    assert!((g.item(tv) - common::total_variation(&a)).abs() < 1e-13);
    let m = fforge::objectives::mse(&mut g, av, bv).unwrap();
    assert!((g.item(m) - common::mse(&a, &b)).abs() < 1e-13);

    let step = g.constant(Tensor::from_f64_slice([1, 1, 2, 2], &[0.0, 1.0, 0.0, 1.0]).unwrap());
    let tv = fforge::objectives::tv_norm(&mut g, step);
    assert_eq!(g.item(tv), 0.5);
}

/// A random conv geometry together with the output padding that makes the
/// transpose map back onto the input extent.
pub fn geometry() -> impl Strategy<Value = (usize, usize, usize, usize, usize, usize, usize, u64)> {
    (1usize..4, 1usize..4, 1usize..5, 1usize..4, 0usize..3, 4usize..10, 4usize..10, any::<u64>())
        .prop_filter("kernel fits", |&(_, _, k, _, p, h, w, _)| h + 2 * p >= k && w + 2 * p >= k && p < k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_and_transpose_are_adjoint((cin, cout, k, s, p, h, w, seed) in geometry()) {
        let mut r = common::rng(seed);
        let x = common::random_tensor(&mut r, [2, cin, h, w]);
        let wt = common::random_tensor(&mut r, [cout, cin, k, k]);
        let mut g = Graph::new();
        let (xv, wv) = (g.constant(x.clone()), g.constant(wt));
        let y = g.conv2d(xv, wv, None, s, p).unwrap();
        let probe = common::random_tensor(&mut r, g.shape(y));
        let pv = g.constant(probe.clone());
        let op_h = (h + 2 * p - k) % s;
        let op_w = (w + 2 * p - k) % s;
        prop_assume!(op_h == op_w);
        let xt = g.conv_transpose2d(pv, wv, None, s, p, op_h).unwrap();
        prop_assert_eq!(g.shape(xt), x.shape());
        let lhs = dot(g.value(y), &probe).unwrap();
        let rhs = dot(&x, g.value(xt)).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-8, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn relu_and_sigmoid_ranges(vals in proptest::collection::vec(-50.0f64..50.0, 1..40)) {
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(vals.clone()));
        let r = g.relu(x);
        let s = g.sigmoid(x);
        for (k, v) in vals.iter().enumerate() {
            prop_assert_eq!(g.value(r).data()[k], v.max(0.0));
            let sv = g.value(s).data()[k];
            prop_assert!((0.0..=1.0).contains(&sv));
        }
    }
}
