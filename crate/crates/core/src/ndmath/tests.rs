use super::*;
use crate::rng::RngStream;
use rand::Rng;

fn random_matrix(rows: usize, cols: usize, stream: RngStream) -> Matrix {
    let mut rng = stream.rng();
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data)
}

/// Naive triple-loop product, the independent oracle for the kernels.
fn matmul_naive(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = 0.0;
            for k in 0..a.cols() {
                acc += a.at(i, k) * b.at(k, j);
            }
            out.set(i, j, acc);
        }
    }
    out
}

fn max_abs_diff(a: &Matrix, b: &Matrix) -> Real {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, Real::max)
}

fn max_rel_err(analytic: &[Real], fd: &[Real]) -> Real {
    analytic
        .iter()
        .zip(fd)
        .map(|(&a, &f)| (a - f).abs() / a.abs().max(f.abs()).max(1e-6))
        .fold(0.0, Real::max)
}

#[test]
fn relu_examples() {
    let x = Matrix::from_vec(1, 3, vec![-1.0, 0.0, 2.0]);
    assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
}

#[test]
fn relu_is_idempotent() {
    let x = random_matrix(6, 5, RngStream::new(11));
    let once = relu(&x);
    assert_eq!(relu(&once), once);
}

#[test]
fn relu_backward_zero_at_tie() {
    let x = Matrix::from_vec(1, 3, vec![-1.0, 0.0, 2.0]);
    let up = Matrix::from_vec(1, 3, vec![5.0, 5.0, 5.0]);
    assert_eq!(relu_backward(&x, &up).data(), &[0.0, 0.0, 5.0]);
}

#[test]
fn row_mean_identical_rows_returns_that_row() {
    let x = Matrix::from_vec(3, 2, vec![1.5, -2.0, 1.5, -2.0, 1.5, -2.0]);
    let out = row_mean(&x, &[0, 0, 0], 1);
    assert_eq!(out.data(), &[1.5, -2.0]);
}

#[test]
fn row_mean_matches_block_variant() {
    let x = random_matrix(12, 4, RngStream::new(3));
    let map: Vec<usize> = (0..12).map(|i| i / 3).collect();
    let general = row_mean(&x, &map, 4);
    let block = block_row_mean(&x, 3);
    assert!(max_abs_diff(&general, &block) < 1e-12);
}

#[cfg(not(feature = "f32"))]
#[test]
fn matmul_matches_naive_oracle() {
    let a = random_matrix(5, 4, RngStream::new(1));
    let b = random_matrix(4, 3, RngStream::new(2));
    assert!(max_abs_diff(&matmul(&a, &b), &matmul_naive(&a, &b)) < 1e-12);
}

#[test]
fn transposed_products_match_naive_oracle() {
    let a = random_matrix(7, 5, RngStream::new(4));
    let b = random_matrix(6, 5, RngStream::new(5));
    // A * B^T via naive on an explicitly transposed B.
    let mut bt = Matrix::zeros(b.cols(), b.rows());
    for i in 0..b.rows() {
        for j in 0..b.cols() {
            bt.set(j, i, b.at(i, j));
        }
    }
    assert!(max_abs_diff(&matmul_nt(&a, &b), &matmul_naive(&a, &bt)) < 1e-12);

    let c = random_matrix(7, 3, RngStream::new(6));
    let mut at = Matrix::zeros(a.cols(), a.rows());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            at.set(j, i, a.at(i, j));
        }
    }
    assert!(max_abs_diff(&matmul_tn(&a, &c), &matmul_naive(&at, &c)) < 1e-12);
}

#[test]
fn sequential_and_dispatched_kernels_agree() {
    // Large enough to trip the parallel threshold when the feature is on.
    let a = random_matrix(128, 96, RngStream::new(7));
    let b = random_matrix(96, 80, RngStream::new(8));
    assert_eq!(matmul(&a, &b), matmul_seq(&a, &b));
    let c = random_matrix(128, 96, RngStream::new(9));
    assert_eq!(matmul_nt(&a, &c), matmul_nt_seq(&a, &c));
    let d = random_matrix(128, 80, RngStream::new(10));
    assert_eq!(matmul_tn(&a, &d), matmul_tn_seq(&a, &d));
}

#[test]
#[should_panic(expected = "shape mismatch")]
fn matmul_shape_mismatch_names_both_shapes() {
    let a = Matrix::zeros(2, 3);
    let b = Matrix::zeros(4, 2);
    matmul(&a, &b);
}

#[test]
fn concat_split_round_trip() {
    let a = random_matrix(4, 3, RngStream::new(12));
    let b = random_matrix(4, 5, RngStream::new(13));
    let cat = concat_cols(&a, &b);
    assert_eq!(cat.cols(), 8);
    let (a2, b2) = split_cols(&cat, 3);
    assert_eq!(a, a2);
    assert_eq!(b, b2);
}

#[test]
fn l2_normalize_examples() {
    let x = Matrix::from_vec(2, 2, vec![3.0, 4.0, 0.0, 0.0]);
    let (out, norms) = l2_normalize_rows(&x);
    assert!((out.at(0, 0) - 0.6).abs() < 1e-12);
    assert!((out.at(0, 1) - 0.8).abs() < 1e-12);
    assert_eq!(out.row(1), &[0.0, 0.0]);
    assert_eq!(norms[1], 0.0);
}

#[test]
fn l2_normalize_row_norms_are_zero_or_one() {
    let mut x = random_matrix(8, 6, RngStream::new(14));
    x.row_mut(3).iter_mut().for_each(|v| *v = 0.0);
    let (out, _) = l2_normalize_rows(&x);
    for i in 0..out.rows() {
        let n = out.row(i).iter().map(|v| v * v).sum::<Real>().sqrt();
        assert!(n == 0.0 || (n - 1.0).abs() < 1e-9, "row {i} norm {n}");
    }
}

#[cfg(not(feature = "f32"))]
#[test]
fn l2_normalize_gradient_matches_finite_differences() {
    let x = random_matrix(4, 6, RngStream::new(15));
    let w = random_matrix(4, 6, RngStream::new(16));
    // Scalar probe: sum(normalize(x) .* w).
    let f = |flat: &[Real]| {
        let m = Matrix::from_vec(4, 6, flat.to_vec());
        let (n, _) = l2_normalize_rows(&m);
        n.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
    };
    let (normalized, norms) = l2_normalize_rows(&x);
    let analytic = l2_normalize_backward(&normalized, &norms, &w);
    let fd = finite_diff_grad(f, x.data(), 1e-6);
    assert!(max_rel_err(analytic.data(), &fd) < 1e-6);
}

#[test]
fn softmax_uniform_logits_loss_is_ln_c() {
    let logits = Matrix::from_vec(2, 4, vec![0.3; 8]);
    let mut onehot = Matrix::zeros(2, 4);
    onehot.set(0, 1, 1.0);
    onehot.set(1, 3, 1.0);
    let (loss, _) = softmax_xent(&logits, &onehot);
    assert!((loss - 2.0 * (4.0 as Real).ln()).abs() < 1e-9);
}

#[test]
fn softmax_rows_sum_to_one_and_grad_rows_sum_to_zero() {
    let logits = random_matrix(5, 7, RngStream::new(17));
    let probs = softmax_rows(&logits);
    let mut onehot = Matrix::zeros(5, 7);
    for i in 0..5 {
        onehot.set(i, i % 7, 1.0);
    }
    let (_, grad) = softmax_xent(&logits, &onehot);
    let tol: Real = if cfg!(feature = "f32") { 1e-5 } else { 1e-9 };
    for i in 0..5 {
        let p: Real = probs.row(i).iter().sum();
        assert!((p - 1.0).abs() < tol);
        let g: Real = grad.row(i).iter().sum();
        assert!(g.abs() < tol);
    }
}

#[test]
fn sigmoid_xent_all_zero_row_matches_softplus_sum() {
    let logits = Matrix::from_vec(1, 3, vec![0.5, -1.0, 2.0]);
    let target = Matrix::zeros(1, 3);
    let (loss, _) = sigmoid_xent(&logits, &target);
    let expected: Real = logits.data().iter().map(|&z| (1.0 + z.exp()).ln()).sum();
    let tol: Real = if cfg!(feature = "f32") { 1e-5 } else { 1e-9 };
    assert!((loss - expected).abs() < tol);
}

#[cfg(not(feature = "f32"))]
#[test]
fn loss_gradients_match_finite_differences() {
    let logits = random_matrix(3, 5, RngStream::new(18));
    let mut onehot = Matrix::zeros(3, 5);
    for i in 0..3 {
        onehot.set(i, (i * 2) % 5, 1.0);
    }
    let (_, grad) = softmax_xent(&logits, &onehot);
    let fd = finite_diff_grad(
        |flat| softmax_xent(&Matrix::from_vec(3, 5, flat.to_vec()), &onehot).0,
        logits.data(),
        1e-5,
    );
    assert!(max_rel_err(grad.data(), &fd) < 1e-6);

    let mut multihot = Matrix::zeros(3, 5);
    multihot.set(0, 0, 1.0);
    multihot.set(0, 4, 1.0);
    multihot.set(2, 1, 1.0);
    let (_, grad) = sigmoid_xent(&logits, &multihot);
    let fd = finite_diff_grad(
        |flat| sigmoid_xent(&Matrix::from_vec(3, 5, flat.to_vec()), &multihot).0,
        logits.data(),
        1e-5,
    );
    assert!(max_rel_err(grad.data(), &fd) < 1e-6);
}

#[cfg(not(feature = "f32"))]
#[test]
fn relu_and_block_mean_gradients_match_finite_differences() {
    let x = random_matrix(6, 4, RngStream::new(19));
    let w = random_matrix(6, 4, RngStream::new(20));
    let f = |flat: &[Real]| {
        let m = Matrix::from_vec(6, 4, flat.to_vec());
        relu(&m)
            .data()
            .iter()
            .zip(w.data())
            .map(|(a, b)| a * b)
            .sum()
    };
    let analytic = relu_backward(&x, &w);
    let fd = finite_diff_grad(f, x.data(), 1e-6);
    assert!(max_rel_err(analytic.data(), &fd) < 1e-4);

    let wm = random_matrix(2, 4, RngStream::new(21));
    let g = |flat: &[Real]| {
        let m = Matrix::from_vec(6, 4, flat.to_vec());
        block_row_mean(&m, 3)
            .data()
            .iter()
            .zip(wm.data())
            .map(|(a, b)| a * b)
            .sum()
    };
    let analytic = block_row_mean_backward(&wm, 3);
    let fd = finite_diff_grad(g, x.data(), 1e-6);
    assert!(max_rel_err(analytic.data(), &fd) < 1e-6);
}

#[test]
fn adam_zero_grad_leaves_value_unchanged() {
    let mut p = Param::new(Matrix::from_vec(1, 2, vec![1.0, -2.0]));
    adam_step(&mut p, &AdamConfig::with_lr(0.1));
    assert_eq!(p.value.data(), &[1.0, -2.0]);
    assert_eq!(p.step_count, 1);
}

#[test]
fn adam_first_step_moves_by_about_lr() {
    let mut p = Param::new(Matrix::from_vec(1, 1, vec![0.5]));
    p.grad.set(0, 0, 3.7);
    let lr = 0.05;
    adam_step(&mut p, &AdamConfig::with_lr(lr));
    let delta: Real = 0.5 - p.value.at(0, 0);
    assert!(delta > 0.0, "moves against the gradient");
    assert!(delta <= lr * 1.0001 && delta > lr * 0.99);
}

#[test]
fn adam_converges_on_quadratic() {
    // f(w) = (w - 3)^2, grad = 2(w - 3), from w = 0 with lr 0.1.
    let mut p = Param::new(Matrix::from_vec(1, 1, vec![0.0]));
    let cfg = AdamConfig::with_lr(0.1);
    for _ in 0..100 {
        let w = p.value.at(0, 0);
        p.grad.set(0, 0, 2.0 * (w - 3.0));
        adam_step(&mut p, &cfg);
    }
    assert!((p.value.at(0, 0) - 3.0).abs() < 0.5);
}

#[cfg(not(feature = "f32"))]
#[test]
fn finite_diff_on_square_and_constant() {
    let grad = finite_diff_grad(|x| x[0] * x[0], &[3.0], 1e-5);
    assert!((grad[0] - 6.0).abs() < 1e-8);
    let grad = finite_diff_grad(|_| 42.0, &[1.0, 2.0, 3.0], 1e-5);
    assert!(grad.iter().all(|&g| g == 0.0));
}

#[test]
fn gather_rows_copies_in_order() {
    let x = random_matrix(5, 3, RngStream::new(22));
    let out = x.gather_rows(&[4, 0, 4]);
    assert_eq!(out.row(0), x.row(4));
    assert_eq!(out.row(1), x.row(0));
    assert_eq!(out.row(2), x.row(4));
}
