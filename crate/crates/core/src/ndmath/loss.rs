//! Cross-entropy losses in numerically stable fused form. Both return the
//! loss summed over all rows together with the gradient w.r.t. the logits.

use super::{Matrix, Real};

fn assert_same_shape(a: &Matrix, b: &Matrix, op: &str) {
    assert!(
        a.rows() == b.rows() && a.cols() == b.cols(),
        "{op}: shape mismatch {}x{} vs {}x{}",
        a.rows(),
        a.cols(),
        b.rows(),
        b.cols()
    );
}

/// Row-wise softmax probabilities.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().cloned().fold(Real::NEG_INFINITY, Real::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

/// Elementwise logistic sigmoid, computed without overflow.
pub fn sigmoid_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for v in out.data_mut() {
        *v = if *v >= 0.0 {
            1.0 / (1.0 + (-*v).exp())
        } else {
            let e = v.exp();
            e / (1.0 + e)
        };
    }
    out
}

/// Softmax cross-entropy against one-hot targets: `-sum_rows sum_i y_i log p_i`
/// with `p = softmax(logits)`, fused through log-sum-exp. Gradient is `p - y`.
pub fn softmax_xent(logits: &Matrix, onehot: &Matrix) -> (Real, Matrix) {
    assert_same_shape(logits, onehot, "softmax_xent");
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    for i in 0..logits.rows() {
        let z = logits.row(i);
        let y = onehot.row(i);
        let max = z.iter().cloned().fold(Real::NEG_INFINITY, Real::max);
        let sum_exp: Real = z.iter().map(|&v| (v - max).exp()).sum();
        let log_sum = max + sum_exp.ln();
        for (j, g) in grad.row_mut(i).iter_mut().enumerate() {
            let p = (z[j] - log_sum).exp();
            *g = p - y[j];
            loss += y[j] * (log_sum - z[j]);
        }
    }
    (loss, grad)
}

/// Elementwise sigmoid cross-entropy against multi-hot targets, stable form
/// `max(z,0) - y*z + ln(1 + exp(-|z|))` summed over all entries. Gradient is
/// `sigmoid(z) - y`.
pub fn sigmoid_xent(logits: &Matrix, multihot: &Matrix) -> (Real, Matrix) {
    assert_same_shape(logits, multihot, "sigmoid_xent");
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    for ((g, &z), &y) in grad
        .data_mut()
        .iter_mut()
        .zip(logits.data())
        .zip(multihot.data())
    {
        loss += z.max(0.0) - y * z + (-z.abs()).exp().ln_1p();
        let s = if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        };
        *g = s - y;
    }
    (loss, grad)
}
