//! Micro-averaged F1 over pooled (node, label) decisions.

use crate::ndmath::Matrix;

/// Micro-F1 = 2*TP / (2*TP + FP + FN), pooled over every (row, label) cell
/// of the 0/1 decision matrices. For one-hot single-label decisions this
/// equals plain accuracy. Returns 0 with a warning when the denominator is
/// 0 (no positives anywhere).
pub fn micro_f1(predictions: &Matrix, labels: &Matrix) -> f64 {
    assert!(
        predictions.rows() == labels.rows() && predictions.cols() == labels.cols(),
        "micro_f1: shape mismatch {}x{} vs {}x{}",
        predictions.rows(),
        predictions.cols(),
        labels.rows(),
        labels.cols()
    );
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fneg = 0u64;
    for (&p, &y) in predictions.data().iter().zip(labels.data()) {
        let p = p != 0.0;
        let y = y != 0.0;
        match (p, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fneg;
    if denom == 0 {
        eprintln!("micro_f1: no positive decisions or labels; reporting 0");
        return 0.0;
    }
    2.0 * tp as f64 / denom as f64
}
