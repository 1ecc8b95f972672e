//! Dense matrix products. Each product has a sequential kernel and, under the
//! `parallel` feature, a rayon kernel that splits over output rows. The public
//! entry points dispatch on the feature and a size threshold; both paths
//! produce bitwise-identical results because every output element is
//! accumulated in the same order.

use super::{Matrix, Real};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many multiply-adds the rayon fan-out costs more than it saves.
#[cfg(feature = "parallel")]
const PAR_MIN_FLOPS: usize = 1 << 19;

fn mm_row(out_row: &mut [Real], a_row: &[Real], b: &Matrix) {
    for (k, &aik) in a_row.iter().enumerate() {
        if aik == 0.0 {
            continue;
        }
        let b_row = b.row(k);
        for (o, &bkj) in out_row.iter_mut().zip(b_row) {
            *o += aik * bkj;
        }
    }
}

/// `A * B`, sequential kernel.
pub fn matmul_seq(a: &Matrix, b: &Matrix) -> Matrix {
    assert!(
        a.cols() == b.rows(),
        "matmul: shape mismatch {}x{} vs {}x{}",
        a.rows(),
        a.cols(),
        b.rows(),
        b.cols()
    );
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        mm_row(out.row_mut(i), a.row(i), b);
    }
    out
}

/// `A * B`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    #[cfg(feature = "parallel")]
    {
        if a.rows() * a.cols() * b.cols() >= PAR_MIN_FLOPS {
            assert!(
                a.cols() == b.rows(),
                "matmul: shape mismatch {}x{} vs {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            );
            let cols = b.cols();
            let mut out = Matrix::zeros(a.rows(), cols);
            out.data_mut()
                .par_chunks_mut(cols)
                .enumerate()
                .for_each(|(i, out_row)| mm_row(out_row, a.row(i), b));
            return out;
        }
    }
    matmul_seq(a, b)
}

fn dot(a: &[Real], b: &[Real]) -> Real {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `A * B^T`, sequential kernel.
pub fn matmul_nt_seq(a: &Matrix, b: &Matrix) -> Matrix {
    assert!(
        a.cols() == b.cols(),
        "matmul_nt: shape mismatch {}x{} vs {}x{}^T",
        a.rows(),
        a.cols(),
        b.rows(),
        b.cols()
    );
    let mut out = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        let a_row = a.row(i);
        for (j, o) in out.row_mut(i).iter_mut().enumerate() {
            *o = dot(a_row, b.row(j));
        }
    }
    out
}

/// `A * B^T`. Both operands are row-major, so every output element is a
/// dot product of two contiguous rows.
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Matrix {
    #[cfg(feature = "parallel")]
    {
        if a.rows() * a.cols() * b.rows() >= PAR_MIN_FLOPS {
            assert!(
                a.cols() == b.cols(),
                "matmul_nt: shape mismatch {}x{} vs {}x{}^T",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            );
            let cols = b.rows();
            let mut out = Matrix::zeros(a.rows(), cols);
            out.data_mut()
                .par_chunks_mut(cols)
                .enumerate()
                .for_each(|(i, out_row)| {
                    let a_row = a.row(i);
                    for (j, o) in out_row.iter_mut().enumerate() {
                        *o = dot(a_row, b.row(j));
                    }
                });
            return out;
        }
    }
    matmul_nt_seq(a, b)
}

fn tn_row(out_row: &mut [Real], i: usize, a: &Matrix, b: &Matrix) {
    for r in 0..a.rows() {
        let ari = a.at(r, i);
        if ari == 0.0 {
            continue;
        }
        let b_row = b.row(r);
        for (o, &brj) in out_row.iter_mut().zip(b_row) {
            *o += ari * brj;
        }
    }
}

/// `A^T * B`, sequential kernel.
pub fn matmul_tn_seq(a: &Matrix, b: &Matrix) -> Matrix {
    assert!(
        a.rows() == b.rows(),
        "matmul_tn: shape mismatch {}x{}^T vs {}x{}",
        a.rows(),
        a.cols(),
        b.rows(),
        b.cols()
    );
    let mut out = Matrix::zeros(a.cols(), b.cols());
    for i in 0..a.cols() {
        tn_row(out.row_mut(i), i, a, b);
    }
    out
}

/// `A^T * B`.
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Matrix {
    #[cfg(feature = "parallel")]
    {
        if a.rows() * a.cols() * b.cols() >= PAR_MIN_FLOPS {
            assert!(
                a.rows() == b.rows(),
                "matmul_tn: shape mismatch {}x{}^T vs {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            );
            let cols = b.cols();
            let mut out = Matrix::zeros(a.cols(), cols);
            out.data_mut()
                .par_chunks_mut(cols)
                .enumerate()
                .for_each(|(i, out_row)| tn_row(out_row, i, a, b));
            return out;
        }
    }
    matmul_tn_seq(a, b)
}
