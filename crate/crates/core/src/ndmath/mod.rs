//! Minimal dense numerical core: row-major matrices, the handful of
//! differentiable operations the model needs, loss functions with gradients,
//! Adam, and a finite-difference gradient checker used as the testing oracle.
//!
//! Backward passes are hand-written per operation; the model composes them
//! explicitly. There is no tape and no broadcasting.

mod kernels;
mod loss;
mod optim;

pub use kernels::{matmul, matmul_nt, matmul_nt_seq, matmul_seq, matmul_tn, matmul_tn_seq};
pub use loss::{sigmoid_rows, sigmoid_xent, softmax_rows, softmax_xent};
pub use optim::{adam_step, AdamConfig, Param};

/// Working precision. 64-bit by default so gradient tolerances stay
/// meaningful; the `f32` feature switches the whole engine to 32-bit.
#[cfg(not(feature = "f32"))]
pub type Real = f64;
#[cfg(feature = "f32")]
pub type Real = f32;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Real>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Real>) -> Self {
        assert!(
            data.len() == rows * cols,
            "matrix data length {} does not match shape {}x{}",
            data.len(),
            rows,
            cols
        );
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Real] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Real] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Real] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Real] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn at(&self, i: usize, j: usize) -> Real {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Real) {
        self.data[i * self.cols + j] = v;
    }

    /// Copy the given rows of `self` into a new matrix, in order.
    pub fn gather_rows(&self, ids: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(ids.len(), self.cols);
        for (dst, &src) in ids.iter().enumerate() {
            out.row_mut(dst).copy_from_slice(self.row(src));
        }
        out
    }

    pub fn fill(&mut self, v: Real) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// `self += scale * other`, elementwise.
    pub fn add_scaled(&mut self, other: &Matrix, scale: Real) {
        assert_shape_eq(self, other, "add_scaled");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }
}

fn assert_shape_eq(a: &Matrix, b: &Matrix, op: &str) {
    assert!(
        a.rows == b.rows && a.cols == b.cols,
        "{op}: shape mismatch {}x{} vs {}x{}",
        a.rows,
        a.cols,
        b.rows,
        b.cols
    );
}

/// Elementwise max(0, x).
pub fn relu(x: &Matrix) -> Matrix {
    let data = x
        .data
        .iter()
        .map(|&v| if v > 0.0 { v } else { 0.0 })
        .collect();
    Matrix {
        rows: x.rows,
        cols: x.cols,
        data,
    }
}

/// Pass `upstream` where `x > 0`, zero elsewhere. The subgradient at 0 is 0.
pub fn relu_backward(x: &Matrix, upstream: &Matrix) -> Matrix {
    assert_shape_eq(x, upstream, "relu_backward");
    let data = x
        .data
        .iter()
        .zip(&upstream.data)
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Matrix {
        rows: x.rows,
        cols: x.cols,
        data,
    }
}

/// Horizontal concatenation `[A | B]`.
pub fn concat_cols(a: &Matrix, b: &Matrix) -> Matrix {
    assert!(
        a.rows == b.rows,
        "concat_cols: shape mismatch {}x{} vs {}x{}",
        a.rows,
        a.cols,
        b.rows,
        b.cols
    );
    let cols = a.cols + b.cols;
    let mut out = Matrix::zeros(a.rows, cols);
    for i in 0..a.rows {
        out.row_mut(i)[..a.cols].copy_from_slice(a.row(i));
        out.row_mut(i)[a.cols..].copy_from_slice(b.row(i));
    }
    out
}

/// Split a matrix into its first `left_cols` columns and the rest.
pub fn split_cols(x: &Matrix, left_cols: usize) -> (Matrix, Matrix) {
    assert!(
        left_cols <= x.cols,
        "split_cols: {} > {}",
        left_cols,
        x.cols
    );
    let right_cols = x.cols - left_cols;
    let mut a = Matrix::zeros(x.rows, left_cols);
    let mut b = Matrix::zeros(x.rows, right_cols);
    for i in 0..x.rows {
        a.row_mut(i).copy_from_slice(&x.row(i)[..left_cols]);
        b.row_mut(i).copy_from_slice(&x.row(i)[left_cols..]);
    }
    (a, b)
}

/// Average the rows of `x` grouped by `group_map` (one group id per row,
/// ids in `0..num_groups`). Empty groups yield zero rows.
pub fn row_mean(x: &Matrix, group_map: &[usize], num_groups: usize) -> Matrix {
    assert!(
        group_map.len() == x.rows,
        "row_mean: group map length {} does not match {} rows",
        group_map.len(),
        x.rows
    );
    let mut out = Matrix::zeros(num_groups, x.cols);
    let mut counts = vec![0usize; num_groups];
    for (i, &g) in group_map.iter().enumerate() {
        assert!(
            g < num_groups,
            "row_mean: group id {g} out of range {num_groups}"
        );
        counts[g] += 1;
        let row = x.row(i);
        let acc = out.row_mut(g);
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    for (g, &c) in counts.iter().enumerate() {
        if c > 0 {
            let inv = 1.0 / c as Real;
            out.row_mut(g).iter_mut().for_each(|v| *v *= inv);
        }
    }
    out
}

/// `row_mean` specialized to contiguous blocks of uniform size: rows
/// `[g*block, (g+1)*block)` form group `g`. This is the layout of a sample
/// tree level, where each parent owns a fixed fan-out block of children.
pub fn block_row_mean(x: &Matrix, block: usize) -> Matrix {
    assert!(
        block >= 1 && x.rows.is_multiple_of(block),
        "block_row_mean: {} rows not divisible by block {}",
        x.rows,
        block
    );
    let groups = x.rows / block;
    let inv = 1.0 / block as Real;
    let mut out = Matrix::zeros(groups, x.cols);
    for g in 0..groups {
        let acc = out.row_mut(g);
        for i in g * block..(g + 1) * block {
            let row = &x.data[i * x.cols..(i + 1) * x.cols];
            for (a, &v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|v| *v *= inv);
    }
    out
}

/// Backward of [`block_row_mean`]: each child row receives its parent's
/// upstream row scaled by `1/block`.
pub fn block_row_mean_backward(upstream: &Matrix, block: usize) -> Matrix {
    let inv = 1.0 / block as Real;
    let mut out = Matrix::zeros(upstream.rows * block, upstream.cols);
    for g in 0..upstream.rows {
        let src = upstream.row(g);
        for i in g * block..(g + 1) * block {
            for (o, &v) in out.row_mut(i).iter_mut().zip(src) {
                *o = v * inv;
            }
        }
    }
    out
}

/// Scale every nonzero row to unit Euclidean norm; zero rows pass through
/// unchanged. Returns the normalized matrix and the original row norms.
pub fn l2_normalize_rows(x: &Matrix) -> (Matrix, Vec<Real>) {
    let mut out = x.clone();
    let mut norms = Vec::with_capacity(x.rows);
    for i in 0..x.rows {
        let n = x.row(i).iter().map(|v| v * v).sum::<Real>().sqrt();
        norms.push(n);
        if n > 0.0 {
            out.row_mut(i).iter_mut().for_each(|v| *v /= n);
        }
    }
    (out, norms)
}

/// Backward of [`l2_normalize_rows`]. `normalized` and `norms` are the
/// forward outputs. Zero rows pass the upstream gradient through unchanged.
pub fn l2_normalize_backward(normalized: &Matrix, norms: &[Real], upstream: &Matrix) -> Matrix {
    assert_shape_eq(normalized, upstream, "l2_normalize_backward");
    let mut out = upstream.clone();
    for (i, &n) in norms.iter().enumerate() {
        if n > 0.0 {
            let y = normalized.row(i);
            let g = upstream.row(i);
            let dot: Real = y.iter().zip(g).map(|(a, b)| a * b).sum();
            for ((o, &yi), &gi) in out.row_mut(i).iter_mut().zip(y).zip(g) {
                *o = (gi - yi * dot) / n;
            }
        }
    }
    out
}

/// Central-difference gradient of a scalar function of a flat vector:
/// `(f(x + h e_i) - f(x - h e_i)) / 2h` per coordinate. `f` must be a pure
/// function of its argument (the `FnMut` bound only allows scratch reuse).
pub fn finite_diff_grad<F: FnMut(&[Real]) -> Real>(mut f: F, x: &[Real], h: Real) -> Vec<Real> {
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(&probe);
        probe[i] = orig - h;
        let down = f(&probe);
        probe[i] = orig;
        grad.push((up - down) / (2.0 * h));
    }
    grad
}

#[cfg(test)]
mod tests;
