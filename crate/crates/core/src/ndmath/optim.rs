//! Trainable parameter state and the Adam update.

use serde::{Deserialize, Serialize};

use super::{Matrix, Real};

/// A weight matrix with its gradient accumulator and Adam moments.
#[derive(Clone, Debug)]
pub struct Param {
    pub value: Matrix,
    pub grad: Matrix,
    pub adam_m: Matrix,
    pub adam_v: Matrix,
    pub step_count: u64,
}

impl Param {
    pub fn new(value: Matrix) -> Self {
        let (r, c) = (value.rows(), value.cols());
        Self {
            value,
            grad: Matrix::zeros(r, c),
            adam_m: Matrix::zeros(r, c),
            adam_v: Matrix::zeros(r, c),
            step_count: 0,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: Real,
    pub beta1: Real,
    pub beta2: Real,
    pub epsilon: Real,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: Real) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One Adam update with bias correction. The gradient is left untouched;
/// the caller zeroes it between batches.
pub fn adam_step(param: &mut Param, cfg: &AdamConfig) {
    assert!(
        cfg.learning_rate > 0.0,
        "adam: learning rate must be positive"
    );
    assert!(
        (0.0..1.0).contains(&cfg.beta1) && (0.0..1.0).contains(&cfg.beta2),
        "adam: betas must lie in [0, 1)"
    );
    param.step_count += 1;
    let t = param.step_count as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..param.value.data().len() {
        let g = param.grad.data()[i];
        let m = cfg.beta1 * param.adam_m.data()[i] + (1.0 - cfg.beta1) * g;
        let v = cfg.beta2 * param.adam_v.data()[i] + (1.0 - cfg.beta2) * g * g;
        param.adam_m.data_mut()[i] = m;
        param.adam_v.data_mut()[i] = v;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        param.value.data_mut()[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}
