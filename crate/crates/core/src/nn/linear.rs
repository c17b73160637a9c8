use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Axis};

use super::params::{join, Params};
use crate::error::{shape_err, Result};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fully connected layer on `(batch, features)` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    /// `(out, in)`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn new(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.weight.ncols() {
            return shape_err(format!(
                "linear layer expects {} inputs, got {}",
                self.weight.ncols(),
                x.ncols()
            ));
        }
        let mut y = Array2::zeros((x.nrows(), self.weight.nrows()));
        general_mat_mul(1.0, x, &self.weight.t(), 0.0, &mut y);
        y += &self.bias;
        Ok(y)
    }

    pub fn backward(&self, x: &Array2<f64>, dy: &Array2<f64>, grad: &mut Linear) -> Array2<f64> {
        general_mat_mul(1.0, &dy.t(), x, 1.0, &mut grad.weight);
        grad.bias += &dy.sum_axis(Axis(0));
        dy.dot(&self.weight)
    }
}

impl Params for Linear {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f(&join(prefix, "weight"), self.weight.shape(), self.weight.as_slice().unwrap());
        f(&join(prefix, "bias"), self.bias.shape(), self.bias.as_slice().unwrap());
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        let shape = self.weight.shape().to_vec();
        f(&join(prefix, "weight"), &shape, self.weight.as_slice_mut().unwrap());
        let shape = self.bias.shape().to_vec();
        f(&join(prefix, "bias"), &shape, self.bias.as_slice_mut().unwrap());
    }
}
