//! Batch and layer normalization with learned scale `γ` and shift `β`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::params::{ParamId, ParamStore};
use super::Mode;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const BATCHNORM_EPS: f64 = 1e-5;
pub const BATCHNORM_MOMENTUM: f64 = 0.1;
pub const LAYERNORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BatchNormState {
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNormState {
    pub fn new(dim: usize) -> Self {
        Self {
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum: BATCHNORM_MOMENTUM,
            eps: BATCHNORM_EPS,
        }
    }
}

/// One-dimensional batch normalization over the rows of a `B × p` input.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub dim: usize,
    pub state: BatchNormState,
}

#[derive(Debug)]
pub struct BatchNormCache {
    x_hat: Matrix,
    inv_std: Vec<f64>,
    batch_stats: bool,
}

impl BatchNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Self {
        let gamma = store.add(format!("{name}.gamma"), Matrix::filled(1, dim, 1.0));
        let beta = store.add(format!("{name}.beta"), Matrix::zeros(1, dim));
        Self {
            gamma,
            beta,
            dim,
            state: BatchNormState::new(dim),
        }
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.dim {
            return Err(Error::Shape {
                op: "batchnorm",
                expected: (x.rows(), self.dim),
                found: x.shape(),
            });
        }
        Ok(())
    }

    /// Train mode normalizes by batch statistics and updates the running
    /// estimates (unbiased variance, exponential moving average). Eval mode
    /// normalizes by the running estimates only.
    pub fn forward(
        &mut self,
        store: &ParamStore,
        x: &Matrix,
        mode: Mode,
    ) -> Result<(Matrix, BatchNormCache)> {
        self.check(x)?;
        match mode {
            Mode::Eval => {
                let inv_std: Vec<f64> = self
                    .state
                    .running_var
                    .iter()
                    .map(|v| 1.0 / libm::sqrt(v + self.state.eps))
                    .collect();
                let x_hat = normalize(x, &self.state.running_mean, &inv_std);
                let y = self.affine(store, &x_hat);
                Ok((
                    y,
                    BatchNormCache {
                        x_hat,
                        inv_std,
                        batch_stats: false,
                    },
                ))
            }
            Mode::Train => {
                let b = x.rows();
                if b < 2 {
                    return Err(Error::TooFewRows {
                        needed: 2,
                        found: b,
                    });
                }
                let mean = x.column_means();
                let mut var = vec![0.0; self.dim];
                for row in x.row_iter() {
                    for (j, v) in row.iter().enumerate() {
                        let d = v - mean[j];
                        var[j] += d * d;
                    }
                }
                let bf = b as f64;
                let inv_std: Vec<f64> = var
                    .iter()
                    .map(|s| 1.0 / libm::sqrt(s / bf + self.state.eps))
                    .collect();
                let m = self.state.momentum;
                for j in 0..self.dim {
                    self.state.running_mean[j] =
                        (1.0 - m) * self.state.running_mean[j] + m * mean[j];
                    self.state.running_var[j] =
                        (1.0 - m) * self.state.running_var[j] + m * var[j] / (bf - 1.0);
                }
                let x_hat = normalize(x, &mean, &inv_std);
                let y = self.affine(store, &x_hat);
                Ok((
                    y,
                    BatchNormCache {
                        x_hat,
                        inv_std,
                        batch_stats: true,
                    },
                ))
            }
        }
    }

    /// Eval-mode forward without touching any state.
    pub fn apply_eval(&self, store: &ParamStore, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let inv_std: Vec<f64> = self
            .state
            .running_var
            .iter()
            .map(|v| 1.0 / libm::sqrt(v + self.state.eps))
            .collect();
        Ok(self.affine(store, &normalize(x, &self.state.running_mean, &inv_std)))
    }

    fn affine(&self, store: &ParamStore, x_hat: &Matrix) -> Matrix {
        let g = store.value(self.gamma).as_slice();
        let b = store.value(self.beta).as_slice();
        let mut y = x_hat.clone();
        for i in 0..y.rows() {
            for (j, v) in y.row_mut(i).iter_mut().enumerate() {
                *v = g[j] * *v + b[j];
            }
        }
        y
    }

    pub fn backward(&self, store: &mut ParamStore, cache: BatchNormCache, dy: &Matrix) -> Matrix {
        let (b, p) = dy.shape();
        let mut dgamma = vec![0.0; p];
        let mut dbeta = vec![0.0; p];
        for i in 0..b {
            for j in 0..p {
                dgamma[j] += dy[(i, j)] * cache.x_hat[(i, j)];
                dbeta[j] += dy[(i, j)];
            }
        }
        let gamma = store.value(self.gamma).as_slice().to_vec();
        let mut dx = Matrix::zeros(b, p);
        let bf = b as f64;
        for i in 0..b {
            for j in 0..p {
                let scale = gamma[j] * cache.inv_std[j];
                dx[(i, j)] = if cache.batch_stats {
                    scale / bf * (bf * dy[(i, j)] - dbeta[j] - cache.x_hat[(i, j)] * dgamma[j])
                } else {
                    scale * dy[(i, j)]
                };
            }
        }
        for (g, d) in store
            .grad_mut(self.gamma)
            .as_mut_slice()
            .iter_mut()
            .zip(&dgamma)
        {
            *g += d;
        }
        for (g, d) in store
            .grad_mut(self.beta)
            .as_mut_slice()
            .iter_mut()
            .zip(&dbeta)
        {
            *g += d;
        }
        dx
    }
}

fn normalize(x: &Matrix, mean: &[f64], inv_std: &[f64]) -> Matrix {
    let mut out = x.clone();
    for i in 0..out.rows() {
        for (j, v) in out.row_mut(i).iter_mut().enumerate() {
            *v = (*v - mean[j]) * inv_std[j];
        }
    }
    out
}

/// Per-row normalization over the feature axis.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub dim: usize,
    pub eps: f64,
}

#[derive(Debug)]
pub struct LayerNormCache {
    x_hat: Matrix,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Self {
        let gamma = store.add(format!("{name}.gamma"), Matrix::filled(1, dim, 1.0));
        let beta = store.add(format!("{name}.beta"), Matrix::zeros(1, dim));
        Self {
            gamma,
            beta,
            dim,
            eps: LAYERNORM_EPS,
        }
    }

    pub fn forward(&self, store: &ParamStore, x: &Matrix) -> Result<(Matrix, LayerNormCache)> {
        if x.cols() != self.dim {
            return Err(Error::Shape {
                op: "layernorm",
                expected: (x.rows(), self.dim),
                found: x.shape(),
            });
        }
        let p = self.dim as f64;
        let g = store.value(self.gamma).as_slice();
        let bt = store.value(self.beta).as_slice();
        let mut x_hat = x.clone();
        let mut y = x.clone();
        let mut inv_std = Vec::with_capacity(x.rows());
        for i in 0..x.rows() {
            let row = x.row(i);
            let mean = row.iter().sum::<f64>() / p;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / p;
            let is = 1.0 / libm::sqrt(var + self.eps);
            inv_std.push(is);
            for j in 0..self.dim {
                let h = (row[j] - mean) * is;
                x_hat[(i, j)] = h;
                y[(i, j)] = g[j] * h + bt[j];
            }
        }
        Ok((y, LayerNormCache { x_hat, inv_std }))
    }

    pub fn backward(&self, store: &mut ParamStore, cache: LayerNormCache, dy: &Matrix) -> Matrix {
        let (b, p) = dy.shape();
        let pf = p as f64;
        let gamma = store.value(self.gamma).as_slice().to_vec();
        let mut dgamma = vec![0.0; p];
        let mut dbeta = vec![0.0; p];
        let mut dx = Matrix::zeros(b, p);
        for i in 0..b {
            let mut sum_g = 0.0;
            let mut sum_gx = 0.0;
            for j in 0..p {
                let gh = dy[(i, j)] * gamma[j];
                sum_g += gh;
                sum_gx += gh * cache.x_hat[(i, j)];
                dgamma[j] += dy[(i, j)] * cache.x_hat[(i, j)];
                dbeta[j] += dy[(i, j)];
            }
            for j in 0..p {
                let gh = dy[(i, j)] * gamma[j];
                dx[(i, j)] =
                    cache.inv_std[i] / pf * (pf * gh - sum_g - cache.x_hat[(i, j)] * sum_gx);
            }
        }
        for (g, d) in store
            .grad_mut(self.gamma)
            .as_mut_slice()
            .iter_mut()
            .zip(&dgamma)
        {
            *g += d;
        }
        for (g, d) in store
            .grad_mut(self.beta)
            .as_mut_slice()
            .iter_mut()
            .zip(&dbeta)
        {
            *g += d;
        }
        dx
    }
}
