use alloc::format;
use alloc::string::String;

use super::params::{uniform_matrix, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

/// `Y = X·W + b` with `W: in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

#[derive(Debug)]
pub struct LinearCache {
    input: Matrix,
}

impl Linear {
    /// Weights and bias drawn from `uniform(−1/√in, 1/√in)`.
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        with_bias: bool,
        rng: &mut Rng,
    ) -> Self {
        let bound = 1.0 / libm::sqrt(in_dim.max(1) as f64);
        let weight = store.add(
            format!("{name}.weight"),
            uniform_matrix(in_dim, out_dim, bound, rng),
        );
        let bias = with_bias.then(|| {
            store.add(
                format!("{name}.bias"),
                uniform_matrix(1, out_dim, bound, rng),
            )
        });
        Self {
            weight,
            bias,
            in_dim,
            out_dim,
        }
    }

    pub fn name(&self, store: &ParamStore) -> String {
        let w = store.name(self.weight);
        String::from(w.strip_suffix(".weight").unwrap_or(w))
    }

    pub fn apply(&self, store: &ParamStore, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.in_dim {
            return Err(Error::Shape {
                op: "linear",
                expected: (x.rows(), self.in_dim),
                found: x.shape(),
            });
        }
        let mut y = x.matmul(store.value(self.weight));
        if let Some(b) = self.bias {
            y.add_row_vector(store.value(b).as_slice());
        }
        Ok(y)
    }

    pub fn forward(&self, store: &ParamStore, x: &Matrix) -> Result<(Matrix, LinearCache)> {
        let y = self.apply(store, x)?;
        Ok((y, LinearCache { input: x.clone() }))
    }

    /// Accumulates `dW = Xᵀ·dY`, `db = Σ_rows dY` and returns `dX = dY·Wᵀ`.
    pub fn backward(&self, store: &mut ParamStore, cache: LinearCache, dy: &Matrix) -> Matrix {
        let dw = cache.input.t_matmul(dy);
        store.grad_mut(self.weight).add_assign(&dw);
        if let Some(b) = self.bias {
            let db = dy.column_sums();
            for (g, d) in store.grad_mut(b).as_mut_slice().iter_mut().zip(db) {
                *g += d;
            }
        }
        dy.matmul_t(store.value(self.weight))
    }

    pub fn num_params(&self) -> usize {
        self.in_dim * self.out_dim + if self.bias.is_some() { self.out_dim } else { 0 }
    }
}
