//! PLR (lite) numerical feature encoding.
//!
//! Each scalar feature `x_f` is expanded to the periodic vector
//! `[sin(2π c_f1 x_f), cos(2π c_f1 x_f), …, sin(2π c_fm x_f), cos(2π c_fm x_f)]`
//! with trainable per-feature frequencies `c_f ∈ ℝ^m`, passed through one
//! linear map `ℝ^{2m} → ℝ^k` shared by all features, then ReLU. Feature blocks
//! are concatenated, giving a `B × (d·k)` output.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use super::params::{normal_matrix, uniform_matrix, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlrConfig {
    /// Frequencies per feature.
    pub n_frequencies: usize,
    /// Output width per feature.
    pub out_dim: usize,
    /// Std of the normal frequency initialization.
    pub sigma: f64,
}

impl Default for PlrConfig {
    fn default() -> Self {
        Self {
            n_frequencies: 16,
            out_dim: 32,
            sigma: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlrEncoder {
    pub frequencies: ParamId,
    pub weight: ParamId,
    pub bias: ParamId,
    pub n_features: usize,
    pub cfg: PlrConfig,
}

#[derive(Debug)]
pub struct PlrCache {
    input: Matrix,
    /// `B × d·2m`, periodic stage per feature.
    periodic: Matrix,
    /// `B × d·k`, pre-activation of the shared linear map.
    pre: Matrix,
}

impl PlrEncoder {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        n_features: usize,
        cfg: PlrConfig,
        rng: &mut Rng,
    ) -> Result<Self> {
        if cfg.n_frequencies == 0 || cfg.out_dim == 0 || !(cfg.sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "PLR needs n_frequencies ≥ 1, out_dim ≥ 1, sigma > 0 (got {cfg:?})"
            )));
        }
        let frequencies = store.add(
            format!("{name}.frequencies"),
            normal_matrix(n_features, cfg.n_frequencies, cfg.sigma, rng),
        );
        let width = 2 * cfg.n_frequencies;
        let bound = 1.0 / libm::sqrt(width as f64);
        let weight = store.add(
            format!("{name}.weight"),
            uniform_matrix(width, cfg.out_dim, bound, rng),
        );
        let bias = store.add(
            format!("{name}.bias"),
            uniform_matrix(1, cfg.out_dim, bound, rng),
        );
        Ok(Self {
            frequencies,
            weight,
            bias,
            n_features,
            cfg,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.n_features * self.cfg.out_dim
    }

    pub fn num_params(&self) -> usize {
        let m = self.cfg.n_frequencies;
        let k = self.cfg.out_dim;
        self.n_features * m + 2 * m * k + k
    }

    /// Periodic stage only, `B × d·2m`.
    pub fn periodic(&self, store: &ParamStore, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features {
            return Err(Error::Shape {
                op: "plr_encode",
                expected: (x.rows(), self.n_features),
                found: x.shape(),
            });
        }
        let freqs = store.value(self.frequencies);
        if freqs.shape() != (self.n_features, self.cfg.n_frequencies) {
            return Err(Error::InvalidConfig(
                "PLR frequency bank is not initialized for this input".into(),
            ));
        }
        let m = self.cfg.n_frequencies;
        let mut p = Matrix::zeros(x.rows(), self.n_features * 2 * m);
        for i in 0..x.rows() {
            for f in 0..self.n_features {
                let xv = x[(i, f)];
                for j in 0..m {
                    let theta = TAU * freqs[(f, j)] * xv;
                    let base = f * 2 * m + 2 * j;
                    p[(i, base)] = libm::sin(theta);
                    p[(i, base + 1)] = libm::cos(theta);
                }
            }
        }
        Ok(p)
    }

    pub fn forward(&self, store: &ParamStore, x: &Matrix) -> Result<(Matrix, PlrCache)> {
        let periodic = self.periodic(store, x)?;
        let m2 = 2 * self.cfg.n_frequencies;
        let k = self.cfg.out_dim;
        let w = store.value(self.weight);
        let b = store.value(self.bias).as_slice();
        let mut pre = Matrix::zeros(x.rows(), self.n_features * k);
        for f in 0..self.n_features {
            let block = periodic.slice_cols(f * m2, (f + 1) * m2);
            let mut z = block.matmul(w);
            z.add_row_vector(b);
            for i in 0..x.rows() {
                pre.row_mut(i)[f * k..(f + 1) * k].copy_from_slice(z.row(i));
            }
        }
        let out = pre.map(|v| if v > 0.0 { v } else { 0.0 });
        Ok((
            out,
            PlrCache {
                input: x.clone(),
                periodic,
                pre,
            },
        ))
    }

    pub fn apply(&self, store: &ParamStore, x: &Matrix) -> Result<Matrix> {
        self.forward(store, x).map(|(y, _)| y)
    }

    /// Accumulates gradients of the frequencies and the shared linear map and
    /// returns the gradient with respect to the raw input.
    pub fn backward(&self, store: &mut ParamStore, cache: PlrCache, dy: &Matrix) -> Matrix {
        let m = self.cfg.n_frequencies;
        let m2 = 2 * m;
        let k = self.cfg.out_dim;
        let b = dy.rows();
        let mut dz = dy.clone();
        for (d, &z) in dz.as_mut_slice().iter_mut().zip(cache.pre.as_slice()) {
            if z <= 0.0 {
                *d = 0.0;
            }
        }
        let w = store.value(self.weight).clone();
        let mut dw = Matrix::zeros(m2, k);
        let mut db = alloc::vec![0.0; k];
        let mut dp = Matrix::zeros(b, self.n_features * m2);
        for f in 0..self.n_features {
            let dz_f = dz.slice_cols(f * k, (f + 1) * k);
            let p_f = cache.periodic.slice_cols(f * m2, (f + 1) * m2);
            dw.add_assign(&p_f.t_matmul(&dz_f));
            for (acc, s) in db.iter_mut().zip(dz_f.column_sums()) {
                *acc += s;
            }
            let dp_f = dz_f.matmul_t(&w);
            for i in 0..b {
                dp.row_mut(i)[f * m2..(f + 1) * m2].copy_from_slice(dp_f.row(i));
            }
        }
        let freqs = store.value(self.frequencies).clone();
        let mut dfreq = Matrix::zeros(self.n_features, m);
        let mut dx = Matrix::zeros(b, self.n_features);
        for i in 0..b {
            for f in 0..self.n_features {
                let xv = cache.input[(i, f)];
                for j in 0..m {
                    let base = f * m2 + 2 * j;
                    let s = cache.periodic[(i, base)];
                    let c = cache.periodic[(i, base + 1)];
                    // d/dθ [sin θ, cos θ] = [cos θ, −sin θ]
                    let dtheta = dp[(i, base)] * c - dp[(i, base + 1)] * s;
                    dfreq[(f, j)] += dtheta * TAU * xv;
                    dx[(i, f)] += dtheta * TAU * freqs[(f, j)];
                }
            }
        }
        store.grad_mut(self.weight).add_assign(&dw);
        for (g, d) in store.grad_mut(self.bias).as_mut_slice().iter_mut().zip(&db) {
            *g += d;
        }
        store.grad_mut(self.frequencies).add_assign(&dfreq);
        dx
    }
}

/// Per-feature blocks of a PLR output, for inspection.
pub fn feature_blocks(y: &Matrix, out_dim: usize) -> Vec<Matrix> {
    (0..y.cols() / out_dim)
        .map(|f| y.slice_cols(f * out_dim, (f + 1) * out_dim))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::gradcheck::{check_input_grad, check_param_grads};
    use crate::rng::rng_from_seed;

    fn small() -> PlrConfig {
        PlrConfig {
            n_frequencies: 3,
            out_dim: 4,
            sigma: 0.5,
        }
    }

    #[test]
    fn periodic_stage_at_zero() {
        let mut store = ParamStore::new();
        let plr = PlrEncoder::new(&mut store, "plr", 2, small(), &mut rng_from_seed(0)).unwrap();
        let p = plr.periodic(&store, &Matrix::zeros(1, 2)).unwrap();
        assert_eq!(
            p.row(0),
            &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]
        );
    }

    #[test]
    fn shared_linear_affects_every_feature_block() {
        let mut rng = rng_from_seed(1);
        let mut store = ParamStore::new();
        let plr = PlrEncoder::new(&mut store, "plr", 2, small(), &mut rng).unwrap();
        // Large positive bias keeps every unit active so the perturbation shows.
        store.value_mut(plr.bias).fill(10.0);
        let x = Matrix::from_rows(&[[0.3, -0.8]]);
        let before = plr.apply(&store, &x).unwrap();
        store.value_mut(plr.weight)[(0, 0)] += 0.5;
        let after = plr.apply(&store, &x).unwrap();
        let b0 = feature_blocks(&before, 4);
        let a0 = feature_blocks(&after, 4);
        assert_ne!(b0[0], a0[0]);
        assert_ne!(b0[1], a0[1]);
    }

    #[test]
    fn input_width_checked() {
        let mut store = ParamStore::new();
        let plr = PlrEncoder::new(&mut store, "plr", 2, small(), &mut rng_from_seed(0)).unwrap();
        assert!(plr.apply(&store, &Matrix::zeros(1, 3)).is_err());
        let mut bad = small();
        bad.n_frequencies = 0;
        assert!(PlrEncoder::new(&mut store, "p2", 2, bad, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..20 {
            let mut rng = rng_from_seed(seed);
            let mut store = ParamStore::new();
            let plr = PlrEncoder::new(&mut store, "plr", 3, small(), &mut rng).unwrap();
            let x = uniform_matrix(4, 3, 2.0, &mut rng);
            let w = uniform_matrix(4, 12, 1.0, &mut rng);
            let f = |s: &ParamStore, x: &Matrix| {
                plr.apply(s, x)
                    .unwrap()
                    .as_slice()
                    .iter()
                    .zip(w.as_slice())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            };
            let (_, cache) = plr.forward(&store, &x).unwrap();
            let dx = plr.backward(&mut store, cache, &w);
            let rep = check_param_grads(&mut store, 1e-6, |s| f(s, &x));
            assert!(rep.max_rel_error < 1e-5, "seed {seed}: {rep:?}");
            let rep = check_input_grad(&x, &dx, 1e-6, |x| f(&store, x));
            assert!(rep.max_rel_error < 1e-5, "seed {seed}: {rep:?}");
        }
    }
}
