use alloc::vec;
use alloc::vec::Vec;

use super::distance::{pairwise_distance, DistanceKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `B × M` booleans; `true` removes candidate `j` from query `i`'s
/// neighbourhood.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExclusionMask {
    rows: usize,
    cols: usize,
    excluded: Vec<bool>,
}

impl ExclusionMask {
    /// Nothing excluded, as for unseen queries at inference.
    pub fn none(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            excluded: vec![false; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut excluded = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                excluded.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            excluded,
        }
    }

    #[inline]
    pub fn is_excluded(&self, i: usize, j: usize) -> bool {
        self.excluded[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, excluded: bool) {
        self.excluded[i * self.cols + j] = excluded;
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row_is_full(&self, i: usize) -> bool {
        self.excluded[i * self.cols..(i + 1) * self.cols]
            .iter()
            .all(|&e| e)
    }

    pub fn count_excluded(&self) -> usize {
        self.excluded.iter().filter(|&&e| e).count()
    }
}

/// Excludes candidate `j` from query `i` iff both refer to the same training
/// row. Rows with identical features but different indices are not excluded.
pub fn build_exclusion_mask(query_ids: &[usize], candidate_ids: &[usize]) -> ExclusionMask {
    ExclusionMask::from_fn(query_ids.len(), candidate_ids.len(), |i, j| {
        query_ids[i] == candidate_ids[j]
    })
}

/// Similarity kernel turning a distance into an unnormalized log-mass.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Kernel {
    /// `exp(−d)`.
    Exp,
    /// Heavy-tailed `(1 + d²/ν)^(−(ν+1)/2)`.
    StudentT { nu: f64 },
}

impl Kernel {
    #[inline]
    pub fn log_mass(self, d: f64) -> f64 {
        match self {
            Kernel::Exp => -d,
            Kernel::StudentT { nu } => -0.5 * (nu + 1.0) * libm::log1p(d * d / nu),
        }
    }

    #[inline]
    pub fn mass(self, d: f64) -> f64 {
        libm::exp(self.log_mass(d))
    }

    #[inline]
    fn d_log_mass(self, d: f64) -> f64 {
        match self {
            Kernel::Exp => -1.0,
            Kernel::StudentT { nu } => -(nu + 1.0) * d / (nu + d * d),
        }
    }
}

/// Row-stochastic soft nearest-neighbour weights from queries to candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodWeights {
    weights: Matrix,
    mask: ExclusionMask,
    distances: Matrix,
    kernel: Kernel,
}

impl NeighborhoodWeights {
    /// `W_ij = k(D_ij) / Σ_{l unmasked} k(D_il)`, evaluated with the max-shift
    /// log-sum-exp trick. Masked entries are exactly zero.
    pub fn from_distances(distances: Matrix, mask: ExclusionMask, kernel: Kernel) -> Result<Self> {
        if mask.shape() != distances.shape() {
            return Err(Error::Shape {
                op: "softnn_weights mask",
                expected: distances.shape(),
                found: mask.shape(),
            });
        }
        let (b, m) = distances.shape();
        let mut weights = Matrix::zeros(b, m);
        for i in 0..b {
            let mut max = f64::NEG_INFINITY;
            for j in 0..m {
                if !mask.is_excluded(i, j) {
                    max = max.max(kernel.log_mass(distances[(i, j)]));
                }
            }
            if max == f64::NEG_INFINITY {
                return Err(Error::FullyMaskedRow { row: i });
            }
            let mut total = 0.0;
            for j in 0..m {
                if !mask.is_excluded(i, j) {
                    let e = libm::exp(kernel.log_mass(distances[(i, j)]) - max);
                    weights[(i, j)] = e;
                    total += e;
                }
            }
            for w in weights.row_mut(i) {
                *w /= total;
            }
        }
        Ok(Self {
            weights,
            mask,
            distances,
            kernel,
        })
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn mask(&self) -> &ExclusionMask {
        &self.mask
    }

    pub fn distances(&self) -> &Matrix {
        &self.distances
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Given `∂L/∂W`, returns `∂L/∂D` through the row softmax and the kernel.
    pub fn backward(&self, d_weights: &Matrix) -> Matrix {
        let (b, m) = self.weights.shape();
        let mut d_dist = Matrix::zeros(b, m);
        for i in 0..b {
            let w = self.weights.row(i);
            let g = d_weights.row(i);
            let inner: f64 = w.iter().zip(g).map(|(a, b)| a * b).sum();
            for j in 0..m {
                if self.mask.is_excluded(i, j) {
                    continue;
                }
                let d_logit = w[j] * (g[j] - inner);
                d_dist[(i, j)] = d_logit * self.kernel.d_log_mass(self.distances[(i, j)]);
            }
        }
        d_dist
    }
}

/// Soft-NN weights with the exponential kernel on `kind` distances.
pub fn softnn_weights(
    q: &Matrix,
    k: &Matrix,
    kind: DistanceKind,
    mask: ExclusionMask,
) -> Result<NeighborhoodWeights> {
    NeighborhoodWeights::from_distances(pairwise_distance(q, k, kind)?, mask, Kernel::Exp)
}

/// One-hot `M × C` label matrix.
pub fn one_hot(classes: &[usize], n_classes: usize) -> Matrix {
    let mut m = Matrix::zeros(classes.len(), n_classes);
    for (i, &c) in classes.iter().enumerate() {
        m[(i, c)] = 1.0;
    }
    m
}

/// `Ŷ = W · labels`: class-probability rows for one-hot labels, convex
/// combinations of candidate values for `M × 1` regression labels.
pub fn softnn_predict(w: &NeighborhoodWeights, labels: &Matrix) -> Result<Matrix> {
    if labels.rows() != w.weights.cols() {
        return Err(Error::Shape {
            op: "softnn_predict",
            expected: (w.weights.cols(), labels.cols()),
            found: labels.shape(),
        });
    }
    Ok(w.weights.matmul(labels))
}

/// `∂L/∂W = ∂L/∂Ŷ · labelsᵀ`.
pub fn softnn_predict_backward(labels: &Matrix, d_pred: &Matrix) -> Matrix {
    d_pred.matmul_t(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::gradcheck::check_input_grad;
    use crate::diff::params::uniform_matrix;
    use crate::rng::rng_from_seed;

    fn weights_of(d: &[f64]) -> Vec<f64> {
        let dist = Matrix::from_rows(&[d]);
        NeighborhoodWeights::from_distances(dist, ExclusionMask::none(1, d.len()), Kernel::Exp)
            .unwrap()
            .weights()
            .row(0)
            .to_vec()
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(weights_of(&[3.7]), vec![1.0]);
        assert_eq!(weights_of(&[2.0, 2.0]), vec![0.5, 0.5]);
        let w = weights_of(&[0.0, core::f64::consts::LN_2]);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn masked_entries_are_zero_and_full_rows_fail() {
        let dist = Matrix::from_rows(&[[0.0, 1.0, 2.0], [1.0, 1.0, 1.0]]);
        let mask = build_exclusion_mask(&[0, 7], &[0, 1, 2]);
        let w = NeighborhoodWeights::from_distances(dist.clone(), mask, Kernel::Exp).unwrap();
        assert_eq!(w.weights()[(0, 0)], 0.0);
        assert!((w.weights().row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let full = ExclusionMask::from_fn(2, 3, |i, _| i == 1);
        assert_eq!(
            NeighborhoodWeights::from_distances(dist, full, Kernel::Exp).unwrap_err(),
            Error::FullyMaskedRow { row: 1 }
        );
    }

    #[test]
    fn exclusion_mask_examples() {
        let m = build_exclusion_mask(&[2, 0], &[0, 1, 2, 3]);
        assert!(m.is_excluded(0, 2) && m.is_excluded(1, 0));
        assert_eq!(m.count_excluded(), 2);
        assert_eq!(build_exclusion_mask(&[5, 6], &[0, 1]).count_excluded(), 0);
    }

    #[test]
    fn student_t_kernel_examples() {
        let k = Kernel::StudentT { nu: 1.0 };
        assert!((k.mass(1.0) - 0.5).abs() < 1e-15);
        let dist = Matrix::from_rows(&[[0.0, 1.0]]);
        let w = NeighborhoodWeights::from_distances(dist, ExclusionMask::none(1, 2), k).unwrap();
        assert!((w.weights()[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        for nu in [0.5, 1.0, 3.0, 30.0] {
            let k = Kernel::StudentT { nu };
            let mut prev = k.mass(0.0);
            for s in 1..100 {
                let m = k.mass(s as f64 * 0.1);
                assert!(m < prev);
                prev = m;
            }
        }
    }

    #[test]
    fn predict_examples() {
        let w = NeighborhoodWeights::from_distances(
            Matrix::from_rows(&[[0.0, core::f64::consts::LN_2]]),
            ExclusionMask::none(1, 2),
            Kernel::Exp,
        )
        .unwrap();
        let y = softnn_predict(&w, &Matrix::from_rows(&[[3.0], [0.0]])).unwrap();
        assert!((y[(0, 0)] - 2.0).abs() < 1e-14);

        let half = NeighborhoodWeights::from_distances(
            Matrix::from_rows(&[[1.0, 1.0]]),
            ExclusionMask::none(1, 2),
            Kernel::Exp,
        )
        .unwrap();
        let p = softnn_predict(&half, &one_hot(&[0, 1], 2)).unwrap();
        assert_eq!(p.row(0), &[0.5, 0.5]);
        let same = softnn_predict(&w, &one_hot(&[2, 2], 3)).unwrap();
        assert!((same[(0, 2)] - 1.0).abs() < 1e-15 && same[(0, 0)] == 0.0);
        assert!(softnn_predict(&w, &one_hot(&[0], 2)).is_err());
    }

    #[test]
    fn weights_backward_matches_finite_differences() {
        for kernel in [
            Kernel::Exp,
            Kernel::StudentT { nu: 1.0 },
            Kernel::StudentT { nu: 2.5 },
        ] {
            for seed in 0..10 {
                let mut rng = rng_from_seed(seed);
                let d = uniform_matrix(3, 4, 2.0, &mut rng).map(f64::abs);
                let g = uniform_matrix(3, 4, 1.0, &mut rng);
                let mask = build_exclusion_mask(&[0, 1, 9], &[0, 1, 2, 3]);
                let f = |d: &Matrix| {
                    let w = NeighborhoodWeights::from_distances(d.clone(), mask.clone(), kernel)
                        .unwrap();
                    w.weights()
                        .as_slice()
                        .iter()
                        .zip(g.as_slice())
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                };
                let w =
                    NeighborhoodWeights::from_distances(d.clone(), mask.clone(), kernel).unwrap();
                let dd = w.backward(&g);
                let rep = check_input_grad(&d, &dd, 1e-6, f);
                assert!(rep.max_rel_error < 1e-7, "{kernel:?}: {rep:?}");
            }
        }
    }
}
