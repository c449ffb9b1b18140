use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Added under the square root of the Euclidean distance so its gradient stays
/// finite for coincident points.
pub const DIST_EPS: f64 = 1e-12;

/// Distance between embeddings. Euclidean-type kinds are non-negative and zero
/// only for equal inputs; `NegCosine` and `NegDot` can be negative and only
/// promise ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DistanceKind {
    Euclid,
    SquaredEuclid,
    L1,
    NegCosine,
    NegDot,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 5] = [
        DistanceKind::Euclid,
        DistanceKind::NegDot,
        DistanceKind::NegCosine,
        DistanceKind::SquaredEuclid,
        DistanceKind::L1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::Euclid => "euclid",
            DistanceKind::SquaredEuclid => "squared_euclid",
            DistanceKind::L1 => "l1",
            DistanceKind::NegCosine => "neg_cosine",
            DistanceKind::NegDot => "neg_dot",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

fn check(q: &Matrix, k: &Matrix) -> Result<()> {
    if q.cols() != k.cols() {
        return Err(Error::Shape {
            op: "pairwise_distance",
            expected: (k.rows(), q.cols()),
            found: k.shape(),
        });
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

/// `B × M` matrix of distances between the rows of `q` and the rows of `k`.
///
/// For `NegCosine` a zero vector has distance 0 to everything (and zero
/// gradient).
pub fn pairwise_distance(q: &Matrix, k: &Matrix, kind: DistanceKind) -> Result<Matrix> {
    check(q, k)?;
    let (b, m) = (q.rows(), k.rows());
    let mut d = Matrix::zeros(b, m);
    let k_norms: alloc::vec::Vec<f64> = match kind {
        DistanceKind::NegCosine => k.row_iter().map(norm).collect(),
        _ => alloc::vec::Vec::new(),
    };
    for i in 0..b {
        let qi = q.row(i);
        let qn = if kind == DistanceKind::NegCosine {
            norm(qi)
        } else {
            0.0
        };
        for j in 0..m {
            let kj = k.row(j);
            d[(i, j)] = match kind {
                DistanceKind::Euclid => libm::sqrt(squared(qi, kj) + DIST_EPS),
                DistanceKind::SquaredEuclid => squared(qi, kj),
                DistanceKind::L1 => qi.iter().zip(kj).map(|(a, b)| libm::fabs(a - b)).sum(),
                DistanceKind::NegDot => -dot(qi, kj),
                DistanceKind::NegCosine => {
                    let denom = qn * k_norms[j];
                    if denom == 0.0 {
                        0.0
                    } else {
                        -dot(qi, kj) / denom
                    }
                }
            };
        }
    }
    Ok(d)
}

fn squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Chain rule of [`pairwise_distance`]: given `∂L/∂D`, returns
/// `(∂L/∂Q, ∂L/∂K)`. `dist` must be the forward output for `(q, k, kind)`.
pub fn pairwise_distance_backward(
    q: &Matrix,
    k: &Matrix,
    kind: DistanceKind,
    dist: &Matrix,
    d_dist: &Matrix,
) -> (Matrix, Matrix) {
    let (b, m) = d_dist.shape();
    let p = q.cols();
    match kind {
        DistanceKind::Euclid | DistanceKind::SquaredEuclid => {
            // ∂D_ij/∂q_i = g_ij (q_i − k_j) with g = 1/D (euclid) or 2 (squared)
            let g = Matrix::from_fn(b, m, |i, j| match kind {
                DistanceKind::Euclid => d_dist[(i, j)] / dist[(i, j)],
                _ => 2.0 * d_dist[(i, j)],
            });
            let row_s: alloc::vec::Vec<f64> = g.row_iter().map(|r| r.iter().sum()).collect();
            let col_s = g.column_sums();
            let gk = g.matmul(k);
            let gtq = g.t_matmul(q);
            let dq = Matrix::from_fn(b, p, |i, c| row_s[i] * q[(i, c)] - gk[(i, c)]);
            let dk = Matrix::from_fn(m, p, |j, c| col_s[j] * k[(j, c)] - gtq[(j, c)]);
            (dq, dk)
        }
        DistanceKind::L1 => {
            let mut dq = Matrix::zeros(b, p);
            let mut dk = Matrix::zeros(m, p);
            for i in 0..b {
                for j in 0..m {
                    let g = d_dist[(i, j)];
                    if g == 0.0 {
                        continue;
                    }
                    for c in 0..p {
                        let diff = q[(i, c)] - k[(j, c)];
                        let s = if diff > 0.0 {
                            1.0
                        } else if diff < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                        dq[(i, c)] += g * s;
                        dk[(j, c)] -= g * s;
                    }
                }
            }
            (dq, dk)
        }
        DistanceKind::NegDot => {
            let mut dq = d_dist.matmul(k);
            let mut dk = d_dist.t_matmul(q);
            dq.scale(-1.0);
            dk.scale(-1.0);
            (dq, dk)
        }
        DistanceKind::NegCosine => {
            let mut dq = Matrix::zeros(b, p);
            let mut dk = Matrix::zeros(m, p);
            let k_norms: alloc::vec::Vec<f64> = k.row_iter().map(norm).collect();
            for i in 0..b {
                let qi = q.row(i);
                let qn = norm(qi);
                for j in 0..m {
                    let g = d_dist[(i, j)];
                    let kn = k_norms[j];
                    if g == 0.0 || qn == 0.0 || kn == 0.0 {
                        continue;
                    }
                    let kj = k.row(j);
                    // D = −cos; cos = q·k/(|q||k|)
                    let cos = -dist[(i, j)];
                    for c in 0..p {
                        let dcos_dq = kj[c] / (qn * kn) - cos * qi[c] / (qn * qn);
                        let dcos_dk = qi[c] / (qn * kn) - cos * kj[c] / (kn * kn);
                        dq[(i, c)] -= g * dcos_dq;
                        dk[(j, c)] -= g * dcos_dk;
                    }
                }
            }
            (dq, dk)
        }
    }
}
