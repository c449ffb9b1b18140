//! Training objectives on soft nearest-neighbour weights.
//!
//! Every loss returns its batch-mean value together with `∂L/∂W`, which
//! [`NeighborhoodWeights::backward`] carries on to the distances.

use crate::data::Task;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neighborhood::{ExclusionMask, Kernel, NeighborhoodWeights};

/// Lower clamp for probabilities inside logarithms.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LossKind {
    /// `−log Σ_{same class} W` (classification).
    LogSoftnn,
    /// Squared error of the soft-NN prediction (regression).
    MseSoftnn,
    /// `1 − Σ_{same class} W`, the original leave-one-out objective.
    NcaSumProb,
    /// KL divergence to a uniform same-class target distribution.
    Mcml,
    /// Student-t kernel in place of `exp(−d)`, then the log or MSE head.
    TDistribution,
}

impl LossKind {
    pub const ALL: [LossKind; 5] = [
        LossKind::LogSoftnn,
        LossKind::MseSoftnn,
        LossKind::NcaSumProb,
        LossKind::Mcml,
        LossKind::TDistribution,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::LogSoftnn => "log_softnn",
            LossKind::MseSoftnn => "mse_softnn",
            LossKind::NcaSumProb => "nca_sum_prob",
            LossKind::Mcml => "mcml",
            LossKind::TDistribution => "t_distribution",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn supports(self, task: Task) -> bool {
        match self {
            LossKind::MseSoftnn => task == Task::Regression,
            LossKind::LogSoftnn | LossKind::NcaSumProb | LossKind::Mcml => task.is_classification(),
            LossKind::TDistribution => true,
        }
    }

    pub fn check(self, task: Task) -> Result<()> {
        if self.supports(task) {
            Ok(())
        } else {
            Err(Error::TaskMismatch {
                op: self.name(),
                expected: if task.is_classification() {
                    "regression"
                } else {
                    "classification"
                },
            })
        }
    }

    /// The default loss for a task.
    pub fn default_for(task: Task) -> Self {
        if task.is_classification() {
            LossKind::LogSoftnn
        } else {
            LossKind::MseSoftnn
        }
    }

    pub fn kernel(self, nu: f64) -> Kernel {
        match self {
            LossKind::TDistribution => Kernel::StudentT { nu },
            _ => Kernel::Exp,
        }
    }
}

/// Candidate labels and query targets.
#[derive(Debug, Clone, Copy)]
pub enum Supervision<'a> {
    Classes {
        candidates: &'a [usize],
        targets: &'a [usize],
    },
    Values {
        candidates: &'a [f64],
        targets: &'a [f64],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    pub d_weights: Matrix,
    /// Queries left out of the mean (MCML with no same-class candidate).
    pub skipped: usize,
}

fn check_shapes(w: &Matrix, n_cand: usize, n_targets: usize) -> Result<()> {
    if w.shape() != (n_targets, n_cand) {
        return Err(Error::Shape {
            op: "loss",
            expected: (n_targets, n_cand),
            found: w.shape(),
        });
    }
    Ok(())
}

/// Same-class mass `p_i = Σ_{j: y_j = y_i} W_ij` per query.
pub fn same_class_mass(
    w: &Matrix,
    candidates: &[usize],
    targets: &[usize],
) -> alloc::vec::Vec<f64> {
    (0..w.rows())
        .map(|i| {
            w.row(i)
                .iter()
                .zip(candidates)
                .filter(|(_, &c)| c == targets[i])
                .map(|(v, _)| v)
                .sum()
        })
        .collect()
}

/// Mean negative log same-class probability.
pub fn loss_log_softnn(
    w: &NeighborhoodWeights,
    candidates: &[usize],
    targets: &[usize],
) -> Result<LossOutput> {
    let wm = w.weights();
    check_shapes(wm, candidates.len(), targets.len())?;
    let b = targets.len() as f64;
    let p = same_class_mass(wm, candidates, targets);
    let mut d = Matrix::zeros(wm.rows(), wm.cols());
    let mut value = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        let pc = pi.max(PROB_CLAMP);
        value -= libm::log(pc);
        for (j, &c) in candidates.iter().enumerate() {
            if c == targets[i] {
                d[(i, j)] = -1.0 / (pc * b);
            }
        }
    }
    Ok(LossOutput {
        value: value / b,
        d_weights: d,
        skipped: 0,
    })
}

/// Mean squared error of `ŷ = W·y_candidates`.
pub fn loss_mse_softnn(
    w: &NeighborhoodWeights,
    candidates: &[f64],
    targets: &[f64],
) -> Result<LossOutput> {
    let wm = w.weights();
    check_shapes(wm, candidates.len(), targets.len())?;
    let b = targets.len() as f64;
    let mut d = Matrix::zeros(wm.rows(), wm.cols());
    let mut value = 0.0;
    for i in 0..wm.rows() {
        let pred: f64 = wm.row(i).iter().zip(candidates).map(|(a, y)| a * y).sum();
        let r = pred - targets[i];
        value += r * r;
        for (j, &y) in candidates.iter().enumerate() {
            d[(i, j)] = 2.0 * r * y / b;
        }
    }
    Ok(LossOutput {
        value: value / b,
        d_weights: d,
        skipped: 0,
    })
}

/// Mean of `1 − p_i`: minimizing it maximizes the summed leave-one-out
/// probability.
pub fn loss_nca_sum_prob(
    w: &NeighborhoodWeights,
    candidates: &[usize],
    targets: &[usize],
) -> Result<LossOutput> {
    let wm = w.weights();
    check_shapes(wm, candidates.len(), targets.len())?;
    let b = targets.len() as f64;
    let p = same_class_mass(wm, candidates, targets);
    let mut d = Matrix::zeros(wm.rows(), wm.cols());
    for i in 0..wm.rows() {
        for (j, &c) in candidates.iter().enumerate() {
            if c == targets[i] {
                d[(i, j)] = -1.0 / b;
            }
        }
    }
    Ok(LossOutput {
        value: p.iter().map(|pi| 1.0 - pi).sum::<f64>() / b,
        d_weights: d,
        skipped: 0,
    })
}

/// Mean `KL(t_i ‖ W_i)` with `t_i` uniform over the unmasked same-class
/// candidates of query `i`. Queries without such a candidate are skipped and
/// counted in [`LossOutput::skipped`]; if all are skipped the loss is 0.
pub fn loss_mcml(
    w: &NeighborhoodWeights,
    candidates: &[usize],
    targets: &[usize],
) -> Result<LossOutput> {
    let wm = w.weights();
    check_shapes(wm, candidates.len(), targets.len())?;
    let mask: &ExclusionMask = w.mask();
    let support: alloc::vec::Vec<usize> = (0..wm.rows())
        .map(|i| {
            candidates
                .iter()
                .enumerate()
                .filter(|&(j, &c)| c == targets[i] && !mask.is_excluded(i, j))
                .count()
        })
        .collect();
    let used = support.iter().filter(|&&n| n > 0).count();
    let skipped = wm.rows() - used;
    let mut d = Matrix::zeros(wm.rows(), wm.cols());
    if used == 0 {
        return Ok(LossOutput {
            value: 0.0,
            d_weights: d,
            skipped,
        });
    }
    let b = used as f64;
    let mut value = 0.0;
    for i in 0..wm.rows() {
        if support[i] == 0 {
            continue;
        }
        let t = 1.0 / support[i] as f64;
        for (j, &c) in candidates.iter().enumerate() {
            if c == targets[i] && !mask.is_excluded(i, j) {
                let wc = wm[(i, j)].max(PROB_CLAMP);
                value += t * (libm::log(t) - libm::log(wc));
                d[(i, j)] = -t / (wc * b);
            }
        }
    }
    Ok(LossOutput {
        value: value / b,
        d_weights: d,
        skipped,
    })
}

/// Student-t kernel weights followed by the log (classification) or MSE
/// (regression) head. Returns the loss and the weights it was computed on.
pub fn loss_t_distribution(
    distances: Matrix,
    mask: ExclusionMask,
    supervision: Supervision<'_>,
    nu: f64,
) -> Result<(LossOutput, NeighborhoodWeights)> {
    if !(nu > 0.0) {
        return Err(Error::OutOfRange {
            what: "t-distribution degrees of freedom",
            value: nu,
        });
    }
    let w = NeighborhoodWeights::from_distances(distances, mask, Kernel::StudentT { nu })?;
    let out = match supervision {
        Supervision::Classes {
            candidates,
            targets,
        } => loss_log_softnn(&w, candidates, targets)?,
        Supervision::Values {
            candidates,
            targets,
        } => loss_mse_softnn(&w, candidates, targets)?,
    };
    Ok((out, w))
}

/// Evaluates `kind` on weights already built with `kind.kernel(ν)`.
pub fn evaluate(
    kind: LossKind,
    w: &NeighborhoodWeights,
    supervision: Supervision<'_>,
) -> Result<LossOutput> {
    match (kind, supervision) {
        (
            LossKind::LogSoftnn | LossKind::TDistribution,
            Supervision::Classes {
                candidates,
                targets,
            },
        ) => loss_log_softnn(w, candidates, targets),
        (
            LossKind::MseSoftnn | LossKind::TDistribution,
            Supervision::Values {
                candidates,
                targets,
            },
        ) => loss_mse_softnn(w, candidates, targets),
        (
            LossKind::NcaSumProb,
            Supervision::Classes {
                candidates,
                targets,
            },
        ) => loss_nca_sum_prob(w, candidates, targets),
        (
            LossKind::Mcml,
            Supervision::Classes {
                candidates,
                targets,
            },
        ) => loss_mcml(w, candidates, targets),
        (k, Supervision::Classes { .. }) => Err(Error::TaskMismatch {
            op: k.name(),
            expected: "regression",
        }),
        (k, Supervision::Values { .. }) => Err(Error::TaskMismatch {
            op: k.name(),
            expected: "classification",
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::gradcheck::check_input_grad;
    use crate::diff::params::uniform_matrix;
    use crate::neighborhood::build_exclusion_mask;
    use crate::rng::rng_from_seed;
    use core::f64::consts::LN_2;

    fn uniform_w(b: usize, m: usize) -> NeighborhoodWeights {
        NeighborhoodWeights::from_distances(
            Matrix::zeros(b, m),
            ExclusionMask::none(b, m),
            Kernel::Exp,
        )
        .unwrap()
    }

    #[test]
    fn log_softnn_examples() {
        let w = uniform_w(1, 3);
        let out = loss_log_softnn(&w, &[1, 1, 1], &[1]).unwrap();
        assert!(out.value.abs() < 1e-15);
        let w = uniform_w(1, 2);
        let out = loss_log_softnn(&w, &[0, 1], &[0]).unwrap();
        assert!((out.value - LN_2).abs() < 1e-15);
        let out = loss_log_softnn(&w, &[0, 1], &[2]).unwrap();
        assert!((out.value + libm::log(PROB_CLAMP)).abs() < 1e-9);
        assert!(out.d_weights.is_finite());
    }

    #[test]
    fn mse_examples() {
        let w = uniform_w(1, 1);
        assert_eq!(loss_mse_softnn(&w, &[3.0], &[3.0]).unwrap().value, 0.0);
        let w = uniform_w(1, 2);
        assert_eq!(loss_mse_softnn(&w, &[2.0, 2.0], &[0.0]).unwrap().value, 4.0);
    }

    #[test]
    fn sum_prob_examples() {
        let w = uniform_w(1, 4);
        assert!((loss_nca_sum_prob(&w, &[0, 1, 1, 1], &[0]).unwrap().value - 0.75).abs() < 1e-15);
        assert!(
            loss_nca_sum_prob(&w, &[0, 0, 0, 0], &[0])
                .unwrap()
                .value
                .abs()
                < 1e-15
        );
        let w = uniform_w(2, 2);
        assert!((loss_nca_sum_prob(&w, &[0, 0], &[0, 0]).unwrap().value).abs() < 1e-15);
        let out = loss_nca_sum_prob(&w, &[0, 1], &[0, 0]).unwrap();
        assert!((out.value - 0.5).abs() < 1e-15);
        // p = (1, 0.5) → mean(0, 0.5)
        let w1 = uniform_w(1, 1);
        let a = loss_nca_sum_prob(&w1, &[0], &[0]).unwrap().value;
        let b = loss_nca_sum_prob(&uniform_w(1, 2), &[0, 1], &[0])
            .unwrap()
            .value;
        assert!(((a + b) / 2.0 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mcml_examples() {
        let w = uniform_w(1, 2);
        let out = loss_mcml(&w, &[0, 0], &[0]).unwrap();
        assert!(out.value.abs() < 1e-15);
        let out = loss_mcml(&w, &[0, 1], &[0]).unwrap();
        assert!((out.value - LN_2).abs() < 1e-15);
        // zero weight on the target support stays finite
        let w = NeighborhoodWeights::from_distances(
            Matrix::from_rows(&[[0.0, 1e6]]),
            ExclusionMask::none(1, 2),
            Kernel::Exp,
        )
        .unwrap();
        let out = loss_mcml(&w, &[1, 0], &[0]).unwrap();
        assert!(out.value.is_finite() && out.d_weights.is_finite());
        let out = loss_mcml(&uniform_w(2, 2), &[0, 0], &[0, 1]).unwrap();
        assert_eq!(out.skipped, 1);
    }

    #[test]
    fn t_distribution_examples() {
        let sup = Supervision::Classes {
            candidates: &[0, 1],
            targets: &[0],
        };
        let (_, w) = loss_t_distribution(
            Matrix::from_rows(&[[2.0, 2.0]]),
            ExclusionMask::none(1, 2),
            sup,
            1.0,
        )
        .unwrap();
        assert_eq!(w.weights().row(0), &[0.5, 0.5]);
        let (out, w) = loss_t_distribution(
            Matrix::from_rows(&[[0.0, 1.0]]),
            ExclusionMask::none(1, 2),
            sup,
            1.0,
        )
        .unwrap();
        assert!((w.weights()[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((out.value + libm::log(2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn task_support() {
        let c = Task::Classification { n_classes: 2 };
        assert!(LossKind::Mcml.check(Task::Regression).is_err());
        assert!(LossKind::NcaSumProb.check(Task::Regression).is_err());
        assert!(LossKind::MseSoftnn.check(c).is_err());
        assert!(
            LossKind::TDistribution.check(c).is_ok()
                && LossKind::TDistribution.check(Task::Regression).is_ok()
        );
    }

    #[test]
    fn losses_nonnegative_and_weight_gradients_match() {
        for seed in 0..20 {
            let mut rng = rng_from_seed(seed);
            let d = uniform_matrix(4, 6, 2.0, &mut rng).map(f64::abs);
            let mask = build_exclusion_mask(&[0, 1, 2, 3], &[0, 1, 2, 3, 4, 5]);
            let cand = [0usize, 1, 0, 2, 1, 0];
            let targets = [0usize, 1, 0, 2];
            let vals = [0.5, -1.0, 2.0, 0.0, 1.5, -0.3];
            let vt = [0.1, 0.2, -0.7, 1.0];
            for kind in [
                LossKind::LogSoftnn,
                LossKind::NcaSumProb,
                LossKind::Mcml,
                LossKind::MseSoftnn,
            ] {
                let sup = if kind == LossKind::MseSoftnn {
                    Supervision::Values {
                        candidates: &vals,
                        targets: &vt,
                    }
                } else {
                    Supervision::Classes {
                        candidates: &cand,
                        targets: &targets,
                    }
                };
                let f = |d: &Matrix| {
                    let w =
                        NeighborhoodWeights::from_distances(d.clone(), mask.clone(), Kernel::Exp)
                            .unwrap();
                    evaluate(kind, &w, sup).unwrap().value
                };
                let w = NeighborhoodWeights::from_distances(d.clone(), mask.clone(), Kernel::Exp)
                    .unwrap();
                let out = evaluate(kind, &w, sup).unwrap();
                assert!(out.value >= 0.0);
                let dd = w.backward(&out.d_weights);
                let rep = check_input_grad(&d, &dd, 1e-6, f);
                assert!(rep.max_rel_error < 1e-6, "{kind:?}: {rep:?}");
            }
        }
    }

    #[test]
    fn sum_prob_ranks_like_summed_probability() {
        // 1 − mean(p) orders settings exactly opposite to Σ p.
        for seed in 0..50u64 {
            let mut rng = rng_from_seed(seed);
            let cand = [0usize, 1, 1, 0, 2];
            let targets = [0usize, 1, 2];
            let mk = |rng: &mut crate::rng::Rng| {
                NeighborhoodWeights::from_distances(
                    uniform_matrix(3, 5, 3.0, rng),
                    ExclusionMask::none(3, 5),
                    Kernel::Exp,
                )
                .unwrap()
            };
            let (a, b) = (mk(&mut rng), mk(&mut rng));
            let sum = |w: &NeighborhoodWeights| {
                same_class_mass(w.weights(), &cand, &targets)
                    .iter()
                    .sum::<f64>()
            };
            let la = loss_nca_sum_prob(&a, &cand, &targets).unwrap().value;
            let lb = loss_nca_sum_prob(&b, &cand, &targets).unwrap().value;
            assert_eq!(la < lb, sum(&a) > sum(&b));
        }
    }
}
