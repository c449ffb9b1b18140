//! Stochastic neighbourhood sampling: which training rows act as neighbour
//! candidates for a mini-batch.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;

use super::distance::{pairwise_distance, DistanceKind, DIST_EPS};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum SamplingStrategy {
    /// One uniform subset shared by the whole mini-batch.
    Random,
    /// Uniform subset drawn per class and merged, so every class is present.
    Classwise,
    /// Per-query subsets drawn with mass `(dist + ε)^(−τ)` in the current
    /// embedding space.
    Distance { tau: f64 },
}

impl SamplingStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            SamplingStrategy::Random => "random",
            SamplingStrategy::Classwise => "classwise",
            SamplingStrategy::Distance { .. } => "distance",
        }
    }
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::OutOfRange {
            what: "sampling ratio",
            value: ratio,
        });
    }
    Ok(())
}

/// `⌈ratio · n⌉`, clamped to `1..=n`. A `1e-9` slack absorbs representation
/// error such as `0.3 · 10 = 3.0000000000000004`.
pub fn subset_size(n: usize, ratio: f64) -> usize {
    let raw = libm::ceil(ratio * n as f64 - 1e-9);
    (raw.max(1.0) as usize).min(n)
}

/// Uniform draw of `⌈ratio·n⌉` distinct indices of `0..n`, ascending.
pub fn sample_random(n: usize, ratio: f64, rng: &mut Rng) -> Result<Vec<usize>> {
    check_ratio(ratio)?;
    let k = subset_size(n, ratio);
    let mut out = index::sample(rng, n, k).into_vec();
    out.sort_unstable();
    Ok(out)
}

/// `⌈ratio·N_c⌉` indices per class `c`, merged and sorted.
pub fn sample_classwise(classes: &[usize], ratio: f64, rng: &mut Rng) -> Result<Vec<usize>> {
    check_ratio(ratio)?;
    let n_classes = classes.iter().max().map_or(0, |&c| c + 1);
    let mut by_class: Vec<Vec<usize>> = (0..n_classes).map(|_| Vec::new()).collect();
    for (i, &c) in classes.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut out = Vec::new();
    for members in by_class.iter().filter(|m| !m.is_empty()) {
        let k = subset_size(members.len(), ratio);
        out.extend(
            index::sample(rng, members.len(), k)
                .into_iter()
                .map(|p| members[p]),
        );
    }
    out.sort_unstable();
    Ok(out)
}

/// Per-query weighted draw without replacement, proportional to
/// `(dist + ε)^(−τ)` with Euclidean distance in embedding space (Gumbel
/// top-k). `τ = 0` is uniform. If `self_ids[i]` is given, that training row is
/// never drawn for query `i`, and the subset size is capped at the number of
/// remaining rows.
pub fn sample_distance_weighted(
    batch_emb: &Matrix,
    train_emb: &Matrix,
    ratio: f64,
    tau: f64,
    self_ids: Option<&[usize]>,
    rng: &mut Rng,
) -> Result<Vec<Vec<usize>>> {
    check_ratio(ratio)?;
    if !(tau >= 0.0) {
        return Err(Error::OutOfRange {
            what: "distance sampling exponent",
            value: tau,
        });
    }
    let n = train_emb.rows();
    let dist = pairwise_distance(batch_emb, train_emb, DistanceKind::Euclid)?;
    let mut out = Vec::with_capacity(batch_emb.rows());
    let mut keys: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..batch_emb.rows() {
        let skip = self_ids.map(|s| s[i]);
        let available = n - usize::from(skip.is_some_and(|s| s < n));
        let k = subset_size(n, ratio).min(available);
        keys.clear();
        for j in 0..n {
            if Some(j) == skip {
                continue;
            }
            let log_w = -tau * libm::log(dist[(i, j)] + DIST_EPS);
            keys.push((log_w + gumbel(rng), j));
        }
        keys.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
        let mut chosen: Vec<usize> = keys[..k].iter().map(|&(_, j)| j).collect();
        chosen.sort_unstable();
        out.push(chosen);
    }
    Ok(out)
}

fn gumbel(rng: &mut Rng) -> f64 {
    // u ∈ (0, 1)
    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    -libm::log(-libm::log(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use alloc::vec;

    #[test]
    fn size_rule() {
        assert_eq!(subset_size(10, 0.3), 3);
        assert_eq!(subset_size(10, 0.31), 4);
        assert_eq!(subset_size(10, 1.0), 10);
        assert_eq!(subset_size(1000, 0.0001), 1);
    }

    #[test]
    fn random_examples() {
        let mut rng = rng_from_seed(0);
        assert_eq!(
            sample_random(7, 1.0, &mut rng).unwrap(),
            (0..7).collect::<Vec<_>>()
        );
        let s = sample_random(10, 0.3, &mut rng).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(sample_random(10, 0.0, &mut rng).is_err());
        assert!(sample_random(10, 1.5, &mut rng).is_err());
    }

    #[test]
    fn random_inclusion_frequency_is_binomial() {
        let mut rng = rng_from_seed(1);
        let trials = 10_000;
        let mut counts = [0usize; 10];
        for _ in 0..trials {
            for i in sample_random(10, 0.5, &mut rng).unwrap() {
                counts[i] += 1;
            }
        }
        let sd = (trials as f64 * 0.25).sqrt();
        for c in counts {
            assert!((c as f64 - 5000.0).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn classwise_examples() {
        let mut rng = rng_from_seed(2);
        let classes = [0, 0, 0, 0, 0, 0, 0, 0, 1, 1];
        assert_eq!(
            sample_classwise(&classes, 1.0, &mut rng).unwrap(),
            (0..10).collect::<Vec<_>>()
        );
        for _ in 0..200 {
            let s = sample_classwise(&classes, 0.5, &mut rng).unwrap();
            assert_eq!(s.len(), 5);
            assert_eq!(s.iter().filter(|&&i| classes[i] == 1).count(), 1);
            let s = sample_classwise(&classes, 0.01, &mut rng).unwrap();
            assert_eq!(s.len(), 2);
        }
    }

    #[test]
    fn distance_weighted_uniform_at_tau_zero() {
        let mut rng = rng_from_seed(3);
        let q = Matrix::from_rows(&[[0.0]]);
        let train = Matrix::from_fn(10, 1, |i, _| i as f64 * i as f64);
        let trials = 10_000;
        let mut counts = [0usize; 10];
        for _ in 0..trials {
            for j in &sample_distance_weighted(&q, &train, 0.5, 0.0, None, &mut rng).unwrap()[0] {
                counts[*j] += 1;
            }
        }
        let sd = (trials as f64 * 0.25).sqrt();
        for c in counts {
            assert!((c as f64 - 5000.0).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn distance_weighted_single_draw_probabilities() {
        let mut rng = rng_from_seed(4);
        let q = Matrix::from_rows(&[[0.0]]);
        let train = Matrix::from_rows(&[[1.0], [2.0]]);
        let trials = 30_000;
        let mut first = 0;
        for _ in 0..trials {
            if sample_distance_weighted(&q, &train, 0.5, 1.0, None, &mut rng).unwrap()[0] == [0] {
                first += 1;
            }
        }
        let p = 2.0 / 3.0;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!((first as f64 - trials as f64 * p).abs() < 3.0 * sd);
    }

    #[test]
    fn distance_weighted_full_ratio_and_self_skip() {
        let mut rng = rng_from_seed(5);
        let train = Matrix::from_fn(6, 2, |i, j| (i * 3 + j) as f64);
        let q = train.select_rows(&[1, 4]);
        let all = sample_distance_weighted(&q, &train, 1.0, 5.0, None, &mut rng).unwrap();
        assert!(all.iter().all(|s| s == &(0..6).collect::<Vec<_>>()));
        let skip = sample_distance_weighted(&q, &train, 1.0, 5.0, Some(&[1, 4]), &mut rng).unwrap();
        assert_eq!(skip[0], vec![0, 2, 3, 4, 5]);
        assert_eq!(skip[1], vec![0, 1, 2, 3, 5]);
    }
}
