//! Metrics, average ranks and the Welch t-test win/tie/lose protocol.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Dataset, Task};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::Predictions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

impl Direction {
    /// Accuracy for classification, RMSE for regression.
    pub fn for_task(task: Task) -> Self {
        if task.is_classification() {
            Direction::HigherBetter
        } else {
            Direction::LowerBetter
        }
    }

    /// Whether `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::HigherBetter => a > b,
            Direction::LowerBetter => a < b,
        }
    }
}

/// Fraction of exact matches.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let mse = pred
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / truth.len() as f64;
    Ok(libm::sqrt(mse))
}

fn check_lengths(p: usize, t: usize) -> Result<()> {
    if p != t || t == 0 {
        return Err(Error::Shape {
            op: "compute_metric",
            expected: (t.max(1), 1),
            found: (p, 1),
        });
    }
    Ok(())
}

/// Accuracy or RMSE of `pred` against the labels of `truth`, in original
/// label units.
pub fn compute_metric(pred: &Predictions, truth: &Dataset) -> Result<f64> {
    match pred {
        Predictions::Classes { labels, .. } => {
            let t = truth.targets().classes().ok_or(Error::TaskMismatch {
                op: "compute_metric",
                expected: "classification",
            })?;
            accuracy(labels, t)
        }
        Predictions::Values(v) => {
            let t = truth.original_values().ok_or(Error::TaskMismatch {
                op: "compute_metric",
                expected: "regression",
            })?;
            rmse(v, &t)
        }
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample variance (`n − 1` denominator); 0 for fewer than two values.
pub fn sample_variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Per-seed results of one method on one dataset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricValue {
    pub dataset: String,
    pub method: String,
    pub values: Vec<f64>,
    pub mean: f64,
    pub direction: Direction,
}

impl MetricValue {
    pub fn new(
        dataset: impl Into<String>,
        method: impl Into<String>,
        values: Vec<f64>,
        direction: Direction,
    ) -> Self {
        let mean = mean(&values);
        Self {
            dataset: dataset.into(),
            method: method.into(),
            values,
            mean,
            direction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Significance {
    Significant,
    NotSignificant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Welch's unequal-variance t statistic, Welch–Satterthwaite degrees of
/// freedom and the two-sided p-value. With both variances zero the p-value is
/// 1 for equal means and 0 otherwise (`t`, `df` are then NaN).
pub fn welch_statistic(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::SampleTooSmall(s.len()));
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (sa, sb) = (sample_variance(a) / na, sample_variance(b) / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Ok(WelchResult {
            t: f64::NAN,
            df: f64::NAN,
            p: if ma == mb { 1.0 } else { 0.0 },
        });
    }
    let t = (ma - mb) / libm::sqrt(se2);
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(WelchResult {
        t,
        df,
        p: student_t_two_sided_p(t, df),
    })
}

pub fn welch_ttest(a: &[f64], b: &[f64], alpha: f64) -> Result<Significance> {
    let r = welch_statistic(a, b)?;
    Ok(if r.p < alpha {
        Significance::Significant
    } else {
        Significance::NotSignificant
    })
}

/// `P(|T| ≥ |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    regularized_incomplete_beta(0.5 * df, 0.5, x).clamp(0.0, 1.0)
}

/// `I_x(a, b)` by the continued fraction (modified Lentz).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Win,
    Tie,
    Lose,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Win => "win",
            Outcome::Tie => "tie",
            Outcome::Lose => "lose",
        }
    }
}

/// Tie unless the Welch test at 95% is significant; otherwise the better mean
/// wins.
pub fn win_tie_lose(ours: &MetricValue, theirs: &MetricValue) -> Result<Outcome> {
    if ours.direction != theirs.direction {
        return Err(Error::DirectionMismatch);
    }
    if ours.dataset != theirs.dataset {
        return Err(Error::InvalidConfig(alloc::format!(
            "win/tie/lose compares one dataset, got `{}` and `{}`",
            ours.dataset,
            theirs.dataset
        )));
    }
    if welch_ttest(&ours.values, &theirs.values, 0.05)? == Significance::NotSignificant {
        return Ok(Outcome::Tie);
    }
    Ok(if ours.direction.better(ours.mean, theirs.mean) {
        Outcome::Win
    } else if ours.direction.better(theirs.mean, ours.mean) {
        Outcome::Lose
    } else {
        Outcome::Tie
    })
}

/// Ranks of `means` (1 = best), exact ties sharing the average position.
pub fn rank_with_ties(means: &[f64], direction: Direction) -> Vec<f64> {
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| {
        let o = means[a].total_cmp(&means[b]);
        match direction {
            Direction::HigherBetter => o.reverse(),
            Direction::LowerBetter => o,
        }
    });
    let mut ranks = vec![0.0; means.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && means[order[j + 1]] == means[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    /// `methods × datasets`.
    pub ranks: Matrix,
    pub average: Vec<f64>,
}

/// Per-dataset ranks of method means and their average across datasets.
pub fn average_rank(
    grid: &[MetricValue],
    methods: &[String],
    datasets: &[String],
) -> Result<RankTable> {
    let mut ranks = Matrix::zeros(methods.len(), datasets.len());
    for (dj, ds) in datasets.iter().enumerate() {
        let mut cells = Vec::with_capacity(methods.len());
        for m in methods {
            let cell = grid
                .iter()
                .find(|v| &v.method == m && &v.dataset == ds)
                .ok_or_else(|| Error::MissingCell {
                    method: m.clone(),
                    dataset: ds.clone(),
                })?;
            cells.push(cell);
        }
        let Some(first) = cells.first() else { continue };
        if cells.iter().any(|c| c.direction != first.direction) {
            return Err(Error::DirectionMismatch);
        }
        let means: Vec<f64> = cells.iter().map(|c| c.mean).collect();
        for (mi, r) in rank_with_ties(&means, first.direction)
            .into_iter()
            .enumerate()
        {
            ranks[(mi, dj)] = r;
        }
    }
    let average = (0..methods.len())
        .map(|i| {
            if datasets.is_empty() {
                0.0
            } else {
                ranks.row(i).iter().sum::<f64>() / datasets.len() as f64
            }
        })
        .collect();
    Ok(RankTable {
        methods: methods.to_vec(),
        datasets: datasets.to_vec(),
        ranks,
        average,
    })
}

/// `[wins, ties, losses]` of each method against each other method, summed
/// over datasets.
pub fn win_tie_lose_matrix(
    grid: &[MetricValue],
    methods: &[String],
    datasets: &[String],
) -> Result<Vec<Vec<[usize; 3]>>> {
    let find = |m: &String, d: &String| {
        grid.iter()
            .find(|v| &v.method == m && &v.dataset == d)
            .ok_or_else(|| Error::MissingCell {
                method: m.clone(),
                dataset: d.clone(),
            })
    };
    let mut out = vec![vec![[0usize; 3]; methods.len()]; methods.len()];
    for (i, a) in methods.iter().enumerate() {
        for (j, b) in methods.iter().enumerate() {
            if i == j {
                continue;
            }
            for d in datasets {
                let k = match win_tie_lose(find(a, d)?, find(b, d)?)? {
                    Outcome::Win => 0,
                    Outcome::Tie => 1,
                    Outcome::Lose => 2,
                };
                out[i][j][k] += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    #[test]
    fn metric_examples() {
        assert_eq!(accuracy(&[0, 1], &[0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1], &[0, 0]).unwrap(), 0.5);
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - libm::sqrt(12.5)).abs() < 1e-15);
        assert!(accuracy(&[0], &[0, 1]).is_err());
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn welch_reference_example() {
        // (1..5) vs (3..7): sample variances 2.5, so t = −2 exactly.
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [3.0, 4.0, 5.0, 6.0, 7.0];
        let r = welch_statistic(&a, &b).unwrap();
        assert!((r.t + 2.0).abs() < 1e-12);
        assert!((r.df - 8.0).abs() < 1e-12);
        let oracle = 2.0 * StudentsT::new(0.0, 1.0, 8.0).unwrap().cdf(r.t);
        assert!((r.p - oracle).abs() < 1e-10, "{} vs {oracle}", r.p);
        assert_eq!(
            welch_ttest(&a, &b, 0.05).unwrap(),
            Significance::NotSignificant
        );
        // scaled by 1/√2 the variances halve and t = −2√2
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let a2: Vec<f64> = a.iter().map(|v| v * s).collect();
        let b2: Vec<f64> = a2.iter().map(|v| v + 2.0).collect();
        let r = welch_statistic(&a2, &b2).unwrap();
        assert!((r.t + 2.0 * core::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((r.df - 8.0).abs() < 1e-12);
        let oracle = 2.0 * StudentsT::new(0.0, 1.0, 8.0).unwrap().cdf(r.t);
        assert!((r.p - oracle).abs() < 1e-10);
        assert!((r.p - 0.0222).abs() < 1e-3, "{}", r.p);
        assert_eq!(
            welch_ttest(&a2, &b2, 0.05).unwrap(),
            Significance::Significant
        );
    }

    #[test]
    fn welch_degenerate_cases() {
        let a = [0.9; 15];
        let b = [0.5; 15];
        assert_eq!(
            welch_ttest(&a, &b, 0.05).unwrap(),
            Significance::Significant
        );
        assert_eq!(
            welch_ttest(&a, &a, 0.05).unwrap(),
            Significance::NotSignificant
        );
        let c = [0.1, 0.4, 0.3];
        assert_eq!(
            welch_ttest(&c, &c, 0.05).unwrap(),
            Significance::NotSignificant
        );
        assert_eq!(welch_ttest(&[1.0], &c, 0.05), Err(Error::SampleTooSmall(1)));
    }

    #[test]
    fn t_cdf_matches_oracle_across_df() {
        for &df in &[1.0, 2.5, 8.0, 30.0, 200.0] {
            let dist = StudentsT::new(0.0, 1.0, df).unwrap();
            for &t in &[0.0, 0.1, 0.7, 1.96, 3.0, 8.0] {
                let ours = student_t_two_sided_p(t, df);
                let oracle = 2.0 * (1.0 - dist.cdf(t));
                assert!(
                    (ours - oracle).abs() < 1e-10 * oracle.max(1e-3),
                    "df {df} t {t}: {ours} vs {oracle}"
                );
            }
        }
    }

    fn mv(ds: &str, m: &str, v: &[f64], dir: Direction) -> MetricValue {
        MetricValue::new(ds, m, v.to_vec(), dir)
    }

    #[test]
    fn win_tie_lose_examples() {
        let h = Direction::HigherBetter;
        let a = mv("d", "a", &[0.9, 0.91, 0.89], h);
        assert_eq!(
            win_tie_lose(&a, &mv("d", "b", &[0.9, 0.91, 0.89], h)).unwrap(),
            Outcome::Tie
        );
        let hi = mv("d", "a", &[0.9; 15], h);
        let lo = mv("d", "b", &[0.5; 15], h);
        assert_eq!(win_tie_lose(&hi, &lo).unwrap(), Outcome::Win);
        let l = Direction::LowerBetter;
        assert_eq!(
            win_tie_lose(&mv("d", "a", &[1.2; 5], l), &mv("d", "b", &[0.8; 5], l)).unwrap(),
            Outcome::Lose
        );
        assert_eq!(
            win_tie_lose(&hi, &mv("d", "b", &[0.5; 15], l)),
            Err(Error::DirectionMismatch)
        );
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn rank_examples() {
        let h = Direction::HigherBetter;
        let grid = [
            mv("d1", "A", &[0.9], h),
            mv("d1", "B", &[0.8], h),
            mv("d2", "A", &[0.7], h),
            mv("d2", "B", &[0.6], h),
        ];
        let t = average_rank(&grid, &names(&["A", "B"]), &names(&["d1", "d2"])).unwrap();
        assert_eq!(t.average, vec![1.0, 2.0]);
        assert_eq!(rank_with_ties(&[0.5, 0.5], h), vec![1.5, 1.5]);
        assert_eq!(rank_with_ties(&[0.9, 0.8, 0.8], h), vec![1.0, 2.5, 2.5]);
        assert_eq!(
            rank_with_ties(&[1.2, 0.8], Direction::LowerBetter),
            vec![2.0, 1.0]
        );
        let err = average_rank(&grid[..3], &names(&["A", "B"]), &names(&["d1", "d2"])).unwrap_err();
        assert!(matches!(err, Error::MissingCell { .. }));
    }

    proptest! {
        #[test]
        fn ranks_are_a_tied_permutation(means in prop::collection::vec(0..5u8, 1..8), higher in any::<bool>()) {
            let means: Vec<f64> = means.into_iter().map(f64::from).collect();
            let dir = if higher { Direction::HigherBetter } else { Direction::LowerBetter };
            let r = rank_with_ties(&means, dir);
            let m = means.len() as f64;
            prop_assert!((r.iter().sum::<f64>() - m * (m + 1.0) / 2.0).abs() < 1e-9);
        }

        #[test]
        fn welch_is_symmetric(a in prop::collection::vec(-5.0..5.0f64, 2..10), b in prop::collection::vec(-5.0..5.0f64, 2..10)) {
            prop_assert_eq!(welch_ttest(&a, &b, 0.05).unwrap(), welch_ttest(&b, &a, 0.05).unwrap());
        }

        #[test]
        fn win_lose_antisymmetric(a in prop::collection::vec(0.0..1.0f64, 2..8), b in prop::collection::vec(0.0..1.0f64, 2..8), higher in any::<bool>()) {
            let dir = if higher { Direction::HigherBetter } else { Direction::LowerBetter };
            let x = MetricValue::new("d", "x", a, dir);
            let y = MetricValue::new("d", "y", b, dir);
            let xy = win_tie_lose(&x, &y).unwrap();
            let yx = win_tie_lose(&y, &x).unwrap();
            prop_assert_eq!(xy == Outcome::Win, yx == Outcome::Lose);
            prop_assert_eq!(xy == Outcome::Tie, yx == Outcome::Tie);
        }
    }
}
