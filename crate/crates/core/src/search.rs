//! Random hyperparameter search.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng as _;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::Direction;
use crate::model::InputWidths;
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::train::{train, TrainConfig};

/// Ranges sampled per trial. `None` keeps the base configuration's value.
/// Architecture ranges only touch the fields a variant actually has.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SearchSpace {
    pub n_trials: usize,
    /// Log-uniform.
    pub lr: Option<(f64, f64)>,
    /// Log-uniform.
    pub weight_decay: Option<(f64, f64)>,
    /// Uniform; only for the modern variant.
    pub sns_ratio: Option<(f64, f64)>,
    pub d_prime: Option<(usize, usize)>,
    pub n_blocks: Option<(usize, usize)>,
    pub hidden_width: Option<(usize, usize)>,
    /// Uniform.
    pub dropout_rate: Option<(f64, f64)>,
    /// Log-uniform PLR frequency scale.
    pub plr_sigma: Option<(f64, f64)>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            n_trials: 100,
            lr: Some((1e-4, 1e-1)),
            weight_decay: None,
            sns_ratio: Some((0.05, 0.6)),
            d_prime: None,
            n_blocks: None,
            hidden_width: None,
            dropout_rate: None,
            plr_sigma: None,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig("n_trials must be ≥ 1".into()));
        }
        let log_ok = |r: Option<(f64, f64)>| r.is_none_or(|(a, b)| a > 0.0 && a <= b);
        if !log_ok(self.lr) || !log_ok(self.weight_decay) || !log_ok(self.plr_sigma) {
            return Err(Error::InvalidConfig(
                "log-uniform ranges need 0 < low ≤ high".into(),
            ));
        }
        if self
            .sns_ratio
            .is_some_and(|(a, b)| !(a > 0.0 && a <= b && b <= 1.0))
        {
            return Err(Error::InvalidConfig(
                "sns_ratio range must lie in (0, 1]".into(),
            ));
        }
        if self
            .dropout_rate
            .is_some_and(|(a, b)| !(a >= 0.0 && a <= b && b < 1.0))
        {
            return Err(Error::InvalidConfig(
                "dropout range must lie in [0, 1)".into(),
            ));
        }
        let int_ok =
            |r: Option<(usize, usize)>, min: usize| r.is_none_or(|(a, b)| a >= min && a <= b);
        if !int_ok(self.d_prime, 1) || !int_ok(self.n_blocks, 1) || !int_ok(self.hidden_width, 1) {
            return Err(Error::InvalidConfig(
                "integer ranges need 1 ≤ low ≤ high".into(),
            ));
        }
        Ok(())
    }
}

fn log_uniform(rng: &mut Rng, (a, b): (f64, f64)) -> f64 {
    if a == b {
        return a;
    }
    libm::exp(rng.random_range(libm::log(a)..=libm::log(b)))
}

fn uniform(rng: &mut Rng, (a, b): (f64, f64)) -> f64 {
    if a == b {
        a
    } else {
        rng.random_range(a..=b)
    }
}

/// Seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, index as u64)
}

/// The configuration of trial `index`; it also trains with that trial's seed.
pub fn sample_config(
    space: &SearchSpace,
    base: &TrainConfig,
    widths: InputWidths,
    master: u64,
    index: usize,
) -> TrainConfig {
    let seed = trial_seed(master, index);
    let mut rng = rng_from_seed(seed);
    let mut cfg = TrainConfig { seed, ..*base };
    let modern = !cfg.arch.variant.is_linear();
    if let Some(r) = space.lr {
        cfg.lr = log_uniform(&mut rng, r);
    }
    if let Some(r) = space.weight_decay {
        cfg.weight_decay = log_uniform(&mut rng, r);
    }
    if let Some((a, b)) = space.d_prime {
        let mut d = rng.random_range(a..=b);
        if cfg.arch.variant == crate::model::Variant::NcaV0 {
            d = d.min(widths.total()).max(1);
        }
        cfg.arch.d_prime = d;
    }
    if modern {
        if let Some(r) = space.sns_ratio {
            cfg.sns_ratio = uniform(&mut rng, r);
        }
        if let Some((a, b)) = space.n_blocks {
            cfg.arch.n_blocks = rng.random_range(a..=b);
        }
        if let Some((a, b)) = space.hidden_width {
            cfg.arch.hidden_width = rng.random_range(a..=b);
        }
        if let Some(r) = space.dropout_rate {
            cfg.arch.dropout_rate = uniform(&mut rng, r);
        }
        if let Some(r) = space.plr_sigma {
            cfg.arch.plr.sigma = log_uniform(&mut rng, r);
        }
    }
    cfg
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialRecord {
    pub trial: usize,
    pub config: TrainConfig,
    pub val_metric: Option<f64>,
    pub error: Option<String>,
    pub wall_clock: f64,
}

/// Samples and trains trial `index`. Failures are recorded, not returned.
pub fn run_trial(
    space: &SearchSpace,
    base: &TrainConfig,
    train_set: &Dataset,
    val: &Dataset,
    master: u64,
    index: usize,
    clock: &dyn Fn() -> f64,
) -> TrialRecord {
    let t0 = clock();
    let config = sample_config(space, base, InputWidths::of(train_set), master, index);
    let (val_metric, error) = match train(&config, train_set, val) {
        Ok(out) => (Some(out.history.best_val_metric), None),
        Err(e) => (None, Some(e.to_string())),
    };
    TrialRecord {
        trial: index,
        config,
        val_metric,
        error,
        wall_clock: clock() - t0,
    }
}

/// Index of the best successful trial; ties keep the earlier one.
pub fn select_best(trials: &[TrialRecord], direction: Direction) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, t) in trials.iter().enumerate() {
        let Some(m) = t.val_metric.filter(|m| !m.is_nan()) else {
            continue;
        };
        if best.is_none_or(|(_, b)| direction.better(m, b)) {
            best = Some((i, m));
        }
    }
    best.map(|(i, _)| i)
        .ok_or(Error::AllTrialsFailed(trials.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: TrainConfig,
    pub best_val_metric: f64,
    pub trials: Vec<TrialRecord>,
}

/// Serial random search; trial `i` depends only on `(master, i)`, so running
/// trials in parallel with [`run_trial`] and [`select_best`] gives the same
/// result.
pub fn random_search(
    space: &SearchSpace,
    base: &TrainConfig,
    train_set: &Dataset,
    val: &Dataset,
    master: u64,
) -> Result<SearchOutcome> {
    space.validate()?;
    let trials: Vec<TrialRecord> = (0..space.n_trials)
        .map(|i| run_trial(space, base, train_set, val, master, i, &|| 0.0))
        .collect();
    finish_search(trials, Direction::for_task(train_set.task()))
}

pub fn finish_search(trials: Vec<TrialRecord>, direction: Direction) -> Result<SearchOutcome> {
    let i = select_best(&trials, direction)?;
    Ok(SearchOutcome {
        best: trials[i].config,
        best_val_metric: trials[i].val_metric.unwrap_or(f64::NAN),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{prepare_splits, Targets, Task};
    use crate::diff::params::uniform_matrix;
    use crate::model::Variant;
    use alloc::vec;

    fn rec(trial: usize, m: Option<f64>) -> TrialRecord {
        let t = Task::Classification { n_classes: 2 };
        TrialRecord {
            trial,
            config: TrainConfig::preset(Variant::NcaV4Lnca, t, 2),
            val_metric: m,
            error: None,
            wall_clock: 0.0,
        }
    }

    #[test]
    fn selection_rules() {
        let h = Direction::HigherBetter;
        assert_eq!(select_best(&[rec(0, Some(0.5))], h).unwrap(), 0);
        assert_eq!(
            select_best(&[rec(0, Some(0.5)), rec(1, Some(0.7))], h).unwrap(),
            1
        );
        assert_eq!(
            select_best(&[rec(0, Some(0.7)), rec(1, Some(0.7))], h).unwrap(),
            0
        );
        assert_eq!(
            select_best(
                &[rec(0, Some(0.7)), rec(1, Some(0.2))],
                Direction::LowerBetter
            )
            .unwrap(),
            1
        );
        assert_eq!(
            select_best(&[rec(0, None), rec(1, Some(0.1))], h).unwrap(),
            1
        );
        assert_eq!(
            select_best(&[rec(0, None)], h),
            Err(Error::AllTrialsFailed(1))
        );
    }

    #[test]
    fn sampled_configs_are_valid_and_in_range() {
        let t = Task::Classification { n_classes: 3 };
        let w = InputWidths {
            numerical: 4,
            categorical: 2,
        };
        let space = SearchSpace {
            weight_decay: Some((1e-6, 1e-3)),
            d_prime: Some((2, 16)),
            n_blocks: Some((1, 3)),
            hidden_width: Some((4, 32)),
            dropout_rate: Some((0.0, 0.5)),
            plr_sigma: Some((0.01, 1.0)),
            ..SearchSpace::default()
        };
        for v in Variant::LADDER {
            let base = TrainConfig::preset(v, t, 6);
            for i in 0..50 {
                let c = sample_config(&space, &base, w, 11, i);
                c.validate(t, w).unwrap();
                assert!((1e-4..=1e-1).contains(&c.lr));
                if v == Variant::ModernNca {
                    assert!((0.05..=0.6).contains(&c.sns_ratio));
                }
                assert_eq!(c, sample_config(&space, &base, w, 11, i));
            }
        }
    }

    #[test]
    fn search_is_deterministic() {
        let mut rng = rng_from_seed(0);
        let mut x = uniform_matrix(60, 2, 1.0, &mut rng);
        let y: Vec<usize> = (0..60).map(|i| i % 2).collect();
        for i in 0..60 {
            x[(i, 0)] += y[i] as f64 * 3.0;
        }
        let d = Dataset::from_numeric(x, Targets::Classes(y), Some(2)).unwrap();
        let s = prepare_splits(&d, 0, true).unwrap();
        let mut base = TrainConfig::preset(Variant::NcaV4Lnca, d.task(), 2);
        base.max_epochs = 3;
        let space = SearchSpace {
            n_trials: 3,
            ..SearchSpace::default()
        };
        let a = random_search(&space, &base, &s.train, &s.val, 5).unwrap();
        let b = random_search(&space, &base, &s.train, &s.val, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials.len(), 3);
        let one = random_search(
            &SearchSpace {
                n_trials: 1,
                ..space
            },
            &base,
            &s.train,
            &s.val,
            5,
        )
        .unwrap();
        assert_eq!(one.best, one.trials[0].config);
        assert_eq!(vec![a.trials[0].clone()], one.trials);
    }
}
