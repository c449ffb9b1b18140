//! Mini-batch training with stochastic neighbourhood sampling and
//! validation-based early stopping.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::data::{Dataset, Targets, Task};
use crate::diff::{sgd_step, Mode};
use crate::error::{Error, Result};
use crate::eval::{compute_metric, Direction};
use crate::loss::{self, LossKind, Supervision};
use crate::matrix::Matrix;
use crate::model::{
    build_model, model_input, predict, ArchConfig, InputWidths, Model, Neighbourhood,
    PredictionRule, Variant,
};
use crate::neighborhood::{
    build_exclusion_mask, pairwise_distance, pairwise_distance_backward, sample_classwise,
    sample_distance_weighted, sample_random, DistanceKind, ExclusionMask, NeighborhoodWeights,
    SamplingStrategy,
};
use crate::rng::{rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub arch: ArchConfig,
    pub loss: LossKind,
    pub distance: DistanceKind,
    pub sampling: SamplingStrategy,
    pub sns_ratio: f64,
    pub batch_size: usize,
    /// One batch holding the whole training set (plain gradient descent).
    pub full_batch: bool,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub prediction: PredictionRule,
    /// Degrees of freedom of the Student-t kernel.
    pub nu: f64,
    pub standardize_labels: bool,
}

impl TrainConfig {
    /// Defaults of a ladder rung: each step adds one change to the previous.
    pub fn preset(variant: Variant, task: Task, d_input: usize) -> Self {
        let log_loss = LossKind::default_for(task);
        let sum_prob = if task.is_classification() {
            LossKind::NcaSumProb
        } else {
            LossKind::MseSoftnn
        };
        let knn = PredictionRule::HardKnn { k: 5 };
        let base = TrainConfig {
            arch: ArchConfig::preset(variant, d_input),
            loss: sum_prob,
            distance: DistanceKind::SquaredEuclid,
            sampling: SamplingStrategy::Random,
            sns_ratio: 1.0,
            batch_size: 1024,
            full_batch: true,
            lr: 0.05,
            weight_decay: 0.0,
            max_epochs: 200,
            patience: 16,
            seed: 0,
            prediction: knn,
            nu: 1.0,
            standardize_labels: true,
        };
        match variant {
            Variant::NcaV0 | Variant::NcaV1 => base,
            Variant::NcaV2 => TrainConfig {
                full_batch: false,
                lr: 0.01,
                ..base
            },
            Variant::NcaV3 => TrainConfig {
                full_batch: false,
                lr: 0.01,
                loss: log_loss,
                ..base
            },
            Variant::NcaV4Lnca => TrainConfig {
                full_batch: false,
                lr: 0.01,
                loss: log_loss,
                prediction: PredictionRule::SoftNn,
                ..base
            },
            Variant::ModernNca => TrainConfig {
                full_batch: false,
                lr: 0.01,
                loss: log_loss,
                prediction: PredictionRule::SoftNn,
                distance: DistanceKind::Euclid,
                sns_ratio: 0.3,
                ..base
            },
        }
    }

    pub fn validate(&self, task: Task, widths: InputWidths) -> Result<()> {
        self.arch.validate(widths)?;
        self.loss.check(task)?;
        if !(self.sns_ratio > 0.0 && self.sns_ratio <= 1.0) {
            return Err(Error::OutOfRange {
                what: "sns_ratio",
                value: self.sns_ratio,
            });
        }
        if self.patience == 0 || self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "patience, max_epochs and batch_size must be ≥ 1".into(),
            ));
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) || !(self.nu > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "need lr > 0, weight_decay ≥ 0, nu > 0 (lr {}, weight_decay {}, nu {})",
                self.lr, self.weight_decay, self.nu
            )));
        }
        match self.sampling {
            SamplingStrategy::Classwise if !task.is_classification() => {
                return Err(Error::TaskMismatch {
                    op: "classwise sampling",
                    expected: "classification",
                })
            }
            SamplingStrategy::Distance { tau } if !(tau >= 0.0) => {
                return Err(Error::OutOfRange {
                    what: "distance sampling exponent",
                    value: tau,
                })
            }
            _ => {}
        }
        if self.prediction == (PredictionRule::HardKnn { k: 0 }) {
            return Err(Error::InvalidConfig("hard-KNN needs k ≥ 1".into()));
        }
        Ok(())
    }

    pub fn neighbourhood(&self) -> Neighbourhood {
        Neighbourhood {
            distance: self.distance,
            kernel: self.loss.kernel(self.nu),
            rule: self.prediction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StopReason {
    Patience,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_metric: f64,
    /// Seconds since training started, as reported by the clock hook.
    pub wall_clock: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_metric: f64,
    pub stop_reason: StopReason,
    pub direction: Direction,
    /// Queries left out because their only candidate was themselves.
    pub dropped_queries: usize,
    /// Queries the MCML loss skipped for lack of a same-class candidate.
    pub skipped_queries: usize,
}

/// What the loss saw for one mini-batch, reported before the SGD step.
pub struct BatchEvent<'a> {
    pub epoch: usize,
    pub batch: usize,
    /// Training-row indices of the queries that entered the loss.
    pub queries: &'a [usize],
    /// Training-row indices of the candidate columns.
    pub candidates: &'a [usize],
    pub mask: &'a ExclusionMask,
    pub loss: f64,
    /// Parameters before the step, gradients of this batch accumulated.
    pub model: &'a Model,
}

/// Optional instrumentation of [`train_with`].
#[derive(Default)]
pub struct Hooks<'a> {
    /// Seconds since an arbitrary origin; wall-clock fields are 0 without it.
    pub clock: Option<&'a dyn Fn() -> f64>,
    pub on_batch: Option<&'a mut dyn FnMut(&BatchEvent<'_>)>,
    pub on_epoch: Option<&'a mut dyn FnMut(&EpochRecord)>,
}

pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub model: Model,
    pub history: TrainHistory,
}

pub fn train(cfg: &TrainConfig, train: &Dataset, val: &Dataset) -> Result<TrainOutcome> {
    train_with(cfg, train, val, &mut Hooks::default())
}

/// Contiguous batches of `perm`. A trailing batch of one row is merged into
/// the previous one so BatchNorm always sees at least two rows.
pub fn batches(perm: &[usize], batch_size: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = perm.chunks(batch_size.max(1)).map(|c| c.to_vec()).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        let last = out.pop().unwrap_or_default();
        if let Some(prev) = out.last_mut() {
            prev.extend(last);
        }
    }
    out
}

/// Queries, candidate columns and mask of one mini-batch.
#[derive(Debug, Clone)]
pub struct BatchPlan {
    pub queries: Vec<usize>,
    pub candidates: Vec<usize>,
    pub mask: ExclusionMask,
    pub dropped: usize,
}

/// Draws candidates for `batch` and masks each query's own row (and, for
/// distance sampling, every column outside its own draw). Queries with no
/// candidate left are dropped.
pub fn plan_batch(
    cfg: &TrainConfig,
    model: &Model,
    x_train: &Matrix,
    targets: &Targets,
    batch: &[usize],
    rng: &mut Rng,
) -> Result<BatchPlan> {
    let n = x_train.rows();
    let (candidates, mask) = match cfg.sampling {
        SamplingStrategy::Random => {
            let c = sample_random(n, cfg.sns_ratio, rng)?;
            let m = build_exclusion_mask(batch, &c);
            (c, m)
        }
        SamplingStrategy::Classwise => {
            let classes = targets.classes().ok_or(Error::TaskMismatch {
                op: "classwise sampling",
                expected: "classification",
            })?;
            let c = sample_classwise(classes, cfg.sns_ratio, rng)?;
            let m = build_exclusion_mask(batch, &c);
            (c, m)
        }
        SamplingStrategy::Distance { tau } => {
            let train_emb = model.embed_eval(x_train)?;
            let batch_emb = train_emb.select_rows(batch);
            let sets = sample_distance_weighted(
                &batch_emb,
                &train_emb,
                cfg.sns_ratio,
                tau,
                Some(batch),
                rng,
            )?;
            let mut union: Vec<usize> = sets.iter().flatten().copied().collect();
            union.sort_unstable();
            union.dedup();
            let m = ExclusionMask::from_fn(batch.len(), union.len(), |i, j| {
                sets[i].binary_search(&union[j]).is_err()
            });
            (union, m)
        }
    };
    let keep: Vec<usize> = (0..batch.len()).filter(|&i| !mask.row_is_full(i)).collect();
    if keep.len() == batch.len() {
        return Ok(BatchPlan {
            queries: batch.to_vec(),
            candidates,
            mask,
            dropped: 0,
        });
    }
    let queries: Vec<usize> = keep.iter().map(|&i| batch[i]).collect();
    let kept = ExclusionMask::from_fn(keep.len(), candidates.len(), |r, j| {
        mask.is_excluded(keep[r], j)
    });
    Ok(BatchPlan {
        dropped: batch.len() - queries.len(),
        queries,
        candidates,
        mask: kept,
    })
}

/// Forward and backward pass of one planned batch. Gradients are accumulated
/// into the model; returns the loss value and the MCML skip count.
pub fn batch_loss(
    cfg: &TrainConfig,
    model: &mut Model,
    x_train: &Matrix,
    targets: &Targets,
    plan: &BatchPlan,
    rng: &mut Rng,
) -> Result<(f64, usize)> {
    let b = plan.queries.len();
    let xb = x_train
        .select_rows(&plan.queries)
        .vstack(&x_train.select_rows(&plan.candidates));
    let (emb, tape) = model.embed(&xb, Mode::Train, rng)?;
    let q = emb.slice_rows(0, b);
    let k = emb.slice_rows(b, emb.rows());
    let d = pairwise_distance(&q, &k, cfg.distance)?;
    let w = NeighborhoodWeights::from_distances(d, plan.mask.clone(), cfg.loss.kernel(cfg.nu))?;
    let out = match targets {
        Targets::Classes(c) => {
            let cand: Vec<usize> = plan.candidates.iter().map(|&j| c[j]).collect();
            let tgt: Vec<usize> = plan.queries.iter().map(|&i| c[i]).collect();
            loss::evaluate(
                cfg.loss,
                &w,
                Supervision::Classes {
                    candidates: &cand,
                    targets: &tgt,
                },
            )?
        }
        Targets::Values(y) => {
            let cand: Vec<f64> = plan.candidates.iter().map(|&j| y[j]).collect();
            let tgt: Vec<f64> = plan.queries.iter().map(|&i| y[i]).collect();
            loss::evaluate(
                cfg.loss,
                &w,
                Supervision::Values {
                    candidates: &cand,
                    targets: &tgt,
                },
            )?
        }
    };
    let dd = w.backward(&out.d_weights);
    let (dq, dk) = pairwise_distance_backward(&q, &k, cfg.distance, w.distances(), &dd);
    model.backward(tape, &dq.vstack(&dk));
    Ok((out.value, out.skipped))
}

fn improved(direction: Direction, new: f64, best: f64) -> bool {
    if best.is_nan() {
        return !new.is_nan();
    }
    direction.better(new, best)
}

/// Validation metric of `model` with the full training set as candidates.
pub fn evaluate_model(
    cfg: &TrainConfig,
    model: &Model,
    train: &Dataset,
    eval_set: &Dataset,
) -> Result<f64> {
    let pred = predict(model, train, &model_input(eval_set), cfg.neighbourhood())?;
    compute_metric(&pred, eval_set)
}

pub fn train_with(
    cfg: &TrainConfig,
    train: &Dataset,
    val: &Dataset,
    hooks: &mut Hooks<'_>,
) -> Result<TrainOutcome> {
    let widths = InputWidths::of(train);
    cfg.validate(train.task(), widths)?;
    if train.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            found: train.len(),
        });
    }
    if InputWidths::of(val) != widths || val.task() != train.task() {
        return Err(Error::Schema(
            "validation set does not match the training schema".into(),
        ));
    }
    let clock = hooks.clock.unwrap_or(&|| 0.0);
    let t0 = clock();
    let mut rng = rng_from_seed(cfg.seed);
    let mut model = build_model(cfg.arch, widths, &mut rng)?;
    let x_train = model_input(train);
    let targets = train.targets();
    let n = train.len();
    let batch_size = if cfg.full_batch {
        n
    } else {
        cfg.batch_size.min(n)
    };
    let direction = Direction::for_task(train.task());

    let mut best: Option<(Model, usize, f64)> = None;
    let mut epochs = Vec::new();
    let mut since_best = 0;
    let mut stop_reason = StopReason::MaxEpochs;
    let (mut dropped, mut skipped) = (0, 0);
    let mut perm: Vec<usize> = (0..n).collect();

    for epoch in 0..cfg.max_epochs {
        perm.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut loss_rows = 0;
        for (bi, batch) in batches(&perm, batch_size).iter().enumerate() {
            let plan = plan_batch(cfg, &model, &x_train, targets, batch, &mut rng)?;
            dropped += plan.dropped;
            if plan.queries.is_empty() {
                continue;
            }
            let (value, sk) = batch_loss(cfg, &mut model, &x_train, targets, &plan, &mut rng)?;
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: bi });
            }
            skipped += sk;
            if let Some(f) = hooks.on_batch.as_mut() {
                f(&BatchEvent {
                    epoch,
                    batch: bi,
                    queries: &plan.queries,
                    candidates: &plan.candidates,
                    mask: &plan.mask,
                    loss: value,
                    model: &model,
                });
            }
            loss_sum += value * plan.queries.len() as f64;
            loss_rows += plan.queries.len();
            sgd_step(&mut model.store, cfg.lr, cfg.weight_decay)?;
        }
        let val_metric = evaluate_model(cfg, &model, train, val)?;
        let record = EpochRecord {
            epoch,
            train_loss: if loss_rows > 0 {
                loss_sum / loss_rows as f64
            } else {
                0.0
            },
            val_metric,
            wall_clock: clock() - t0,
        };
        if let Some(f) = hooks.on_epoch.as_mut() {
            f(&record);
        }
        epochs.push(record);
        let better = match &best {
            None => true,
            Some((_, _, b)) => improved(direction, val_metric, *b),
        };
        if better {
            best = Some((model.clone(), epoch, val_metric));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stop_reason = StopReason::Patience;
                break;
            }
        }
    }
    let (model, best_epoch, best_val_metric) =
        best.ok_or_else(|| Error::InvalidConfig("no epoch ran".into()))?;
    Ok(TrainOutcome {
        model,
        history: TrainHistory {
            epochs,
            best_epoch,
            best_val_metric,
            stop_reason,
            direction,
            dropped_queries: dropped,
            skipped_queries: skipped,
        },
    })
}

/// Per-seed test metrics with their mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeedRuns {
    pub seeds: Vec<u64>,
    pub metrics: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl SeedRuns {
    pub fn from_metrics(seeds: Vec<u64>, metrics: Vec<f64>) -> Self {
        let mean = crate::eval::mean(&metrics);
        let std = libm::sqrt(crate::eval::sample_variance(&metrics));
        Self {
            seeds,
            metrics,
            mean,
            std,
        }
    }
}

/// Trains with `seed` on prepared splits and returns the test metric.
pub fn run_seed(cfg: &TrainConfig, splits: &crate::data::PreparedSplits, seed: u64) -> Result<f64> {
    let cfg = TrainConfig { seed, ..*cfg };
    let out = train(&cfg, &splits.train, &splits.val)?;
    evaluate_model(&cfg, &out.model, &splits.train, &splits.test)
}

/// One fixed split, one training run per seed.
pub fn run_seeds(
    cfg: &TrainConfig,
    dataset: &Dataset,
    seeds: &[u64],
    split_seed: u64,
) -> Result<SeedRuns> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "run_seeds needs at least one seed".into(),
        ));
    }
    let splits = crate::data::prepare_splits(dataset, split_seed, cfg.standardize_labels)?;
    let metrics = seeds
        .iter()
        .map(|&s| run_seed(cfg, &splits, s))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SeedRuns::from_metrics(seeds.to_vec(), metrics))
}
