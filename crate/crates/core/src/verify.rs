//! Self-check suite: gradient checks, oracle equivalences, normalization and
//! determinism. Each check reports its measured error against a tolerance.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::data::{Dataset, Targets, Task};
use crate::diff::activation::{relu, relu_backward};
use crate::diff::gradcheck::{check_input_grad, check_param_grads, GradCheckReport};
use crate::diff::params::uniform_matrix;
use crate::diff::{BatchNorm, Dropout, LayerNorm, Linear, Mode, ParamStore, PlrConfig, PlrEncoder};
use crate::error::Result;
use crate::eval::welch_statistic;
use crate::loss::LossKind;
use crate::matrix::Matrix;
use crate::model::{
    build_model, build_network, model_input, softnn_from_weights, ArchConfig, InputWidths,
    NormKind, Predictions, Variant,
};
use crate::neighborhood::{
    build_exclusion_mask, pairwise_distance, DistanceKind, ExclusionMask, Kernel,
    NeighborhoodWeights,
};
use crate::rng::{rng_from_seed, Rng};
use crate::train::{batch_loss, train, train_with, BatchPlan, Hooks, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Self {
            name,
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }
}

/// Deliberate defects for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Negates the analytic weight gradient of the linear layer check.
    FlipLinearGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Randomized trials for the normalization checks.
    pub trials: usize,
    /// Random instances per gradient check.
    pub instances: usize,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trials: 10_000,
            instances: 20,
            fault: None,
        }
    }
}

const GRAD_TOL: f64 = 1e-4;
const H: f64 = 1e-6;

fn batch_size(seed: u64) -> usize {
    if seed % 2 == 0 {
        2
    } else {
        8
    }
}

fn weighted_sum(y: &Matrix, r: &Matrix) -> f64 {
    y.as_slice()
        .iter()
        .zip(r.as_slice())
        .map(|(a, b)| a * b)
        .sum()
}

fn layer_check(instances: usize, mut one: impl FnMut(u64, &mut Rng) -> GradCheckReport) -> f64 {
    (0..instances as u64)
        .map(|s| one(s, &mut rng_from_seed(s)))
        .fold(GradCheckReport::default(), GradCheckReport::merge)
        .max_rel_error
}

fn grad_linear(opts: &VerifyOptions) -> f64 {
    let flip = opts.fault == Some(Fault::FlipLinearGradient);
    layer_check(opts.instances, |s, rng| {
        let (b, din, dout) = (
            batch_size(s),
            1 + (s as usize % 6),
            1 + (s as usize * 7 % 6),
        );
        let mut store = ParamStore::new();
        let l = Linear::new(&mut store, "l", din, dout, true, rng);
        let x = uniform_matrix(b, din, 1.0, rng);
        let r = uniform_matrix(b, dout, 1.0, rng);
        let (_, c) = l.forward(&store, &x).unwrap_or_else(|_| unreachable!());
        let dx = l.backward(&mut store, c, &r);
        if flip {
            store.grad_mut(l.weight).scale(-1.0);
        }
        let f = |s: &ParamStore, x: &Matrix| {
            weighted_sum(&l.apply(s, x).unwrap_or_else(|_| unreachable!()), &r)
        };
        let rep = check_param_grads(&mut store, H, |s| f(s, &x));
        rep.merge(check_input_grad(&x, &dx, H, |x| f(&store, x)))
    })
}

fn grad_batchnorm(opts: &VerifyOptions) -> f64 {
    layer_check(opts.instances, |s, rng| {
        let (b, d) = (batch_size(s), 1 + (s as usize % 6));
        let mut store = ParamStore::new();
        let mut bn = BatchNorm::new(&mut store, "bn", d);
        *store.value_mut(bn.gamma) = uniform_matrix(1, d, 2.0, rng);
        *store.value_mut(bn.beta) = uniform_matrix(1, d, 1.0, rng);
        let x = uniform_matrix(b, d, 2.0, rng);
        let r = uniform_matrix(b, d, 1.0, rng);
        let proto = bn.clone();
        let (_, c) = bn
            .forward(&store, &x, Mode::Train)
            .unwrap_or_else(|_| unreachable!());
        let dx = bn.backward(&mut store, c, &r);
        let f = |s: &ParamStore, x: &Matrix| {
            let mut n = proto.clone();
            weighted_sum(
                &n.forward(s, x, Mode::Train)
                    .unwrap_or_else(|_| unreachable!())
                    .0,
                &r,
            )
        };
        let rep = check_param_grads(&mut store, H, |s| f(s, &x));
        rep.merge(check_input_grad(&x, &dx, H, |x| f(&store, x)))
    })
}

fn grad_layernorm(opts: &VerifyOptions) -> f64 {
    layer_check(opts.instances, |s, rng| {
        let (b, d) = (batch_size(s), 2 + (s as usize % 5));
        let mut store = ParamStore::new();
        let ln = LayerNorm::new(&mut store, "ln", d);
        *store.value_mut(ln.gamma) = uniform_matrix(1, d, 2.0, rng);
        let x = uniform_matrix(b, d, 2.0, rng);
        let r = uniform_matrix(b, d, 1.0, rng);
        let (_, c) = ln.forward(&store, &x).unwrap_or_else(|_| unreachable!());
        let dx = ln.backward(&mut store, c, &r);
        let f = |s: &ParamStore, x: &Matrix| {
            weighted_sum(&ln.forward(s, x).unwrap_or_else(|_| unreachable!()).0, &r)
        };
        let rep = check_param_grads(&mut store, H, |s| f(s, &x));
        rep.merge(check_input_grad(&x, &dx, H, |x| f(&store, x)))
    })
}

fn grad_relu_dropout(opts: &VerifyOptions) -> (f64, f64) {
    let relu_err = layer_check(opts.instances, |s, rng| {
        let (b, d) = (batch_size(s), 1 + (s as usize % 6));
        // keep entries away from the kink
        let x = uniform_matrix(b, d, 1.0, rng).map(|v| if v.abs() < 0.05 { v + 0.1 } else { v });
        let r = uniform_matrix(b, d, 1.0, rng);
        let (_, c) = relu(&x);
        let dx = relu_backward(c, &r);
        check_input_grad(&x, &dx, H, |x| weighted_sum(&relu(x).0, &r))
    });
    let drop_err = layer_check(opts.instances, |s, rng| {
        let (b, d) = (batch_size(s), 1 + (s as usize % 6));
        let drop = Dropout::new(0.3).unwrap_or_else(|_| unreachable!());
        let x = uniform_matrix(b, d, 1.0, rng);
        let r = uniform_matrix(b, d, 1.0, rng);
        let (_, c) = drop.forward(&x, Mode::Eval, rng);
        let dx = drop.backward(c, &r);
        let mut fresh = rng_from_seed(s);
        check_input_grad(&x, &dx, H, |x| {
            weighted_sum(&drop.forward(x, Mode::Eval, &mut fresh).0, &r)
        })
    });
    (relu_err, drop_err)
}

fn grad_plr(opts: &VerifyOptions) -> f64 {
    layer_check(opts.instances, |s, rng| {
        let (b, d) = (batch_size(s), 1 + (s as usize % 6));
        let cfg = PlrConfig {
            n_frequencies: 3,
            out_dim: 4,
            sigma: 0.5,
        };
        let mut store = ParamStore::new();
        let plr =
            PlrEncoder::new(&mut store, "plr", d, cfg, rng).unwrap_or_else(|_| unreachable!());
        let x = uniform_matrix(b, d, 2.0, rng);
        let r = uniform_matrix(b, d * 4, 1.0, rng);
        let (_, c) = plr.forward(&store, &x).unwrap_or_else(|_| unreachable!());
        let dx = plr.backward(&mut store, c, &r);
        let f = |s: &ParamStore, x: &Matrix| {
            weighted_sum(&plr.apply(s, x).unwrap_or_else(|_| unreachable!()), &r)
        };
        let rep = check_param_grads(&mut store, H, |s| f(s, &x));
        rep.merge(check_input_grad(&x, &dx, H, |x| f(&store, x)))
    })
}

/// Small mixed-type dataset: `d` numerical columns, one 3-way categorical.
fn mixed_dataset(n: usize, d: usize, task: Task, rng: &mut Rng) -> Dataset {
    use crate::data::ColumnSchema;
    let x = uniform_matrix(n, d, 1.5, rng);
    let cat = Matrix::from_fn(n, 3, |i, j| f64::from(i % 3 == j));
    let mut schema: Vec<ColumnSchema> = (0..d)
        .map(|j| ColumnSchema::numerical(alloc::format!("x{j}")))
        .collect();
    schema.push(ColumnSchema::categorical("c", ["a", "b", "c"]));
    let (targets, label) = match task {
        Task::Classification { n_classes } => (
            Targets::Classes((0..n).map(|i| i % n_classes).collect()),
            ColumnSchema::class_label("y", (0..n_classes).map(|c| alloc::format!("{c}"))),
        ),
        Task::Regression => (
            Targets::Values((0..n).map(|_| rng.random_range(-2.0..2.0)).collect()),
            ColumnSchema::regression_label("y"),
        ),
    };
    schema.push(label);
    Dataset::new(schema, x, cat, targets).unwrap_or_else(|_| unreachable!())
}

/// Full ModernNCA loss gradient with respect to every parameter.
pub fn modern_loss_gradcheck(
    seed: u64,
    loss: LossKind,
    distance: DistanceKind,
    b: usize,
) -> Result<GradCheckReport> {
    let mut rng = rng_from_seed(seed);
    let task = if loss == LossKind::MseSoftnn {
        Task::Regression
    } else {
        Task::Classification { n_classes: 2 }
    };
    let n_num = 1 + (seed as usize % 3);
    let data = mixed_dataset(b + 5, n_num, task, &mut rng);
    let widths = InputWidths::of(&data);
    let mut cfg = TrainConfig::preset(Variant::ModernNca, task, widths.total());
    cfg.loss = loss;
    cfg.distance = distance;
    cfg.arch.d_prime = 4;
    cfg.arch.hidden_width = 5;
    cfg.arch.n_blocks = 2;
    cfg.arch.dropout_rate = 0.0;
    cfg.arch.residual = seed % 2 == 1;
    cfg.arch.plr = PlrConfig {
        n_frequencies: 2,
        out_dim: 3,
        sigma: 0.5,
    };
    let mut model = build_model(cfg.arch, widths, &mut rng)?;
    let x = model_input(&data);
    let queries: Vec<usize> = (0..b).collect();
    let candidates: Vec<usize> = (0..b + 5).filter(|j| j % 2 == 1 || *j >= b).collect();
    let plan = BatchPlan {
        mask: build_exclusion_mask(&queries, &candidates),
        queries,
        candidates,
        dropped: 0,
    };
    let targets = data.targets().clone();
    batch_loss(&cfg, &mut model, &x, &targets, &plan, &mut rng_from_seed(0))?;
    let proto = model.clone();
    let rep = check_param_grads(&mut model.store, H, |s| {
        let mut m = proto.clone();
        m.store = s.clone();
        batch_loss(&cfg, &mut m, &x, &targets, &plan, &mut rng_from_seed(0))
            .map(|(v, _)| v)
            .unwrap_or(f64::NAN)
    });
    Ok(rep)
}

fn grad_full(opts: &VerifyOptions, loss: LossKind, distance: DistanceKind) -> f64 {
    (0..opts.instances as u64)
        .map(|s| {
            modern_loss_gradcheck(s, loss, distance, batch_size(s))
                .unwrap_or_else(|_| GradCheckReport::failed())
        })
        .fold(GradCheckReport::default(), GradCheckReport::merge)
        .max_rel_error
}

/// Largest gap between library soft-NN weights/predictions and a direct
/// double loop over `p_ij ∝ exp(−‖Ax_i − Ax_j‖²)`, `j ≠ i`.
pub fn softnn_oracle_gap(seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let n = 5 + (seed as usize % 16);
    let d = 1 + (seed as usize % 4);
    let x = uniform_matrix(n, d, 1.0, &mut rng);
    let a = uniform_matrix(d, 3, 1.0, &mut rng);
    let classes: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
    let z = x.matmul(&a);
    let ids: Vec<usize> = (0..n).collect();
    let Ok(d2) = pairwise_distance(&z, &z, DistanceKind::SquaredEuclid) else {
        return f64::INFINITY;
    };
    let Ok(w) =
        NeighborhoodWeights::from_distances(d2, build_exclusion_mask(&ids, &ids), Kernel::Exp)
    else {
        return f64::INFINITY;
    };
    let Predictions::Classes { probs, .. } = softnn_from_weights(
        w.weights(),
        &Targets::Classes(classes.clone()),
        Task::Classification { n_classes: 3 },
    ) else {
        return f64::INFINITY;
    };
    let mut gap: f64 = 0.0;
    for i in 0..n {
        let mut e = vec![0.0; n];
        for (j, ej) in e.iter_mut().enumerate() {
            if j != i {
                let mut s = 0.0;
                for c in 0..3 {
                    let mut zi = 0.0;
                    let mut zj = 0.0;
                    for k in 0..d {
                        zi += x[(i, k)] * a[(k, c)];
                        zj += x[(j, k)] * a[(k, c)];
                    }
                    s += (zi - zj) * (zi - zj);
                }
                *ej = libm::exp(-s);
            }
        }
        let total: f64 = e.iter().sum();
        let mut post = [0.0; 3];
        for j in 0..n {
            gap = gap.max((w.weights()[(i, j)] - e[j] / total).abs());
            post[classes[j]] += e[j] / total;
        }
        for c in 0..3 {
            gap = gap.max((probs[(i, c)] - post[c]).abs());
        }
    }
    gap
}

/// Largest per-batch gap between the trainer's loss at sampling ratio 1 and a
/// direct double loop over all other training rows.
pub fn sns_reduction_gap(seed: u64) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    let data = mixed_dataset(40, 3, Task::Classification { n_classes: 3 }, &mut rng);
    let widths = InputWidths::of(&data);
    let mut cfg = TrainConfig::preset(Variant::ModernNca, data.task(), widths.total());
    cfg.sns_ratio = 1.0;
    cfg.batch_size = 12;
    cfg.max_epochs = 2;
    cfg.arch.d_prime = 6;
    cfg.arch.hidden_width = 8;
    cfg.arch.dropout_rate = 0.0;
    cfg.arch.norm_kind = NormKind::Layer;
    cfg.arch.final_batchnorm = false;
    cfg.arch.plr.n_frequencies = 3;
    cfg.arch.plr.out_dim = 4;
    cfg.seed = seed;
    let classes = data.targets().classes().unwrap_or(&[]).to_vec();
    let x = model_input(&data);
    let mut gap: f64 = 0.0;
    let mut on_batch = |e: &crate::train::BatchEvent<'_>| {
        let Ok(z) = e.model.embed_eval(&x) else {
            gap = f64::INFINITY;
            return;
        };
        let mut total = 0.0;
        for &i in e.queries {
            let (mut same, mut all) = (0.0, 0.0);
            for j in 0..x.rows() {
                if j == i {
                    continue;
                }
                let d: f64 = z
                    .row(i)
                    .iter()
                    .zip(z.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let k = libm::exp(-libm::sqrt(d + 1e-12));
                all += k;
                if classes[j] == classes[i] {
                    same += k;
                }
            }
            total -= libm::log(same / all);
        }
        gap = gap.max((total / e.queries.len() as f64 - e.loss).abs());
    };
    let mut hooks = Hooks {
        on_batch: Some(&mut on_batch),
        ..Hooks::default()
    };
    train_with(&cfg, &data, &data, &mut hooks)?;
    Ok(gap)
}

/// Max deviation from row-stochasticity, probability validity and the
/// regression range over `trials` random weight matrices.
pub fn normalization_gaps(trials: usize, seed: u64) -> (f64, f64, f64) {
    let mut rng = rng_from_seed(seed);
    let (mut row, mut prob, mut range): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for t in 0..trials {
        let (b, m) = (rng.random_range(1..6), rng.random_range(2..10));
        let scale = [0.1, 1.0, 10.0, 100.0][t % 4];
        let kind = DistanceKind::ALL[t % 5];
        let q = uniform_matrix(b, 3, scale, &mut rng);
        let k = uniform_matrix(m, 3, scale, &mut rng);
        let mask = ExclusionMask::from_fn(b, m, |i, j| j == i % m && t % 2 == 0);
        let Ok(d) = pairwise_distance(&q, &k, kind) else {
            return (f64::INFINITY, 0.0, 0.0);
        };
        let kernel = if t % 3 == 0 {
            Kernel::StudentT { nu: 1.0 }
        } else {
            Kernel::Exp
        };
        let Ok(w) = NeighborhoodWeights::from_distances(d, mask, kernel) else {
            return (f64::INFINITY, 0.0, 0.0);
        };
        for r in w.weights().row_iter() {
            row = row.max((r.iter().sum::<f64>() - 1.0).abs());
        }
        let classes: Vec<usize> = (0..m).map(|_| rng.random_range(0..3)).collect();
        if let Predictions::Classes { probs, .. } = softnn_from_weights(
            w.weights(),
            &Targets::Classes(classes),
            Task::Classification { n_classes: 3 },
        ) {
            for r in probs.row_iter() {
                prob = prob.max((r.iter().sum::<f64>() - 1.0).abs());
                for &p in r {
                    prob = prob.max(-p).max(p - 1.0);
                }
            }
        }
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (lo, hi) = y
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        if let Predictions::Values(v) =
            softnn_from_weights(w.weights(), &Targets::Values(y), Task::Regression)
        {
            for p in v {
                range = range.max(lo - p).max(p - hi);
            }
        }
    }
    (row, prob, range)
}

/// Loss gap between a block-free modern network and the L-NCA map with the
/// same parameters.
pub fn variant_reduction_gap(seed: u64) -> Result<f64> {
    let mut rng = rng_from_seed(seed);
    let data = mixed_dataset(30, 3, Task::Classification { n_classes: 2 }, &mut rng);
    let widths = InputWidths::of(&data);
    let lnca = TrainConfig::preset(Variant::NcaV4Lnca, data.task(), widths.total());
    let modern_arch = ArchConfig {
        variant: Variant::ModernNca,
        n_blocks: 0,
        use_plr: false,
        final_batchnorm: false,
        ..lnca.arch
    };
    let modern = TrainConfig {
        arch: modern_arch,
        sns_ratio: 1.0,
        ..TrainConfig::preset(Variant::ModernNca, data.task(), widths.total())
    };
    let modern = TrainConfig {
        distance: lnca.distance,
        loss: LossKind::LogSoftnn,
        ..modern
    };
    let mut a = build_model(lnca.arch, widths, &mut rng_from_seed(seed))?;
    let mut b = build_network(modern.arch, widths, &mut rng_from_seed(seed))?;
    b.store = a.store.clone();
    let x = model_input(&data);
    let ids: Vec<usize> = (0..data.len()).collect();
    let queries: Vec<usize> = ids.iter().copied().filter(|i| i % 3 == 0).collect();
    let plan = BatchPlan {
        mask: build_exclusion_mask(&queries, &ids),
        queries,
        candidates: ids,
        dropped: 0,
    };
    let t = data.targets().clone();
    let (la, _) = batch_loss(&lnca, &mut a, &x, &t, &plan, &mut rng_from_seed(1))?;
    let (lb, _) = batch_loss(&modern, &mut b, &x, &t, &plan, &mut rng_from_seed(1))?;
    Ok((la - lb).abs())
}

/// Number of differences between two identical training runs.
pub fn determinism_mismatches(seed: u64) -> Result<usize> {
    let mut rng = rng_from_seed(seed);
    let data = mixed_dataset(40, 2, Task::Classification { n_classes: 2 }, &mut rng);
    let mut cfg = TrainConfig::preset(Variant::ModernNca, data.task(), 5);
    cfg.max_epochs = 3;
    cfg.batch_size = 10;
    cfg.arch.d_prime = 6;
    cfg.arch.hidden_width = 6;
    cfg.arch.plr.out_dim = 4;
    cfg.arch.plr.n_frequencies = 4;
    let a = train(&cfg, &data, &data)?;
    let b = train(&cfg, &data, &data)?;
    Ok(usize::from(a.history != b.history) + usize::from(a.model != b.model))
}

pub fn run_all(opts: &VerifyOptions) -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.push(CheckResult::new("grad_linear", grad_linear(opts), GRAD_TOL));
    out.push(CheckResult::new(
        "grad_batchnorm",
        grad_batchnorm(opts),
        GRAD_TOL,
    ));
    out.push(CheckResult::new(
        "grad_layernorm",
        grad_layernorm(opts),
        GRAD_TOL,
    ));
    let (r, d) = grad_relu_dropout(opts);
    out.push(CheckResult::new("grad_relu", r, GRAD_TOL));
    out.push(CheckResult::new("grad_dropout_eval", d, GRAD_TOL));
    out.push(CheckResult::new("grad_plr", grad_plr(opts), GRAD_TOL));
    for (name, loss, dist) in [
        (
            "grad_modern_log_euclid",
            LossKind::LogSoftnn,
            DistanceKind::Euclid,
        ),
        (
            "grad_modern_log_squared_euclid",
            LossKind::LogSoftnn,
            DistanceKind::SquaredEuclid,
        ),
        (
            "grad_modern_mse_euclid",
            LossKind::MseSoftnn,
            DistanceKind::Euclid,
        ),
        (
            "grad_modern_mse_squared_euclid",
            LossKind::MseSoftnn,
            DistanceKind::SquaredEuclid,
        ),
    ] {
        out.push(CheckResult::new(
            name,
            grad_full(opts, loss, dist),
            GRAD_TOL,
        ));
    }
    let oracle = (0..20).map(softnn_oracle_gap).fold(0.0, f64::max);
    out.push(CheckResult::new("softnn_oracle", oracle, 1e-10));
    let sns = (0..3)
        .map(|s| sns_reduction_gap(s).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    out.push(CheckResult::new("sns_full_ratio_oracle", sns, 1e-10));
    let (row, prob, range) = normalization_gaps(opts.trials, 0);
    out.push(CheckResult::new("weights_row_sum", row, 1e-9));
    out.push(CheckResult::new("class_probabilities_valid", prob, 1e-9));
    out.push(CheckResult::new(
        "regression_within_label_range",
        range,
        1e-12,
    ));
    let red = (0..5)
        .map(|s| variant_reduction_gap(s).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    out.push(CheckResult::new("variant_reduction", red, 1e-10));
    let det = determinism_mismatches(0).map_or(f64::INFINITY, |m| m as f64);
    out.push(CheckResult::new("training_determinism", det, 0.0));
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let a: Vec<f64> = (1..=5).map(|v| v as f64 * s).collect();
    let b: Vec<f64> = a.iter().map(|v| v + 2.0).collect();
    let p = welch_statistic(&a, &b).map_or(f64::INFINITY, |r| (r.p - 0.0222).abs());
    out.push(CheckResult::new("welch_reference_p", p, 1e-3));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyOptions {
        VerifyOptions {
            trials: 500,
            instances: 6,
            fault: None,
        }
    }

    #[test]
    fn pristine_suite_passes() {
        for c in run_all(&quick()) {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn injected_fault_is_caught() {
        let opts = VerifyOptions {
            fault: Some(Fault::FlipLinearGradient),
            ..quick()
        };
        let r = run_all(&opts);
        assert!(!r.iter().find(|c| c.name == "grad_linear").unwrap().passed);
    }
}
