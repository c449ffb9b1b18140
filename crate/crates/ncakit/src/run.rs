//! Multi-seed runs, ablation grids and benchmark tables.

use std::time::Instant;

use ncakit_core::data::{prepare_splits, Dataset, PreparedSplits, Task};
use ncakit_core::eval::{
    average_rank, compute_metric, win_tie_lose_matrix, Direction, MetricValue, RankTable,
};
use ncakit_core::loss::LossKind;
use ncakit_core::model::{
    model_input, predict_embedded, Neighbourhood, NormKind, PredictionRule, Variant,
};
use ncakit_core::neighborhood::{DistanceKind, Kernel, SamplingStrategy};
use ncakit_core::search::{finish_search, run_trial, SearchOutcome, SearchSpace};
use ncakit_core::train::{evaluate_model, train_with, Hooks, TrainConfig, TrainOutcome};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, Table};
use crate::manifest::{parse_variant, resolve_config};

pub const THREADS_VAR: &str = "NCAKIT_THREADS";

/// Pool sized by `NCAKIT_THREADS` (all cores when unset). Results never
/// depend on the thread count.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let n = match std::env::var(THREADS_VAR) {
        Ok(s) => s.trim().parse::<usize>().map_err(|_| {
            Error::Invalid(format!(
                "{THREADS_VAR} must be a non-negative integer, got `{s}`"
            ))
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Invalid(e.to_string()))
}

/// Training with a wall clock measured from the call.
pub fn train_timed(
    cfg: &TrainConfig,
    train: &Dataset,
    val: &Dataset,
) -> ncakit_core::Result<TrainOutcome> {
    let t0 = Instant::now();
    let clock = move || t0.elapsed().as_secs_f64();
    let mut hooks = Hooks {
        clock: Some(&clock),
        ..Hooks::default()
    };
    train_with(cfg, train, val, &mut hooks)
}

/// Random search with trials spread over the current pool.
pub fn parallel_search(
    space: &SearchSpace,
    base: &TrainConfig,
    train: &Dataset,
    val: &Dataset,
    master: u64,
) -> Result<SearchOutcome> {
    space.validate()?;
    let trials = (0..space.n_trials)
        .into_par_iter()
        .map(|i| {
            let t0 = Instant::now();
            run_trial(space, base, train, val, master, i, &|| {
                t0.elapsed().as_secs_f64()
            })
        })
        .collect();
    Ok(finish_search(trials, Direction::for_task(train.task()))?)
}

/// A row of a benchmark or ablation table.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Nca(TrainConfig),
    /// Hard `k`-NN on the standardized raw features.
    Knn {
        k: usize,
    },
}

impl Method {
    pub fn standardize_labels(&self) -> bool {
        match self {
            Method::Nca(c) => c.standardize_labels,
            Method::Knn { .. } => true,
        }
    }

    /// Test metric after training with `seed`.
    pub fn run(&self, splits: &PreparedSplits, seed: u64) -> ncakit_core::Result<f64> {
        match self {
            Method::Nca(cfg) => {
                let cfg = TrainConfig { seed, ..*cfg };
                let out = ncakit_core::train::train(&cfg, &splits.train, &splits.val)?;
                evaluate_model(&cfg, &out.model, &splits.train, &splits.test)
            }
            Method::Knn { k } => {
                let how = Neighbourhood {
                    distance: DistanceKind::SquaredEuclid,
                    kernel: Kernel::Exp,
                    rule: PredictionRule::HardKnn { k: *k },
                };
                let p = predict_embedded(
                    &model_input(&splits.train),
                    &splits.train,
                    &model_input(&splits.test),
                    how,
                )?;
                compute_metric(&p, &splits.test)
            }
        }
    }
}

/// Per-seed test metrics on one fixed split, seeds in parallel.
pub fn run_method(
    method: &Method,
    data: &Dataset,
    seeds: &[u64],
    split_seed: u64,
) -> ncakit_core::Result<Vec<f64>> {
    let splits = prepare_splits(data, split_seed, method.standardize_labels())?;
    seeds.par_iter().map(|&s| method.run(&splits, s)).collect()
}

/// Method names for benchmarks: a variant name, `knn` (1-NN) or `knn:K`.
pub fn parse_method(
    name: &str,
    task: Task,
    d_input: usize,
    overrides: &toml::Table,
) -> Result<Method> {
    if name == "knn" {
        return Ok(Method::Knn { k: 1 });
    }
    if let Some(k) = name.strip_prefix("knn:") {
        let k = k
            .parse()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::Invalid(format!("bad neighbour count in `{name}`")))?;
        return Ok(Method::Knn { k });
    }
    let v = parse_variant(name)?;
    Ok(Method::Nca(resolve_config(v, task, d_input, overrides)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Variant,
    Distance,
    Loss,
    Sampling,
    Architecture,
    SnsRatio,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::Variant,
        Axis::Distance,
        Axis::Loss,
        Axis::Sampling,
        Axis::Architecture,
        Axis::SnsRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Variant => "variant",
            Axis::Distance => "distance",
            Axis::Loss => "loss",
            Axis::Sampling => "sampling",
            Axis::Architecture => "architecture",
            Axis::SnsRatio => "sns_ratio",
        }
    }

    pub fn parse(s: &str) -> Result<Axis> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Axis::ALL.iter().map(|a| a.name()).collect();
                Error::Invalid(format!(
                    "unknown axis `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

pub const SNS_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.8, 1.0];

/// Labelled configurations along `axis`. The variant axis uses each rung's
/// preset; the others vary one field of the `base` variant's preset. Both get
/// `overrides` applied first.
pub fn axis_cells(
    axis: Axis,
    base: Variant,
    task: Task,
    d_input: usize,
    overrides: &toml::Table,
) -> Result<Vec<(String, TrainConfig)>> {
    let cfg = resolve_config(base, task, d_input, overrides)?;
    let with = |label: &str, f: &dyn Fn(&mut TrainConfig)| {
        let mut c = cfg;
        f(&mut c);
        (label.to_string(), c)
    };
    Ok(match axis {
        Axis::Variant => Variant::LADDER
            .iter()
            .map(|&v| {
                Ok((
                    v.name().to_string(),
                    resolve_config(v, task, d_input, overrides)?,
                ))
            })
            .collect::<Result<_>>()?,
        Axis::Distance => DistanceKind::ALL
            .iter()
            .map(|&d| with(d.name(), &|c| c.distance = d))
            .collect(),
        Axis::Loss => LossKind::ALL
            .iter()
            .filter(|l| l.supports(task))
            .map(|&l| with(l.name(), &|c| c.loss = l))
            .collect(),
        Axis::Sampling => {
            let mut s = vec![SamplingStrategy::Random];
            if task.is_classification() {
                s.push(SamplingStrategy::Classwise);
            }
            s.push(SamplingStrategy::Distance { tau: 1.0 });
            s.into_iter()
                .map(|k| with(k.name(), &|c| c.sampling = k))
                .collect()
        }
        Axis::Architecture => {
            if cfg.arch.variant.is_linear() {
                return Err(Error::Invalid(
                    "the architecture axis needs modern_nca as the base variant".into(),
                ));
            }
            vec![
                with("batch_norm", &|_| {}),
                with("layer_norm", &|c| c.arch.norm_kind = NormKind::Layer),
                with("batch_norm_residual", &|c| c.arch.residual = true),
                with("layer_norm_residual", &|c| {
                    c.arch.norm_kind = NormKind::Layer;
                    c.arch.residual = true;
                }),
                with("no_final_batchnorm", &|c| c.arch.final_batchnorm = false),
                with("no_plr", &|c| c.arch.use_plr = false),
            ]
        }
        Axis::SnsRatio => SNS_GRID
            .iter()
            .map(|&r| with(&fmt_f64(r), &|c| c.sns_ratio = r))
            .collect(),
    })
}

/// Outcome of one (method, dataset) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub method: String,
    pub dataset: String,
    pub values: std::result::Result<Vec<f64>, String>,
}

/// Runs every (method, dataset) pair; failures are kept as messages.
pub fn run_grid(
    methods: &[(String, Vec<Method>)],
    datasets: &[(String, Dataset)],
    seeds: &[u64],
    split_seed: u64,
) -> Vec<Cell> {
    let jobs: Vec<(usize, usize)> = (0..methods.len())
        .flat_map(|m| (0..datasets.len()).map(move |d| (m, d)))
        .collect();
    jobs.par_iter()
        .map(|&(m, d)| Cell {
            method: methods[m].0.clone(),
            dataset: datasets[d].0.clone(),
            values: run_method(&methods[m].1[d], &datasets[d].1, seeds, split_seed)
                .map_err(|e| e.to_string()),
        })
        .collect()
}

/// Tables derived from a grid of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// `dataset, method, seed, metric` (or the error message).
    pub long: Table,
    /// `method, <dataset means…>, average_rank`, one row per method.
    pub ranks: Table,
    /// `method, <opponent: wins/ties/losses…>`; `None` with fewer than two seeds.
    pub win_tie_lose: Option<Table>,
}

pub fn report(
    cells: &[Cell],
    methods: &[String],
    datasets: &[(String, Dataset)],
    seeds: &[u64],
) -> Result<Report> {
    let mut long = Table::new(["dataset", "method", "seed", "metric"]);
    for c in cells {
        match &c.values {
            Ok(v) => {
                for (s, m) in seeds.iter().zip(v) {
                    long.push([
                        c.dataset.clone(),
                        c.method.clone(),
                        s.to_string(),
                        fmt_f64(*m),
                    ]);
                }
            }
            Err(e) => long.push([
                c.dataset.clone(),
                c.method.clone(),
                String::new(),
                format!("failed: {e}"),
            ]),
        }
    }
    let names: Vec<String> = datasets.iter().map(|d| d.0.clone()).collect();
    let grid: Vec<MetricValue> = cells
        .iter()
        .filter_map(|c| {
            let d = &datasets.iter().find(|d| d.0 == c.dataset)?.1;
            let v = c.values.as_ref().ok()?;
            Some(MetricValue::new(
                &c.dataset,
                &c.method,
                v.clone(),
                Direction::for_task(d.task()),
            ))
        })
        .collect();
    // methods with any failed cell are left out of the ranking
    let complete: Vec<String> = methods
        .iter()
        .filter(|m| {
            names
                .iter()
                .all(|d| grid.iter().any(|g| &g.method == *m && &g.dataset == d))
        })
        .cloned()
        .collect();
    let table: RankTable = average_rank(&grid, &complete, &names)?;
    let mut ranks = Table::new(
        std::iter::once("method".to_string())
            .chain(names.iter().cloned())
            .chain(["average_rank".to_string()]),
    );
    for m in methods {
        let mut row = vec![m.clone()];
        for d in &names {
            row.push(
                match grid.iter().find(|g| &g.method == m && &g.dataset == d) {
                    Some(g) => fmt_f64(g.mean),
                    None => "failed".to_string(),
                },
            );
        }
        row.push(match complete.iter().position(|c| c == m) {
            Some(i) => fmt_f64(table.average[i]),
            None => "failed".to_string(),
        });
        ranks.push(row);
    }
    let win_tie_lose = if seeds.len() >= 2 {
        let wtl = win_tie_lose_matrix(&grid, &complete, &names)?;
        let mut t =
            Table::new(std::iter::once("method".to_string()).chain(complete.iter().cloned()));
        for (i, m) in complete.iter().enumerate() {
            let mut row = vec![m.clone()];
            for (j, c) in wtl[i].iter().enumerate() {
                row.push(if i == j {
                    "-".to_string()
                } else {
                    format!("{}/{}/{}", c[0], c[1], c[2])
                });
            }
            t.push(row);
        }
        Some(t)
    } else {
        None
    };
    Ok(Report {
        long,
        ranks,
        win_tie_lose,
    })
}
