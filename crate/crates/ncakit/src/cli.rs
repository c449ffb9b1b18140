//! Command-line surface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use ncakit_core::data::{prepare_splits, Dataset, Task};
use ncakit_core::eval::mean;
use ncakit_core::model::{predict, InputWidths, Predictions, Variant};
use ncakit_core::synth;
use ncakit_core::train::{evaluate_model, TrainConfig};
use ncakit_core::verify::{run_all, Fault, VerifyOptions};
use rayon::prelude::*;

use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::io::{
    append_jsonl, fmt_f64, load_csv, load_features, load_schema, write_csv, write_schema, Table,
};
use crate::manifest::{resolve_config, RunManifest};
use crate::run::{
    axis_cells, parallel_search, parse_method, report, run_grid, thread_pool, train_timed, Axis,
    Method, Report,
};

#[derive(Debug, Parser)]
#[command(
    name = "ncakit",
    version,
    about = "Neighbourhood components analysis for tabular data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on each manifest dataset and seed; write checkpoints, histories and metrics.
    Train { manifest: PathBuf },
    /// Predict query rows with a checkpoint, using a training file as candidates.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train every cell of one or more ablation axes and write rank tables.
    Ablate {
        manifest: PathBuf,
        /// Overrides the manifest's `axes`; all axes when both are empty.
        #[arg(long = "axis")]
        axes: Vec<String>,
    },
    /// Compare methods across datasets: metrics, average ranks, win/tie/lose.
    Benchmark { manifest: PathBuf },
    /// Run the invariant suite and print one line per check.
    Verify {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 20)]
        instances: usize,
        /// Corrupt a gradient to exercise the failure path.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Write a synthetic dataset and its schema.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long, default_value_t = 600)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Noise std (moons, sine).
        #[arg(long, default_value_t = 0.2)]
        noise: f64,
        /// Feature count (separable) or extra noise columns (moons).
        #[arg(long, default_value_t = 8)]
        dims: usize,
        #[arg(long, default_value_t = 1.0)]
        margin: f64,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Separable,
    Moons,
    Sine,
}

pub fn run(cli: Cli) -> Result<()> {
    let pool = thread_pool()?;
    pool.install(|| match cli.command {
        Command::Train { manifest } => cmd_train(&RunManifest::load(&manifest)?),
        Command::Predict {
            checkpoint,
            train,
            query,
            out,
        } => cmd_predict(&checkpoint, &train, &query, &out),
        Command::Ablate { manifest, axes } => {
            let m = RunManifest::load(&manifest)?;
            let names = if axes.is_empty() {
                m.axes.clone()
            } else {
                axes
            };
            let axes = if names.is_empty() {
                Axis::ALL.to_vec()
            } else {
                names
                    .iter()
                    .map(|a| Axis::parse(a))
                    .collect::<Result<_>>()?
            };
            cmd_ablate(&m, &axes)
        }
        Command::Benchmark { manifest } => cmd_benchmark(&RunManifest::load(&manifest)?),
        Command::Verify {
            trials,
            instances,
            inject_fault,
        } => cmd_verify(
            &VerifyOptions {
                trials,
                instances,
                fault: inject_fault.then_some(Fault::FlipLinearGradient),
            },
            &mut std::io::stdout(),
        ),
        Command::Synth {
            kind,
            n,
            seed,
            noise,
            dims,
            margin,
            out_dir,
            name,
        } => {
            let d = match kind {
                SynthKind::Separable => synth::linearly_separable(n, dims, margin, seed)?,
                SynthKind::Moons => synth::two_moons(n, noise, dims, seed)?,
                SynthKind::Sine => synth::sine_regression(n, noise, seed)?,
            };
            let name = name.unwrap_or_else(|| format!("{kind:?}").to_lowercase());
            write_dataset(&out_dir, &name, &d)?;
            Ok(())
        }
    })
}

/// Writes `<name>.csv` and `<name>.schema.toml` under `dir`.
pub fn write_dataset(dir: &Path, name: &str, d: &Dataset) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let csv = dir.join(format!("{name}.csv"));
    let schema = dir.join(format!("{name}.schema.toml"));
    write_csv(&csv, d)?;
    write_schema(&schema, d.schema())?;
    Ok((csv, schema))
}

fn load_datasets(m: &RunManifest) -> Result<Vec<(String, Dataset)>> {
    let mut out: Vec<(String, Dataset)> = Vec::new();
    for e in &m.datasets {
        let name = e.display_name();
        if out.iter().any(|(n, _)| *n == name) {
            return Err(Error::Invalid(format!("duplicate dataset name `{name}`")));
        }
        let schema = load_schema(&e.schema)?;
        out.push((name, load_csv(&e.path, &schema)?));
    }
    Ok(out)
}

fn create_output(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))
}

fn metric_name(task: Task) -> &'static str {
    if task.is_classification() {
        "accuracy"
    } else {
        "rmse"
    }
}

fn sample_std(v: &[f64]) -> f64 {
    ncakit_core::eval::sample_variance(v).sqrt()
}

struct SeedResult {
    seed: u64,
    best_epoch: usize,
    stop: String,
    val: f64,
    train: f64,
    test: f64,
}

pub fn cmd_train(m: &RunManifest) -> Result<()> {
    create_output(&m.output)?;
    let overrides = m.overrides()?;
    let variant = m.base_variant(&overrides)?;
    let space = m.search_space()?;
    let mut metrics = Table::new([
        "dataset",
        "seed",
        "best_epoch",
        "stop_reason",
        "val_metric",
        "train_metric",
        "test_metric",
    ]);
    let mut summary = Table::new(["dataset", "metric", "n", "mean", "std"]);
    for (name, data) in load_datasets(m)? {
        let widths = InputWidths::of(&data);
        let base = resolve_config(variant, data.task(), widths.total(), &overrides)?;
        let splits = prepare_splits(&data, m.split_seed, base.standardize_labels)?;
        let dir = m.output.join(&name);
        create_output(&dir)?;
        let cfg = match &space {
            Some(space) => {
                let outcome =
                    parallel_search(space, &base, &splits.train, &splits.val, m.search_seed)?;
                let log = dir.join("trials.jsonl");
                if log.exists() {
                    fs::remove_file(&log).map_err(Error::io(&log))?;
                }
                append_jsonl(&log, &outcome.trials)?;
                outcome.best
            }
            None => base,
        };
        let text = toml::to_string(&cfg).map_err(|e| Error::Invalid(e.to_string()))?;
        let cfg_path = dir.join("config.toml");
        fs::write(&cfg_path, text).map_err(Error::io(&cfg_path))?;
        let results: Vec<SeedResult> = m
            .seeds
            .par_iter()
            .map(|&seed| -> Result<SeedResult> {
                let c = TrainConfig { seed, ..cfg };
                let out = train_timed(&c, &splits.train, &splits.val)?;
                let ck = Checkpoint::new(
                    c,
                    m.split_seed,
                    &out.model,
                    data.schema(),
                    &splits.standardizer,
                    splits.label_transform,
                );
                ck.save(&dir.join(format!("checkpoint_seed{seed}.json")))?;
                let mut h = Table::new(["epoch", "train_loss", "val_metric", "wall_clock"]);
                for e in &out.history.epochs {
                    h.push([
                        e.epoch.to_string(),
                        fmt_f64(e.train_loss),
                        fmt_f64(e.val_metric),
                        fmt_f64(e.wall_clock),
                    ]);
                }
                h.write(&dir.join(format!("history_seed{seed}.csv")))?;
                let stop = serde_json::to_value(out.history.stop_reason)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                Ok(SeedResult {
                    seed,
                    best_epoch: out.history.best_epoch,
                    stop,
                    val: out.history.best_val_metric,
                    train: evaluate_model(&c, &out.model, &splits.train, &splits.train)?,
                    test: evaluate_model(&c, &out.model, &splits.train, &splits.test)?,
                })
            })
            .collect::<Result<_>>()?;
        for r in &results {
            metrics.push([
                name.clone(),
                r.seed.to_string(),
                r.best_epoch.to_string(),
                r.stop.clone(),
                fmt_f64(r.val),
                fmt_f64(r.train),
                fmt_f64(r.test),
            ]);
        }
        let tests: Vec<f64> = results.iter().map(|r| r.test).collect();
        summary.push([
            name.clone(),
            metric_name(data.task()).to_string(),
            tests.len().to_string(),
            fmt_f64(mean(&tests)),
            fmt_f64(sample_std(&tests)),
        ]);
    }
    metrics.write(&m.output.join("metrics.csv"))?;
    summary.write(&m.output.join("summary.csv"))
}

pub fn cmd_predict(checkpoint: &Path, train: &Path, query: &Path, out: &Path) -> Result<()> {
    let ck = Checkpoint::load(checkpoint)?;
    let model = ck.model()?;
    let mut cands = ck.standardizer.apply(&load_csv(train, &ck.schema)?)?;
    if let Some(t) = ck.label_transform {
        cands = cands.with_label_transform(t)?;
    }
    let q = ck
        .standardizer
        .apply_features(&load_features(query, &ck.schema)?)?;
    let pred = predict(&model, &cands, &q, ck.config.neighbourhood())?;
    let label = ck
        .schema
        .iter()
        .find(|c| c.kind == ncakit_core::data::ColumnKind::Label)
        .ok_or_else(|| Error::Invalid("checkpoint schema has no label column".into()))?;
    let table = match (&pred, &label.categories) {
        (Predictions::Classes { labels, probs }, Some(names)) => {
            let mut t = Table::new(
                std::iter::once("prediction".to_string())
                    .chain(names.iter().map(|n| format!("p_{n}"))),
            );
            for (i, &l) in labels.iter().enumerate() {
                t.push(
                    std::iter::once(names[l].clone())
                        .chain(probs.row(i).iter().map(|&p| fmt_f64(p))),
                );
            }
            t
        }
        (Predictions::Values(v), None) => {
            let mut t = Table::new(["prediction"]);
            for &y in v {
                t.push([fmt_f64(y)]);
            }
            t
        }
        _ => {
            return Err(Error::Invalid(
                "checkpoint label does not match its task".into(),
            ))
        }
    };
    table.write(out)
}

fn write_report(dir: &Path, stem: &str, r: &Report) -> Result<()> {
    r.long.write(&dir.join(format!("{stem}_metrics.csv")))?;
    r.ranks.write(&dir.join(format!("{stem}_ranks.csv")))?;
    if let Some(t) = &r.win_tie_lose {
        t.write(&dir.join(format!("{stem}_win_tie_lose.csv")))?;
    }
    Ok(())
}

/// One `ablate_<axis>_{metrics,ranks,win_tie_lose}.csv` set per axis.
pub fn cmd_ablate(m: &RunManifest, axes: &[Axis]) -> Result<()> {
    create_output(&m.output)?;
    let overrides = m.overrides()?;
    let variant = m.base_variant(&overrides)?;
    let datasets = load_datasets(m)?;
    for &axis in axes {
        let mut labels: Vec<String> = Vec::new();
        let mut per_dataset: Vec<Vec<TrainConfig>> = Vec::new();
        for (_, d) in &datasets {
            let cells = axis_cells(
                axis,
                variant,
                d.task(),
                InputWidths::of(d).total(),
                &overrides,
            )?;
            if labels.is_empty() {
                labels = cells.iter().map(|c| c.0.clone()).collect();
            } else if labels != cells.iter().map(|c| c.0.clone()).collect::<Vec<_>>() {
                return Err(Error::Invalid(format!(
                    "axis `{}` has different cells for different datasets; mix classification and regression in separate manifests",
                    axis.name()
                )));
            }
            per_dataset.push(cells.into_iter().map(|c| c.1).collect());
        }
        let methods: Vec<(String, Vec<Method>)> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                (
                    l.clone(),
                    per_dataset.iter().map(|cs| Method::Nca(cs[i])).collect(),
                )
            })
            .collect();
        let cells = run_grid(&methods, &datasets, &m.seeds, m.split_seed);
        let r = report(&cells, &labels, &datasets, &m.seeds)?;
        write_report(&m.output, &format!("ablate_{}", axis.name()), &r)?;
    }
    Ok(())
}

/// `benchmark_{metrics,ranks,win_tie_lose}.csv` over the manifest's methods
/// (default: the variant ladder plus 1-NN).
pub fn cmd_benchmark(m: &RunManifest) -> Result<()> {
    create_output(&m.output)?;
    let overrides = m.overrides()?;
    let datasets = load_datasets(m)?;
    let names: Vec<String> = if m.methods.is_empty() {
        Variant::LADDER
            .iter()
            .map(|v| v.name().to_string())
            .chain(["knn".to_string()])
            .collect()
    } else {
        m.methods.clone()
    };
    let methods: Vec<(String, Vec<Method>)> = names
        .iter()
        .map(|n| {
            let per: Vec<Method> = datasets
                .iter()
                .map(|(_, d)| parse_method(n, d.task(), InputWidths::of(d).total(), &overrides))
                .collect::<Result<_>>()?;
            Ok((n.clone(), per))
        })
        .collect::<Result<_>>()?;
    let cells = run_grid(&methods, &datasets, &m.seeds, m.split_seed);
    let r = report(&cells, &names, &datasets, &m.seeds)?;
    write_report(&m.output, "benchmark", &r)
}

pub fn cmd_verify(opts: &VerifyOptions, out: &mut dyn Write) -> Result<()> {
    let results = run_all(opts);
    let io = |e| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    writeln!(
        out,
        "{:<34} {:>12} {:>10}  result",
        "check", "measured", "tolerance"
    )
    .map_err(io)?;
    for c in &results {
        writeln!(
            out,
            "{:<34} {:>12.3e} {:>10.1e}  {}",
            c.name,
            c.measured,
            c.tolerance,
            if c.passed { "PASS" } else { "FAIL" }
        )
        .map_err(io)?;
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    writeln!(
        out,
        "{} of {} checks passed",
        results.len() - failed,
        results.len()
    )
    .map_err(io)?;
    if failed > 0 {
        return Err(Error::Invariant(failed));
    }
    Ok(())
}
