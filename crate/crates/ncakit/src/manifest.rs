//! Run manifests and configuration overrides.
//!
//! ```toml
//! output = "runs/moons"          # created if missing
//! seeds = [0, 1, 2, 3, 4]
//! split_seed = 0
//! variant = "modern_nca"         # preset the overrides apply to
//! config = "config.toml"         # optional override file
//! search = "search.toml"         # optional search space (train only)
//! methods = ["ncav4_lnca", "modern_nca", "knn"]   # benchmark
//! axes = ["variant", "distance"]                  # ablate
//!
//! [[datasets]]
//! name = "moons"
//! path = "moons.csv"
//! schema = "moons.schema.toml"
//!
//! [overrides]                    # applied after the override file
//! lr = 0.05
//! batch_size = 64
//! arch = { dropout_rate = 0.0 }
//! ```
//!
//! Relative paths resolve against the manifest's directory. Override tables
//! mirror the serialized `TrainConfig`; unknown keys are rejected, and a table
//! carrying its tag (`sampling = { kind = "distance", tau = 1.0 }`,
//! `prediction = { rule = "soft_nn" }`) replaces the preset value whole.

use std::path::{Path, PathBuf};

use ncakit_core::data::Task;
use ncakit_core::model::Variant;
use ncakit_core::search::SearchSpace;
use ncakit_core::train::TrainConfig;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::read_toml;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: Option<String>,
    pub path: PathBuf,
    pub schema: PathBuf,
}

impl DatasetEntry {
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path.file_stem().map_or_else(
                || "dataset".to_string(),
                |s| s.to_string_lossy().into_owned(),
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub datasets: Vec<DatasetEntry>,
    pub output: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default = "default_variant")]
    pub variant: String,
    pub config: Option<PathBuf>,
    pub search: Option<PathBuf>,
    #[serde(default)]
    pub search_seed: u64,
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default)]
    pub axes: Vec<String>,
    #[serde(default)]
    pub overrides: toml::Table,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_variant() -> String {
    Variant::ModernNca.name().to_string()
}

impl RunManifest {
    /// Reads `path` and makes every referenced path absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let mut m: RunManifest = read_toml(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut m.output);
        for d in &mut m.datasets {
            fix(&mut d.path);
            fix(&mut d.schema);
        }
        if let Some(p) = &mut m.config {
            fix(p);
        }
        if let Some(p) = &mut m.search {
            fix(p);
        }
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Invalid("manifest lists no datasets".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Invalid("manifest lists no seeds".into()));
        }
        for d in &self.datasets {
            for p in [&d.path, &d.schema] {
                if !p.is_file() {
                    return Err(Error::Invalid(format!("{}: file not found", p.display())));
                }
            }
        }
        for p in self.config.iter().chain(&self.search) {
            if !p.is_file() {
                return Err(Error::Invalid(format!("{}: file not found", p.display())));
            }
        }
        parse_variant(&self.variant)?;
        Ok(())
    }

    /// Override file merged with the inline table (inline wins).
    pub fn overrides(&self) -> Result<toml::Table> {
        let mut t = match &self.config {
            Some(p) => read_toml::<toml::Table>(p)?,
            None => toml::Table::new(),
        };
        for (k, v) in &self.overrides {
            t.insert(k.clone(), v.clone());
        }
        Ok(t)
    }

    pub fn search_space(&self) -> Result<Option<SearchSpace>> {
        self.search.as_deref().map(read_toml).transpose()
    }

    /// Base variant: an override file's `variant` key beats the manifest's.
    pub fn base_variant(&self, overrides: &toml::Table) -> Result<Variant> {
        match overrides.get("variant") {
            Some(toml::Value::String(s)) => parse_variant(s),
            Some(_) => Err(Error::Invalid("`variant` must be a string".into())),
            None => parse_variant(&self.variant),
        }
    }
}

pub fn parse_variant(s: &str) -> Result<Variant> {
    Variant::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Variant::LADDER.iter().map(|v| v.name()).collect();
        Error::Invalid(format!(
            "unknown variant `{s}` (expected one of {})",
            names.join(", ")
        ))
    })
}

const TAGS: [&str; 2] = ["kind", "rule"];

fn merge(base: &mut toml::Table, over: &toml::Table, at: &str) -> Result<()> {
    for (k, v) in over {
        let path = if at.is_empty() {
            k.clone()
        } else {
            format!("{at}.{k}")
        };
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o))
                if !TAGS.iter().any(|t| o.contains_key(*t)) =>
            {
                merge(b, o, &path)?;
            }
            (Some(slot), _) => *slot = v.clone(),
            (None, _) => {
                return Err(Error::Invalid(format!(
                    "unknown configuration key `{path}`"
                )))
            }
        }
    }
    Ok(())
}

/// `preset(variant, task, d_input)` with `overrides` merged in. A `variant`
/// key in `overrides` is ignored here; see [`RunManifest::base_variant`].
pub fn resolve_config(
    variant: Variant,
    task: Task,
    d_input: usize,
    overrides: &toml::Table,
) -> Result<TrainConfig> {
    let preset = TrainConfig::preset(variant, task, d_input);
    let mut table = toml::Table::try_from(preset).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut over = overrides.clone();
    over.remove("variant");
    merge(&mut table, &over, "")?;
    let cfg: TrainConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Invalid(format!("configuration: {e}")))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ncakit_core::model::PredictionRule;
    use ncakit_core::neighborhood::SamplingStrategy;

    const CLS: Task = Task::Classification { n_classes: 2 };

    fn table(s: &str) -> toml::Table {
        toml::from_str(s).unwrap()
    }

    #[test]
    fn empty_overrides_give_the_preset() {
        for v in Variant::LADDER {
            assert_eq!(
                resolve_config(v, CLS, 5, &toml::Table::new()).unwrap(),
                TrainConfig::preset(v, CLS, 5)
            );
        }
    }

    #[test]
    fn nested_and_tagged_overrides() {
        let t = table(
            "lr = 0.5\nbatch_size = 64\narch = { dropout_rate = 0.0 }\nsampling = { kind = \"distance\", tau = 2.0 }\nprediction = { rule = \"hard_knn\", k = 3 }",
        );
        let c = resolve_config(Variant::ModernNca, CLS, 5, &t).unwrap();
        assert_eq!(c.lr, 0.5);
        assert_eq!(c.batch_size, 64);
        assert_eq!(c.arch.dropout_rate, 0.0);
        assert_eq!(c.arch.d_prime, 64);
        assert_eq!(c.sampling, SamplingStrategy::Distance { tau: 2.0 });
        assert_eq!(c.prediction, PredictionRule::HardKnn { k: 3 });
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e =
            resolve_config(Variant::ModernNca, CLS, 5, &table("arch = { widht = 3 }")).unwrap_err();
        assert!(e.to_string().contains("arch.widht"), "{e}");
        assert!(resolve_config(Variant::ModernNca, CLS, 5, &table("lr = \"fast\"")).is_err());
    }
}
