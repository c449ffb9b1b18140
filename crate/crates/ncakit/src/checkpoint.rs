//! Model checkpoints as a single JSON document.
//!
//! Floats are written with shortest round-trip formatting, so a save/load
//! cycle restores every parameter bit for bit.

use std::fs;
use std::path::Path;

use ncakit_core::data::{ColumnSchema, LabelTransform, Standardizer};
use ncakit_core::diff::BatchNormState;
use ncakit_core::model::{build_network, InputWidths, Model};
use ncakit_core::rng::rng_from_seed;
use ncakit_core::train::TrainConfig;
use ncakit_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT: &str = "ncakit-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNormRecord {
    pub name: String,
    #[serde(flatten)]
    pub state: BatchNormState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    /// Full training configuration; `config.seed` initialized the weights.
    pub config: TrainConfig,
    pub split_seed: u64,
    pub widths: InputWidths,
    pub schema: Vec<ColumnSchema>,
    pub standardizer: Standardizer,
    pub label_transform: Option<LabelTransform>,
    pub params: Vec<ParamRecord>,
    pub batchnorm: Vec<BatchNormRecord>,
}

impl Checkpoint {
    pub fn new(
        config: TrainConfig,
        split_seed: u64,
        model: &Model,
        schema: &[ColumnSchema],
        standardizer: &Standardizer,
        label_transform: Option<LabelTransform>,
    ) -> Self {
        let params = model
            .store
            .iter()
            .map(|p| ParamRecord {
                name: p.name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
                values: p.value.as_slice().to_vec(),
            })
            .collect();
        let batchnorm = model
            .batchnorm_states()
            .into_iter()
            .map(|(name, state)| BatchNormRecord { name, state })
            .collect();
        Self {
            format: FORMAT.to_string(),
            config: TrainConfig {
                arch: model.cfg,
                ..config
            },
            split_seed,
            widths: model.widths(),
            schema: schema.to_vec(),
            standardizer: standardizer.clone(),
            label_transform,
            params,
            batchnorm,
        }
    }

    /// Rebuilds the network and overwrites every parameter and running
    /// statistic by name.
    pub fn model(&self) -> Result<Model> {
        let mut m = build_network(
            self.config.arch,
            self.widths,
            &mut rng_from_seed(self.config.seed),
        )?;
        if m.store.len() != self.params.len() {
            return Err(Error::Invalid(format!(
                "checkpoint has {} parameters, architecture needs {}",
                self.params.len(),
                m.store.len()
            )));
        }
        for rec in &self.params {
            let id = m
                .store
                .find(&rec.name)
                .ok_or_else(|| ncakit_core::Error::UnknownParameter(rec.name.clone()))?;
            let v = Matrix::from_vec(rec.rows, rec.cols, rec.values.clone())?;
            if v.shape() != m.store.value(id).shape() {
                return Err(Error::Invalid(format!(
                    "parameter `{}` has the wrong shape",
                    rec.name
                )));
            }
            *m.store.value_mut(id) = v;
        }
        let states: Vec<(String, BatchNormState)> = self
            .batchnorm
            .iter()
            .map(|b| (b.name.clone(), b.state.clone()))
            .collect();
        m.set_batchnorm_states(&states)?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Invalid(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(Error::io(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(Error::io(path))?;
        let c: Checkpoint = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if c.format != FORMAT {
            return Err(Error::Invalid(format!(
                "{}: unsupported checkpoint format `{}`",
                path.display(),
                c.format
            )));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ncakit_core::data::{prepare_splits, Task};
    use ncakit_core::model::Variant;
    use ncakit_core::synth::two_moons;
    use ncakit_core::train::train;

    #[test]
    fn bit_exact_round_trip() {
        let d = two_moons(60, 0.2, 1, 0).unwrap();
        let s = prepare_splits(&d, 0, true).unwrap();
        let mut cfg =
            TrainConfig::preset(Variant::ModernNca, Task::Classification { n_classes: 2 }, 3);
        cfg.max_epochs = 2;
        cfg.arch.d_prime = 8;
        cfg.arch.hidden_width = 8;
        cfg.arch.plr.out_dim = 4;
        cfg.seed = 7;
        let out = train(&cfg, &s.train, &s.val).unwrap();
        let ck = Checkpoint::new(cfg, 0, &out.model, d.schema(), &s.standardizer, None);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        ck.save(&p).unwrap();
        let back = Checkpoint::load(&p).unwrap();
        assert_eq!(back, ck);
        let m = back.model().unwrap();
        let mut orig = out.model.clone();
        orig.store.zero_grad();
        assert_eq!(m, orig);
        for (a, b) in m.store.iter().zip(out.model.store.iter()) {
            let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.value), bits(&b.value));
        }
        let p2 = dir.path().join("m2.json");
        Checkpoint::new(cfg, 0, &m, d.schema(), &s.standardizer, None)
            .save(&p2)
            .unwrap();
        assert_eq!(fs::read(&p).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn rejects_foreign_format() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        fs::write(&p, "{}").unwrap();
        assert!(Checkpoint::load(&p).is_err());
    }
}
