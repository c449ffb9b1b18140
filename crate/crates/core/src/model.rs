//! The embedding network `φ` for every variant of the NCA ladder, plus the
//! prediction rules built on top of it.
//!
//! Layout: `[PLR(numerical) ∥ one-hot] → Linear(d_enc → d') → blocks →
//! [BatchNorm(d')]`. A block is `Linear(Dropout(ReLU(Linear(Norm(x)))))`
//! mapping `d' → hidden → d'`, optionally wrapped as `x + g(x)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Dataset, Targets, Task};
use crate::diff::activation::{relu, relu_backward, DropoutCache, ReluCache};
use crate::diff::linear::LinearCache;
use crate::diff::norm::{BatchNormCache, LayerNormCache};
use crate::diff::plr::PlrCache;
use crate::diff::{
    BatchNorm, BatchNormState, Dropout, LayerNorm, Linear, Mode, ParamStore, PlrConfig, PlrEncoder,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neighborhood::{
    one_hot, pairwise_distance, DistanceKind, ExclusionMask, Kernel, NeighborhoodWeights,
};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Variant {
    NcaV0,
    NcaV1,
    NcaV2,
    NcaV3,
    NcaV4Lnca,
    ModernNca,
}

impl Variant {
    pub const LADDER: [Variant; 6] = [
        Variant::NcaV0,
        Variant::NcaV1,
        Variant::NcaV2,
        Variant::NcaV3,
        Variant::NcaV4Lnca,
        Variant::ModernNca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::NcaV0 => "ncav0",
            Variant::NcaV1 => "ncav1",
            Variant::NcaV2 => "ncav2",
            Variant::NcaV3 => "ncav3",
            Variant::NcaV4Lnca => "ncav4_lnca",
            Variant::ModernNca => "modern_nca",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::LADDER.into_iter().find(|v| v.name() == s)
    }

    pub fn is_linear(self) -> bool {
        self != Variant::ModernNca
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NormKind {
    Batch,
    Layer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArchConfig {
    pub variant: Variant,
    pub d_prime: usize,
    pub n_blocks: usize,
    pub hidden_width: usize,
    pub dropout_rate: f64,
    pub norm_kind: NormKind,
    pub residual: bool,
    pub use_plr: bool,
    pub plr: PlrConfig,
    pub final_batchnorm: bool,
}

/// Raw input widths: standardized numerical columns and the one-hot block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InputWidths {
    pub numerical: usize,
    pub categorical: usize,
}

impl InputWidths {
    pub fn of(d: &Dataset) -> Self {
        Self {
            numerical: d.n_numerical(),
            categorical: d.n_categorical(),
        }
    }

    pub fn total(self) -> usize {
        self.numerical + self.categorical
    }
}

impl ArchConfig {
    /// Default architecture of a ladder rung for `d_input` raw columns.
    pub fn preset(variant: Variant, d_input: usize) -> Self {
        let linear = ArchConfig {
            variant,
            d_prime: d_input.max(1),
            n_blocks: 0,
            hidden_width: 0,
            dropout_rate: 0.0,
            norm_kind: NormKind::Batch,
            residual: false,
            use_plr: false,
            plr: PlrConfig::default(),
            final_batchnorm: false,
        };
        match variant {
            Variant::NcaV0 => linear,
            Variant::NcaV1 | Variant::NcaV2 | Variant::NcaV3 | Variant::NcaV4Lnca => ArchConfig {
                d_prime: d_input.max(64),
                ..linear
            },
            Variant::ModernNca => ArchConfig {
                d_prime: 64,
                n_blocks: 1,
                hidden_width: 128,
                dropout_rate: 0.1,
                use_plr: true,
                final_batchnorm: true,
                ..linear
            },
        }
    }

    /// Shape-level checks only: positive widths and a valid dropout rate.
    pub fn validate_structure(&self) -> Result<()> {
        if self.d_prime == 0 {
            return Err(Error::InvalidConfig("d_prime must be ≥ 1".into()));
        }
        if self.n_blocks > 0 && self.hidden_width == 0 {
            return Err(Error::InvalidConfig(
                "hidden_width must be ≥ 1 when blocks are present".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::OutOfRange {
                what: "dropout rate",
                value: self.dropout_rate,
            });
        }
        Ok(())
    }

    /// Structure checks plus the rules of the variant.
    pub fn validate(&self, widths: InputWidths) -> Result<()> {
        self.validate_structure()?;
        let v = self.variant.name();
        if self.variant.is_linear() {
            if self.n_blocks > 0 || self.use_plr || self.final_batchnorm {
                return Err(Error::InvalidConfig(format!(
                    "{v} is linear: n_blocks must be 0, PLR and final batchnorm off"
                )));
            }
        } else if self.n_blocks == 0 {
            return Err(Error::InvalidConfig(format!("{v} needs n_blocks ≥ 1")));
        }
        if self.variant == Variant::NcaV0 && self.d_prime > widths.total() {
            return Err(Error::InvalidConfig(format!(
                "ncav0 reduces dimension: d_prime {} > input width {}",
                self.d_prime,
                widths.total()
            )));
        }
        Ok(())
    }

    /// Only the original NCA map omits the bias.
    pub fn input_bias(&self) -> bool {
        self.variant != Variant::NcaV0
    }

    fn plr_active(&self, widths: InputWidths) -> bool {
        self.use_plr && widths.numerical > 0
    }

    /// Width entering the first linear layer.
    pub fn encoded_width(&self, widths: InputWidths) -> usize {
        if self.plr_active(widths) {
            widths.numerical * self.plr.out_dim + widths.categorical
        } else {
            widths.total()
        }
    }

    /// Closed-form number of trainable scalars.
    pub fn param_count(&self, widths: InputWidths) -> usize {
        let (d, h) = (self.d_prime, self.hidden_width);
        let mut n = 0;
        if self.plr_active(widths) {
            let (m, k) = (self.plr.n_frequencies, self.plr.out_dim);
            n += widths.numerical * m + 2 * m * k + k;
        }
        n += self.encoded_width(widths) * d + if self.input_bias() { d } else { 0 };
        n += self.n_blocks * (2 * d + d * h + h + h * d + d);
        if self.final_batchnorm {
            n += 2 * d;
        }
        n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Norm {
    Batch(BatchNorm),
    Layer(LayerNorm),
}

#[derive(Debug)]
enum NormCache {
    Batch(BatchNormCache),
    Layer(LayerNormCache),
}

impl Norm {
    fn forward(
        &mut self,
        store: &ParamStore,
        x: &Matrix,
        mode: Mode,
    ) -> Result<(Matrix, NormCache)> {
        match self {
            Norm::Batch(bn) => bn
                .forward(store, x, mode)
                .map(|(y, c)| (y, NormCache::Batch(c))),
            Norm::Layer(ln) => ln.forward(store, x).map(|(y, c)| (y, NormCache::Layer(c))),
        }
    }

    fn apply_eval(&self, store: &ParamStore, x: &Matrix) -> Result<Matrix> {
        match self {
            Norm::Batch(bn) => bn.apply_eval(store, x),
            Norm::Layer(ln) => ln.forward(store, x).map(|(y, _)| y),
        }
    }

    fn backward(&self, store: &mut ParamStore, cache: NormCache, dy: &Matrix) -> Matrix {
        match (self, cache) {
            (Norm::Batch(bn), NormCache::Batch(c)) => bn.backward(store, c, dy),
            (Norm::Layer(ln), NormCache::Layer(c)) => ln.backward(store, c, dy),
            _ => unreachable!("norm cache kind mismatch"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub norm: Norm,
    pub linear1: Linear,
    pub dropout: Dropout,
    pub linear2: Linear,
    pub residual: bool,
}

#[derive(Debug)]
struct BlockTape {
    norm: NormCache,
    linear1: LinearCache,
    relu: ReluCache,
    dropout: DropoutCache,
    linear2: LinearCache,
}

impl Block {
    fn forward(
        &mut self,
        store: &ParamStore,
        x: &Matrix,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<(Matrix, BlockTape)> {
        let (h, norm) = self.norm.forward(store, x, mode)?;
        let (h, linear1) = self.linear1.forward(store, &h)?;
        let (h, relu_c) = relu(&h);
        let (h, dropout) = self.dropout.forward(&h, mode, rng);
        let (mut y, linear2) = self.linear2.forward(store, &h)?;
        if self.residual {
            y.add_assign(x);
        }
        Ok((
            y,
            BlockTape {
                norm,
                linear1,
                relu: relu_c,
                dropout,
                linear2,
            },
        ))
    }

    fn apply_eval(&self, store: &ParamStore, x: &Matrix) -> Result<Matrix> {
        let h = self.norm.apply_eval(store, x)?;
        let h = self
            .linear1
            .apply(store, &h)?
            .map(|v| if v > 0.0 { v } else { 0.0 });
        let mut y = self.linear2.apply(store, &h)?;
        if self.residual {
            y.add_assign(x);
        }
        Ok(y)
    }

    fn backward(&self, store: &mut ParamStore, tape: BlockTape, dy: &Matrix) -> Matrix {
        let dh = self.linear2.backward(store, tape.linear2, dy);
        let dh = self.dropout.backward(tape.dropout, &dh);
        let dh = relu_backward(tape.relu, &dh);
        let dh = self.linear1.backward(store, tape.linear1, &dh);
        let mut dx = self.norm.backward(store, tape.norm, &dh);
        if self.residual {
            dx.add_assign(dy);
        }
        dx
    }
}

/// Layer structure of `φ` without the parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub widths: InputWidths,
    pub plr: Option<PlrEncoder>,
    pub input: Linear,
    pub blocks: Vec<Block>,
    pub final_bn: Option<BatchNorm>,
}

/// Record of one train-mode forward pass, consumed by [`Network::backward`].
#[derive(Debug)]
pub struct Tape {
    plr: Option<PlrCache>,
    input: LinearCache,
    blocks: Vec<BlockTape>,
    final_bn: Option<BatchNormCache>,
}

impl Network {
    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.widths.total() {
            return Err(Error::Shape {
                op: "embed",
                expected: (x.rows(), self.widths.total()),
                found: x.shape(),
            });
        }
        Ok(())
    }

    /// Forward pass recording a tape. Train mode updates BatchNorm running
    /// statistics and draws dropout masks from `rng`.
    pub fn forward(
        &mut self,
        store: &ParamStore,
        x: &Matrix,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<(Matrix, Tape)> {
        self.check_input(x)?;
        let n = self.widths.numerical;
        let (enc, plr) = match &self.plr {
            Some(p) => {
                let (e, c) = p.forward(store, &x.slice_cols(0, n))?;
                (e.hstack(&x.slice_cols(n, x.cols())), Some(c))
            }
            None => (x.clone(), None),
        };
        let (mut h, input) = self.input.forward(store, &enc)?;
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for b in &mut self.blocks {
            let (y, t) = b.forward(store, &h, mode, rng)?;
            blocks.push(t);
            h = y;
        }
        let final_bn = match &mut self.final_bn {
            Some(bn) => {
                let (y, c) = bn.forward(store, &h, mode)?;
                h = y;
                Some(c)
            }
            None => None,
        };
        Ok((
            h,
            Tape {
                plr,
                input,
                blocks,
                final_bn,
            },
        ))
    }

    /// Eval-mode forward; a pure function of input and parameters.
    pub fn apply_eval(&self, store: &ParamStore, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let n = self.widths.numerical;
        let enc = match &self.plr {
            Some(p) => p
                .apply(store, &x.slice_cols(0, n))?
                .hstack(&x.slice_cols(n, x.cols())),
            None => x.clone(),
        };
        let mut h = self.input.apply(store, &enc)?;
        for b in &self.blocks {
            h = b.apply_eval(store, &h)?;
        }
        if let Some(bn) = &self.final_bn {
            h = bn.apply_eval(store, &h)?;
        }
        Ok(h)
    }

    /// Accumulates parameter gradients for `∂L/∂φ(x) = dy` and returns `∂L/∂x`.
    pub fn backward(&self, store: &mut ParamStore, tape: Tape, dy: &Matrix) -> Matrix {
        let mut g = dy.clone();
        if let (Some(bn), Some(c)) = (&self.final_bn, tape.final_bn) {
            g = bn.backward(store, c, &g);
        }
        for (b, t) in self.blocks.iter().zip(tape.blocks).rev() {
            g = b.backward(store, t, &g);
        }
        let d_enc = self.input.backward(store, tape.input, &g);
        match (&self.plr, tape.plr) {
            (Some(p), Some(c)) => {
                let split = self.widths.numerical * p.cfg.out_dim;
                let dnum = p.backward(store, c, &d_enc.slice_cols(0, split));
                dnum.hstack(&d_enc.slice_cols(split, d_enc.cols()))
            }
            _ => d_enc,
        }
    }

    fn batchnorms(&self) -> Vec<&BatchNorm> {
        let mut out: Vec<&BatchNorm> = self
            .blocks
            .iter()
            .filter_map(|b| match &b.norm {
                Norm::Batch(bn) => Some(bn),
                Norm::Layer(_) => None,
            })
            .collect();
        out.extend(self.final_bn.as_ref());
        out
    }

    fn batchnorms_mut(&mut self) -> Vec<&mut BatchNorm> {
        let mut out: Vec<&mut BatchNorm> = self
            .blocks
            .iter_mut()
            .filter_map(|b| match &mut b.norm {
                Norm::Batch(bn) => Some(bn),
                Norm::Layer(_) => None,
            })
            .collect();
        out.extend(self.final_bn.as_mut());
        out
    }
}

/// `φ` with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub cfg: ArchConfig,
    pub net: Network,
    pub store: ParamStore,
}

/// Builds the network after checking the variant rules.
pub fn build_model(cfg: ArchConfig, widths: InputWidths, rng: &mut Rng) -> Result<Model> {
    cfg.validate(widths)?;
    build_network(cfg, widths, rng)
}

/// Builds the network after structure checks only, so configurations that
/// cross variant rules (a block-free modern variant, say) can be compared
/// against their linear counterparts.
pub fn build_network(cfg: ArchConfig, widths: InputWidths, rng: &mut Rng) -> Result<Model> {
    cfg.validate_structure()?;
    if widths.total() == 0 {
        return Err(Error::InvalidConfig(
            "model needs at least one input column".into(),
        ));
    }
    let mut store = ParamStore::new();
    let plr = if cfg.plr_active(widths) {
        Some(PlrEncoder::new(
            &mut store,
            "plr",
            widths.numerical,
            cfg.plr,
            rng,
        )?)
    } else {
        None
    };
    let input = Linear::new(
        &mut store,
        "input",
        cfg.encoded_width(widths),
        cfg.d_prime,
        cfg.input_bias(),
        rng,
    );
    let mut blocks = Vec::with_capacity(cfg.n_blocks);
    for i in 0..cfg.n_blocks {
        let name = format!("block{i}");
        let norm = match cfg.norm_kind {
            NormKind::Batch => Norm::Batch(BatchNorm::new(
                &mut store,
                &format!("{name}.norm"),
                cfg.d_prime,
            )),
            NormKind::Layer => Norm::Layer(LayerNorm::new(
                &mut store,
                &format!("{name}.norm"),
                cfg.d_prime,
            )),
        };
        let linear1 = Linear::new(
            &mut store,
            &format!("{name}.linear1"),
            cfg.d_prime,
            cfg.hidden_width,
            true,
            rng,
        );
        let linear2 = Linear::new(
            &mut store,
            &format!("{name}.linear2"),
            cfg.hidden_width,
            cfg.d_prime,
            true,
            rng,
        );
        blocks.push(Block {
            norm,
            linear1,
            dropout: Dropout::new(cfg.dropout_rate)?,
            linear2,
            residual: cfg.residual,
        });
    }
    let final_bn = cfg
        .final_batchnorm
        .then(|| BatchNorm::new(&mut store, "final_bn", cfg.d_prime));
    Ok(Model {
        cfg,
        net: Network {
            widths,
            plr,
            input,
            blocks,
            final_bn,
        },
        store,
    })
}

/// `[numerical ∥ one-hot]`, the matrix the model consumes.
pub fn model_input(d: &Dataset) -> Matrix {
    d.numerical().hstack(d.categorical())
}

impl Model {
    pub fn widths(&self) -> InputWidths {
        self.net.widths
    }

    pub fn embed(&mut self, x: &Matrix, mode: Mode, rng: &mut Rng) -> Result<(Matrix, Tape)> {
        self.net.forward(&self.store, x, mode, rng)
    }

    pub fn embed_eval(&self, x: &Matrix) -> Result<Matrix> {
        self.net.apply_eval(&self.store, x)
    }

    pub fn backward(&mut self, tape: Tape, dy: &Matrix) -> Matrix {
        self.net.backward(&mut self.store, tape, dy)
    }

    /// Sets the first linear map to the rectangular identity and its bias to
    /// zero.
    pub fn init_identity(&mut self) {
        let l = &self.net.input;
        *self.store.value_mut(l.weight) = Matrix::identity(l.in_dim, l.out_dim);
        if let Some(b) = l.bias {
            self.store.value_mut(b).fill(0.0);
        }
    }

    pub fn num_params(&self) -> usize {
        self.store.num_scalars()
    }

    /// Running statistics of every BatchNorm layer, keyed by layer name.
    pub fn batchnorm_states(&self) -> Vec<(String, BatchNormState)> {
        self.net
            .batchnorms()
            .into_iter()
            .map(|bn| (bn_name(&self.store, bn), bn.state.clone()))
            .collect()
    }

    pub fn set_batchnorm_states(&mut self, states: &[(String, BatchNormState)]) -> Result<()> {
        let store = &self.store;
        for bn in self.net.batchnorms_mut() {
            let name = bn_name(store, bn);
            let (_, s) = states
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| Error::UnknownParameter(name.clone()))?;
            if s.running_mean.len() != bn.dim || s.running_var.len() != bn.dim {
                return Err(Error::Schema(format!(
                    "batchnorm {name}: wrong statistics width"
                )));
            }
            bn.state = s.clone();
        }
        Ok(())
    }
}

fn bn_name(store: &ParamStore, bn: &BatchNorm) -> String {
    let g = store.name(bn.gamma);
    String::from(g.strip_suffix(".gamma").unwrap_or(g))
}

/// Lowest index among maximal entries.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    /// Predicted class per query and the class-probability rows behind it.
    Classes { labels: Vec<usize>, probs: Matrix },
    /// Predicted value per query, in original label units.
    Values(Vec<f64>),
}

impl Predictions {
    pub fn len(&self) -> usize {
        match self {
            Predictions::Classes { labels, .. } => labels.len(),
            Predictions::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Exact `k`-nearest-neighbour rule under Euclidean distance. Distance ties
/// go to the lower training index, vote ties to the lower class index.
/// Regression returns the neighbour mean in the units of `train_targets`.
pub fn knn_predict(
    train_emb: &Matrix,
    train_targets: &Targets,
    query_emb: &Matrix,
    k: usize,
    task: Task,
) -> Result<Predictions> {
    let n = train_emb.rows();
    if k == 0 || k > n {
        return Err(Error::OutOfRange {
            what: "k nearest neighbours",
            value: k as f64,
        });
    }
    let dist = pairwise_distance(query_emb, train_emb, DistanceKind::SquaredEuclid)?;
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(query_emb.rows());
    let mut values = Vec::with_capacity(query_emb.rows());
    let n_classes = match task {
        Task::Classification { n_classes } => n_classes,
        Task::Regression => 0,
    };
    let mut probs = Matrix::zeros(query_emb.rows(), n_classes);
    for i in 0..query_emb.rows() {
        order.clear();
        order.extend(0..n);
        let row = dist.row(i);
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        let nn = &order[..k];
        match train_targets {
            Targets::Classes(c) => {
                let mut votes = vec![0.0; n_classes];
                for &j in nn {
                    votes[c[j]] += 1.0;
                }
                labels.push(argmax(&votes));
                for (p, v) in probs.row_mut(i).iter_mut().zip(&votes) {
                    *p = v / k as f64;
                }
            }
            Targets::Values(y) => values.push(nn.iter().map(|&j| y[j]).sum::<f64>() / k as f64),
        }
    }
    Ok(match train_targets {
        Targets::Classes(_) => Predictions::Classes { labels, probs },
        Targets::Values(_) => Predictions::Values(values),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "rule"))]
pub enum PredictionRule {
    SoftNn,
    HardKnn { k: usize },
}

/// How embeddings are compared at prediction time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbourhood {
    pub distance: DistanceKind,
    pub kernel: Kernel,
    pub rule: PredictionRule,
}

/// Embeds `train` and `queries` in eval mode and applies `how.rule` with the
/// whole training set as candidates and nothing masked. Regression outputs
/// are mapped back through the train label transform.
pub fn predict(
    model: &Model,
    train: &Dataset,
    queries: &Matrix,
    how: Neighbourhood,
) -> Result<Predictions> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let train_emb = model.embed_eval(&model_input(train))?;
    let query_emb = model.embed_eval(queries)?;
    predict_embedded(&train_emb, train, &query_emb, how)
}

/// [`predict`] on precomputed embeddings.
pub fn predict_embedded(
    train_emb: &Matrix,
    train: &Dataset,
    query_emb: &Matrix,
    how: Neighbourhood,
) -> Result<Predictions> {
    let raw = match how.rule {
        PredictionRule::HardKnn { k } => {
            knn_predict(train_emb, train.targets(), query_emb, k, train.task())?
        }
        PredictionRule::SoftNn => {
            if query_emb.rows() == 0 {
                empty_predictions(train.task())
            } else {
                let d = pairwise_distance(query_emb, train_emb, how.distance)?;
                let mask = ExclusionMask::none(d.rows(), d.cols());
                let w = NeighborhoodWeights::from_distances(d, mask, how.kernel)?;
                softnn_from_weights(w.weights(), train.targets(), train.task())
            }
        }
    };
    Ok(match (raw, train.label_transform()) {
        (Predictions::Values(v), Some(t)) => {
            Predictions::Values(v.into_iter().map(|z| t.inverse(z)).collect())
        }
        (p, _) => p,
    })
}

fn empty_predictions(task: Task) -> Predictions {
    match task {
        Task::Classification { n_classes } => Predictions::Classes {
            labels: Vec::new(),
            probs: Matrix::zeros(0, n_classes),
        },
        Task::Regression => Predictions::Values(Vec::new()),
    }
}

/// Soft-NN rule on a row-stochastic weight matrix.
pub fn softnn_from_weights(w: &Matrix, targets: &Targets, task: Task) -> Predictions {
    match targets {
        Targets::Classes(c) => {
            let n_classes = match task {
                Task::Classification { n_classes } => n_classes,
                Task::Regression => c.iter().max().map_or(0, |&m| m + 1),
            };
            let probs = w.matmul(&one_hot(c, n_classes));
            let labels = probs.row_iter().map(argmax).collect();
            Predictions::Classes { labels, probs }
        }
        Targets::Values(y) => Predictions::Values(
            w.row_iter()
                .map(|r| r.iter().zip(y).map(|(a, b)| a * b).sum())
                .collect(),
        ),
    }
}
