//! Tabular datasets: schema, one-hot encoding, standardization and
//! deterministic train/validation/test splitting.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::rng_from_seed;

/// Columns whose population std falls below this are treated as constant.
pub const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ColumnKind {
    Numerical,
    Categorical,
    Label,
}

/// One column of a table.
///
/// For `Categorical` columns `categories` lists the closed set of values in
/// one-hot order. For the `Label` column, `Some(classes)` makes the task a
/// classification over those classes; `None` makes it a regression.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub categories: Option<Vec<String>>,
}

impl ColumnSchema {
    pub fn numerical(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numerical,
            categories: None,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories: Some(categories.into_iter().map(Into::into).collect()),
        }
    }

    pub fn class_label<S: Into<String>>(
        name: impl Into<String>,
        classes: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Label,
            categories: Some(classes.into_iter().map(Into::into).collect()),
        }
    }

    pub fn regression_label(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Label,
            categories: None,
        }
    }
}

/// Checks the schema invariants: one label column, unique column names,
/// non-empty unique category lists.
pub fn validate_schema(schema: &[ColumnSchema]) -> Result<()> {
    let labels = schema
        .iter()
        .filter(|c| c.kind == ColumnKind::Label)
        .count();
    if labels != 1 {
        return Err(Error::Schema(format!(
            "expected exactly one label column, found {labels}"
        )));
    }
    for (i, c) in schema.iter().enumerate() {
        if schema[..i].iter().any(|o| o.name == c.name) {
            return Err(Error::Schema(format!("duplicate column name `{}`", c.name)));
        }
        match (c.kind, &c.categories) {
            (ColumnKind::Numerical, Some(_)) => {
                return Err(Error::Schema(format!(
                    "numerical column `{}` must not list categories",
                    c.name
                )))
            }
            (ColumnKind::Categorical, None) => {
                return Err(Error::Schema(format!(
                    "categorical column `{}` has no categories",
                    c.name
                )))
            }
            (_, Some(cats)) => {
                if cats.is_empty() {
                    return Err(Error::Schema(format!(
                        "column `{}` has an empty category list",
                        c.name
                    )));
                }
                for (j, v) in cats.iter().enumerate() {
                    if cats[..j].contains(v) {
                        return Err(Error::Schema(format!(
                            "column `{}` repeats category `{v}`",
                            c.name
                        )));
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Task {
    Classification { n_classes: usize },
    Regression,
}

impl Task {
    pub fn is_classification(self) -> bool {
        matches!(self, Task::Classification { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(c) => c.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, indices: &[usize]) -> Targets {
        match self {
            Targets::Classes(c) => Targets::Classes(indices.iter().map(|&i| c[i]).collect()),
            Targets::Values(v) => Targets::Values(indices.iter().map(|&i| v[i]).collect()),
        }
    }

    pub fn classes(&self) -> Option<&[usize]> {
        match self {
            Targets::Classes(c) => Some(c),
            Targets::Values(_) => None,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match self {
            Targets::Values(v) => Some(v),
            Targets::Classes(_) => None,
        }
    }
}

/// Affine transform applied to regression labels during training.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabelTransform {
    pub mean: f64,
    pub scale: f64,
}

impl LabelTransform {
    pub fn forward(&self, y: f64) -> f64 {
        (y - self.mean) / self.scale
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.scale + self.mean
    }
}

/// An immutable table: standardizable numerical block, one-hot categorical
/// block, and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<ColumnSchema>,
    numerical: Matrix,
    categorical: Matrix,
    targets: Targets,
    task: Task,
    label_transform: Option<LabelTransform>,
}

impl Dataset {
    /// Assembles a dataset and checks every invariant against `schema`.
    pub fn new(
        schema: Vec<ColumnSchema>,
        numerical: Matrix,
        categorical: Matrix,
        targets: Targets,
    ) -> Result<Self> {
        validate_schema(&schema)?;
        let n = targets.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let d_num = schema
            .iter()
            .filter(|c| c.kind == ColumnKind::Numerical)
            .count();
        let d_cat: usize = categorical_widths(&schema).iter().sum();
        if numerical.shape() != (n, d_num) {
            return Err(Error::Shape {
                op: "Dataset::new numerical",
                expected: (n, d_num),
                found: numerical.shape(),
            });
        }
        if categorical.shape() != (n, d_cat) {
            return Err(Error::Shape {
                op: "Dataset::new categorical",
                expected: (n, d_cat),
                found: categorical.shape(),
            });
        }
        let label = label_column(&schema);
        let task = match (&label.categories, &targets) {
            (Some(classes), Targets::Classes(ids)) => {
                if let Some(&bad) = ids.iter().find(|&&c| c >= classes.len()) {
                    return Err(Error::OutOfRange {
                        what: "class index",
                        value: bad as f64,
                    });
                }
                Task::Classification {
                    n_classes: classes.len(),
                }
            }
            (None, Targets::Values(_)) => Task::Regression,
            _ => {
                return Err(Error::Schema(
                    "label column kind does not match the targets".to_string(),
                ))
            }
        };
        let widths = categorical_widths(&schema);
        for i in 0..n {
            let mut offset = 0;
            for &w in &widths {
                let block = &categorical.row(i)[offset..offset + w];
                let ones = block.iter().filter(|&&v| v == 1.0).count();
                let zeros = block.iter().filter(|&&v| v == 0.0).count();
                if ones != 1 || zeros != w - 1 {
                    return Err(Error::Cell {
                        row: i,
                        column: "<one-hot>".to_string(),
                        reason: "categorical block is not one-hot".to_string(),
                    });
                }
                offset += w;
            }
        }
        Ok(Self {
            schema,
            numerical,
            categorical,
            targets,
            task,
            label_transform: None,
        })
    }

    /// Purely numerical dataset with generated column names `x0, x1, …`
    /// and label `y`.
    pub fn from_numeric(
        numerical: Matrix,
        targets: Targets,
        n_classes: Option<usize>,
    ) -> Result<Self> {
        let mut schema: Vec<ColumnSchema> = (0..numerical.cols())
            .map(|j| ColumnSchema::numerical(format!("x{j}")))
            .collect();
        schema.push(match n_classes {
            Some(c) => ColumnSchema::class_label("y", (0..c).map(|k| format!("{k}"))),
            None => ColumnSchema::regression_label("y"),
        });
        let rows = numerical.rows();
        Self::new(schema, numerical, Matrix::zeros(rows, 0), targets)
    }

    /// Parses string records laid out as `header`. Categorical values must be
    /// in the schema's closed set; class labels must name a schema class.
    pub fn from_records<R, S>(schema: Vec<ColumnSchema>, header: &[S], records: R) -> Result<Self>
    where
        R: IntoIterator,
        R::Item: AsRef<[String]>,
        S: AsRef<str>,
    {
        validate_schema(&schema)?;
        let positions: Vec<usize> = schema
            .iter()
            .map(|c| {
                header
                    .iter()
                    .position(|h| h.as_ref() == c.name)
                    .ok_or_else(|| Error::MissingColumn(c.name.clone()))
            })
            .collect::<Result<_>>()?;
        let d_num = schema
            .iter()
            .filter(|c| c.kind == ColumnKind::Numerical)
            .count();
        let d_cat: usize = categorical_widths(&schema).iter().sum();
        let label = label_column(&schema);
        let mut num = Vec::new();
        let mut cat = Vec::new();
        let mut classes = Vec::new();
        let mut values = Vec::new();
        let mut n = 0;
        for (row, rec) in records.into_iter().enumerate() {
            let rec = rec.as_ref();
            if rec.len() != header.len() {
                return Err(Error::Cell {
                    row,
                    column: "<record>".to_string(),
                    reason: format!("expected {} fields, found {}", header.len(), rec.len()),
                });
            }
            for (col, &pos) in schema.iter().zip(&positions) {
                let raw = rec[pos].trim();
                let cell_err = |reason: String| Error::Cell {
                    row,
                    column: col.name.clone(),
                    reason,
                };
                match col.kind {
                    ColumnKind::Numerical => {
                        let v: f64 = raw
                            .parse()
                            .map_err(|_| cell_err(format!("cannot parse `{raw}` as a number")))?;
                        if !v.is_finite() {
                            return Err(cell_err(format!("non-finite value `{raw}`")));
                        }
                        num.push(v);
                    }
                    ColumnKind::Categorical => {
                        let cats = col.categories.as_ref().expect("validated");
                        let k = cats
                            .iter()
                            .position(|c| c == raw)
                            .ok_or_else(|| cell_err(format!("category `{raw}` not in schema")))?;
                        cat.extend((0..cats.len()).map(|j| if j == k { 1.0 } else { 0.0 }));
                    }
                    ColumnKind::Label => match &label.categories {
                        Some(cls) => {
                            let k = cls
                                .iter()
                                .position(|c| c == raw)
                                .ok_or_else(|| cell_err(format!("class `{raw}` not in schema")))?;
                            classes.push(k);
                        }
                        None => {
                            let v: f64 = raw.parse().map_err(|_| {
                                cell_err(format!("cannot parse `{raw}` as a number"))
                            })?;
                            if !v.is_finite() {
                                return Err(cell_err(format!("non-finite value `{raw}`")));
                            }
                            values.push(v);
                        }
                    },
                }
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let targets = if label.categories.is_some() {
            Targets::Classes(classes)
        } else {
            Targets::Values(values)
        };
        Self::new(
            schema,
            Matrix::from_vec(n, d_num, num)?,
            Matrix::from_vec(n, d_cat, cat)?,
            targets,
        )
    }

    /// Rows with the stored label transform applied to regression targets.
    pub fn with_label_transform(&self, t: LabelTransform) -> Result<Dataset> {
        let v = self.targets.values().ok_or(Error::TaskMismatch {
            op: "with_label_transform",
            expected: "regression",
        })?;
        Ok(self.with_values(v.iter().map(|&y| t.forward(y)).collect(), t))
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn numerical(&self) -> &Matrix {
        &self.numerical
    }

    pub fn categorical(&self) -> &Matrix {
        &self.categorical
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_numerical(&self) -> usize {
        self.numerical.cols()
    }

    pub fn n_categorical(&self) -> usize {
        self.categorical.cols()
    }

    pub fn label_transform(&self) -> Option<LabelTransform> {
        self.label_transform
    }

    /// Regression targets in original units (inverse label transform applied).
    pub fn original_values(&self) -> Option<Vec<f64>> {
        let v = self.targets.values()?;
        Some(match self.label_transform {
            Some(t) => v.iter().map(|&z| t.inverse(z)).collect(),
            None => v.to_vec(),
        })
    }

    /// Rows `indices` (in that order) as a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            numerical: self.numerical.select_rows(indices),
            categorical: self.categorical.select_rows(indices),
            targets: self.targets.select(indices),
            task: self.task,
            label_transform: self.label_transform,
        }
    }

    pub(crate) fn with_numerical(&self, numerical: Matrix) -> Dataset {
        Dataset {
            numerical,
            ..self.clone()
        }
    }

    fn with_values(&self, values: Vec<f64>, transform: LabelTransform) -> Dataset {
        Dataset {
            targets: Targets::Values(values),
            label_transform: Some(transform),
            ..self.clone()
        }
    }
}

pub fn categorical_widths(schema: &[ColumnSchema]) -> Vec<usize> {
    schema
        .iter()
        .filter(|c| c.kind == ColumnKind::Categorical)
        .map(|c| c.categories.as_ref().map_or(0, Vec::len))
        .collect()
}

fn label_column(schema: &[ColumnSchema]) -> &ColumnSchema {
    schema
        .iter()
        .find(|c| c.kind == ColumnKind::Label)
        .expect("validated schema has a label")
}

/// Per-column mean and population standard deviation of the numerical block.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Fits on `train`. Constant columns get scale 1.0 so column indices stay
    /// stable across splits.
    pub fn fit(train: &Dataset) -> Standardizer {
        let (means, scales) = column_moments(train.numerical());
        Standardizer { means, scales }
    }

    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        Ok(d.with_numerical(self.apply_matrix(d.numerical())?))
    }

    pub fn apply_matrix(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.means.len() {
            return Err(Error::Shape {
                op: "Standardizer::apply",
                expected: (x.rows(), self.means.len()),
                found: x.shape(),
            });
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.means[j]) / self.scales[j];
            }
        }
        Ok(out)
    }

    /// Standardizes the leading numerical columns of a model input matrix and
    /// leaves the one-hot tail untouched.
    pub fn apply_features(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() < self.means.len() {
            return Err(Error::Shape {
                op: "Standardizer::apply_features",
                expected: (x.rows(), self.means.len()),
                found: x.shape(),
            });
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().take(self.means.len()).enumerate() {
                *v = (*v - self.means[j]) / self.scales[j];
            }
        }
        Ok(out)
    }
}

fn column_moments(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows() as f64;
    let means = x.column_means();
    let mut var = vec![0.0; x.cols()];
    for row in x.row_iter() {
        for (j, v) in row.iter().enumerate() {
            let d = v - means[j];
            var[j] += d * d;
        }
    }
    let scales = var
        .into_iter()
        .map(|s| {
            let sd = libm::sqrt(s / n);
            if sd < DEGENERATE_STD {
                1.0
            } else {
                sd
            }
        })
        .collect();
    (means, scales)
}

/// Index sets of a train/validation/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// `(train, val, test)` sizes: `⌈N/5⌉` test, then `⌈(N − test)/5⌉`
/// validation, remainder train (64/16/20 for N = 100).
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let test = n.div_ceil(5);
    let val = (n - test).div_ceil(5);
    (n - test - val, val, test)
}

/// Deterministic shuffled partition of `0..n` under `seed`. Each index set is
/// returned in ascending order.
pub fn split_indices(n: usize, seed: u64) -> Result<SplitIndices> {
    if n < 5 {
        return Err(Error::TooFewRows {
            needed: 5,
            found: n,
        });
    }
    let (n_train, n_val, _) = split_sizes(n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let mut test = idx.split_off(n_train + n_val);
    let mut val = idx.split_off(n_train);
    let mut train = idx;
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, val, test })
}

#[derive(Debug, Clone)]
pub struct Split {
    pub indices: SplitIndices,
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

pub fn split_dataset(d: &Dataset, seed: u64) -> Result<Split> {
    let indices = split_indices(d.len(), seed)?;
    Ok(Split {
        train: d.subset(&indices.train),
        val: d.subset(&indices.val),
        test: d.subset(&indices.test),
        indices,
    })
}

/// Standardizes regression labels with the train label mean and population
/// std. The transform is recorded on each returned dataset so predictions can
/// be mapped back to original units.
pub fn standardize_regression_labels(
    train: &Dataset,
    val: &Dataset,
    test: &Dataset,
) -> Result<(Dataset, Dataset, Dataset, LabelTransform)> {
    let y = train.targets().values().ok_or(Error::TaskMismatch {
        op: "standardize_regression_labels",
        expected: "regression",
    })?;
    let col = Matrix::from_vec(y.len(), 1, y.to_vec())?;
    let (m, s) = column_moments(&col);
    let t = LabelTransform {
        mean: m[0],
        scale: s[0],
    };
    let map = |d: &Dataset| -> Result<Dataset> {
        let v = d.targets().values().ok_or(Error::TaskMismatch {
            op: "standardize_regression_labels",
            expected: "regression",
        })?;
        Ok(d.with_values(v.iter().map(|&y| t.forward(y)).collect(), t))
    };
    Ok((map(train)?, map(val)?, map(test)?, t))
}

/// Splits, fits the standardizer on train, applies it everywhere and
/// optionally standardizes regression labels.
#[derive(Debug, Clone)]
pub struct PreparedSplits {
    pub indices: SplitIndices,
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub standardizer: Standardizer,
    pub label_transform: Option<LabelTransform>,
}

pub fn prepare_splits(
    d: &Dataset,
    split_seed: u64,
    standardize_labels: bool,
) -> Result<PreparedSplits> {
    let split = split_dataset(d, split_seed)?;
    let standardizer = Standardizer::fit(&split.train);
    let train = standardizer.apply(&split.train)?;
    let val = standardizer.apply(&split.val)?;
    let test = standardizer.apply(&split.test)?;
    let (train, val, test, label_transform) = if standardize_labels && d.task() == Task::Regression
    {
        let (a, b, c, t) = standardize_regression_labels(&train, &val, &test)?;
        (a, b, c, Some(t))
    } else {
        (train, val, test, None)
    };
    Ok(PreparedSplits {
        indices: split.indices,
        train,
        val,
        test,
        standardizer,
        label_transform,
    })
}

/// `[numerical ∥ one-hot]` model input from string records. The label column
/// may be absent and zero rows are allowed.
pub fn encode_features<R, S>(schema: &[ColumnSchema], header: &[S], records: R) -> Result<Matrix>
where
    R: IntoIterator,
    R::Item: AsRef<[String]>,
    S: AsRef<str>,
{
    validate_schema(schema)?;
    let cols: Vec<(&ColumnSchema, usize)> = schema
        .iter()
        .filter(|c| c.kind != ColumnKind::Label)
        .map(|c| {
            header
                .iter()
                .position(|h| h.as_ref() == c.name)
                .map(|p| (c, p))
                .ok_or_else(|| Error::MissingColumn(c.name.clone()))
        })
        .collect::<Result<_>>()?;
    let d_num = cols
        .iter()
        .filter(|(c, _)| c.kind == ColumnKind::Numerical)
        .count();
    let d_cat: usize = categorical_widths(schema).iter().sum();
    let (mut num, mut cat, mut n) = (Vec::new(), Vec::new(), 0);
    for (row, rec) in records.into_iter().enumerate() {
        let rec = rec.as_ref();
        if rec.len() != header.len() {
            return Err(Error::Cell {
                row,
                column: "<record>".to_string(),
                reason: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        for &(col, pos) in &cols {
            let raw = rec[pos].trim();
            let cell_err = |reason: String| Error::Cell {
                row,
                column: col.name.clone(),
                reason,
            };
            if let Some(cats) = &col.categories {
                let k = cats
                    .iter()
                    .position(|c| c == raw)
                    .ok_or_else(|| cell_err(format!("category `{raw}` not in schema")))?;
                cat.extend((0..cats.len()).map(|j| if j == k { 1.0 } else { 0.0 }));
            } else {
                let v: f64 = raw
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| cell_err(format!("cannot parse `{raw}` as a finite number")))?;
                num.push(v);
            }
        }
        n += 1;
    }
    Ok(Matrix::from_vec(n, d_num, num)?.hstack(&Matrix::from_vec(n, d_cat, cat)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_encoding_matches_dataset_input() {
        let schema = vec![
            ColumnSchema::numerical("a"),
            ColumnSchema::categorical("c", ["x", "y"]),
            ColumnSchema::class_label("y", ["n", "p"]),
        ];
        let header = ["c", "y", "a"];
        let recs = vec![
            vec!["y".to_string(), "n".to_string(), "1.5".to_string()],
            vec!["x".to_string(), "p".to_string(), "-2".to_string()],
        ];
        let d = Dataset::from_records(schema.clone(), &header, &recs).unwrap();
        let x = encode_features(&schema, &header, &recs).unwrap();
        assert_eq!(x, d.numerical().hstack(d.categorical()));
        // label column optional, zero rows allowed
        let feats = ["a", "c"];
        let none: Vec<Vec<String>> = Vec::new();
        assert_eq!(
            encode_features(&schema, &feats, &none).unwrap().shape(),
            (0, 3)
        );
        let bad = vec![vec!["1".to_string(), "z".to_string()]];
        assert!(matches!(
            encode_features(&schema, &feats, &bad),
            Err(Error::Cell { row: 0, .. })
        ));
        let s = Standardizer {
            means: vec![1.0],
            scales: vec![2.0],
        };
        let z = s.apply_features(&x).unwrap();
        assert_eq!(z.row(0), &[0.25, 0.0, 1.0]);
    }
    use alloc::string::ToString;

    fn schema_abc() -> Vec<ColumnSchema> {
        vec![
            ColumnSchema::numerical("a"),
            ColumnSchema::categorical("c", ["x", "y"]),
            ColumnSchema::class_label("y", ["0", "1"]),
        ]
    }

    fn rec(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn records_one_hot_in_schema_order() {
        let header = ["a", "c", "y"];
        let rows = vec![
            rec(&["1", "x", "0"]),
            rec(&["2", "y", "1"]),
            rec(&["3", "x", "0"]),
        ];
        let d = Dataset::from_records(schema_abc(), &header, rows).unwrap();
        assert_eq!(
            d.categorical(),
            &Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        );
        assert_eq!(d.numerical().as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(d.targets(), &Targets::Classes(vec![0, 1, 0]));
        assert_eq!(d.task(), Task::Classification { n_classes: 2 });
    }

    #[test]
    fn header_only_is_empty_dataset() {
        let rows: Vec<Vec<String>> = vec![];
        let err = Dataset::from_records(schema_abc(), &["a", "c", "y"], rows).unwrap_err();
        assert_eq!(err, Error::EmptyDataset);
        assert_eq!(err.to_string(), "empty dataset");
    }

    #[test]
    fn unknown_category_names_row_and_column() {
        let rows = vec![rec(&["1", "x", "0"]), rec(&["2", "z", "1"])];
        let err = Dataset::from_records(schema_abc(), &["a", "c", "y"], rows).unwrap_err();
        match err {
            Error::Cell { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "c");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn bad_numeric_and_missing_column() {
        let rows = vec![rec(&["abc", "x", "0"])];
        assert!(matches!(
            Dataset::from_records(schema_abc(), &["a", "c", "y"], rows),
            Err(Error::Cell { row: 0, .. })
        ));
        let rows = vec![rec(&["1", "x"])];
        assert_eq!(
            Dataset::from_records(schema_abc(), &["a", "c"], rows).unwrap_err(),
            Error::MissingColumn("y".to_string())
        );
    }

    #[test]
    fn schema_validation() {
        let mut s = schema_abc();
        s.push(ColumnSchema::regression_label("z"));
        assert!(validate_schema(&s).is_err());
        let s = vec![
            ColumnSchema::categorical("c", ["x", "x"]),
            ColumnSchema::regression_label("y"),
        ];
        assert!(validate_schema(&s).is_err());
        let s = vec![
            ColumnSchema::categorical("c", Vec::<String>::new()),
            ColumnSchema::regression_label("y"),
        ];
        assert!(validate_schema(&s).is_err());
    }

    fn column(v: &[f64]) -> Dataset {
        let x = Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap();
        Dataset::from_numeric(x, Targets::Values(vec![0.0; v.len()]), None).unwrap()
    }

    #[test]
    fn standardizer_examples() {
        let s = Standardizer::fit(&column(&[1.0, 3.0]));
        assert_eq!((s.means[0], s.scales[0]), (2.0, 1.0));
        let s = Standardizer::fit(&column(&[5.0, 5.0, 5.0]));
        assert_eq!((s.means[0], s.scales[0]), (5.0, 1.0));
        let s = Standardizer::fit(&column(&[0.0, 0.0, 3.0, 3.0]));
        assert_eq!((s.means[0], s.scales[0]), (1.5, 1.5));

        let s = Standardizer {
            means: vec![2.0],
            scales: vec![1.0],
        };
        assert_eq!(s.apply(&column(&[3.0])).unwrap().numerical()[(0, 0)], 1.0);
        let wide =
            Dataset::from_numeric(Matrix::zeros(1, 2), Targets::Values(vec![0.0]), None).unwrap();
        assert!(s.apply(&wide).is_err());
    }

    #[test]
    fn split_size_examples() {
        assert_eq!(split_sizes(100), (64, 16, 20));
        assert_eq!(split_sizes(10), (6, 2, 2));
        let s = split_indices(10, 3).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (6, 2, 2));
        let mut all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.val)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split_indices(10, 3).unwrap(), s);
        assert!(split_indices(4, 0).is_err());
    }

    #[test]
    fn test_split_uses_train_statistics() {
        let v: Vec<f64> = (0..50).map(|i| (i * i) as f64 * 0.1).collect();
        let p = prepare_splits(&column(&v), 11, false).unwrap();
        let train_mean = p.train.numerical().column_means()[0];
        let test_mean = p.test.numerical().column_means()[0];
        assert!(libm::fabs(train_mean) < 1e-10);
        assert!(libm::fabs(test_mean) > 1e-3);
    }

    #[test]
    fn regression_label_round_trip() {
        let mk = |v: &[f64]| {
            Dataset::from_numeric(Matrix::zeros(v.len(), 1), Targets::Values(v.to_vec()), None)
                .unwrap()
        };
        let (tr, _, te, t) =
            standardize_regression_labels(&mk(&[0.0, 2.0]), &mk(&[1.0]), &mk(&[5.0, -3.0]))
                .unwrap();
        assert_eq!(tr.targets().values().unwrap(), &[-1.0, 1.0]);
        assert_eq!(te.original_values().unwrap(), vec![5.0, -3.0]);
        for y in [-1e3, -1.0, 0.0, 0.123, 7.5e4] {
            assert!(libm::fabs(t.inverse(t.forward(y)) - y) < 1e-12 * libm::fabs(y).max(1.0));
        }
        let cls =
            Dataset::from_numeric(Matrix::zeros(1, 1), Targets::Classes(vec![0]), Some(2)).unwrap();
        assert!(standardize_regression_labels(&cls, &cls, &cls).is_err());
    }
}
