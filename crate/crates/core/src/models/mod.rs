//! Detectors and their evaluation.
//!
//! Forest and linear models consume handcrafted feature rows; the head model
//! consumes embedding rows. All three implement [`Classifier`] over `f64`
//! rows, with [`ClassLabel::Ps`] as the positive class.

mod forest;
mod head;
mod importance;
mod linear;
mod metrics;

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use forest::{train_forest, DecisionTree, ForestConfig, ForestModel, Node};
pub use head::{train_head, HeadModel, TrainConfig, HEAD_MAGIC};
pub use importance::{permutation_importance, Importance};
pub use linear::{train_linear, LinearConfig, LinearModel};
pub use metrics::{evaluate, F1Average, Metrics};

use crate::corpus::ClassLabel;
use crate::matrix::EmbeddingMatrix;
use crate::{Error, Result};

pub trait Classifier: Sync {
    /// Expected row length.
    fn n_inputs(&self) -> usize;

    fn predict(&self, x: &[f64]) -> Result<ClassLabel>;

    fn predict_all(&self, xs: &[Vec<f64>]) -> Result<Vec<ClassLabel>> {
        xs.par_iter().map(|x| self.predict(x)).collect()
    }
}

pub(crate) fn check_training_set(xs: &[Vec<f64>], ys: &[ClassLabel]) -> Result<usize> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!("{} training rows", xs.len())));
    }
    let d = xs[0].len();
    if let Some(bad) = xs.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.len(),
        });
    }
    if xs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite training value".into()));
    }
    let ps = ys.iter().filter(|&&y| y == ClassLabel::Ps).count();
    if ps == 0 || ps == ys.len() {
        return Err(Error::SingleClass);
    }
    Ok(d)
}

pub(crate) fn check_row(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    Ok(())
}

/// Labelled rows addressed by article id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<ClassLabel>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn push(&mut self, id: String, row: Vec<f64>, label: ClassLabel) {
        self.ids.push(id);
        self.rows.push(row);
        self.labels.push(label);
    }

    pub fn index(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
    }

    /// Rows for `ids`, in that order.
    pub fn select<S: AsRef<str>>(&self, ids: &[S]) -> Result<Dataset> {
        let index = self.index();
        let mut out = Dataset::default();
        for id in ids {
            let id = id.as_ref();
            let &i = index
                .get(id)
                .ok_or_else(|| Error::Mismatch(format!("no row for article {id:?}")))?;
            out.push(self.ids[i].clone(), self.rows[i].clone(), self.labels[i]);
        }
        Ok(out)
    }

    pub fn extend(&mut self, other: Dataset) {
        self.ids.extend(other.ids);
        self.rows.extend(other.rows);
        self.labels.extend(other.labels);
    }

    pub fn from_table(table: &crate::features::FeatureTable) -> Dataset {
        Dataset {
            ids: table.ids.clone(),
            rows: table.rows.clone(),
            labels: table.labels.clone(),
        }
    }

    /// Embedding rows labelled by `label_of`; rows without a label are skipped.
    pub fn from_embeddings(emb: &EmbeddingMatrix, label_of: impl Fn(&str) -> Option<ClassLabel>) -> Dataset {
        let mut out = Dataset::default();
        for (i, id) in emb.ids().iter().enumerate() {
            if let Some(l) = label_of(id) {
                out.push(id.clone(), emb.row(i).iter().map(|&v| f64::from(v)).collect(), l);
            }
        }
        out
    }

    pub fn evaluate<C: Classifier + ?Sized>(&self, model: &C) -> Result<Metrics> {
        evaluate(model, &self.rows, &self.labels)
    }
}

/// Any persisted detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Forest(ForestModel),
    Linear(LinearModel),
    #[serde(skip)]
    Head(HeadModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Forest(_) => "forest",
            Model::Linear(_) => "linear",
            Model::Head(_) => "head",
        }
    }

    /// Feature names the model was trained on; empty for the head model.
    pub fn feature_names(&self) -> &[String] {
        match self {
            Model::Forest(m) => &m.feature_names,
            Model::Linear(m) => &m.feature_names,
            Model::Head(_) => &[],
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = match self {
            Model::Head(h) => h.to_bytes()?,
            _ => (serde_json::to_string(self)? + "\n").into_bytes(),
        };
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(HEAD_MAGIC) {
            return Ok(Model::Head(HeadModel::from_bytes(&bytes)?));
        }
        Ok(serde_json::from_slice(&bytes)?)
    }
}

impl Classifier for Model {
    fn n_inputs(&self) -> usize {
        match self {
            Model::Forest(m) => m.n_inputs(),
            Model::Linear(m) => m.n_inputs(),
            Model::Head(m) => m.n_inputs(),
        }
    }

    fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        match self {
            Model::Forest(m) => m.predict(x),
            Model::Linear(m) => m.predict(x),
            Model::Head(m) => m.predict(x),
        }
    }
}
