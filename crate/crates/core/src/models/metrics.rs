use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::corpus::ClassLabel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F1Average {
    /// F1 of the PS class.
    #[default]
    Positive,
    /// Unweighted mean of the per-class F1 scores.
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1_ps: f64,
    pub f1_macro: f64,
    /// `confusion[true][predicted]`, indexed by [`ClassLabel::index`].
    pub confusion: [[u64; 2]; 2],
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl Metrics {
    pub fn from_predictions(truth: &[ClassLabel], predicted: &[ClassLabel]) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::EmptyInput("test set".into()));
        }
        if truth.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                got: predicted.len(),
            });
        }
        let mut confusion = [[0u64; 2]; 2];
        for (t, p) in truth.iter().zip(predicted) {
            confusion[t.index()][p.index()] += 1;
        }
        let [[tn, fp], [fn_, tp]] = confusion;
        let accuracy = (tp + tn) as f64 / truth.len() as f64;
        let f1_ps = f1(tp, fp, fn_);
        let f1_ln = f1(tn, fn_, fp);
        Ok(Metrics {
            accuracy,
            f1_ps,
            f1_macro: (f1_ps + f1_ln) / 2.0,
            confusion,
        })
    }

    pub fn f1(&self, average: F1Average) -> f64 {
        match average {
            F1Average::Positive => self.f1_ps,
            F1Average::Macro => self.f1_macro,
        }
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }
}

pub fn evaluate<C: Classifier + ?Sized>(model: &C, xs: &[Vec<f64>], ys: &[ClassLabel]) -> Result<Metrics> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("test set".into()));
    }
    let predicted = model.predict_all(xs)?;
    Metrics::from_predictions(ys, &predicted)
}
