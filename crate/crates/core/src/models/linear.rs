use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_row, check_training_set, Classifier};
use crate::corpus::ClassLabel;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            learning_rate: 0.1,
            l2: 1e-4,
            epochs: 50,
            seed: 0,
        }
    }
}

/// Max-margin linear model over standardized features. PS is the +1 side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    /// Per-feature standard deviation; 0 for constant columns.
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub config: LinearConfig,
}

fn standardize(x: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(mean.iter().zip(scale))
        .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
        .collect()
}

fn sign(y: ClassLabel) -> f64 {
    match y {
        ClassLabel::Ps => 1.0,
        ClassLabel::Ln => -1.0,
    }
}

/// Stochastic sub-gradient descent on the L2-regularised hinge loss, step
/// `η₀ / (1 + η₀·λ·t)`, starting from zero weights.
pub fn train_linear(
    xs: &[Vec<f64>],
    ys: &[ClassLabel],
    feature_names: &[String],
    cfg: &LinearConfig,
) -> Result<LinearModel> {
    let d = check_training_set(xs, ys)?;
    if !(cfg.learning_rate > 0.0) || cfg.l2 < 0.0 || cfg.epochs == 0 {
        return Err(Error::InvalidParameter(format!("{cfg:?}")));
    }
    if feature_names.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: feature_names.len(),
        });
    }
    let n = xs.len() as f64;
    let mut mean = vec![0.0; d];
    for x in xs {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n;
        }
    }
    let mut scale = vec![0.0; d];
    for x in xs {
        for ((s, v), m) in scale.iter_mut().zip(x).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    for s in &mut scale {
        *s = if *s > 1e-24 { s.sqrt() } else { 0.0 };
    }
    let zs: Vec<Vec<f64>> = xs.iter().map(|x| standardize(x, &mean, &scale)).collect();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut r = rng::seeded(cfg.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut t = 0.0;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut r);
        for &i in &order {
            t += 1.0;
            let lr = cfg.learning_rate / (1.0 + cfg.learning_rate * cfg.l2 * t);
            let y = sign(ys[i]);
            let margin = y * (w.iter().zip(&zs[i]).map(|(a, b)| a * b).sum::<f64>() + b);
            let decay = 1.0 - lr * cfg.l2;
            w.iter_mut().for_each(|v| *v *= decay);
            if margin < 1.0 {
                for (v, z) in w.iter_mut().zip(&zs[i]) {
                    *v += lr * y * z;
                }
                b += lr * y;
            }
        }
    }
    Ok(LinearModel {
        feature_names: feature_names.to_vec(),
        mean,
        scale,
        weights: w,
        bias: b,
        config: cfg.clone(),
    })
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        check_row(x, self.weights.len())?;
        let z = standardize(x, &self.mean, &self.scale);
        Ok(self.weights.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() + self.bias)
    }
}

impl Classifier for LinearModel {
    fn n_inputs(&self) -> usize {
        self.weights.len()
    }

    fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        Ok(if self.decision(x)? > 0.0 {
            ClassLabel::Ps
        } else {
            ClassLabel::Ln
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::evaluate;
    use rand::Rng;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("f{i}")).collect()
    }

    fn separable(seed: u64) -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
        let mut r = rng::seeded(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        while xs.len() < 100 {
            let x: Vec<f64> = vec![r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)];
            let s = x[0] + 2.0 * x[1] - 1.0;
            if s.abs() < 0.5 {
                continue;
            }
            ys.push(ClassLabel::from_index(usize::from(s > 0.0)));
            xs.push(x);
        }
        (xs, ys)
    }

    #[test]
    fn separable_data_fit_exactly() {
        let (xs, ys) = separable(1);
        let m = train_linear(&xs, &ys, &names(2), &LinearConfig::default()).unwrap();
        assert_eq!(evaluate(&m, &xs, &ys).unwrap().accuracy, 1.0);
    }

    #[test]
    fn label_flip_flips_weights() {
        let (xs, ys) = separable(2);
        let flipped: Vec<ClassLabel> = ys
            .iter()
            .map(|&y| if y == ClassLabel::Ps { ClassLabel::Ln } else { ClassLabel::Ps })
            .collect();
        let cfg = LinearConfig::default();
        let a = train_linear(&xs, &ys, &names(2), &cfg).unwrap();
        let b = train_linear(&xs, &flipped, &names(2), &cfg).unwrap();
        for (u, v) in a.weights.iter().zip(&b.weights) {
            assert_eq!(*u, -*v);
        }
        assert_eq!(a.bias, -b.bias);
    }

    #[test]
    fn constant_feature_keeps_zero_weight() {
        let (mut xs, ys) = separable(3);
        for x in &mut xs {
            x.push(7.0);
        }
        let m = train_linear(&xs, &ys, &names(3), &LinearConfig::default()).unwrap();
        assert_eq!(m.scale[2], 0.0);
        assert_eq!(m.weights[2], 0.0);
    }
}
