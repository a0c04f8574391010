use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, Classifier};
use crate::corpus::ClassLabel;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub feature: String,
    /// Mean drop in PS-class F1 when the column is shuffled.
    pub mean: f64,
    pub std: f64,
}

/// Permutation importance on a held-out set. Repeat `r` of feature `j` is
/// shuffled with `rng::derive(seed, j·n_repeats + r)`.
pub fn permutation_importance<C: Classifier + ?Sized>(
    model: &C,
    xs: &[Vec<f64>],
    ys: &[ClassLabel],
    names: &[String],
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<Importance>> {
    if n_repeats == 0 {
        return Err(Error::InvalidParameter("n_repeats must be at least 1".into()));
    }
    let d = model.n_inputs();
    if names.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: names.len(),
        });
    }
    let base = evaluate(model, xs, ys)?.f1_ps;
    (0..d)
        .into_par_iter()
        .map(|j| {
            let drops = (0..n_repeats)
                .map(|r| {
                    let mut col: Vec<f64> = xs.iter().map(|x| x[j]).collect();
                    col.shuffle(&mut rng::seeded(rng::derive(seed, (j * n_repeats + r) as u64)));
                    let permuted: Vec<Vec<f64>> = xs
                        .iter()
                        .zip(&col)
                        .map(|(x, &v)| {
                            let mut x = x.clone();
                            x[j] = v;
                            x
                        })
                        .collect();
                    Ok(base - evaluate(model, &permuted, ys)?.f1_ps)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean = drops.iter().sum::<f64>() / n_repeats as f64;
            let var = drops.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n_repeats as f64;
            Ok(Importance {
                feature: names[j].clone(),
                mean,
                std: var.sqrt(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    struct Rule;
    impl Classifier for Rule {
        fn n_inputs(&self) -> usize {
            3
        }
        fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
            Ok(ClassLabel::from_index(usize::from(x[0] > 0.0)))
        }
    }

    struct Constant;
    impl Classifier for Constant {
        fn n_inputs(&self) -> usize {
            3
        }
        fn predict(&self, _: &[f64]) -> Result<ClassLabel> {
            Ok(ClassLabel::Ps)
        }
    }

    fn data() -> (Vec<Vec<f64>>, Vec<ClassLabel>, Vec<String>) {
        let mut r = rng::seeded(1);
        let xs: Vec<Vec<f64>> = (0..100).map(|_| vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), 5.0]).collect();
        let ys = xs.iter().map(|x| ClassLabel::from_index(usize::from(x[0] > 0.0))).collect();
        (xs, ys, vec!["a".into(), "b".into(), "c".into()])
    }

    #[test]
    fn rule_feature_dominates() {
        let (xs, ys, names) = data();
        let imp = permutation_importance(&Rule, &xs, &ys, &names, 20, 3).unwrap();
        assert!(imp[0].mean > imp[1].mean && imp[0].mean > imp[2].mean);
        assert_eq!(imp[1].mean, 0.0);
        assert_eq!(imp[2].mean, 0.0);
    }

    #[test]
    fn feature_blind_model_has_zero_importance() {
        let (xs, ys, names) = data();
        let imp = permutation_importance(&Constant, &xs, &ys, &names, 5, 3).unwrap();
        assert!(imp.iter().all(|i| i.mean == 0.0 && i.std == 0.0));
    }
}
