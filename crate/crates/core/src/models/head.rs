use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{check_row, check_training_set, Classifier};
use crate::corpus::ClassLabel;
use crate::{rng, Error, Result};

pub const HEAD_MAGIC: &[u8; 8] = b"PSHEAD01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 30,
            batch_size: 32,
            seed: 0,
            l2: 0.0,
        }
    }
}

/// Fully connected `d_in → h1 → h2 → 2` network with ReLU hidden layers and
/// a softmax output. Weights are row-major `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadModel {
    pub sizes: [usize; 4],
    pub weights: [Vec<f64>; 3],
    pub biases: [Vec<f64>; 3],
}

#[derive(Serialize, Deserialize)]
struct HeaderJson {
    version: u32,
    sizes: [usize; 4],
    n_params: usize,
    dtype: String,
}

struct Trace {
    /// Layer inputs a0, a1, a2 and pre-activations z1, z2, z3.
    a: [Vec<f64>; 3],
    z: [Vec<f64>; 3],
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(o, bo)| bo + w[o * x.len()..(o + 1) * x.len()].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

fn relu(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| v.max(0.0)).collect()
}

/// Log-softmax of two logits.
fn log_softmax(z: &[f64]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    [z[0] - lse, z[1] - lse]
}

impl HeadModel {
    /// He-initialised weights, zero biases.
    pub fn new(sizes: [usize; 4], seed: u64) -> Result<Self> {
        let mut m = Self::zeros(sizes)?;
        let mut r = rng::seeded(seed);
        for l in 0..3 {
            let std = (2.0 / sizes[l] as f64).sqrt();
            let g = Normal::new(0.0, std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            m.weights[l].iter_mut().for_each(|w| *w = g.sample(&mut r));
        }
        Ok(m)
    }

    pub fn zeros(sizes: [usize; 4]) -> Result<Self> {
        if sizes.iter().any(|&s| s == 0) || sizes[3] != 2 {
            return Err(Error::InvalidParameter(format!("layer sizes {sizes:?}")));
        }
        let w = |l: usize| vec![0.0; sizes[l] * sizes[l + 1]];
        let b = |l: usize| vec![0.0; sizes[l + 1]];
        Ok(HeadModel {
            sizes,
            weights: [w(0), w(1), w(2)],
            biases: [b(0), b(1), b(2)],
        })
    }

    pub fn n_params(&self) -> usize {
        (0..3).map(|l| self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1]).sum()
    }

    /// Flattened as W1, b1, W2, b2, W3, b3.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for l in 0..3 {
            p.extend_from_slice(&self.weights[l]);
            p.extend_from_slice(&self.biases[l]);
        }
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                got: p.len(),
            });
        }
        let mut at = 0;
        for l in 0..3 {
            let nw = self.weights[l].len();
            self.weights[l].copy_from_slice(&p[at..at + nw]);
            at += nw;
            let nb = self.biases[l].len();
            self.biases[l].copy_from_slice(&p[at..at + nb]);
            at += nb;
        }
        Ok(())
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let z1 = affine(&self.weights[0], &self.biases[0], x);
        let a1 = relu(&z1);
        let z2 = affine(&self.weights[1], &self.biases[1], &a1);
        let a2 = relu(&z2);
        let z3 = affine(&self.weights[2], &self.biases[2], &a2);
        Trace {
            a: [x.to_vec(), a1, a2],
            z: [z1, z2, z3],
        }
    }

    /// Class probabilities `[p(LN), p(PS)]`.
    pub fn forward(&self, x: &[f64]) -> Result<[f64; 2]> {
        check_row(x, self.sizes[0])?;
        let ls = log_softmax(&self.trace(x).z[2]);
        Ok([ls[0].exp(), ls[1].exp()])
    }

    /// Mean cross-entropy over the batch.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[ClassLabel]) -> Result<f64> {
        self.check_batch(xs, ys)?;
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| -log_softmax(&self.trace(x).z[2])[y.index()])
            .sum();
        Ok(total / xs.len() as f64)
    }

    fn check_batch(&self, xs: &[Vec<f64>], ys: &[ClassLabel]) -> Result<()> {
        if xs.is_empty() {
            return Err(Error::EmptyInput("batch".into()));
        }
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        xs.iter().try_for_each(|x| check_row(x, self.sizes[0]))
    }

    /// Mean cross-entropy and its gradient, flattened like [`Self::parameters`].
    pub fn loss_and_gradient(&self, xs: &[Vec<f64>], ys: &[ClassLabel]) -> Result<(f64, Vec<f64>)> {
        self.check_batch(xs, ys)?;
        let n = xs.len() as f64;
        let mut gw: [Vec<f64>; 3] = self.weights.clone().map(|w| vec![0.0; w.len()]);
        let mut gb: [Vec<f64>; 3] = self.biases.clone().map(|b| vec![0.0; b.len()]);
        let mut loss = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            let t = self.trace(x);
            let ls = log_softmax(&t.z[2]);
            loss -= ls[y.index()];
            let mut delta: Vec<f64> = (0..2)
                .map(|k| (ls[k].exp() - if k == y.index() { 1.0 } else { 0.0 }) / n)
                .collect();
            for l in (0..3).rev() {
                let input = &t.a[l];
                let n_in = input.len();
                for (o, d) in delta.iter().enumerate() {
                    gb[l][o] += d;
                    for (g, a) in gw[l][o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                if l > 0 {
                    let mut back = vec![0.0; n_in];
                    for (o, d) in delta.iter().enumerate() {
                        for (bk, w) in back.iter_mut().zip(&self.weights[l][o * n_in..(o + 1) * n_in]) {
                            *bk += d * w;
                        }
                    }
                    for (bk, z) in back.iter_mut().zip(&t.z[l - 1]) {
                        if *z <= 0.0 {
                            *bk = 0.0;
                        }
                    }
                    delta = back;
                }
            }
        }
        let mut g = Vec::with_capacity(self.n_params());
        for l in 0..3 {
            g.extend_from_slice(&gw[l]);
            g.extend_from_slice(&gb[l]);
        }
        Ok((loss / n, g))
    }

    /// One gradient-descent step `θ ← θ − η·∇L`; returns the loss before the
    /// update.
    pub fn train_step(&mut self, xs: &[Vec<f64>], ys: &[ClassLabel], lr: f64) -> Result<f64> {
        if !(lr >= 0.0) {
            return Err(Error::InvalidParameter(format!("learning rate {lr}")));
        }
        let (loss, g) = self.loss_and_gradient(xs, ys)?;
        if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                context: format!("loss {loss} on a batch of {}", xs.len()),
            });
        }
        if lr > 0.0 {
            let p: Vec<f64> = self.parameters().iter().zip(&g).map(|(p, g)| p - lr * g).collect();
            self.set_parameters(&p)?;
        }
        Ok(loss)
    }

    /// Seeded mini-batch epochs over the given rows.
    pub fn fit_epochs(&mut self, xs: &[Vec<f64>], ys: &[ClassLabel], lr: f64, epochs: usize, batch_size: usize, seed: u64) -> Result<()> {
        if batch_size == 0 {
            return Err(Error::InvalidParameter("batch size 0".into()));
        }
        let mut r = rng::seeded(seed);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        for _ in 0..epochs {
            order.shuffle(&mut r);
            for chunk in order.chunks(batch_size) {
                let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| xs[i].clone()).collect();
                let by: Vec<ClassLabel> = chunk.iter().map(|&i| ys[i]).collect();
                self.train_step(&bx, &by, lr)?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&HeaderJson {
            version: 1,
            sizes: self.sizes,
            n_params: self.n_params(),
            dtype: "f64le".into(),
        })?;
        let mut out = Vec::with_capacity(12 + header.len() + 8 * self.n_params());
        out.extend_from_slice(HEAD_MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for p in self.parameters() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("head model: {m}"));
        if bytes.len() < 12 || &bytes[..8] != HEAD_MAGIC {
            return Err(bad("bad magic"));
        }
        let hlen = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let body = bytes.get(12..12 + hlen).ok_or_else(|| bad("truncated header"))?;
        let header: HeaderJson = serde_json::from_slice(body)?;
        if header.version != 1 || header.dtype != "f64le" {
            return Err(bad("unsupported version"));
        }
        let mut m = Self::zeros(header.sizes)?;
        if header.n_params != m.n_params() {
            return Err(bad("parameter count does not match layer sizes"));
        }
        let payload = &bytes[12 + hlen..];
        if payload.len() != 8 * m.n_params() {
            return Err(bad("truncated payload"));
        }
        let p: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if p.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite parameter"));
        }
        m.set_parameters(&p)?;
        Ok(m)
    }
}

impl Classifier for HeadModel {
    fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        let p = self.forward(x)?;
        Ok(if p[1] > p[0] { ClassLabel::Ps } else { ClassLabel::Ln })
    }
}

/// Trains a fresh head with `hidden` layer widths.
pub fn train_head(xs: &[Vec<f64>], ys: &[ClassLabel], hidden: [usize; 2], cfg: &TrainConfig) -> Result<HeadModel> {
    let d = check_training_set(xs, ys)?;
    if !(cfg.learning_rate > 0.0) || cfg.epochs == 0 {
        return Err(Error::InvalidParameter(format!("{cfg:?}")));
    }
    let mut m = HeadModel::new([d, hidden[0], hidden[1], 2], cfg.seed)?;
    m.fit_epochs(xs, ys, cfg.learning_rate, cfg.epochs, cfg.batch_size, rng::mix(cfg.seed))?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn zero_model_is_uniform() {
        let m = HeadModel::zeros([3, 4, 4, 2]).unwrap();
        assert_eq!(m.forward(&[1.0, -2.0, 3.0]).unwrap(), [0.5, 0.5]);
        assert!(m.forward(&[1.0]).is_err());
    }

    #[test]
    fn hand_computed_2_2_2_2() {
        let mut m = HeadModel::zeros([2, 2, 2, 2]).unwrap();
        m.weights = [vec![1.0, -1.0, 0.5, 2.0], vec![1.0, 0.0, -1.0, 1.0], vec![2.0, 0.0, 0.0, 1.0]];
        m.biases = [vec![0.0, -1.0], vec![0.5, 0.0], vec![0.0, 0.25]];
        // x = (1, 2): z1 = (-1, 3.5), a1 = (0, 3.5)
        // z2 = (0.5, 3.5), a2 = (0.5, 3.5); z3 = (1.0, 3.75)
        let p = m.forward(&[1.0, 2.0]).unwrap();
        let e = 1.0 / (1.0 + (2.75f64).exp());
        assert!((p[0] - e).abs() < 1e-12);
        assert!((p[1] - (1.0 - e)).abs() < 1e-12);
    }

    #[test]
    fn zero_rate_leaves_parameters() {
        let mut m = HeadModel::new([4, 5, 3, 2], 7).unwrap();
        let before = m.parameters();
        m.train_step(&[vec![1.0, 0.0, 2.0, -1.0]], &[ClassLabel::Ps], 0.0).unwrap();
        assert_eq!(m.parameters(), before);
    }

    #[test]
    fn small_steps_do_not_increase_loss() {
        let mut r = rng::seeded(2);
        let xs: Vec<Vec<f64>> = (0..16).map(|_| (0..6).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<ClassLabel> = xs.iter().map(|x| ClassLabel::from_index(usize::from(x[0] + x[1] > 0.0))).collect();
        let mut m = HeadModel::new([6, 8, 5, 2], 3).unwrap();
        let mut last = f64::INFINITY;
        for _ in 0..50 {
            let l = m.train_step(&xs, &ys, 1e-3).unwrap();
            assert!(l <= last + 1e-12);
            last = l;
        }
    }

    #[test]
    fn divergence_is_an_error() {
        let mut m = HeadModel::zeros([1, 1, 1, 2]).unwrap();
        assert!(matches!(
            m.train_step(&[vec![f64::NAN]], &[ClassLabel::Ps], 0.1),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn bytes_round_trip_exactly() {
        let m = HeadModel::new([5, 7, 3, 2], 11).unwrap();
        let b = m.to_bytes().unwrap();
        assert_eq!(HeadModel::from_bytes(&b).unwrap(), m);
        assert!(HeadModel::from_bytes(&b[..b.len() - 1]).is_err());
    }

    #[test]
    fn learns_a_linear_rule() {
        let mut r = rng::seeded(4);
        let xs: Vec<Vec<f64>> = (0..200).map(|_| (0..4).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<ClassLabel> = xs.iter().map(|x| ClassLabel::from_index(usize::from(x[2] > 0.1))).collect();
        let cfg = TrainConfig { learning_rate: 0.1, epochs: 60, batch_size: 16, seed: 1, l2: 0.0 };
        let m = train_head(&xs, &ys, [16, 8], &cfg).unwrap();
        let acc = crate::models::evaluate(&m, &xs, &ys).unwrap().accuracy;
        assert!(acc > 0.95, "{acc}");
    }
}
