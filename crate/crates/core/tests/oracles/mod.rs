// Direct re-implementations used as references. Each one favours the
// plainest reading of the definition over speed.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use pinkslime_core::corpus::ClassLabel;
use pinkslime_core::models::HeadModel;
use pinkslime_core::rng::Rng;
use rand::Rng as _;

pub fn distinct(tokens: &[String]) -> usize {
    let mut sorted = tokens.to_vec();
    sorted.sort();
    sorted.dedup();
    sorted.len()
}

pub fn rttr(tokens: &[String]) -> f64 {
    distinct(tokens) as f64 / (tokens.len() as f64).sqrt()
}

pub fn cttr(tokens: &[String]) -> f64 {
    distinct(tokens) as f64 / (2.0 * tokens.len() as f64).sqrt()
}

// Factor count of one pass, recomputing each segment's TTR from scratch.
fn mtld_factors(tokens: &[String], threshold: f64) -> f64 {
    let mut factors = 0.0;
    let mut start = 0;
    let mut end = 0;
    while end < tokens.len() {
        end += 1;
        let seg = &tokens[start..end];
        let ttr = distinct(seg) as f64 / seg.len() as f64;
        if ttr < threshold {
            factors += 1.0;
            start = end;
        }
    }
    if start < tokens.len() {
        let seg = &tokens[start..];
        let ttr = distinct(seg) as f64 / seg.len() as f64;
        factors += (1.0 - ttr) / (1.0 - threshold);
    }
    factors
}

pub fn mtld(tokens: &[String], threshold: f64) -> f64 {
    let n = tokens.len() as f64;
    let score = |f: f64| if f == 0.0 { n } else { n / f };
    let rev: Vec<String> = tokens.iter().rev().cloned().collect();
    (score(mtld_factors(tokens, threshold)) + score(mtld_factors(&rev, threshold))) / 2.0
}

/// Tokens drawn from a small vocabulary so that repeats are common.
pub fn random_tokens(r: &mut Rng) -> Vec<String> {
    let n = r.random_range(1..400);
    let vocab = r.random_range(1..120);
    (0..n).map(|_| format!("w{}", r.random_range(0..vocab))).collect()
}

pub fn cosine(u: &[f32], v: &[f32]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum();
    let nu: f64 = u.iter().map(|a| f64::from(*a).powi(2)).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| f64::from(*a).powi(2)).sum::<f64>().sqrt();
    dot / (nu * nv)
}

/// Greedy scan against the full similarity matrix: a row is removed when any
/// earlier kept row reaches the threshold.
pub fn dedup_all_pairs(rows: &[Vec<f32>], threshold: f64) -> BTreeSet<usize> {
    let n = rows.len();
    let mut sim = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            sim[i][j] = cosine(&rows[i], &rows[j]);
        }
    }
    let mut kept: Vec<usize> = Vec::new();
    let mut removed = BTreeSet::new();
    for i in 0..n {
        if kept.iter().any(|&j| sim[i][j] >= threshold) {
            removed.insert(i);
        } else {
            kept.push(i);
        }
    }
    removed
}

/// Random unit-ish vectors with planted near-copies at cosine >= 0.8.
pub fn planted_corpus(r: &mut Rng, n: usize, d: usize) -> Vec<Vec<f32>> {
    let mut rows: Vec<Vec<f32>> = Vec::with_capacity(n);
    while rows.len() < n {
        if !rows.is_empty() && r.random_bool(0.3) {
            let base = rows[r.random_range(0..rows.len())].clone();
            let scale = r.random_range(0.0..0.25f32);
            let copy: Vec<f32> = base.iter().map(|x| x + scale * r.random_range(-1.0..1.0f32)).collect();
            rows.push(copy);
        } else {
            rows.push((0..d).map(|_| r.random_range(-1.0..1.0f32)).collect());
        }
    }
    rows
}

/// Core points are connected by union-find; clusters are numbered by their
/// lowest core index and a border point joins the lowest-numbered cluster
/// holding one of its core neighbours.
pub fn dbscan_naive(points: &[Vec<f64>], eps: f64, min_samples: usize) -> Vec<i64> {
    let n = points.len();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let near: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| dist(&points[i], &points[j]) <= eps).collect())
        .collect();
    let core: Vec<bool> = near.iter().map(|row| row.iter().filter(|&&b| b).count() >= min_samples).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in 0..n {
            if core[i] && core[j] && near[i][j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut number: BTreeMap<usize, i64> = BTreeMap::new();
    let mut labels = vec![-1i64; n];
    for i in 0..n {
        if core[i] {
            let root = find(&mut parent, i);
            let next = number.len() as i64;
            labels[i] = *number.entry(root).or_insert(next);
        }
    }
    for i in 0..n {
        if !core[i] {
            labels[i] = (0..n)
                .filter(|&j| core[j] && near[i][j])
                .map(|j| labels[j])
                .min()
                .unwrap_or(-1);
        }
    }
    labels
}

/// Same noise set and a bijection between cluster labels.
pub fn same_partition(a: &[i64], b: &[i64]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd: BTreeMap<i64, i64> = BTreeMap::new();
    let mut back: BTreeMap<i64, i64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if (x < 0) != (y < 0) {
            return false;
        }
        if x < 0 {
            continue;
        }
        if *fwd.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

pub fn blobs(r: &mut Rng, n: usize, dim: usize, centres: usize, spread: f64) -> Vec<Vec<f64>> {
    let cs: Vec<Vec<f64>> = (0..centres.max(1))
        .map(|_| (0..dim).map(|_| r.random_range(-10.0..10.0)).collect())
        .collect();
    (0..n)
        .map(|_| {
            let c = &cs[r.random_range(0..cs.len())];
            c.iter().map(|x| x + spread * r.random_range(-1.0..1.0)).collect()
        })
        .collect()
}

/// Central difference of the mean loss along every parameter.
pub fn finite_difference(model: &HeadModel, xs: &[Vec<f64>], ys: &[ClassLabel], h: f64) -> Vec<f64> {
    let base = model.parameters();
    let mut probe = model.clone();
    let mut grad = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_parameters(&p).unwrap();
        let up = probe.loss(xs, ys).unwrap();
        p[i] = base[i] - h;
        probe.set_parameters(&p).unwrap();
        let down = probe.loss(xs, ys).unwrap();
        grad.push((up - down) / (2.0 * h));
    }
    grad
}

/// Smallest |pre-activation| over both hidden layers, from the public weights.
pub fn kink_margin(model: &HeadModel, xs: &[Vec<f64>]) -> f64 {
    let layer = |w: &[f64], b: &[f64], x: &[f64]| -> Vec<f64> {
        b.iter()
            .enumerate()
            .map(|(o, bo)| bo + (0..x.len()).map(|i| w[o * x.len() + i] * x[i]).sum::<f64>())
            .collect()
    };
    let mut margin = f64::INFINITY;
    for x in xs {
        let z1 = layer(&model.weights[0], &model.biases[0], x);
        let a1: Vec<f64> = z1.iter().map(|v| v.max(0.0)).collect();
        let z2 = layer(&model.weights[1], &model.biases[1], &a1);
        for z in z1.iter().chain(&z2) {
            margin = margin.min(z.abs());
        }
    }
    margin
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-7 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// A random toy head with a random batch, kept away from ReLU kinks where the
/// gradient is undefined.
pub fn gradient_point(r: &mut Rng, sizes: [usize; 4]) -> (HeadModel, Vec<Vec<f64>>, Vec<ClassLabel>) {
    loop {
        let mut m = HeadModel::new(sizes, r.random()).unwrap();
        let p: Vec<f64> = m.parameters().iter().map(|w| w + r.random_range(-0.3..0.3)).collect();
        m.set_parameters(&p).unwrap();
        let batch = r.random_range(1..6);
        let xs: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..sizes[0]).map(|_| r.random_range(-2.0..2.0)).collect())
            .collect();
        let ys: Vec<ClassLabel> = (0..batch).map(|_| ClassLabel::from_index(r.random_range(0..2))).collect();
        if kink_margin(&m, &xs) > 1e-3 {
            return (m, xs, ys);
        }
    }
}

/// Leading eigenvectors of the covariance by power iteration with deflation.
pub fn power_pca(rows: &[Vec<f64>], k: usize, iters: usize) -> Vec<(f64, Vec<f64>)> {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for a in 0..d {
            for b in 0..d {
                cov[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]) / (n as f64 - 1.0);
            }
        }
    }
    let mut out = Vec::new();
    for c in 0..k {
        let mut v: Vec<f64> = (0..d).map(|j| 1.0 + ((j * 7 + c * 3) % 5) as f64).collect();
        let mut lambda = 0.0;
        for _ in 0..iters {
            let w: Vec<f64> = (0..d).map(|a| (0..d).map(|b| cov[a][b] * v[b]).sum()).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            lambda = norm;
            v = w.iter().map(|x| x / norm).collect();
        }
        for a in 0..d {
            for b in 0..d {
                cov[a][b] -= lambda * v[a] * v[b];
            }
        }
        out.push((lambda, v));
    }
    out
}
