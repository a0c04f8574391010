//! Leakage-resistant train/test splits.
//!
//! Templated PS articles form dense micro-clusters in embedding space; a
//! random split would put near-copies on both sides. PS articles are therefore
//! split by whole DBSCAN clusters while LN articles are split at random.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::{self, EmbeddingMatrix, COORDS_MAGIC};
use crate::{rng, Error, Result};

pub const NOISE: i64 = -1;
pub const DEFAULT_MIN_SAMPLES: usize = 10;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Low-dimensional coordinates, one row per article.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedCoords {
    pub ids: Vec<String>,
    pub k: usize,
    pub coords: Vec<f64>,
}

impl ReducedCoords {
    pub fn new(ids: Vec<String>, k: usize, coords: Vec<f64>) -> Result<Self> {
        if k == 0 || coords.len() != ids.len() * k {
            return Err(Error::DimensionMismatch {
                expected: ids.len() * k,
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Format("non-finite coordinate".into()));
        }
        Ok(ReducedCoords { ids, k, coords })
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        Self::new(ids, k, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.k..(i + 1) * self.k]
    }

    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let ids = rows.iter().map(|&r| self.ids[r].clone()).collect();
        let coords = rows.iter().flat_map(|&r| self.row(r).to_vec()).collect();
        Self::new(ids, self.k, coords)
    }

    pub fn load(path: impl AsRef<Path>, ids_path: impl AsRef<Path>) -> Result<Self> {
        let (n, k, values) = matrix::read_matrix(path, COORDS_MAGIC)?;
        let ids = matrix::read_ids(ids_path)?;
        if ids.len() != n {
            return Err(Error::Format(format!("id file has {} rows, matrix has {n}", ids.len())));
        }
        Self::new(ids, k, values.into_iter().map(f64::from).collect())
    }

    pub fn save(&self, path: impl AsRef<Path>, ids_path: impl AsRef<Path>) -> Result<()> {
        let values: Vec<f32> = self.coords.iter().map(|&c| c as f32).collect();
        matrix::write_matrix(path, COORDS_MAGIC, self.n(), self.k, &values)?;
        matrix::write_ids(ids_path, &self.ids)
    }
}

/// Fitted principal axes.
#[derive(Debug, Clone)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// `k` unit-length axes of length `d`, by decreasing variance.
    pub components: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

impl Pca {
    /// Eigen-decomposition of the sample covariance. Each axis is signed so
    /// that its largest-magnitude loading is positive.
    pub fn fit(emb: &EmbeddingMatrix, k: usize) -> Result<Self> {
        let (n, d) = (emb.n(), emb.d());
        if k == 0 || k > n.min(d) {
            return Err(Error::InvalidParameter(format!("k = {k} must be in 1..={}", n.min(d))));
        }
        let mut mean = vec![0.0; d];
        for row in emb.rows() {
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += f64::from(x);
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let centered = DMatrix::from_fn(n, d, |i, j| f64::from(emb.row(i)[j]) - mean[j]);
        let denom = (n.max(2) - 1) as f64;

        let mut axes: Vec<(f64, Vec<f64>)> = if d <= 2 * n {
            let cov = centered.transpose() * &centered / denom;
            let eig = SymmetricEigen::new(cov);
            (0..d)
                .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().copied().collect()))
                .collect()
        } else {
            // Wide data: eigenvectors of the Gram matrix mapped back to feature space.
            let gram = &centered * centered.transpose() / denom;
            let eig = SymmetricEigen::new(gram);
            (0..n)
                .map(|i| {
                    let u = eig.eigenvectors.column(i);
                    let v = centered.transpose() * u;
                    let norm = v.norm();
                    let v: Vec<f64> = if norm > 1e-12 {
                        v.iter().map(|x| x / norm).collect()
                    } else {
                        vec![0.0; d]
                    };
                    (eig.eigenvalues[i], v)
                })
                .collect()
        };
        axes.sort_by(|a, b| b.0.total_cmp(&a.0));
        axes.truncate(k);
        let mut components = Vec::with_capacity(k);
        let mut variances = Vec::with_capacity(k);
        for (val, mut v) in axes {
            let lead = v
                .iter()
                .enumerate()
                .fold((0usize, 0.0f64), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc })
                .0;
            if v[lead] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            components.push(v);
            variances.push(val.max(0.0));
        }
        Ok(Pca {
            mean,
            components,
            variances,
        })
    }

    pub fn transform(&self, emb: &EmbeddingMatrix) -> Result<ReducedCoords> {
        if emb.d() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: emb.d(),
            });
        }
        let k = self.components.len();
        let mut coords = Vec::with_capacity(emb.n() * k);
        for row in emb.rows() {
            let c: Vec<f64> = row.iter().zip(&self.mean).map(|(&x, m)| f64::from(x) - m).collect();
            for axis in &self.components {
                coords.push(c.iter().zip(axis).map(|(a, b)| a * b).sum());
            }
        }
        ReducedCoords::new(emb.ids().to_vec(), k, coords)
    }
}

pub fn pca_reduce(emb: &EmbeddingMatrix, k: usize) -> Result<ReducedCoords> {
    let pca = Pca::fit(emb, k)?;
    let mut coords = pca.transform(emb)?;
    // Remove the residual column mean left by floating-point rounding.
    let n = coords.n() as f64;
    for j in 0..coords.k {
        let m: f64 = (0..coords.n()).map(|i| coords.coords[i * coords.k + j]).sum::<f64>() / n;
        for i in 0..coords.n() {
            coords.coords[i * coords.k + j] -= m;
        }
    }
    Ok(coords)
}

/// Cluster label per article, [`NOISE`] for unclustered points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub ids: Vec<String>,
    pub labels: Vec<i64>,
}

impl ClusterAssignment {
    pub fn n_clusters(&self) -> usize {
        self.labels.iter().filter(|&&l| l >= 0).collect::<BTreeSet<_>>().len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn clusters(&self) -> BTreeMap<i64, Vec<usize>> {
        let mut m: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.labels.iter().enumerate() {
            if l >= 0 {
                m.entry(l).or_default().push(i);
            }
        }
        m
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn neighbourhoods(coords: &ReducedCoords, eps: f64) -> Vec<Vec<usize>> {
    let eps2 = eps * eps;
    (0..coords.n())
        .into_par_iter()
        .map(|i| {
            let p = coords.row(i);
            (0..coords.n()).filter(|&j| dist2(p, coords.row(j)) <= eps2).collect()
        })
        .collect()
}

/// Density-based clustering with Euclidean distance. A point is core when at
/// least `min_samples` points (itself included) lie within `eps`. Points are
/// visited in input order, so cluster numbering and the ownership of border
/// points shared by two clusters are deterministic.
pub fn dbscan(coords: &ReducedCoords, eps: f64, min_samples: usize) -> Result<ClusterAssignment> {
    if !(eps > 0.0) || min_samples == 0 {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps}, min_samples = {min_samples}"
        )));
    }
    const UNVISITED: i64 = i64::MIN;
    let n = coords.n();
    let nbrs = neighbourhoods(coords, eps);
    let mut labels = vec![UNVISITED; n];
    let mut next = 0i64;
    for i in 0..n {
        if labels[i] != UNVISITED {
            continue;
        }
        if nbrs[i].len() < min_samples {
            labels[i] = NOISE;
            continue;
        }
        labels[i] = next;
        let mut queue: VecDeque<usize> = nbrs[i].iter().copied().collect();
        while let Some(j) = queue.pop_front() {
            if labels[j] == NOISE {
                labels[j] = next;
            }
            if labels[j] != UNVISITED {
                continue;
            }
            labels[j] = next;
            if nbrs[j].len() >= min_samples {
                queue.extend(nbrs[j].iter().copied());
            }
        }
        next += 1;
    }
    Ok(ClusterAssignment {
        ids: coords.ids.clone(),
        labels,
    })
}

/// Median over points of the distance to the `min_samples`-th nearest other
/// point.
pub fn suggest_eps(coords: &ReducedCoords, min_samples: usize) -> Result<f64> {
    let n = coords.n();
    if min_samples == 0 || n <= min_samples {
        return Err(Error::InsufficientData(format!(
            "{n} points cannot give a {min_samples}-th neighbour distance"
        )));
    }
    let mut kdist: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| dist2(coords.row(i), coords.row(j)).sqrt())
                .collect();
            d.select_nth_unstable_by(min_samples - 1, f64::total_cmp);
            d[min_samples - 1]
        })
        .collect();
    kdist.sort_by(f64::total_cmp);
    Ok(if n % 2 == 1 {
        kdist[n / 2]
    } else {
        (kdist[n / 2 - 1] + kdist[n / 2]) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub repetition_index: usize,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    #[serde(default)]
    pub ps_train_fraction: f64,
    #[serde(default)]
    pub ln_train_fraction: f64,
}

impl SplitPlan {
    pub fn train_set(&self) -> HashSet<&str> {
        self.train_ids.iter().map(String::as_str).collect()
    }

    pub fn test_set(&self) -> HashSet<&str> {
        self.test_ids.iter().map(String::as_str).collect()
    }

    /// Cluster labels with members on both sides.
    pub fn straddling(&self, clusters: &ClusterAssignment) -> Vec<i64> {
        let train = self.train_set();
        let mut sides: BTreeMap<i64, (bool, bool)> = BTreeMap::new();
        for (id, &l) in clusters.ids.iter().zip(&clusters.labels) {
            if l < 0 {
                continue;
            }
            let e = sides.entry(l).or_default();
            if train.contains(id.as_str()) {
                e.0 = true;
            } else {
                e.1 = true;
            }
        }
        sides.into_iter().filter(|(_, (a, b))| *a && *b).map(|(l, _)| l).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let plan: SplitPlan = serde_json::from_str(&s)?;
        let train = plan.train_set();
        if let Some(id) = plan.test_ids.iter().find(|id| train.contains(id.as_str())) {
            return Err(Error::Leakage(format!("{id:?} is on both sides of the split")));
        }
        Ok(plan)
    }
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub plan: SplitPlan,
    pub warnings: Vec<String>,
}

/// Whole-cluster split of PS articles and random split of LN articles.
///
/// Clusters are shuffled by `seed` and moved to train until the clustered
/// train count reaches `train_fraction` of the clustered PS articles. Noise
/// points go to train by independent draws at `train_fraction`.
pub fn cluster_aware_split(
    ps_clusters: &ClusterAssignment,
    ln_ids: &[String],
    train_fraction: f64,
    seed: u64,
    repetition_index: usize,
) -> Result<SplitOutcome> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut r = rng::seeded(seed);
    let mut warnings = Vec::new();
    let n_ps = ps_clusters.ids.len();
    let clusters = ps_clusters.clusters();
    let clustered: usize = clusters.values().map(Vec::len).sum();
    let mut in_train = vec![false; n_ps];

    let mut order: Vec<i64> = clusters.keys().copied().collect();
    order.shuffle(&mut r);
    let giant = clusters
        .iter()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| b.0.cmp(a.0)))
        .filter(|(_, m)| m.len() as f64 > train_fraction * n_ps as f64);
    if let Some((&label, members)) = giant {
        warnings.push(format!(
            "cluster {label} holds {} of {n_ps} PS articles, above the train fraction; it alone forms the PS train side",
            members.len()
        ));
        for &i in members {
            in_train[i] = true;
        }
    } else {
        let target = train_fraction * clustered as f64;
        let mut count = 0usize;
        for l in &order {
            if count as f64 >= target {
                break;
            }
            for &i in &clusters[l] {
                in_train[i] = true;
            }
            count += clusters[l].len();
        }
        for (i, &l) in ps_clusters.labels.iter().enumerate() {
            if l == NOISE {
                in_train[i] = r.random::<f64>() < train_fraction;
            }
        }
    }

    let mut ln_order: Vec<usize> = (0..ln_ids.len()).collect();
    ln_order.shuffle(&mut r);
    let n_ln_train = (train_fraction * ln_ids.len() as f64).round() as usize;
    let mut ln_train = vec![false; ln_ids.len()];
    for &i in &ln_order[..n_ln_train] {
        ln_train[i] = true;
    }

    let mut train_ids = Vec::new();
    let mut test_ids = Vec::new();
    for (id, &t) in ps_clusters.ids.iter().zip(&in_train) {
        if t { &mut train_ids } else { &mut test_ids }.push(id.clone());
    }
    for (id, &t) in ln_ids.iter().zip(&ln_train) {
        if t { &mut train_ids } else { &mut test_ids }.push(id.clone());
    }
    let frac = |k: usize, n: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    Ok(SplitOutcome {
        plan: SplitPlan {
            seed,
            repetition_index,
            train_ids,
            test_ids,
            ps_train_fraction: frac(in_train.iter().filter(|&&t| t).count(), n_ps),
            ln_train_fraction: frac(n_ln_train, ln_ids.len()),
        },
        warnings,
    })
}

/// `repetitions` splits with seeds `base_seed + r`.
pub fn repeated_splits(
    ps_clusters: &ClusterAssignment,
    ln_ids: &[String],
    train_fraction: f64,
    base_seed: u64,
    repetitions: usize,
) -> Result<Vec<SplitOutcome>> {
    (0..repetitions)
        .map(|r| cluster_aware_split(ps_clusters, ln_ids, train_fraction, base_seed + r as u64, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn coords(points: &[Vec<f64>]) -> ReducedCoords {
        let ids = (0..points.len()).map(|i| format!("p{i:04}")).collect();
        ReducedCoords::from_rows(ids, points).unwrap()
    }

    fn emb_from(points: &[Vec<f64>]) -> EmbeddingMatrix {
        let ids = (0..points.len()).map(|i| format!("p{i}")).collect();
        let rows: Vec<Vec<f32>> = points.iter().map(|r| r.iter().map(|&x| x as f32).collect()).collect();
        EmbeddingMatrix::from_rows(ids, &rows).unwrap()
    }

    #[test]
    fn pca_degenerate_axis() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 3.0]).collect();
        let pca = Pca::fit(&emb_from(&pts), 2).unwrap();
        assert!((pca.components[0][0] - 1.0).abs() < 1e-9);
        assert!(pca.variances[1].abs() < 1e-9);
        let rc = pca_reduce(&emb_from(&pts), 2).unwrap();
        for i in 0..10 {
            assert!(rc.row(i)[1].abs() < 1e-6);
        }
    }

    #[test]
    fn pca_full_rank_is_rotation() {
        let mut r = rng::seeded(4);
        let pts: Vec<Vec<f64>> = (0..30).map(|_| (0..4).map(|_| r.random::<f64>()).collect()).collect();
        let emb = emb_from(&pts);
        let pca = Pca::fit(&emb, 4).unwrap();
        let rc = pca.transform(&emb).unwrap();
        for i in 0..30 {
            let mut rec = pca.mean.clone();
            for (c, axis) in pca.components.iter().enumerate() {
                for j in 0..4 {
                    rec[j] += rc.row(i)[c] * axis[j];
                }
            }
            for j in 0..4 {
                assert!((rec[j] - f64::from(emb.row(i)[j])).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn pca_rejects_bad_k() {
        let emb = emb_from(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(Pca::fit(&emb, 0).is_err());
        assert!(Pca::fit(&emb, 3).is_err());
    }

    #[test]
    fn pca_wide_matrix_uses_gram_route() {
        let mut r = rng::seeded(8);
        let pts: Vec<Vec<f64>> = (0..6).map(|_| (0..20).map(|_| r.random::<f64>()).collect()).collect();
        let rc = pca_reduce(&emb_from(&pts), 3).unwrap();
        for j in 0..3 {
            let m: f64 = (0..6).map(|i| rc.row(i)[j]).sum::<f64>() / 6.0;
            assert!(m.abs() < 1e-9);
        }
    }

    fn blob(center: (f64, f64), n: usize, r: &mut rng::Rng) -> Vec<Vec<f64>> {
        let g = Normal::new(0.0, 0.5).unwrap();
        (0..n).map(|_| vec![center.0 + g.sample(r), center.1 + g.sample(r)]).collect()
    }

    #[test]
    fn two_blobs() {
        let mut r = rng::seeded(1);
        let mut pts = blob((0.0, 0.0), 20, &mut r);
        pts.extend(blob((100.0, 100.0), 20, &mut r));
        let a = dbscan(&coords(&pts), 5.0, 10).unwrap();
        assert_eq!(a.n_clusters(), 2);
        assert_eq!(a.noise_count(), 0);
        assert!(a.labels[..20].iter().all(|&l| l == a.labels[0]));
    }

    #[test]
    fn isolated_points_are_noise() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 100.0, 0.0]).collect();
        let a = dbscan(&coords(&pts), 1.0, 10).unwrap();
        assert!(a.labels.iter().all(|&l| l == NOISE));
        let a = dbscan(&coords(&pts), 1.0, 1).unwrap();
        assert_eq!(a.noise_count(), 0);
        assert_eq!(a.n_clusters(), 5);
    }

    #[test]
    fn eps_suggestion() {
        let line = coords(&[vec![0.0], vec![1.0], vec![2.0]]);
        assert_eq!(suggest_eps(&line, 2).unwrap(), 2.0);
        let line4 = coords(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        assert_eq!(suggest_eps(&line4, 2).unwrap(), 1.5);
        let dup = coords(&vec![vec![1.0, 1.0]; 6]);
        assert_eq!(suggest_eps(&dup, 2).unwrap(), 0.0);
        assert!(suggest_eps(&line, 3).is_err());
        let mut r = rng::seeded(3);
        let pts: Vec<Vec<f64>> = (0..30).map(|_| vec![r.random(), r.random()]).collect();
        assert!(suggest_eps(&coords(&pts), 5).unwrap() > 0.0);
    }

    fn assignment(sizes: &[(i64, usize)]) -> ClusterAssignment {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        for &(l, n) in sizes {
            for i in 0..n {
                ids.push(format!("c{l}_{i}"));
                labels.push(l);
            }
        }
        ClusterAssignment { ids, labels }
    }

    #[test]
    fn whole_clusters_stay_together() {
        let ps = assignment(&[(0, 80), (1, 20)]);
        for seed in 0..10 {
            let out = cluster_aware_split(&ps, &[], 0.8, seed, 0).unwrap();
            assert!(out.plan.straddling(&ps).is_empty());
        }
    }

    #[test]
    fn all_noise_is_random_split() {
        let ps = assignment(&[(NOISE, 1000)]);
        let ln: Vec<String> = (0..100).map(|i| format!("ln{i}")).collect();
        let out = cluster_aware_split(&ps, &ln, 0.8, 5, 0).unwrap();
        assert!((out.plan.ps_train_fraction - 0.8).abs() < 0.05);
        assert_eq!(out.plan.ln_train_fraction, 0.8);
        assert_eq!(out.plan.train_ids.len() + out.plan.test_ids.len(), 1100);
    }

    #[test]
    fn giant_cluster_warns() {
        let ps = assignment(&[(0, 95), (1, 5)]);
        let out = cluster_aware_split(&ps, &[], 0.8, 1, 0).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.plan.train_ids.len(), 95);
    }

    #[test]
    fn three_seeds_three_plans() {
        let ps = assignment(&[(0, 10), (1, 10), (2, 10), (3, 10), (4, 10), (NOISE, 10)]);
        let ln: Vec<String> = (0..50).map(|i| format!("ln{i}")).collect();
        let plans = repeated_splits(&ps, &ln, 0.8, 11, 3).unwrap();
        assert_eq!(plans.iter().map(|p| p.plan.repetition_index).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_ne!(plans[0].plan, plans[1].plan);
        assert_ne!(plans[1].plan, plans[2].plan);
        for p in &plans {
            assert!(p.plan.straddling(&ps).is_empty());
            let train = p.plan.train_set();
            assert!(p.plan.test_ids.iter().all(|t| !train.contains(t.as_str())));
        }
    }

    #[test]
    fn plan_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ps = assignment(&[(0, 5), (1, 5)]);
        let plan = cluster_aware_split(&ps, &["x".into()], 0.5, 2, 0).unwrap().plan;
        let p = dir.path().join("plan.json");
        plan.save(&p).unwrap();
        assert_eq!(SplitPlan::load(&p).unwrap(), plan);
    }

    proptest::proptest! {
        #[test]
        fn dbscan_translation_invariant(pts in proptest::collection::vec((0i32..40, 0i32..40), 1..60),
                                        dx in -50i32..50, dy in -50i32..50) {
            let a: Vec<Vec<f64>> = pts.iter().map(|&(x, y)| vec![x as f64 * 0.5, y as f64 * 0.5]).collect();
            let b: Vec<Vec<f64>> = a.iter().map(|p| vec![p[0] + dx as f64, p[1] + dy as f64]).collect();
            let la = dbscan(&coords(&a), 1.6, 3).unwrap();
            let lb = dbscan(&coords(&b), 1.6, 3).unwrap();
            proptest::prop_assert_eq!(la.labels, lb.labels);
        }

        #[test]
        fn pca_columns_centered(seed in 0u64..500) {
            let mut r = rng::seeded(seed);
            let pts: Vec<Vec<f64>> = (0..12).map(|_| (0..5).map(|_| r.random::<f64>() * 10.0).collect()).collect();
            let rc = pca_reduce(&emb_from(&pts), 3).unwrap();
            for j in 0..3 {
                let m: f64 = (0..12).map(|i| rc.row(i)[j]).sum::<f64>() / 12.0;
                proptest::prop_assert!(m.abs() <= 1e-9);
            }
        }
    }
}
