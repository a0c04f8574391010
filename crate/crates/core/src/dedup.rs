//! Near-duplicate removal by cosine similarity over article embeddings.
//!
//! The reference algorithm is an exact greedy keep-first scan: articles are
//! visited in a fixed order and an article is dropped when it is at least
//! `threshold` similar to any article already kept. Random-hyperplane banding
//! ([`blocked_candidates`]) can restrict the comparisons for very large inputs.

use std::collections::{BTreeSet, HashMap};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::EmbeddingMatrix;
use crate::{rng, Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.8;

fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter().zip(v).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum()
}

fn norm(u: &[f32]) -> f64 {
    dot(u, u).sqrt()
}

fn cosine_with_norms(u: &[f32], v: &[f32], nu: f64, nv: f64) -> f64 {
    (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0)
}

pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(cosine_with_norms(u, v, nu, nv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanOrder {
    /// Row order of the matrix.
    #[default]
    Input,
    /// Lexicographic article id.
    Id,
}

/// Which pairs are compared during the scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DedupMode {
    #[default]
    Exact,
    Banded {
        bands: usize,
        rows_per_band: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub removed_id: String,
    pub kept_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateReport {
    pub threshold: f64,
    pub kept: Vec<String>,
    pub removed: Vec<Removal>,
}

impl DuplicateReport {
    pub fn removed_ids(&self) -> BTreeSet<&str> {
        self.removed.iter().map(|r| r.removed_id.as_str()).collect()
    }

    pub fn reduction(&self) -> f64 {
        let total = self.kept.len() + self.removed.len();
        if total == 0 {
            0.0
        } else {
            self.removed.len() as f64 / total as f64
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn deduplicate(emb: &EmbeddingMatrix, threshold: f64, order: ScanOrder) -> Result<DuplicateReport> {
    deduplicate_grouped(emb, threshold, order, None, DedupMode::Exact)
}

/// Deduplicates with articles compared only inside their group (e.g. per
/// label). `groups[i]` is the group of row `i`; `None` puts all rows together.
pub fn deduplicate_grouped(
    emb: &EmbeddingMatrix,
    threshold: f64,
    order: ScanOrder,
    groups: Option<&[usize]>,
    mode: DedupMode,
) -> Result<DuplicateReport> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold {threshold} outside (0, 1]"
        )));
    }
    let n = emb.n();
    if let Some(g) = groups {
        if g.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g.len(),
            });
        }
    }
    let norms: Vec<f64> = emb.rows().map(norm).collect();
    if let Some(i) = norms.iter().position(|&x| x == 0.0) {
        return Err(Error::ZeroNorm.for_article(&emb.ids()[i]));
    }

    let mut scan: Vec<usize> = (0..n).collect();
    if order == ScanOrder::Id {
        scan.sort_by(|&a, &b| emb.ids()[a].cmp(&emb.ids()[b]));
    }

    // Banded mode: restrict the comparisons to candidate neighbours.
    let neighbours: Option<Vec<BTreeSet<usize>>> = match mode {
        DedupMode::Exact => None,
        DedupMode::Banded {
            bands,
            rows_per_band,
            seed,
        } => {
            let mut adj = vec![BTreeSet::new(); n];
            for (a, b) in blocked_candidates(emb, bands, rows_per_band, seed)? {
                adj[a].insert(b);
                adj[b].insert(a);
            }
            Some(adj)
        }
    };

    let group_of = |i: usize| groups.map_or(0, |g| g[i]);
    let mut kept_by_group: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut is_kept = vec![false; n];
    let mut kept = Vec::new();
    let mut removed = Vec::new();

    for &i in &scan {
        let row = emb.row(i);
        let pool = kept_by_group.entry(group_of(i)).or_default();
        let sim_to = |&(pos, j): &(usize, usize)| (pos, j, cosine_with_norms(row, emb.row(j), norms[i], norms[j]));
        // Best kept partner: highest similarity, earliest kept on ties.
        let best = match &neighbours {
            None => pool
                .par_iter()
                .enumerate()
                .map(|(pos, &j)| sim_to(&(pos, j)))
                .reduce_with(pick_best),
            Some(adj) => {
                let cands: Vec<(usize, usize)> = pool
                    .iter()
                    .enumerate()
                    .filter(|(_, j)| adj[i].contains(j))
                    .map(|(p, &j)| (p, j))
                    .collect();
                cands.iter().map(sim_to).reduce(pick_best)
            }
        };
        match best {
            Some((_, j, s)) if s >= threshold => removed.push(Removal {
                removed_id: emb.ids()[i].clone(),
                kept_id: emb.ids()[j].clone(),
                similarity: s,
            }),
            _ => {
                pool.push(i);
                is_kept[i] = true;
                kept.push(emb.ids()[i].clone());
            }
        }
    }
    debug_assert_eq!(kept.len() + removed.len(), n);
    Ok(DuplicateReport {
        threshold,
        kept,
        removed,
    })
}

fn pick_best(a: (usize, usize, f64), b: (usize, usize, f64)) -> (usize, usize, f64) {
    if b.2 > a.2 || (b.2 == a.2 && b.0 < a.0) {
        b
    } else {
        a
    }
}

/// Candidate pairs `(i, j)` with `i < j` whose random-hyperplane signatures
/// agree on at least one band.
pub fn blocked_candidates(
    emb: &EmbeddingMatrix,
    bands: usize,
    rows_per_band: usize,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    if bands == 0 || rows_per_band == 0 {
        return Err(Error::InvalidParameter("bands and rows_per_band must be positive".into()));
    }
    if rows_per_band > 64 || bands * rows_per_band > 512 {
        return Err(Error::InvalidParameter(format!(
            "{bands} bands x {rows_per_band} rows exceeds 512 hyperplanes (max 64 per band)"
        )));
    }
    let d = emb.d();
    let mut r = rng::seeded(seed);
    let planes: Vec<f64> = (0..bands * rows_per_band * d)
        .map(|_| StandardNormal.sample(&mut r))
        .collect();

    let signatures: Vec<Vec<u64>> = emb
        .rows()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|row| {
            (0..bands)
                .map(|b| {
                    let mut key = 0u64;
                    for k in 0..rows_per_band {
                        let p = &planes[((b * rows_per_band) + k) * d..][..d];
                        let s: f64 = row.iter().zip(p).map(|(x, w)| f64::from(*x) * w).sum();
                        if s >= 0.0 {
                            key |= 1 << k;
                        }
                    }
                    key
                })
                .collect()
        })
        .collect();

    let mut pairs = BTreeSet::new();
    for b in 0..bands {
        let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
        for (i, sig) in signatures.iter().enumerate() {
            buckets.entry(sig[b]).or_default().push(i);
        }
        for members in buckets.values() {
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    pairs.insert((i.min(j), i.max(j)));
                }
            }
        }
    }
    Ok(pairs.into_iter().collect())
}
