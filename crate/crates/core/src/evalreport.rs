//! Significance of PS/LN feature contrasts, external-model consensus, and
//! report files.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conllu::AnnotatedDocument;
use crate::corpus::ClassLabel;
use crate::features::{
    adj_adv_per_1000, format_g9, pos_trigrams, rttr, sentence_count, simple_sentence_ratio, unique_noun_phrases,
    FeatureTable, MeanTable,
};
use crate::models::Metrics;
use crate::{rng, Error, Result};

pub const DEFAULT_PERMUTATIONS: usize = 10_000;
const CHUNK: usize = 500;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Orders the two samples canonically so the test is exactly symmetric.
fn canonical<'a>(a: &'a [f64], b: &'a [f64]) -> (Vec<f64>, Vec<f64>) {
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let (a, b) = (sorted(a), sorted(b));
    let key = |v: &Vec<f64>| (v.len(), v.clone());
    let less = {
        let (ka, kb) = (key(&a), key(&b));
        ka.0.cmp(&kb.0)
            .then_with(|| ka.1.iter().zip(&kb.1).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal))
            .is_le()
    };
    if less {
        (a, b)
    } else {
        (b, a)
    }
}

/// Two-sided permutation test on the difference of means:
/// `p = (1 + #{|Δ_perm| ≥ |Δ_obs|}) / (n + 1)`. Permutations run in chunks
/// with seeds derived from `seed`, so the result does not depend on the
/// thread count.
pub fn permutation_test(a: &[f64], b: &[f64], n: usize, seed: u64) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "permutation test needs two samples of size ≥ 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample value".into()));
    }
    let (a, b) = canonical(a, b);
    let observed = (mean(&a) - mean(&b)).abs();
    let scale = a.iter().chain(&b).fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale.max(1.0);
    let pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
    let na = a.len();
    let chunks = n.div_ceil(CHUNK);
    let count: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::seeded(rng::derive(seed, c as u64));
            let mut p = pooled.clone();
            let reps = CHUNK.min(n - c * CHUNK);
            (0..reps)
                .filter(|_| {
                    p.shuffle(&mut r);
                    (mean(&p[..na]) - mean(&p[na..])).abs() >= observed - tol
                })
                .count()
        })
        .sum();
    Ok((1 + count) as f64 / (n + 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub feature: String,
    pub mean_ps: f64,
    pub mean_ln: f64,
    pub p_value: f64,
    pub n_permutations: usize,
    pub seed: u64,
}

pub fn compare(feature: &str, ps: &[f64], ln: &[f64], n: usize, seed: u64) -> Result<GroupComparison> {
    let seed = rng::derive_str(seed, feature);
    Ok(GroupComparison {
        feature: feature.to_string(),
        mean_ps: mean(ps),
        mean_ln: mean(ln),
        p_value: permutation_test(ps, ln, n, seed)?,
        n_permutations: n,
        seed,
    })
}

/// One comparison per named column of a feature table, split by label.
pub fn compare_table(table: &FeatureTable, features: &[String], n: usize, seed: u64) -> Result<Vec<GroupComparison>> {
    features
        .iter()
        .map(|f| {
            let col = table
                .column(f)
                .ok_or_else(|| Error::Mismatch(format!("no feature column {f:?}")))?;
            let (mut ps, mut ln) = (Vec::new(), Vec::new());
            for (v, l) in col.into_iter().zip(&table.labels) {
                match l {
                    ClassLabel::Ps => ps.push(v),
                    ClassLabel::Ln => ln.push(v),
                }
            }
            compare(f, &ps, &ln, n, seed)
        })
        .collect()
}

/// The six-panel contrast: sentence count, simple-sentence ratio, adjective
/// rate, RTTR, POS-trigram concentration and unique noun phrases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    pub rows: Vec<GroupComparison>,
    /// The five most probable POS trigrams per class (mean per-article probability).
    pub top_trigrams: BTreeMap<String, Vec<(String, f64)>>,
}

pub const CONTRAST_ROWS: [&str; 6] = [
    "sentence_count",
    "simple_sentence_ratio",
    "adj_per_1000",
    "rttr",
    "top5_ps_trigram_mass",
    "unique_noun_phrases",
];

pub fn contrast_report(docs: &[(&AnnotatedDocument, ClassLabel)], n: usize, seed: u64) -> Result<ContrastReport> {
    let mut tables: [MeanTable; 2] = Default::default();
    let trigram_tables: Vec<_> = docs.iter().map(|(d, _)| pos_trigrams(d)).collect();
    for (t, (_, l)) in trigram_tables.iter().zip(docs) {
        tables[l.index()].add(t);
    }
    let top_ps: Vec<String> = tables[ClassLabel::Ps.index()].top(5).into_iter().map(|(k, _)| k).collect();

    let values: Vec<[f64; 6]> = docs
        .par_iter()
        .zip(&trigram_tables)
        .map(|((d, _), tri)| {
            Ok([
                sentence_count(d) as f64,
                simple_sentence_ratio(d),
                adj_adv_per_1000(d).0,
                rttr(&d.word_forms()).map_err(|e| e.for_article(&d.article_id))?,
                top_ps.iter().map(|k| tri.prob(k)).sum(),
                unique_noun_phrases(d) as f64,
            ])
        })
        .collect::<Result<_>>()?;
    let rows = CONTRAST_ROWS
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let pick = |class: ClassLabel| -> Vec<f64> {
                values.iter().zip(docs).filter(|(_, (_, l))| *l == class).map(|(v, _)| v[j]).collect()
            };
            compare(name, &pick(ClassLabel::Ps), &pick(ClassLabel::Ln), n, seed)
        })
        .collect::<Result<_>>()?;
    let top_trigrams = [ClassLabel::Ps, ClassLabel::Ln]
        .into_iter()
        .map(|c| (c.as_str().to_string(), tables[c.index()].top(5)))
        .collect();
    Ok(ContrastReport { rows, top_trigrams })
}

/// Agreement histogram over `k` external detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusTable {
    pub models: Vec<String>,
    /// `counts[j]`: articles flagged by exactly `j` models.
    pub counts: Vec<u64>,
    pub fractions: Vec<f64>,
    pub total: u64,
}

pub fn consensus_report(models: &[String], votes: &[(String, Vec<u8>)]) -> Result<ConsensusTable> {
    let k = models.len();
    if votes.is_empty() {
        return Err(Error::EmptyInput("votes".into()));
    }
    let mut counts = vec![0u64; k + 1];
    for (id, v) in votes {
        if v.len() != k {
            return Err(Error::MissingVotes {
                article_id: id.clone(),
                expected: k,
                found: v.len(),
            });
        }
        if let Some(bad) = v.iter().find(|&&x| x > 1) {
            return Err(Error::Mismatch(format!("vote {bad} for {id:?} is not 0/1")));
        }
        counts[v.iter().map(|&x| usize::from(x)).sum::<usize>()] += 1;
    }
    let total = votes.len() as u64;
    let fractions = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(ConsensusTable {
        models: models.to_vec(),
        counts,
        fractions,
        total,
    })
}

/// Reads `article_id,model_a,model_b,...` with 0/1 flags. Rows with missing
/// or empty cells are reported by article id.
pub fn read_votes<R: Read>(reader: R) -> Result<(Vec<String>, Vec<(String, Vec<u8>)>)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let models: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut votes = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or_default().to_string();
        let cells: Vec<&str> = rec.iter().skip(1).filter(|c| !c.trim().is_empty()).collect();
        let v = cells
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<u8>()
                    .map_err(|_| Error::Mismatch(format!("vote {c:?} for {id:?} is not 0/1")))
            })
            .collect::<Result<Vec<u8>>>()?;
        votes.push((id, v));
    }
    Ok((models, votes))
}

pub fn load_votes(path: impl AsRef<Path>) -> Result<ConsensusTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let (models, votes) = read_votes(file)?;
    consensus_report(&models, &votes)
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_comparisons_csv(path: impl AsRef<Path>, rows: &[GroupComparison]) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["feature", "mean_ps", "mean_ln", "p_value", "n_permutations", "seed"],
        rows.iter().map(|c| {
            vec![
                c.feature.clone(),
                format_g9(c.mean_ps),
                format_g9(c.mean_ln),
                format_g9(c.p_value),
                c.n_permutations.to_string(),
                c.seed.to_string(),
            ]
        }),
    )
}

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[(String, Metrics)]) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["name", "accuracy", "f1_ps", "f1_macro", "tn", "fp", "fn", "tp"],
        rows.iter().map(|(name, m)| {
            let [[tn, fp], [fn_, tp]] = m.confusion;
            vec![
                name.clone(),
                format_g9(m.accuracy),
                format_g9(m.f1_ps),
                format_g9(m.f1_macro),
                tn.to_string(),
                fp.to_string(),
                fn_.to_string(),
                tp.to_string(),
            ]
        }),
    )
}

pub fn write_consensus_csv(path: impl AsRef<Path>, table: &ConsensusTable) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["models_flagging", "count", "fraction"],
        table
            .counts
            .iter()
            .zip(&table.fractions)
            .enumerate()
            .map(|(j, (c, f))| vec![j.to_string(), c.to_string(), format_g9(*f)]),
    )
}

/// Plot data as long-format `series,x,y` rows.
pub fn write_series_csv(path: impl AsRef<Path>, series: &[(String, Vec<(f64, f64)>)]) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["series", "x", "y"],
        series
            .iter()
            .flat_map(|(name, pts)| pts.iter().map(move |(x, y)| vec![name.clone(), format_g9(*x), format_g9(*y)])),
    )
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(path, e))
}
