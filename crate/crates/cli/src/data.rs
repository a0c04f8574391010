//! Loading and assembling the inputs shared by the pipeline and the
//! individual subcommands.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use pinkslime_core::conllu::{read_conllu, AnnotatedDocument};
use pinkslime_core::corpus::{ingest_articles, join, ClassLabel, Corpus, CorpusManifest, JoinReport, LabelSource};
use pinkslime_core::features::{extract_all, ChainMode, ClassProfile, FeatureSchema, FeatureVector};
use pinkslime_core::matrix::{load_embeddings, EmbeddingMatrix};
use pinkslime_core::models::Dataset;

/// Articles with annotations and embeddings, restricted to ids present in
/// all three.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub corpus: Corpus,
    pub docs: BTreeMap<String, AnnotatedDocument>,
    pub embeddings: EmbeddingMatrix,
    pub labels: HashMap<String, ClassLabel>,
    pub report: IngestReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub manifest: CorpusManifest,
    pub join: JoinReport,
    /// Aligned articles without an embedding row; they are dropped.
    pub missing_embeddings: usize,
    /// Embedding rows without an aligned article; they are ignored.
    pub unused_embeddings: usize,
}

pub fn read_corpus(ps: Option<&Path>, ln: Option<&Path>) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    for (path, label) in [(ps, ClassLabel::Ps), (ln, ClassLabel::Ln)] {
        if let Some(p) = path {
            let c = ingest_articles(p, LabelSource::Fixed(label)).with_context(|| p.display().to_string())?;
            corpus = corpus.merge(c)?;
        }
    }
    if corpus.is_empty() {
        bail!("no articles given");
    }
    Ok(corpus)
}

pub fn load_inputs(ps: &Path, ln: &Path, annotations: &Path, embeddings: &Path, embedding_ids: &Path) -> Result<Inputs> {
    let corpus = read_corpus(Some(ps), Some(ln))?;
    let docs = read_conllu(annotations).with_context(|| annotations.display().to_string())?;
    let emb = load_embeddings(embeddings, embedding_ids).with_context(|| embeddings.display().to_string())?;
    assemble(corpus, docs, emb)
}

pub fn assemble(
    corpus: Corpus,
    mut docs: BTreeMap<String, AnnotatedDocument>,
    emb: EmbeddingMatrix,
) -> Result<Inputs> {
    let aligned = join(&corpus, &docs)?;
    let emb_index = emb.index();
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut missing = 0;
    for a in aligned.items {
        match emb_index.get(a.record.id.as_str()) {
            Some(&r) => {
                rows.push(r);
                records.push(a.record);
            }
            None => missing += 1,
        }
    }
    if records.is_empty() {
        bail!("no article has both annotations and an embedding");
    }
    let unused = emb.n() - rows.len();
    let embeddings = emb.select(&rows)?;
    let corpus = Corpus::from_records(records)?;
    docs.retain(|id, _| corpus.contains(id));
    let labels = corpus.records().iter().map(|r| (r.id.clone(), r.label)).collect();
    let report = IngestReport {
        manifest: corpus.manifest(),
        join: aligned.report,
        missing_embeddings: missing,
        unused_embeddings: unused,
    };
    Ok(Inputs {
        corpus,
        docs,
        embeddings,
        labels,
        report,
    })
}

/// Ids of one label, in corpus order.
pub fn ids_with_label<'a>(ids: impl IntoIterator<Item = &'a String>, labels: &HashMap<String, ClassLabel>, label: ClassLabel) -> Vec<String> {
    ids.into_iter().filter(|id| labels.get(*id) == Some(&label)).cloned().collect()
}

/// Fits the co-occurrence slots on the given articles.
pub fn fit_schema(
    docs: &BTreeMap<String, AnnotatedDocument>,
    labels: &HashMap<String, ClassLabel>,
    ids: &[String],
    top_pairs: usize,
    chain_mode: ChainMode,
) -> Result<FeatureSchema> {
    let profile = |label| {
        ClassProfile::of(ids.iter().filter(|id| labels.get(*id) == Some(&label)).filter_map(|id| docs.get(id)))
    };
    let mut schema = FeatureSchema::fit(&profile(ClassLabel::Ps), &profile(ClassLabel::Ln), top_pairs)?;
    schema.chain_mode = chain_mode;
    Ok(schema)
}

/// Feature vectors for `ids`, in order, computed in parallel.
pub fn featurize(
    docs: &BTreeMap<String, AnnotatedDocument>,
    labels: &HashMap<String, ClassLabel>,
    ids: &[String],
    schema: &FeatureSchema,
) -> Result<Vec<(FeatureVector, ClassLabel)>> {
    ids.par_iter()
        .map(|id| {
            let doc = docs.get(id).with_context(|| format!("no annotations for {id:?}"))?;
            let label = *labels.get(id).with_context(|| format!("no label for {id:?}"))?;
            Ok((extract_all(doc, schema)?, label))
        })
        .collect()
}

pub fn feature_dataset(rows: &[(FeatureVector, ClassLabel)]) -> Dataset {
    let mut d = Dataset::default();
    for (fv, label) in rows {
        d.push(fv.article_id.clone(), fv.values.clone(), *label);
    }
    d
}

/// Embedding rows as a dataset; rows without a label are skipped.
pub fn embedding_dataset(emb: &EmbeddingMatrix, labels: &HashMap<String, ClassLabel>) -> Dataset {
    Dataset::from_embeddings(emb, |id| labels.get(id).copied())
}
