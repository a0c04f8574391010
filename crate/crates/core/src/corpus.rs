//! Articles, labels and the corpus manifest.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use crate::conllu::{AnnotatedDocument, Sentence, Token, Upos};
use crate::{Error, Result};

/// Binary class label. `Ps` is the positive class for F1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    #[serde(rename = "LN")]
    Ln = 0,
    #[serde(rename = "PS")]
    Ps = 1,
}

impl ClassLabel {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            ClassLabel::Ln
        } else {
            ClassLabel::Ps
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Ln => "LN",
            ClassLabel::Ps => "PS",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "LN" | "0" => Some(ClassLabel::Ln),
            "PS" | "1" => Some(ClassLabel::Ps),
            _ => None,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    #[default]
    Human,
    LlmModified,
    SurrogateModified,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Human => "human",
            Origin::LlmModified => "llm_modified",
            Origin::SurrogateModified => "surrogate_modified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    #[serde(default)]
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published: Option<String>,
    pub label: ClassLabel,
    pub text: String,
    #[serde(default)]
    pub origin: Origin,
}

/// Where an ingested record takes its label from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelSource {
    Fixed(ClassLabel),
    FromField,
}

#[derive(Deserialize)]
struct RawArticle {
    id: String,
    #[serde(default)]
    source: String,
    #[serde(default)]
    published: Option<String>,
    #[serde(default)]
    label: Option<String>,
    text: String,
    #[serde(default)]
    origin: Option<Origin>,
}

/// Immutable, id-addressable set of articles.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<ArticleRecord>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids and blank texts. Line numbers
    /// in errors are 1-based positions in `records`.
    pub fn from_records(records: Vec<ArticleRecord>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.text.trim().is_empty() {
                return Err(Error::EmptyText { line: i + 1 });
            }
            if let Some(prev) = by_id.insert(r.id.clone(), i) {
                return Err(Error::DuplicateId {
                    id: r.id.clone(),
                    first_line: prev + 1,
                    second_line: i + 1,
                });
            }
        }
        Ok(Corpus { records, by_id })
    }

    pub fn records(&self) -> &[ArticleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ArticleRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.id.as_str())
    }

    pub fn manifest(&self) -> CorpusManifest {
        CorpusManifest::of(&self.records)
    }

    /// Concatenates two corpora (e.g. the PS and LN files).
    pub fn merge(self, other: Corpus) -> Result<Corpus> {
        let mut records = self.records;
        records.extend(other.records);
        Corpus::from_records(records)
    }

    pub fn into_records(self) -> Vec<ArticleRecord> {
        self.records
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub total: usize,
    pub labels: BTreeMap<String, usize>,
    pub origins: BTreeMap<String, usize>,
    /// SHA-256 over the id list in corpus order, newline separated.
    pub id_checksum: String,
}

impl CorpusManifest {
    pub fn of(records: &[ArticleRecord]) -> Self {
        let mut labels = BTreeMap::new();
        let mut origins = BTreeMap::new();
        let mut hasher = Sha256::new();
        for r in records {
            *labels.entry(r.label.as_str().to_string()).or_insert(0) += 1;
            *origins.entry(r.origin.as_str().to_string()).or_insert(0) += 1;
            hasher.update(r.id.as_bytes());
            hasher.update(b"\n");
        }
        CorpusManifest {
            total: records.len(),
            labels,
            origins,
            id_checksum: hex::encode(hasher.finalize()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

pub fn ingest_articles(path: impl AsRef<Path>, label: LabelSource) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_articles(BufReader::new(file), label).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_articles<R: BufRead>(reader: R, label_source: LabelSource) -> Result<Corpus> {
    let mut records = Vec::new();
    let mut first_seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<articles>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawArticle = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: lineno,
            message: e.to_string(),
        })?;
        if raw.text.trim().is_empty() {
            return Err(Error::EmptyText { line: lineno });
        }
        if raw.id.is_empty() {
            return Err(Error::MalformedLine {
                line: lineno,
                message: "empty id".into(),
            });
        }
        let field_label = match raw.label.as_deref() {
            None => None,
            Some(s) => Some(ClassLabel::parse(s).ok_or_else(|| Error::MalformedLine {
                line: lineno,
                message: format!("unknown label {s:?}"),
            })?),
        };
        let label = match (label_source, field_label) {
            (LabelSource::Fixed(l), None) => l,
            (LabelSource::Fixed(l), Some(f)) if f == l => l,
            (LabelSource::Fixed(l), Some(f)) => {
                return Err(Error::MalformedLine {
                    line: lineno,
                    message: format!("label {f} conflicts with requested label {l}"),
                })
            }
            (LabelSource::FromField, Some(f)) => f,
            (LabelSource::FromField, None) => {
                return Err(Error::MalformedLine {
                    line: lineno,
                    message: "missing label".into(),
                })
            }
        };
        if let Some(&prev) = first_seen.get(&raw.id) {
            return Err(Error::DuplicateId {
                id: raw.id,
                first_line: prev,
                second_line: lineno,
            });
        }
        first_seen.insert(raw.id.clone(), lineno);
        records.push(ArticleRecord {
            id: raw.id,
            source: raw.source,
            published: raw.published,
            label,
            text: raw.text,
            origin: raw.origin.unwrap_or_default(),
        });
    }
    Corpus::from_records(records)
}

pub fn write_articles(path: impl AsRef<Path>, records: &[ArticleRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct AlignedArticle {
    pub record: ArticleRecord,
    pub doc: AnnotatedDocument,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinReport {
    pub aligned: usize,
    pub articles_only: usize,
    pub annotations_only: usize,
}

/// Articles paired with their annotations, in article order.
#[derive(Debug, Clone)]
pub struct AlignedCorpus {
    pub items: Vec<AlignedArticle>,
    pub report: JoinReport,
}

impl AlignedCorpus {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&AlignedArticle> {
        self.items.iter().find(|a| a.record.id == id)
    }

    pub fn index(&self) -> HashMap<&str, &AlignedArticle> {
        self.items.iter().map(|a| (a.record.id.as_str(), a)).collect()
    }
}

/// Pairs articles with annotations by id. Ids present on only one side are
/// counted, not returned.
pub fn join(
    articles: &Corpus,
    annotations: &BTreeMap<String, AnnotatedDocument>,
) -> Result<AlignedCorpus> {
    let mut items = Vec::new();
    for r in articles.records() {
        if let Some(doc) = annotations.get(&r.id) {
            items.push(AlignedArticle {
                record: r.clone(),
                doc: doc.clone(),
            });
        }
    }
    if items.is_empty() {
        return Err(Error::EmptyJoin);
    }
    let report = JoinReport {
        aligned: items.len(),
        articles_only: articles.len() - items.len(),
        annotations_only: annotations.len() - items.len(),
    };
    Ok(AlignedCorpus { items, report })
}
