//! Handcrafted stylistic and syntactic features computed from a dependency
//! annotated document.
//!
//! Lexical metrics operate on lowercased word forms, where a word is any token
//! whose UPOS is not `PUNCT`, `SYM`, `X` or `SPACE`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedDocument, ClassLabel, Sentence, Upos};
use crate::{Error, Result};

/// Schema identifier. The suffix names the syllable heuristic used by
/// [`flesch`], since changing it shifts every readability value.
pub const SCHEMA_VERSION: &str = "handcrafted-v1/syllables-vowel-groups-v1";

pub const MTLD_THRESHOLD: f64 = 0.72;

/// Deprels (base relation, before any `:` subtype) that introduce a clause.
const CLAUSAL_DEPRELS: [&str; 5] = ["advcl", "ccomp", "csubj", "acl", "parataxis"];

fn base_rel(deprel: &str) -> &str {
    deprel.split(':').next().unwrap_or(deprel)
}

pub fn sentence_count(doc: &AnnotatedDocument) -> usize {
    doc.sentences.len()
}

fn type_count<S: AsRef<str>>(tokens: &[S]) -> usize {
    tokens.iter().map(AsRef::as_ref).collect::<HashSet<&str>>().len()
}

/// Root type-token ratio, `types / sqrt(tokens)`.
pub fn rttr<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::EmptyInput("no word tokens".into()));
    }
    Ok(type_count(tokens) as f64 / (tokens.len() as f64).sqrt())
}

/// Corrected type-token ratio, `types / sqrt(2 * tokens)`.
pub fn cttr<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::EmptyInput("no word tokens".into()));
    }
    Ok(type_count(tokens) as f64 / (2.0 * tokens.len() as f64).sqrt())
}

/// One MTLD pass. Returns `N / factors`, or `N` when no factor was counted.
pub fn mtld_pass<'a, I>(tokens: I, n: usize, threshold: f64) -> f64
where
    I: Iterator<Item = &'a str>,
{
    let mut factors = 0.0;
    let mut seen: HashSet<&str> = HashSet::new();
    let mut count = 0usize;
    let mut ttr = 1.0;
    for tok in tokens {
        seen.insert(tok);
        count += 1;
        ttr = seen.len() as f64 / count as f64;
        if ttr < threshold {
            factors += 1.0;
            seen.clear();
            count = 0;
            ttr = 1.0;
        }
    }
    if count > 0 {
        factors += (1.0 - ttr) / (1.0 - threshold);
    }
    if factors == 0.0 {
        n as f64
    } else {
        n as f64 / factors
    }
}

/// Measure of textual lexical diversity: mean of the forward and backward
/// factor passes.
pub fn mtld<S: AsRef<str>>(tokens: &[S], threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!("MTLD threshold {threshold} outside (0, 1)")));
    }
    if tokens.is_empty() {
        return Err(Error::EmptyInput("no word tokens".into()));
    }
    let n = tokens.len();
    let fwd = mtld_pass(tokens.iter().map(AsRef::as_ref), n, threshold);
    let bwd = mtld_pass(tokens.iter().rev().map(AsRef::as_ref), n, threshold);
    Ok((fwd + bwd) / 2.0)
}

/// A sentence is simple when it has no clause-introducing dependent and no
/// verbal conjunct.
pub fn is_simple(sentence: &Sentence) -> bool {
    !sentence.tokens.iter().any(|t| {
        let rel = base_rel(&t.deprel);
        CLAUSAL_DEPRELS.contains(&rel) || (rel == "conj" && matches!(t.upos, Upos::Verb | Upos::Aux))
    })
}

pub fn simple_sentence_ratio(doc: &AnnotatedDocument) -> f64 {
    if doc.sentences.is_empty() {
        return 0.0;
    }
    let simple = doc.sentences.iter().filter(|s| is_simple(s)).count();
    simple as f64 / doc.sentences.len() as f64
}

/// Counts of within-sentence n-grams of some token label.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NgramTable {
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl NgramTable {
    fn from_sentences<F>(doc: &AnnotatedDocument, n: usize, label: F) -> Self
    where
        F: Fn(&crate::corpus::Token) -> &str,
    {
        let mut t = NgramTable::default();
        for s in &doc.sentences {
            for w in s.tokens.windows(n) {
                let key = w.iter().map(&label).collect::<Vec<_>>().join("-");
                *t.counts.entry(key).or_insert(0) += 1;
                t.total += 1;
            }
        }
        t
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn prob(&self, key: &str) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.counts.get(key).map_or(0.0, |&c| c as f64 / self.total as f64)
    }

    pub fn probabilities(&self) -> BTreeMap<String, f64> {
        self.counts
            .iter()
            .map(|(k, &c)| (k.clone(), c as f64 / self.total as f64))
            .collect()
    }
}

/// Ordered adjacent UPOS pairs, keyed `"DET-NOUN"`.
pub fn pos_cooccurrence(doc: &AnnotatedDocument) -> NgramTable {
    NgramTable::from_sentences(doc, 2, |t| t.upos.as_str())
}

/// Ordered adjacent deprel pairs, keyed `"det-nsubj"`.
pub fn dep_cooccurrence(doc: &AnnotatedDocument) -> NgramTable {
    NgramTable::from_sentences(doc, 2, |t| t.deprel.as_str())
}

pub fn pos_trigrams(doc: &AnnotatedDocument) -> NgramTable {
    NgramTable::from_sentences(doc, 3, |t| t.upos.as_str())
}

/// Running sum of per-document probability tables; the mean is taken over
/// documents with a non-empty table. Merging is commutative.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanTable {
    pub sums: BTreeMap<String, f64>,
    pub tables: usize,
}

impl MeanTable {
    pub fn add(&mut self, t: &NgramTable) {
        if t.is_empty() {
            return;
        }
        for (k, p) in t.probabilities() {
            *self.sums.entry(k).or_insert(0.0) += p;
        }
        self.tables += 1;
    }

    pub fn merge(&mut self, other: &MeanTable) {
        for (k, v) in &other.sums {
            *self.sums.entry(k.clone()).or_insert(0.0) += v;
        }
        self.tables += other.tables;
    }

    pub fn mean(&self, key: &str) -> f64 {
        if self.tables == 0 {
            return 0.0;
        }
        self.sums.get(key).map_or(0.0, |s| s / self.tables as f64)
    }

    pub fn means(&self) -> BTreeMap<String, f64> {
        self.sums.keys().map(|k| (k.clone(), self.mean(k))).collect()
    }

    /// Keys sorted by descending mean, ties by key.
    pub fn top(&self, k: usize) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self.means().into_iter().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v.truncate(k);
        v
    }
}

/// Per-class mean co-occurrence and trigram probabilities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub documents: usize,
    pub pos_pairs: MeanTable,
    pub dep_pairs: MeanTable,
    pub pos_trigrams: MeanTable,
}

impl ClassProfile {
    pub fn add(&mut self, doc: &AnnotatedDocument) {
        self.documents += 1;
        self.pos_pairs.add(&pos_cooccurrence(doc));
        self.dep_pairs.add(&dep_cooccurrence(doc));
        self.pos_trigrams.add(&pos_trigrams(doc));
    }

    pub fn merge(&mut self, other: &ClassProfile) {
        self.documents += other.documents;
        self.pos_pairs.merge(&other.pos_pairs);
        self.dep_pairs.merge(&other.dep_pairs);
        self.pos_trigrams.merge(&other.pos_trigrams);
    }

    pub fn of<'a>(docs: impl IntoIterator<Item = &'a AnnotatedDocument>) -> Self {
        let mut p = ClassProfile::default();
        for d in docs {
            p.add(d);
        }
        p
    }
}

/// The `k` keys with the largest absolute gap in class means, over the union
/// of both vocabularies. Gaps equal to within 1e-12 tie and are ordered by key.
pub fn select_top_gap_pairs(ps: &MeanTable, ln: &MeanTable, k: usize) -> Result<Vec<String>> {
    let vocab: BTreeSet<&String> = ps.sums.keys().chain(ln.sums.keys()).collect();
    if k > vocab.len() {
        return Err(Error::InvalidParameter(format!(
            "requested {k} pairs from a vocabulary of {}",
            vocab.len()
        )));
    }
    let mut ranked: Vec<(i64, &String)> = vocab
        .into_iter()
        .map(|key| {
            let gap = (ps.mean(key) - ln.mean(key)).abs();
            ((gap * 1e12).round() as i64, key)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(ranked.into_iter().take(k).map(|(_, key)| key.clone()).collect())
}

/// How the "longest dependency chain" feature is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainMode {
    /// Largest linear distance between a token and its head.
    #[default]
    ArcSpan,
    /// Longest root-to-leaf path (equals depth).
    PathLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeMetrics {
    pub depth: f64,
    pub branching: f64,
    pub longest_span: f64,
}

/// Depth, branching and chain length of one sentence.
pub fn sentence_tree_metrics(s: &Sentence, mode: ChainMode) -> TreeMetrics {
    let n = s.tokens.len();
    let mut depth = 0usize;
    for t in &s.tokens {
        let mut d = 0;
        let mut cur = t.head;
        while cur != 0 && d <= n {
            d += 1;
            cur = s.tokens[cur - 1].head;
        }
        depth = depth.max(d);
    }
    let children = s.children();
    let internal: Vec<usize> = children[1..].iter().map(Vec::len).filter(|&c| c > 0).collect();
    let branching = if internal.is_empty() {
        0.0
    } else {
        internal.iter().sum::<usize>() as f64 / internal.len() as f64
    };
    let span = match mode {
        ChainMode::ArcSpan => s
            .tokens
            .iter()
            .filter(|t| t.head != 0)
            .map(|t| t.index.abs_diff(t.head))
            .max()
            .unwrap_or(0),
        ChainMode::PathLength => depth,
    };
    TreeMetrics {
        depth: depth as f64,
        branching,
        longest_span: span as f64,
    }
}

/// Sentence-level tree metrics averaged over the document.
pub fn dep_tree_metrics(doc: &AnnotatedDocument, mode: ChainMode) -> TreeMetrics {
    let n = doc.sentences.len().max(1) as f64;
    let mut acc = TreeMetrics {
        depth: 0.0,
        branching: 0.0,
        longest_span: 0.0,
    };
    for s in &doc.sentences {
        let m = sentence_tree_metrics(s, mode);
        acc.depth += m.depth;
        acc.branching += m.branching;
        acc.longest_span += m.longest_span;
    }
    TreeMetrics {
        depth: acc.depth / n,
        branching: acc.branching / n,
        longest_span: acc.longest_span / n,
    }
}

/// Vowel-group syllable estimate: contiguous runs of `aeiouy`, minus one for
/// a terminal silent `e` when other groups exist, at least one per word.
pub fn syllables(word: &str) -> usize {
    let w = word.to_lowercase();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut prev = false;
    for c in w.chars() {
        let v = is_vowel(c);
        if v && !prev {
            groups += 1;
        }
        prev = v;
    }
    if groups > 1 && w.ends_with('e') && !w.ends_with("ee") {
        groups -= 1;
    }
    groups.max(1)
}

/// Flesch reading ease over word tokens.
pub fn flesch(doc: &AnnotatedDocument) -> f64 {
    let words: Vec<&str> = doc.word_tokens().map(|t| t.form.as_str()).collect();
    let w = words.len().max(1) as f64;
    let s = doc.sentences.len().max(1) as f64;
    let syl: usize = words.iter().map(|x| syllables(x)).sum();
    206.835 - 1.015 * (w / s) - 84.6 * (syl as f64 / w)
}

const NP_MODIFIERS: [&str; 5] = ["det", "amod", "compound", "nummod", "flat"];

/// Distinct noun-phrase keys of a document. A phrase is headed by a NOUN or
/// PROPN that is not itself a `compound`/`flat` part of another nominal, and
/// spans the head plus its direct det/amod/compound/nummod/flat dependents.
pub fn noun_phrase_keys(doc: &AnnotatedDocument) -> BTreeSet<String> {
    let nominal = |u: Upos| matches!(u, Upos::Noun | Upos::Propn);
    let mut keys = BTreeSet::new();
    for s in &doc.sentences {
        for t in &s.tokens {
            if !nominal(t.upos) {
                continue;
            }
            let rel = base_rel(&t.deprel);
            if (rel == "compound" || rel == "flat") && t.head != 0 && nominal(s.tokens[t.head - 1].upos) {
                continue;
            }
            let key = s
                .tokens
                .iter()
                .filter(|d| d.index == t.index || (d.head == t.index && NP_MODIFIERS.contains(&base_rel(&d.deprel))))
                .map(|d| d.lemma.to_lowercase())
                .collect::<Vec<_>>()
                .join(" ");
            keys.insert(key);
        }
    }
    keys
}

pub fn unique_noun_phrases(doc: &AnnotatedDocument) -> usize {
    noun_phrase_keys(doc).len()
}

/// Adjectives and adverbs per 1,000 words.
pub fn adj_adv_per_1000(doc: &AnnotatedDocument) -> (f64, f64) {
    let mut words = 0usize;
    let (mut adj, mut adv) = (0usize, 0usize);
    for t in doc.word_tokens() {
        words += 1;
        match t.upos {
            Upos::Adj => adj += 1,
            Upos::Adv => adv += 1,
            _ => {}
        }
    }
    if words == 0 {
        return (0.0, 0.0);
    }
    (
        1000.0 * adj as f64 / words as f64,
        1000.0 * adv as f64 / words as f64,
    )
}

pub const BASE_FEATURES_HEAD: [&str; 6] = [
    "sentence_count",
    "mean_words_per_sentence",
    "rttr",
    "cttr",
    "mtld",
    "simple_sentence_ratio",
];

pub const BASE_FEATURES_TAIL: [&str; 7] = [
    "tree_depth",
    "tree_branching",
    "longest_dep_span",
    "flesch",
    "unique_np_count",
    "adj_per_1000",
    "adv_per_1000",
];

/// Feature names in vector order, with the co-occurrence slots bound to
/// concrete tag pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: String,
    pub names: Vec<String>,
    pub bound_pos_pairs: Vec<String>,
    pub bound_dep_pairs: Vec<String>,
    #[serde(default)]
    pub chain_mode: ChainMode,
}

impl FeatureSchema {
    pub fn bound(pos_pairs: Vec<String>, dep_pairs: Vec<String>) -> Self {
        let mut names: Vec<String> = BASE_FEATURES_HEAD.iter().map(|s| s.to_string()).collect();
        names.extend((1..=pos_pairs.len()).map(|i| format!("pos_cooc_{i}")));
        names.extend((1..=dep_pairs.len()).map(|i| format!("dep_cooc_{i}")));
        names.extend(BASE_FEATURES_TAIL.iter().map(|s| s.to_string()));
        FeatureSchema {
            version: SCHEMA_VERSION.to_string(),
            names,
            bound_pos_pairs: pos_pairs,
            bound_dep_pairs: dep_pairs,
            chain_mode: ChainMode::default(),
        }
    }

    /// Binds the top-`k` gap pairs of both co-occurrence kinds.
    pub fn fit(ps: &ClassProfile, ln: &ClassProfile, k: usize) -> Result<Self> {
        Ok(Self::bound(
            select_top_gap_pairs(&ps.pos_pairs, &ln.pos_pairs, k)?,
            select_top_gap_pairs(&ps.dep_pairs, &ln.dep_pairs, k)?,
        ))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: FeatureSchema = serde_json::from_str(&s)?;
        let expect = Self::bound(schema.bound_pos_pairs.clone(), schema.bound_dep_pairs.clone());
        if expect.names != schema.names {
            return Err(Error::Mismatch("schema names do not match its bound pairs".into()));
        }
        Ok(schema)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub article_id: String,
    pub values: Vec<f64>,
    pub schema_version: String,
}

pub fn extract_all(doc: &AnnotatedDocument, schema: &FeatureSchema) -> Result<FeatureVector> {
    let words = doc.word_forms();
    let wrap = |e: Error| e.for_article(&doc.article_id);
    let sentences = sentence_count(doc);
    let mut v = Vec::with_capacity(schema.len());
    v.push(sentences as f64);
    v.push(words.len() as f64 / sentences.max(1) as f64);
    v.push(rttr(&words).map_err(wrap)?);
    v.push(cttr(&words).map_err(wrap)?);
    v.push(mtld(&words, MTLD_THRESHOLD).map_err(wrap)?);
    v.push(simple_sentence_ratio(doc));
    let pos = pos_cooccurrence(doc);
    v.extend(schema.bound_pos_pairs.iter().map(|k| pos.prob(k)));
    let dep = dep_cooccurrence(doc);
    v.extend(schema.bound_dep_pairs.iter().map(|k| dep.prob(k)));
    let tm = dep_tree_metrics(doc, schema.chain_mode);
    v.extend([tm.depth, tm.branching, tm.longest_span]);
    v.push(flesch(doc));
    v.push(unique_noun_phrases(doc) as f64);
    let (adj, adv) = adj_adv_per_1000(doc);
    v.extend([adj, adv]);
    debug_assert_eq!(v.len(), schema.len());
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(wrap(Error::InvalidParameter(format!(
            "feature {} is not finite",
            schema.names[i]
        ))));
    }
    Ok(FeatureVector {
        article_id: doc.article_id.clone(),
        values: v,
        schema_version: schema.version.clone(),
    })
}

/// `%.9g`-style formatting: nine significant digits, trailing zeros trimmed.
pub fn format_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mant), sign, exp.abs())
    } else {
        trim(&format!("{:.*}", (8 - exp) as usize, x))
    }
}

/// A labelled feature matrix as read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub ids: Vec<String>,
    pub labels: Vec<ClassLabel>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn select(&self, ids: &[String]) -> Result<FeatureTable> {
        let pos: std::collections::HashMap<&str, usize> =
            self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut out = FeatureTable {
            names: self.names.clone(),
            ids: Vec::new(),
            labels: Vec::new(),
            rows: Vec::new(),
        };
        for id in ids {
            let &i = pos
                .get(id.as_str())
                .ok_or_else(|| Error::Mismatch(format!("no feature row for {id:?}")))?;
            out.ids.push(id.clone());
            out.labels.push(self.labels[i]);
            out.rows.push(self.rows[i].clone());
        }
        Ok(out)
    }
}

pub fn write_feature_csv(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
    rows: &[(FeatureVector, ClassLabel)],
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let mut header = vec!["article_id".to_string(), "label".to_string()];
    header.extend(schema.names.iter().cloned());
    w.write_record(&header)?;
    for (fv, label) in rows {
        let mut rec = vec![fv.article_id.clone(), label.as_str().to_string()];
        rec.extend(fv.values.iter().map(|&x| format_g9(x)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_feature_csv(path: impl AsRef<Path>) -> Result<FeatureTable> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < 3 || header[0] != "article_id" || header[1] != "label" {
        return Err(Error::Mismatch("feature CSV must start with article_id,label".into()));
    }
    let mut t = FeatureTable {
        names: header[2..].to_vec(),
        ids: Vec::new(),
        labels: Vec::new(),
        rows: Vec::new(),
    };
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |m: String| Error::MalformedLine { line: i + 2, message: m };
        t.ids.push(rec[0].to_string());
        t.labels
            .push(ClassLabel::parse(&rec[1]).ok_or_else(|| bad(format!("bad label {:?}", &rec[1])))?);
        let vals = rec
            .iter()
            .skip(2)
            .map(|s| s.parse::<f64>().map_err(|e| bad(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        t.rows.push(vals);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Token};

    fn sent(spec: &[(&str, Upos, usize, &str)]) -> Sentence {
        Sentence {
            tokens: spec
                .iter()
                .enumerate()
                .map(|(i, (w, u, h, d))| Token::new(i + 1, w, &w.to_lowercase(), *u, *h, d))
                .collect(),
        }
    }

    fn doc(sentences: Vec<Sentence>) -> AnnotatedDocument {
        let d = AnnotatedDocument {
            article_id: "t".into(),
            sentences,
        };
        d.validate().unwrap();
        d
    }

    fn the_cat_sat() -> Sentence {
        sent(&[
            ("The", Upos::Det, 2, "det"),
            ("cat", Upos::Noun, 3, "nsubj"),
            ("sat", Upos::Verb, 0, "root"),
            (".", Upos::Punct, 3, "punct"),
        ])
    }

    fn advcl_sentence() -> Sentence {
        // "He left when it rained"
        sent(&[
            ("He", Upos::Pron, 2, "nsubj"),
            ("left", Upos::Verb, 0, "root"),
            ("when", Upos::Sconj, 5, "mark"),
            ("it", Upos::Pron, 5, "nsubj"),
            ("rained", Upos::Verb, 2, "advcl"),
        ])
    }

    #[test]
    fn counts_sentences() {
        assert_eq!(sentence_count(&doc(vec![the_cat_sat()])), 1);
        assert_eq!(sentence_count(&doc(vec![the_cat_sat(), the_cat_sat(), advcl_sentence()])), 3);
    }

    #[test]
    fn rttr_cttr_examples() {
        assert_eq!(rttr(&["a"]).unwrap(), 1.0);
        assert_eq!(rttr(&["a", "a", "a", "a"]).unwrap(), 0.5);
        let six = ["the", "cat", "sat", "on", "the", "mat"];
        assert!((rttr(&six).unwrap() - 2.041_241_452).abs() < 1e-9);
        assert!((cttr(&["a"]).unwrap() - 0.707_106_781).abs() < 1e-9);
        assert!((cttr(&["a"; 4]).unwrap() - 0.353_553_391).abs() < 1e-9);
        assert!((cttr(&six).unwrap() - 1.443_375_673).abs() < 1e-9);
        let empty: [&str; 0] = [];
        assert!(rttr(&empty).is_err());
        assert!(cttr(&empty).is_err());
    }

    #[test]
    fn mtld_examples() {
        let same = vec!["a"; 100];
        assert!((mtld(&same, MTLD_THRESHOLD).unwrap() - 2.0).abs() < 1e-12);
        let distinct: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
        assert_eq!(mtld(&distinct, MTLD_THRESHOLD).unwrap(), 20.0);
        assert!(mtld(&same, 1.0).is_err());
        assert!(mtld(&same, 0.0).is_err());
    }

    #[test]
    fn simple_sentences() {
        assert_eq!(simple_sentence_ratio(&doc(vec![the_cat_sat()])), 1.0);
        assert_eq!(simple_sentence_ratio(&doc(vec![advcl_sentence()])), 0.0);
        assert_eq!(simple_sentence_ratio(&doc(vec![the_cat_sat(), advcl_sentence()])), 0.5);
        // Nominal conjunct does not make a clause; verbal one does.
        let nominal_conj = sent(&[
            ("cats", Upos::Noun, 4, "nsubj"),
            ("and", Upos::Cconj, 3, "cc"),
            ("dogs", Upos::Noun, 1, "conj"),
            ("sleep", Upos::Verb, 0, "root"),
        ]);
        assert!(is_simple(&nominal_conj));
        let verbal_conj = sent(&[
            ("cats", Upos::Noun, 2, "nsubj"),
            ("sleep", Upos::Verb, 0, "root"),
            ("and", Upos::Cconj, 4, "cc"),
            ("eat", Upos::Verb, 2, "conj"),
        ]);
        assert!(!is_simple(&verbal_conj));
    }

    fn tagged(tags: &[Upos]) -> Sentence {
        // Flat tree: every token attached to the first.
        Sentence {
            tokens: tags
                .iter()
                .enumerate()
                .map(|(i, u)| Token::new(i + 1, "w", "w", *u, if i == 0 { 0 } else { 1 }, if i == 0 { "root" } else { "dep" }))
                .collect(),
        }
    }

    #[test]
    fn pos_pairs() {
        let t = pos_cooccurrence(&doc(vec![tagged(&[Upos::Det, Upos::Noun])]));
        assert_eq!(t.probabilities(), BTreeMap::from([("DET-NOUN".to_string(), 1.0)]));
        let t = pos_cooccurrence(&doc(vec![tagged(&[Upos::Det, Upos::Noun, Upos::Verb])]));
        assert_eq!(t.prob("DET-NOUN"), 0.5);
        assert_eq!(t.prob("NOUN-VERB"), 0.5);
        let two = doc(vec![tagged(&[Upos::Det, Upos::Noun]), tagged(&[Upos::Det, Upos::Noun])]);
        assert_eq!(pos_cooccurrence(&two).probabilities().len(), 1);
        assert_eq!(pos_cooccurrence(&two).prob("DET-NOUN"), 1.0);
        assert!(pos_cooccurrence(&doc(vec![tagged(&[Upos::Noun])])).is_empty());
    }

    #[test]
    fn dep_pairs() {
        let s = sent(&[("the", Upos::Det, 2, "det"), ("cat", Upos::Noun, 0, "nsubj")]);
        // root relation label is arbitrary here; only adjacency matters
        let t = dep_cooccurrence(&doc(vec![s]));
        assert_eq!(t.prob("det-nsubj"), 1.0);
        let t = dep_cooccurrence(&doc(vec![the_cat_sat()]));
        assert_eq!(t.prob("det-nsubj"), 1.0 / 3.0);
        assert_eq!(t.prob("nsubj-root"), 1.0 / 3.0);
    }

    #[test]
    fn trigrams() {
        use Upos::*;
        let t = pos_trigrams(&doc(vec![tagged(&[Det, Noun, Verb, Det, Noun])]));
        assert_eq!(t.counts.len(), 3);
        for p in t.probabilities().values() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(pos_trigrams(&doc(vec![tagged(&[Det, Noun])])).is_empty());
    }

    fn mean_table(entries: &[(&str, f64)]) -> MeanTable {
        MeanTable {
            sums: entries.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            tables: 1,
        }
    }

    #[test]
    fn top_gap_pairs() {
        let ps = mean_table(&[("A-B", 0.6), ("C-D", 0.4)]);
        let ln = mean_table(&[("A-B", 0.1), ("C-D", 0.9)]);
        assert_eq!(select_top_gap_pairs(&ps, &ln, 1).unwrap(), vec!["A-B"]);
        assert_eq!(select_top_gap_pairs(&ps, &ps, 2).unwrap(), vec!["A-B", "C-D"]);
        assert!(select_top_gap_pairs(&ps, &ln, 0).unwrap().is_empty());
        assert!(select_top_gap_pairs(&ps, &ln, 3).is_err());
        // Missing keys count as zero.
        let ln2 = mean_table(&[("E-F", 0.7)]);
        assert_eq!(select_top_gap_pairs(&ps, &ln2, 1).unwrap(), vec!["E-F"]);
    }

    #[test]
    fn tree_metrics() {
        let chain = sent(&[
            ("a", Upos::Verb, 0, "root"),
            ("b", Upos::Noun, 1, "obj"),
            ("c", Upos::Noun, 2, "nmod"),
            ("d", Upos::Noun, 3, "nmod"),
        ]);
        let m = sentence_tree_metrics(&chain, ChainMode::ArcSpan);
        assert_eq!((m.depth, m.branching, m.longest_span), (3.0, 1.0, 1.0));

        let star = sent(&[
            ("r", Upos::Verb, 0, "root"),
            ("x", Upos::Noun, 1, "obj"),
            ("y", Upos::Noun, 1, "obj"),
            ("z", Upos::Noun, 1, "obj"),
        ]);
        let m = sentence_tree_metrics(&star, ChainMode::ArcSpan);
        assert_eq!((m.depth, m.branching), (1.0, 3.0));
        assert!(m.longest_span <= 3.0);

        let single = sent(&[("go", Upos::Verb, 0, "root")]);
        let m = sentence_tree_metrics(&single, ChainMode::ArcSpan);
        assert_eq!((m.depth, m.branching, m.longest_span), (0.0, 0.0, 0.0));

        assert_eq!(sentence_tree_metrics(&star, ChainMode::PathLength).longest_span, 1.0);
        let d = dep_tree_metrics(&doc(vec![chain, star]), ChainMode::ArcSpan);
        assert_eq!(d.depth, 2.0);
        assert_eq!(d.branching, 2.0);
    }

    #[test]
    fn syllable_heuristic() {
        assert_eq!(syllables("the"), 1);
        assert_eq!(syllables("make"), 1);
        assert_eq!(syllables("e"), 1);
        assert_eq!(syllables("rhythm"), 1);
        assert_eq!(syllables("banana"), 3);
        assert_eq!(syllables("x"), 1);
    }

    #[test]
    fn flesch_the_cat_sat() {
        let f = flesch(&doc(vec![the_cat_sat()]));
        assert!((f - 119.19).abs() < 0.01, "{f}");
    }

    #[test]
    fn noun_phrases() {
        let black_cat = sent(&[
            ("the", Upos::Det, 3, "det"),
            ("black", Upos::Adj, 3, "amod"),
            ("cat", Upos::Noun, 0, "root"),
        ]);
        let d = doc(vec![black_cat]);
        assert_eq!(noun_phrase_keys(&d), BTreeSet::from(["the black cat".to_string()]));

        let saw = sent(&[
            ("the", Upos::Det, 2, "det"),
            ("cat", Upos::Noun, 3, "nsubj"),
            ("saw", Upos::Verb, 0, "root"),
            ("the", Upos::Det, 5, "det"),
            ("cat", Upos::Noun, 3, "obj"),
        ]);
        assert_eq!(unique_noun_phrases(&doc(vec![saw])), 1);
        assert_eq!(unique_noun_phrases(&doc(vec![advcl_sentence()])), 0);

        let compound = sent(&[
            ("gas", Upos::Noun, 2, "compound"),
            ("prices", Upos::Noun, 3, "nsubj"),
            ("rose", Upos::Verb, 0, "root"),
        ]);
        assert_eq!(noun_phrase_keys(&doc(vec![compound])), BTreeSet::from(["gas prices".to_string()]));
    }

    #[test]
    fn adjective_rate() {
        let mut spec: Vec<(&str, Upos, usize, &str)> = vec![("w", Upos::Verb, 0, "root")];
        spec.extend(std::iter::repeat(("n", Upos::Noun, 1, "obj")).take(8));
        spec.push(("big", Upos::Adj, 1, "amod"));
        let d = doc(vec![sent(&spec)]);
        assert_eq!(adj_adv_per_1000(&d), (100.0, 0.0));
        assert_eq!(adj_adv_per_1000(&doc(vec![the_cat_sat()])), (0.0, 0.0));
    }

    fn schema() -> FeatureSchema {
        FeatureSchema::bound(
            vec!["DET-NOUN".into(), "NOUN-VERB".into(), "VERB-PUNCT".into(), "ADJ-NOUN".into()],
            vec!["det-nsubj".into(), "nsubj-root".into(), "root-punct".into(), "amod-obj".into()],
        )
    }

    #[test]
    fn extract_composes_sub_features() {
        let d = doc(vec![the_cat_sat(), advcl_sentence()]);
        let s = schema();
        assert_eq!(s.len(), 21);
        let fv = extract_all(&d, &s).unwrap();
        let words = d.word_forms();
        let pos = pos_cooccurrence(&d);
        let dep = dep_cooccurrence(&d);
        let tm = dep_tree_metrics(&d, ChainMode::ArcSpan);
        let (adj, adv) = adj_adv_per_1000(&d);
        let mut expect = vec![
            2.0,
            words.len() as f64 / 2.0,
            rttr(&words).unwrap(),
            cttr(&words).unwrap(),
            mtld(&words, 0.72).unwrap(),
            0.5,
        ];
        expect.extend(s.bound_pos_pairs.iter().map(|k| pos.prob(k)));
        expect.extend(s.bound_dep_pairs.iter().map(|k| dep.prob(k)));
        expect.extend([tm.depth, tm.branching, tm.longest_span, flesch(&d), unique_noun_phrases(&d) as f64, adj, adv]);
        assert_eq!(fv.values, expect);
        assert_eq!(extract_all(&d, &s).unwrap(), fv);
    }

    #[test]
    fn extract_names_article_on_error() {
        let d = AnnotatedDocument {
            article_id: "art-9".into(),
            sentences: vec![sent(&[(".", Upos::Punct, 0, "root")])],
        };
        let e = extract_all(&d, &schema()).unwrap_err();
        assert!(e.to_string().contains("art-9"), "{e}");
    }

    #[test]
    fn g9_formatting() {
        assert_eq!(format_g9(119.19), "119.19");
        assert_eq!(format_g9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_g9(2.0), "2");
        assert_eq!(format_g9(123456789.0), "123456789");
        assert_eq!(format_g9(1234567890.0), "1.23456789e+09");
        assert_eq!(format_g9(0.00001234), "1.234e-05");
        assert_eq!(format_g9(-7.5), "-7.5");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let s = schema();
        let d = doc(vec![the_cat_sat()]);
        let fv = extract_all(&d, &s).unwrap();
        write_feature_csv(&p, &s, &[(fv.clone(), ClassLabel::Ps)]).unwrap();
        let t = read_feature_csv(&p).unwrap();
        assert_eq!(t.names, s.names);
        assert_eq!(t.labels, vec![ClassLabel::Ps]);
        for (a, b) in t.rows[0].iter().zip(&fv.values) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
        }
        let sp = dir.path().join("schema.json");
        s.save(&sp).unwrap();
        assert_eq!(FeatureSchema::load(&sp).unwrap(), s);
    }

    proptest::proptest! {
        #[test]
        fn rttr_cttr_identity_and_permutation(tokens in proptest::collection::vec("[a-e]{1,2}", 1..60), seed in 0u64..1000) {
            let r = rttr(&tokens).unwrap();
            let c = cttr(&tokens).unwrap();
            proptest::prop_assert!((r - c * 2f64.sqrt()).abs() < 1e-12);
            let mut shuffled = tokens.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut crate::rng::seeded(seed));
            proptest::prop_assert_eq!(rttr(&shuffled).unwrap(), r);
            proptest::prop_assert_eq!(cttr(&shuffled).unwrap(), c);
        }

        #[test]
        fn mtld_passes_at_least_one(tokens in proptest::collection::vec("[a-d]", 1..80)) {
            let n = tokens.len();
            let f = mtld_pass(tokens.iter().map(String::as_str), n, MTLD_THRESHOLD);
            let b = mtld_pass(tokens.iter().rev().map(String::as_str), n, MTLD_THRESHOLD);
            proptest::prop_assert!(f >= 1.0 && b >= 1.0);
        }

        #[test]
        fn probability_tables_sum_to_one(tags in proptest::collection::vec(0usize..18, 2..30)) {
            let tags: Vec<Upos> = tags.into_iter().map(|i| Upos::ALL[i]).collect();
            let d = doc(vec![tagged(&tags)]);
            for t in [pos_cooccurrence(&d), dep_cooccurrence(&d), pos_trigrams(&d)] {
                if !t.is_empty() {
                    let s: f64 = t.probabilities().values().sum();
                    proptest::prop_assert!((s - 1.0).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn tree_metric_bounds(parents in proptest::collection::vec(0usize..100, 1..12), seed in 0u64..1000) {
            // Random tree over nodes 0..n with node 0 as root, then relabelled by a
            // random permutation to positions 1..=n.
            use rand::seq::SliceRandom;
            let n = parents.len();
            let mut pos: Vec<usize> = (1..=n).collect();
            pos.shuffle(&mut crate::rng::seeded(seed));
            let mut heads = vec![0usize; n + 1];
            for k in 1..n {
                heads[pos[k]] = pos[parents[k] % k];
            }
            let s = Sentence { tokens: (1..=n)
                .map(|i| Token::new(i, "w", "w", Upos::Noun, heads[i], "dep")).collect() };
            proptest::prop_assert!(s.check_tree().is_ok());
            let m = sentence_tree_metrics(&s, ChainMode::ArcSpan);
            proptest::prop_assert!(m.depth <= (n - 1) as f64);
            proptest::prop_assert!(m.longest_span <= (n - 1) as f64);
        }
    }

    #[test]
    fn mtld_is_order_sensitive() {
        let a = ["x", "x", "y", "z", "w", "v", "u", "t"];
        let mut b = a;
        b.reverse();
        b.swap(0, 4);
        let fa = mtld_pass(a.iter().copied(), a.len(), MTLD_THRESHOLD);
        let fb = mtld_pass(b.iter().copied(), b.len(), MTLD_THRESHOLD);
        assert_ne!(fa, fb);
    }

    #[test]
    fn appending_non_simple_sentence_never_raises_ratio() {
        let mut sents = vec![the_cat_sat(), advcl_sentence(), the_cat_sat()];
        let mut prev = simple_sentence_ratio(&doc(sents.clone()));
        for _ in 0..4 {
            sents.push(advcl_sentence());
            let r = simple_sentence_ratio(&doc(sents.clone()));
            assert!(r <= prev);
            prev = r;
        }
    }
}
