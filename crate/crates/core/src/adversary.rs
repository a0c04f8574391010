//! Adversarially modified PS articles.
//!
//! The surrogate obfuscator rewrites an annotated article so that the
//! measured style contrasts shrink: attributive adjectives are dropped,
//! adjacent simple sentences are joined into compound sentences, and content
//! lemmas are swapped for lexicon synonyms. Attack corpora from external
//! paraphrasers use the same JSON Lines record shape.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conllu::{AnnotatedDocument, Sentence, Token, Upos};
use crate::corpus::{ArticleRecord, ClassLabel, Corpus, Origin};
use crate::features::is_simple;
use crate::models::{Classifier, Dataset, Metrics};
use crate::split::SplitPlan;
use crate::{rng, Error, Result};

pub const SURROGATE_GENERATOR: &str = "surrogate-v1";

/// Lemma → synonyms, read from `lemma<TAB>syn1,syn2,...` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<lexicon>", e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lemma, syns) = line.split_once('\t').ok_or_else(|| Error::MalformedLine {
                line: i + 1,
                message: "expected lemma<TAB>synonyms".into(),
            })?;
            let syns: Vec<String> = syns
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            if syns.is_empty() {
                return Err(Error::MalformedLine {
                    line: i + 1,
                    message: format!("no synonyms for {lemma:?}"),
                });
            }
            entries.insert(lemma.trim().to_lowercase(), syns);
        }
        Ok(Lexicon { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file))
    }

    pub fn synonyms(&self, lemma: &str) -> Option<&[String]> {
        self.entries.get(&lemma.to_lowercase()).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObfuscationConfig {
    pub adjective_drop_rate: f64,
    pub merge_rate: f64,
    pub synonym_rate: f64,
    pub seed: u64,
}

impl ObfuscationConfig {
    pub fn identity() -> Self {
        ObfuscationConfig {
            adjective_drop_rate: 0.0,
            merge_rate: 0.0,
            synonym_rate: 0.0,
            seed: 0,
        }
    }

    fn validate(&self, lexicon: Option<&Lexicon>) -> Result<()> {
        for (name, r) in [
            ("adjective_drop_rate", self.adjective_drop_rate),
            ("merge_rate", self.merge_rate),
            ("synonym_rate", self.synonym_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidParameter(format!("{name} = {r} outside [0, 1]")));
            }
        }
        if self.synonym_rate > 0.0 && lexicon.is_none() {
            return Err(Error::MissingLexicon);
        }
        Ok(())
    }
}

/// Removes the tokens flagged in `drop` and renumbers the rest.
fn remove_tokens(s: &Sentence, drop: &[bool]) -> Sentence {
    let mut new_index = vec![0usize; s.tokens.len() + 1];
    let mut next = 1;
    for (i, d) in drop.iter().enumerate() {
        if !d {
            new_index[i + 1] = next;
            next += 1;
        }
    }
    let tokens = s
        .tokens
        .iter()
        .zip(drop)
        .filter(|(_, d)| !**d)
        .map(|(t, _)| Token {
            index: new_index[t.index],
            head: new_index[t.head],
            ..t.clone()
        })
        .collect();
    Sentence { tokens }
}

fn is_attributive_adjective(t: &Token) -> bool {
    t.upos == Upos::Adj && t.deprel.split(':').next() == Some("amod")
}

fn drop_adjectives(s: &Sentence, rate: f64, r: &mut rng::Rng) -> Option<Sentence> {
    let candidates: Vec<usize> = s.tokens.iter().filter(|t| is_attributive_adjective(t)).map(|t| t.index).collect();
    let chosen: Vec<usize> = candidates.into_iter().filter(|_| r.random::<f64>() < rate).collect();
    if chosen.is_empty() {
        return None;
    }
    let children = s.children();
    let mut drop = vec![false; s.tokens.len()];
    let mut stack = chosen;
    while let Some(i) = stack.pop() {
        if !drop[i - 1] {
            drop[i - 1] = true;
            stack.extend(&children[i]);
        }
    }
    Some(remove_tokens(s, &drop))
}

fn lowercase_first(form: &str) -> String {
    let mut c = form.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

/// `a` minus a trailing punctuation leaf, then "and", then `b` with its root
/// attached to `a`'s root as `conj`.
fn merge_pair(a: &Sentence, b: &Sentence) -> Sentence {
    let children = a.children();
    let mut first = a.clone();
    if let Some(last) = a.tokens.last() {
        if last.upos == Upos::Punct && children[last.index].is_empty() && a.tokens.len() > 1 {
            let mut drop = vec![false; a.tokens.len()];
            drop[a.tokens.len() - 1] = true;
            first = remove_tokens(a, &drop);
        }
    }
    let root_a = first.tokens[first.root().expect("validated sentence has a root")].index;
    let root_b = b.tokens[b.root().expect("validated sentence has a root")].index;
    let offset = first.tokens.len() + 1;
    let mut tokens = first.tokens;
    tokens.push(Token::new(offset, "and", "and", Upos::Cconj, root_b + offset, "cc"));
    for (k, t) in b.tokens.iter().enumerate() {
        let mut t = t.clone();
        t.index += offset;
        if t.head == 0 {
            t.head = root_a;
            t.deprel = "conj".into();
        } else {
            t.head += offset;
        }
        if k == 0 && t.upos != Upos::Propn && t.form != "I" {
            t.form = lowercase_first(&t.form);
        }
        tokens.push(t);
    }
    Sentence { tokens }
}

fn matches_case(template: &str, word: &str) -> String {
    if template.chars().next().is_some_and(char::is_uppercase) {
        let mut c = word.chars();
        match c.next() {
            Some(f) => f.to_uppercase().chain(c).collect(),
            None => String::new(),
        }
    } else {
        word.to_string()
    }
}

/// Rewrites one article. Draws come from a stream seeded by
/// `rng::derive_str(cfg.seed, article_id)`, so the result does not depend on
/// which other articles are processed or in what order. When nothing is
/// changed the input text and document are returned unchanged.
pub fn obfuscate(
    doc: &AnnotatedDocument,
    text: &str,
    cfg: &ObfuscationConfig,
    lexicon: Option<&Lexicon>,
) -> Result<(String, AnnotatedDocument)> {
    cfg.validate(lexicon)?;
    doc.validate()?;
    let mut r = rng::seeded(rng::derive_str(cfg.seed, &doc.article_id));
    let mut out = doc.clone();
    let mut changed = false;

    if cfg.adjective_drop_rate > 0.0 {
        for s in &mut out.sentences {
            if let Some(new) = drop_adjectives(s, cfg.adjective_drop_rate, &mut r) {
                *s = new;
                changed = true;
            }
        }
    }

    if cfg.merge_rate > 0.0 {
        let mut merged = Vec::with_capacity(out.sentences.len());
        let mut i = 0;
        while i < out.sentences.len() {
            let (a, next) = (&out.sentences[i], out.sentences.get(i + 1));
            if let Some(b) = next.filter(|b| is_simple(a) && is_simple(b)) {
                if r.random::<f64>() < cfg.merge_rate {
                    merged.push(merge_pair(a, b));
                    changed = true;
                    i += 2;
                    continue;
                }
            }
            merged.push(a.clone());
            i += 1;
        }
        out.sentences = merged;
    }

    if let (true, Some(lex)) = (cfg.synonym_rate > 0.0, lexicon) {
        for t in out.sentences.iter_mut().flat_map(|s| s.tokens.iter_mut()) {
            if !matches!(t.upos, Upos::Noun | Upos::Verb | Upos::Adj | Upos::Adv) {
                continue;
            }
            let Some(syns) = lex.synonyms(&t.lemma) else {
                continue;
            };
            if r.random::<f64>() < cfg.synonym_rate {
                let s = &syns[r.random_range(0..syns.len())];
                t.form = matches_case(&t.form, &inflect_like(t, s));
                t.lemma = s.clone();
                changed = true;
            }
        }
    }

    if !changed {
        return Ok((text.to_string(), doc.clone()));
    }
    out.validate()?;
    Ok((out.render_text(), out))
}

/// Carries a regular inflection over to a replacement lemma: a past-tense
/// verb or plural noun gets the regular form of the synonym.
fn inflect_like(t: &Token, syn: &str) -> String {
    if t.form.to_lowercase() == t.lemma.to_lowercase() || syn.contains(' ') {
        return syn.to_string();
    }
    match t.upos {
        Upos::Verb if syn.ends_with('e') => format!("{syn}d"),
        Upos::Verb => format!("{syn}ed"),
        Upos::Noun if syn.ends_with('s') || syn.ends_with("sh") || syn.ends_with("ch") => format!("{syn}es"),
        Upos::Noun => match syn.strip_suffix('y').filter(|s| !s.ends_with(['a', 'e', 'o', 'u'])) {
            Some(stem) => format!("{stem}ies"),
            None => format!("{syn}s"),
        },
        _ => syn.to_string(),
    }
}

/// One modified article, as exchanged in attack-corpus files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub id: String,
    pub parent_id: String,
    pub generator: String,
    pub text: String,
}

impl AttackRecord {
    pub fn origin(&self) -> Origin {
        if self.generator.starts_with("surrogate") {
            Origin::SurrogateModified
        } else {
            Origin::LlmModified
        }
    }

    pub fn to_article(&self) -> ArticleRecord {
        ArticleRecord {
            id: self.id.clone(),
            source: String::new(),
            published: None,
            label: ClassLabel::Ps,
            text: self.text.clone(),
            origin: self.origin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackManifest {
    pub total: usize,
    pub generators: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttackCorpus {
    pub records: Vec<AttackRecord>,
}

impl AttackCorpus {
    /// Checks id uniqueness and that each parent is a PS article of `source`.
    pub fn validate(&self, source: &Corpus) -> Result<()> {
        let mut seen = HashSet::new();
        for rec in &self.records {
            if !seen.insert(rec.id.as_str()) {
                return Err(Error::Mismatch(format!("duplicate attack id {:?}", rec.id)));
            }
            match source.get(&rec.parent_id) {
                Some(p) if p.label == ClassLabel::Ps => {}
                _ => {
                    return Err(Error::OrphanParent {
                        id: rec.id.clone(),
                        parent_id: rec.parent_id.clone(),
                    })
                }
            }
        }
        Ok(())
    }

    pub fn manifest(&self) -> AttackManifest {
        let mut generators = BTreeMap::new();
        for r in &self.records {
            *generators.entry(r.generator.clone()).or_insert(0) += 1;
        }
        AttackManifest {
            total: self.records.len(),
            generators,
        }
    }

    pub fn generators(&self) -> Vec<String> {
        self.manifest().generators.into_keys().collect()
    }

    pub fn parent_of(&self) -> HashMap<&str, &str> {
        self.records.iter().map(|r| (r.id.as_str(), r.parent_id.as_str())).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn read_attack_corpus<R: BufRead>(reader: R) -> Result<AttackCorpus> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<attack corpus>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AttackRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.text.trim().is_empty() {
            return Err(Error::EmptyText { line: i + 1 });
        }
        records.push(rec);
    }
    Ok(AttackCorpus { records })
}

/// Reads and validates an attack corpus against the source PS articles.
pub fn load_attack_corpus(path: impl AsRef<Path>, source: &Corpus) -> Result<AttackCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let corpus = read_attack_corpus(BufReader::new(file))?;
    corpus.validate(source)?;
    Ok(corpus)
}

pub fn attack_id(parent_id: &str, generator: &str) -> String {
    format!("{parent_id}::{generator}")
}

/// Surrogate attack over PS articles; returns the attack corpus and the
/// modified annotations keyed by attack id.
pub fn surrogate_attack(
    articles: &[(&ArticleRecord, &AnnotatedDocument)],
    cfg: &ObfuscationConfig,
    lexicon: Option<&Lexicon>,
    generator: &str,
) -> Result<(AttackCorpus, BTreeMap<String, AnnotatedDocument>)> {
    let out: Vec<(AttackRecord, AnnotatedDocument)> = articles
        .par_iter()
        .filter(|(rec, _)| rec.label == ClassLabel::Ps)
        .map(|(rec, doc)| {
            let (text, mut doc) = obfuscate(doc, &rec.text, cfg, lexicon).map_err(|e| e.for_article(&rec.id))?;
            let id = attack_id(&rec.id, generator);
            doc.article_id = id.clone();
            Ok((
                AttackRecord {
                    id,
                    parent_id: rec.id.clone(),
                    generator: generator.to_string(),
                    text,
                },
                doc,
            ))
        })
        .collect::<Result<_>>()?;
    let mut docs = BTreeMap::new();
    let mut records = Vec::with_capacity(out.len());
    for (r, d) in out {
        docs.insert(r.id.clone(), d);
        records.push(r);
    }
    Ok((AttackCorpus { records }, docs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub original: Metrics,
    pub generators: BTreeMap<String, Metrics>,
}

/// Builds one attacked test set per generator: LN test rows unchanged, PS test
/// rows replaced by their modified versions, and evaluates `model` on each.
/// `test` holds the original test side; `attacked` holds rows for attack ids.
pub fn attack_eval<C: Classifier + ?Sized>(
    model: &C,
    plan: &SplitPlan,
    test: &Dataset,
    attack: &AttackCorpus,
    attacked: &Dataset,
) -> Result<AttackReport> {
    let train = plan.train_set();
    let test_ids = plan.test_set();
    let attacked_index = attacked.index();
    let mut by_generator: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for r in &attack.records {
        if train.contains(r.parent_id.as_str()) {
            return Err(Error::Leakage(format!(
                "attack record {:?} modifies training article {:?}",
                r.id, r.parent_id
            )));
        }
        if !test_ids.contains(r.parent_id.as_str()) {
            return Err(Error::Mismatch(format!("attack parent {:?} is not in the split", r.parent_id)));
        }
        let &row = attacked_index
            .get(r.id.as_str())
            .ok_or_else(|| Error::Mismatch(format!("no row for attack record {:?}", r.id)))?;
        by_generator.entry(&r.generator).or_default().insert(&r.parent_id, row);
    }
    let original = test.evaluate(model)?;
    let mut generators = BTreeMap::new();
    for (g, rows) in by_generator {
        let mut set = Dataset::default();
        for (i, id) in test.ids.iter().enumerate() {
            match test.labels[i] {
                ClassLabel::Ln => set.push(id.clone(), test.rows[i].clone(), ClassLabel::Ln),
                ClassLabel::Ps => {
                    if let Some(&j) = rows.get(id.as_str()) {
                        set.push(attacked.ids[j].clone(), attacked.rows[j].clone(), ClassLabel::Ps);
                    }
                }
            }
        }
        generators.insert(g.to_string(), set.evaluate(model)?);
    }
    Ok(AttackReport { original, generators })
}
