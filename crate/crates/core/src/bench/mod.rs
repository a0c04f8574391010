//! Seeded synthetic corpus with PS-like and LN-like articles.
//!
//! PS-like articles come from a fixed set of templates: short runs of simple
//! sentences over a small template vocabulary, dense with sensational
//! adjectives, with only the slots (places, names, numbers) changing between
//! instances. A few are near-copies of an earlier instance. LN-like articles
//! are longer, draw from a large vocabulary and mix simple sentences with
//! adverbial, relative, complement and coordinated clauses.

mod encoder;
mod grammar;
pub mod vocab;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use encoder::{StyleEncoder, STYLE_DIM};

use self::grammar::{w, word, Node};
use self::vocab::*;
use crate::adversary::Lexicon;
use crate::conllu::{save_conllu, AnnotatedDocument, Sentence, Upos};
use crate::corpus::{write_articles, ArticleRecord, ClassLabel, Origin};
use crate::matrix::EmbeddingMatrix;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub seed: u64,
    pub n_ps: usize,
    pub n_ln: usize,
    pub n_templates: usize,
    /// Probability that a PS article is a near-copy of an earlier one.
    pub near_copy_rate: f64,
    /// Probability that a template slot takes a word from outside the template.
    pub slot_noise: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 7,
            n_ps: 400,
            n_ln: 800,
            n_templates: 20,
            near_copy_rate: 0.05,
            slot_noise: 0.4,
        }
    }
}

#[derive(Debug, Clone)]
struct Frame {
    kind: usize,
    nouns: [usize; 3],
    verb: usize,
    adjs: [usize; 3],
    adv: usize,
}

#[derive(Debug, Clone)]
struct Template {
    frames: Vec<Frame>,
    /// Whether counted phrases use a number and a plural noun, or "every".
    plural: bool,
}

fn template(r: &mut rng::Rng) -> Template {
    let nouns: Vec<usize> = rand::seq::index::sample(r, PS_NOUNS.len(), 6).into_vec();
    let verbs: Vec<usize> = rand::seq::index::sample(r, PS_VERBS.len(), 4).into_vec();
    let adjs: Vec<usize> = rand::seq::index::sample(r, PS_ADJS.len(), 6).into_vec();
    let n_frames = r.random_range(8..=11);
    let frames = (0..n_frames)
        .map(|_| Frame {
            kind: r.random_range(0..6),
            nouns: [*nouns.choose(r).unwrap(), *nouns.choose(r).unwrap(), *nouns.choose(r).unwrap()],
            verb: *verbs.choose(r).unwrap(),
            adjs: [*adjs.choose(r).unwrap(), *adjs.choose(r).unwrap(), *adjs.choose(r).unwrap()],
            adv: r.random_range(0..PS_ADVS.len()),
        })
        .collect();
    Template {
        frames,
        plural: r.random_bool(0.5),
    }
}

fn det(form: &str) -> Node {
    w(form, Upos::Det)
}

fn noun(lemma: &str) -> Node {
    word(lemma, lemma, Upos::Noun)
}

fn plural(lemma: &str) -> Node {
    let form = if lemma.ends_with('s') || lemma.ends_with('h') {
        format!("{lemma}es")
    } else if let Some(stem) = lemma.strip_suffix('y').filter(|s| !s.ends_with(['a', 'e', 'o'])) {
        format!("{stem}ies")
    } else {
        format!("{lemma}s")
    };
    word(&form, lemma, Upos::Noun)
}

fn adj(lemma: &str) -> Node {
    word(lemma, lemma, Upos::Adj)
}

fn propn(form: &str) -> Node {
    word(form, form, Upos::Propn)
}

fn num(r: &mut rng::Rng) -> Node {
    let n: u32 = match r.random_range(0..3) {
        0 => r.random_range(2..20),
        1 => r.random_range(20..1000),
        _ => r.random_range(1..900) * 1000,
    };
    let form = if n >= 1000 {
        format!("{},{:03}", n / 1000, n % 1000)
    } else {
        n.to_string()
    };
    word(&form, &form, Upos::Num)
}

fn person(r: &mut rng::Rng) -> Node {
    propn(FIRST_NAMES.choose(r).unwrap()).right(propn(LAST_NAMES.choose(r).unwrap()), "flat")
}

fn city(r: &mut rng::Rng) -> Node {
    propn(CITIES.choose(r).unwrap())
}

fn street(r: &mut rng::Rng) -> Node {
    word("Street", "street", Upos::Propn).left(propn(STREETS.choose(r).unwrap()), "compound")
}

fn prep(n: Node, p: &str, rel: &str) -> Node {
    n.left(w(p, Upos::Adp), "case").rel(rel)
}

fn ps_verb(i: usize) -> Node {
    let (lemma, past, _) = PS_VERBS[i];
    word(past, lemma, Upos::Verb)
}

fn ps_np(noun_i: usize, adjs: &[usize], determiner: Option<&str>) -> Node {
    let mut n = noun(PS_NOUNS[noun_i].0);
    if let Some(d) = determiner {
        n = n.left(det(d), "det");
    }
    for &a in adjs {
        n = n.left(adj(PS_ADJS[a].0), "amod");
    }
    n
}

/// Instantiates a frame. Each noun and adjective slot is swapped for a word
/// from the whole PS vocabulary with probability `slot_noise`.
fn ps_sentence(f: &Frame, plural_numbers: bool, slot_noise: f64, r: &mut rng::Rng) -> Sentence {
    let mut f = f.clone();
    for n in &mut f.nouns {
        if r.random_bool(slot_noise) {
            *n = r.random_range(0..PS_NOUNS.len());
        }
    }
    for a in &mut f.adjs {
        if r.random_bool(slot_noise) {
            *a = r.random_range(0..PS_ADJS.len());
        }
    }
    let [n1, n2, n3] = f.nouns;
    let [a1, a2, a3] = f.adjs;
    let v = ps_verb(f.verb);
    let counted = |r: &mut rng::Rng, i: usize, adjs: &[usize]| {
        let mut n = if plural_numbers { plural(PS_NOUNS[i].0) } else { noun(PS_NOUNS[i].0) };
        for &a in adjs {
            n = n.left(adj(PS_ADJS[a].0), "amod");
        }
        if plural_numbers {
            n.left(num(r), "nummod")
        } else {
            n.left(det("every"), "det")
        }
    };
    let clause = match f.kind {
        0 => v
            .left(ps_np(n1, &[a1, a2], Some("the")).right(prep(city(r), "in", "nmod"), "nmod"), "nsubj")
            .right(ps_np(n2, &[a3], Some("a")), "obj"),
        1 => v
            .left(person(r), "nsubj")
            .right(ps_np(n1, &[a1], Some("the")), "obj")
            .right(prep(street(r), "on", "obl"), "obl"),
        2 => v
            .left(ps_np(n1, &[a1], Some("the")), "nsubj")
            .right(counted(r, n2, &[a2]), "obj"),
        3 => v
            .left(ps_np(n1, &[a1], None), "nsubj")
            .right(ps_np(n2, &[a2], None), "obj")
            .right(prep(ps_np(n3, &[a3], Some("the")), "at", "obl"), "obl"),
        4 => v
            .left(ps_np(n1, &[], Some("the")), "nsubj")
            .right(ps_np(n2, &[a1, a2], None), "obj")
            .right(prep(city(r), "in", "obl"), "obl"),
        _ => v
            .left(word(PS_ADVS[f.adv].0, PS_ADVS[f.adv].0, Upos::Adv), "advmod")
            .left(ps_np(n1, &[a1], Some("the")), "nsubj")
            .right(ps_np(n2, &[a2], Some("a")), "obj"),
    };
    if r.random_bool(0.1) {
        // Occasional reported clause: "<Person> said <clause>".
        return word("said", "say", Upos::Verb)
            .left(person(r), "nsubj")
            .right(clause.left(w("that", Upos::Sconj), "mark"), "ccomp")
            .sentence();
    }
    clause.sentence()
}

struct LnTopic {
    nouns: Vec<&'static str>,
    verbs: Vec<(&'static str, &'static str)>,
}

fn ln_topic(r: &mut rng::Rng) -> LnTopic {
    LnTopic {
        nouns: LN_NOUNS.choose_multiple(r, 30).copied().collect(),
        verbs: LN_VERBS.choose_multiple(r, 14).copied().collect(),
    }
}

fn ln_np(t: &LnTopic, r: &mut rng::Rng) -> Node {
    if r.random_bool(0.12) {
        return w(["they", "it", "we"].choose(r).unwrap(), Upos::Pron);
    }
    if r.random_bool(0.1) {
        return person(r);
    }
    let mut n = noun(t.nouns.choose(r).unwrap());
    if r.random_bool(0.2) {
        n = n.left(adj(LN_ADJS.choose(r).unwrap()), "amod");
    }
    n.left(det(["the", "the", "a", "this", "their"].choose(r).unwrap()), "det")
}

fn ln_verb(t: &LnTopic, r: &mut rng::Rng) -> Node {
    let (lemma, past) = *t.verbs.choose(r).unwrap();
    let v = word(past, lemma, Upos::Verb);
    if r.random_bool(0.3) {
        let (form, lemma) = *[("has", "have"), ("had", "have"), ("have", "have"), ("was", "be")].choose(r).unwrap();
        v.left(word(form, lemma, Upos::Aux), "aux")
    } else {
        v
    }
}

fn ln_pp(t: &LnTopic, r: &mut rng::Rng) -> Option<Node> {
    if !r.random_bool(0.45) {
        return None;
    }
    let p = ["in", "at", "on", "for", "with", "from"].choose(r).unwrap();
    let n = if r.random_bool(0.25) { city(r) } else { ln_np(t, r) };
    Some(prep(n, p, "obl"))
}

fn ln_clause(t: &LnTopic, r: &mut rng::Rng) -> Node {
    let adv = r.random_bool(0.12).then(|| {
        let a = LN_ADVS.choose(r).unwrap();
        word(a, a, Upos::Adv)
    });
    ln_verb(t, r)
        .left(ln_np(t, r), "nsubj")
        .right(ln_np(t, r), "obj")
        .right_opt(ln_pp(t, r), "obl")
        .right_opt(adv, "advmod")
}

fn ln_sentence(t: &LnTopic, r: &mut rng::Rng) -> Sentence {
    let kind = r.random_range(0..100);
    let s = match kind {
        0..=44 => ln_clause(t, r),
        45..=59 => {
            let sub = ln_clause(t, r).left(w(SUBORDINATORS.choose(r).unwrap(), Upos::Sconj), "mark");
            ln_clause(t, r).right(sub, "advcl")
        }
        60..=71 => {
            let (lemma, past) = *t.verbs.choose(r).unwrap();
            let rel = word(past, lemma, Upos::Verb)
                .left(w(["who", "that", "which"].choose(r).unwrap(), Upos::Pron), "nsubj")
                .right(ln_np(t, r), "obj");
            let subj = noun(t.nouns.choose(r).unwrap()).left(det("the"), "det").right(rel, "acl:relcl");
            ln_verb(t, r).left(subj, "nsubj").right(ln_np(t, r), "obj").right_opt(ln_pp(t, r), "obl")
        }
        72..=87 => {
            let subj = if r.random_bool(0.5) { person(r) } else { ln_np(t, r) };
            let verb = *["said", "noted", "argued", "explained", "warned"].choose(r).unwrap();
            let lemma = match verb {
                "said" => "say",
                "noted" => "note",
                "argued" => "argue",
                "explained" => "explain",
                _ => "warn",
            };
            word(verb, lemma, Upos::Verb)
                .left(subj, "nsubj")
                .right(ln_clause(t, r).left(w("that", Upos::Sconj), "mark"), "ccomp")
        }
        _ => {
            let (lemma, past) = *t.verbs.choose(r).unwrap();
            let second = word(past, lemma, Upos::Verb)
                .left(w("and", Upos::Cconj), "cc")
                .right(ln_np(t, r), "obj");
            ln_clause(t, r).right(second, "conj")
        }
    };
    s.sentence()
}

/// Generated corpus, annotations and embeddings.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub config: BenchConfig,
    pub articles: Vec<ArticleRecord>,
    pub docs: BTreeMap<String, AnnotatedDocument>,
    pub embeddings: EmbeddingMatrix,
    /// Template index of each PS article.
    pub templates: BTreeMap<String, usize>,
}

/// Paths written by [`Benchmark::write`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchFiles {
    pub ps_articles: PathBuf,
    pub ln_articles: PathBuf,
    pub annotations: PathBuf,
    pub embeddings: PathBuf,
    pub embedding_ids: PathBuf,
    pub lexicon: PathBuf,
    pub templates: PathBuf,
}

impl BenchFiles {
    pub fn in_dir(dir: &Path) -> Self {
        BenchFiles {
            ps_articles: dir.join("ps.jsonl"),
            ln_articles: dir.join("ln.jsonl"),
            annotations: dir.join("annotations.conllu"),
            embeddings: dir.join("embeddings.psemb"),
            embedding_ids: dir.join("embeddings.ids.jsonl"),
            lexicon: dir.join("lexicon.tsv"),
            templates: dir.join("templates.json"),
        }
    }
}

fn doc(id: &str, sentences: Vec<Sentence>) -> AnnotatedDocument {
    AnnotatedDocument {
        article_id: id.to_string(),
        sentences,
    }
}

fn record(id: &str, source: String, label: ClassLabel, d: &AnnotatedDocument) -> ArticleRecord {
    ArticleRecord {
        id: id.to_string(),
        source,
        published: None,
        label,
        text: d.render_text(),
        origin: Origin::Human,
    }
}

pub fn make_synthetic_benchmark(cfg: &BenchConfig) -> Result<Benchmark> {
    if cfg.n_ps < 50 || cfg.n_ln < 50 || cfg.n_templates == 0 || !(0.0..=1.0).contains(&cfg.near_copy_rate)
        || !(0.0..=1.0).contains(&cfg.slot_noise) {
        return Err(Error::InvalidParameter(format!("{cfg:?}")));
    }
    let mut r = rng::seeded(cfg.seed);
    let templates: Vec<Template> = (0..cfg.n_templates).map(|_| template(&mut r)).collect();
    let mut articles = Vec::with_capacity(cfg.n_ps + cfg.n_ln);
    let mut docs = BTreeMap::new();
    let mut template_of = BTreeMap::new();
    let mut by_template: Vec<Vec<String>> = vec![Vec::new(); cfg.n_templates];

    for i in 0..cfg.n_ps {
        let id = format!("ps-{:05}", i + 1);
        let k = i % cfg.n_templates;
        let t = &templates[k];
        let d = match by_template[k].choose(&mut r).filter(|_| r.random_bool(cfg.near_copy_rate)) {
            Some(src) => {
                let mut d: AnnotatedDocument = docs.get(src).cloned().expect("earlier article");
                d.article_id = id.clone();
                let j = r.random_range(0..d.sentences.len());
                d.sentences[j] = ps_sentence(&t.frames[j % t.frames.len()], t.plural, cfg.slot_noise, &mut r);
                d
            }
            None => {
                let n = r.random_range(7..=18);
                let offset = r.random_range(0..t.frames.len());
                let sentences = (0..n)
                    .map(|j| ps_sentence(&t.frames[(offset + j) % t.frames.len()], t.plural, cfg.slot_noise, &mut r))
                    .collect();
                doc(&id, sentences)
            }
        };
        articles.push(record(&id, format!("ps-network-{:02}", k + 1), ClassLabel::Ps, &d));
        docs.insert(id.clone(), d);
        template_of.insert(id.clone(), k);
        by_template[k].push(id);
    }
    for i in 0..cfg.n_ln {
        let id = format!("ln-{:05}", i + 1);
        let topic = ln_topic(&mut r);
        let n = r.random_range(10..=30);
        let d = doc(&id, (0..n).map(|_| ln_sentence(&topic, &mut r)).collect());
        articles.push(record(&id, format!("ln-paper-{:02}", r.random_range(1..=40)), ClassLabel::Ln, &d));
        docs.insert(id, d);
    }
    for d in docs.values() {
        d.validate()?;
    }
    let enc = StyleEncoder::default();
    let rows: Vec<Vec<f32>> = articles.iter().map(|a| enc.encode(&docs[&a.id])).collect();
    let embeddings = EmbeddingMatrix::from_rows(articles.iter().map(|a| a.id.clone()).collect(), &rows)?;
    Ok(Benchmark {
        config: cfg.clone(),
        articles,
        docs,
        embeddings,
        templates: template_of,
    })
}

/// Synonym lexicon covering the PS vocabulary, as TSV.
pub fn lexicon_tsv() -> String {
    let mut out = String::from("# lemma\tsynonyms\n");
    let mut entries: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (l, s) in PS_NOUNS.iter().chain(PS_ADJS).chain(PS_ADVS) {
        entries.entry(l).or_default().extend(s.iter());
    }
    for (l, _, s) in PS_VERBS {
        entries.entry(l).or_default().extend(s.iter());
    }
    for (l, s) in entries {
        let mut s = s;
        s.dedup();
        let _ = writeln!(out, "{l}\t{}", s.join(","));
    }
    out
}

pub fn lexicon() -> Lexicon {
    Lexicon::parse(lexicon_tsv().as_bytes()).expect("built-in lexicon is well formed")
}

impl Benchmark {
    pub fn by_label(&self, label: ClassLabel) -> impl Iterator<Item = &ArticleRecord> {
        self.articles.iter().filter(move |a| a.label == label)
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<BenchFiles> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = BenchFiles::in_dir(dir);
        let ps: Vec<ArticleRecord> = self.by_label(ClassLabel::Ps).cloned().collect();
        let ln: Vec<ArticleRecord> = self.by_label(ClassLabel::Ln).cloned().collect();
        write_articles(&files.ps_articles, &ps)?;
        write_articles(&files.ln_articles, &ln)?;
        save_conllu(&files.annotations, self.articles.iter().map(|a| &self.docs[&a.id]))?;
        self.embeddings.save(&files.embeddings, &files.embedding_ids)?;
        std::fs::write(&files.lexicon, lexicon_tsv()).map_err(|e| Error::io(&files.lexicon, e))?;
        std::fs::write(&files.templates, serde_json::to_string_pretty(&self.templates)? + "\n")
            .map_err(|e| Error::io(&files.templates, e))?;
        Ok(files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Benchmark {
        make_synthetic_benchmark(&BenchConfig {
            n_ps: 60,
            n_ln: 60,
            n_templates: 4,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn sizes_and_labels() {
        let b = small();
        assert_eq!(b.by_label(ClassLabel::Ps).count(), 60);
        assert_eq!(b.by_label(ClassLabel::Ln).count(), 60);
        assert_eq!(b.embeddings.n(), 120);
        assert_eq!(b.embeddings.d(), StyleEncoder::default().dim());
        assert!(make_synthetic_benchmark(&BenchConfig { n_ps: 10, ..Default::default() }).is_err());
    }

    #[test]
    fn same_seed_same_files() {
        let dir = tempfile::tempdir().unwrap();
        let a = small().write(dir.path().join("a")).unwrap();
        let b = small().write(dir.path().join("b")).unwrap();
        for (x, y) in [
            (&a.ps_articles, &b.ps_articles),
            (&a.ln_articles, &b.ln_articles),
            (&a.annotations, &b.annotations),
            (&a.embeddings, &b.embeddings),
            (&a.embedding_ids, &b.embedding_ids),
        ] {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }

    #[test]
    fn annotations_reparse() {
        let dir = tempfile::tempdir().unwrap();
        let b = small();
        let files = b.write(dir.path()).unwrap();
        let docs = crate::conllu::read_conllu(&files.annotations).unwrap();
        assert_eq!(docs.len(), 120);
        assert_eq!(docs["ps-00001"], b.docs["ps-00001"]);
    }

    #[test]
    fn lexicon_parses() {
        let l = lexicon();
        assert!(l.synonyms("home").is_some());
        assert!(l.synonyms("sell").is_some());
    }
}
