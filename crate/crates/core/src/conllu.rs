//! Reading and writing CoNLL-U dependency annotations.
//!
//! Documents are delimited by `# newdoc id = <article_id>` comments.
//! Multiword-token ranges (`3-4`) and empty nodes (`5.1`) are skipped. Every
//! sentence is checked to be a single-rooted tree on ingest.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Universal POS tags. `Space` is not part of the universal inventory but is
/// emitted by common taggers for whitespace tokens, so it is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Upos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
    Space,
}

impl Upos {
    pub const ALL: [Upos; 18] = [
        Upos::Adj,
        Upos::Adp,
        Upos::Adv,
        Upos::Aux,
        Upos::Cconj,
        Upos::Det,
        Upos::Intj,
        Upos::Noun,
        Upos::Num,
        Upos::Part,
        Upos::Pron,
        Upos::Propn,
        Upos::Punct,
        Upos::Sconj,
        Upos::Sym,
        Upos::Verb,
        Upos::X,
        Upos::Space,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Upos::Adj => "ADJ",
            Upos::Adp => "ADP",
            Upos::Adv => "ADV",
            Upos::Aux => "AUX",
            Upos::Cconj => "CCONJ",
            Upos::Det => "DET",
            Upos::Intj => "INTJ",
            Upos::Noun => "NOUN",
            Upos::Num => "NUM",
            Upos::Part => "PART",
            Upos::Pron => "PRON",
            Upos::Propn => "PROPN",
            Upos::Punct => "PUNCT",
            Upos::Sconj => "SCONJ",
            Upos::Sym => "SYM",
            Upos::Verb => "VERB",
            Upos::X => "X",
            Upos::Space => "SPACE",
        }
    }

    /// Tokens counted as words by the lexical metrics.
    pub fn is_word(self) -> bool {
        !matches!(self, Upos::Punct | Upos::Sym | Upos::X | Upos::Space)
    }
}

impl FromStr for Upos {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Upos::ALL.iter().copied().find(|u| u.as_str() == s).ok_or(())
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: Upos,
    /// Index of the governor, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

impl Token {
    pub fn new(index: usize, form: &str, lemma: &str, upos: Upos, head: usize, deprel: &str) -> Self {
        Token {
            index,
            form: form.to_string(),
            lemma: lemma.to_string(),
            upos,
            head,
            deprel: deprel.to_string(),
        }
    }

    pub fn is_word(&self) -> bool {
        self.upos.is_word()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Index (0-based into `tokens`) of the root token.
    pub fn root(&self) -> Option<usize> {
        self.tokens.iter().position(|t| t.head == 0)
    }

    /// Children lists indexed by 1-based token index; slot 0 holds the root(s).
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.tokens.len() + 1];
        for t in &self.tokens {
            if t.head <= self.tokens.len() {
                ch[t.head].push(t.index);
            }
        }
        ch
    }

    /// Checks positions, head ranges, acyclicity and the single root.
    pub fn check_tree(&self) -> std::result::Result<(), String> {
        let n = self.tokens.len();
        if n == 0 {
            return Err("empty sentence".into());
        }
        for (i, t) in self.tokens.iter().enumerate() {
            if t.index != i + 1 {
                return Err(format!("token at position {} has index {}", i + 1, t.index));
            }
            if t.head > n {
                return Err(format!("token {} has head {} outside sentence", t.index, t.head));
            }
            if t.head == t.index {
                return Err(format!("cycle: token {} heads itself", t.index));
            }
            if t.deprel.is_empty() {
                return Err(format!("token {} has empty deprel", t.index));
            }
        }
        for t in &self.tokens {
            let mut cur = t.index;
            let mut steps = 0;
            while cur != 0 {
                cur = self.tokens[cur - 1].head;
                steps += 1;
                if steps > n {
                    return Err(format!("cycle through token {}", t.index));
                }
            }
        }
        let roots = self.tokens.iter().filter(|t| t.head == 0).count();
        if roots != 1 {
            return Err(format!("expected exactly one root, found {roots}"));
        }
        Ok(())
    }

    /// Surface text with simple detokenisation (no space before punctuation).
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            let attach = t.upos == Upos::Punct && !matches!(t.form.as_str(), "(" | "[" | "\u{201c}");
            if i > 0 && !attach {
                out.push(' ');
            }
            out.push_str(&t.form);
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub article_id: String,
    pub sentences: Vec<Sentence>,
}

impl AnnotatedDocument {
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.sentences.iter().enumerate() {
            s.check_tree().map_err(|message| Error::Tree {
                doc: self.article_id.clone(),
                sentence: i + 1,
                message,
            })?;
        }
        Ok(())
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    pub fn word_tokens(&self) -> impl Iterator<Item = &Token> {
        self.tokens().filter(|t| t.is_word())
    }

    /// Lowercased word forms, the input of the lexical-diversity metrics.
    pub fn word_forms(&self) -> Vec<String> {
        self.word_tokens().map(|t| t.form.to_lowercase()).collect()
    }

    pub fn render_text(&self) -> String {
        self.sentences
            .iter()
            .map(Sentence::text)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn read_conllu(path: impl AsRef<Path>) -> Result<BTreeMap<String, AnnotatedDocument>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_conllu(BufReader::new(file))
}

fn newdoc_id(comment: &str) -> Option<&str> {
    let rest = comment.trim_start_matches('#').trim_start();
    let rest = rest.strip_prefix("newdoc")?.trim_start();
    let rest = rest.strip_prefix("id")?.trim_start();
    let rest = rest.strip_prefix('=')?.trim();
    Some(rest)
}

pub fn parse_conllu<R: BufRead>(reader: R) -> Result<BTreeMap<String, AnnotatedDocument>> {
    let mut docs: BTreeMap<String, AnnotatedDocument> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    let mut current: Option<AnnotatedDocument> = None;
    let mut sentence: Vec<Token> = Vec::new();
    let mut sentence_start = 0usize;

    fn close_sentence(
        current: &mut Option<AnnotatedDocument>,
        sentence: &mut Vec<Token>,
    ) -> Result<()> {
        if sentence.is_empty() {
            return Ok(());
        }
        let doc = current.as_mut().expect("tokens only accepted inside a document");
        let s = Sentence {
            tokens: std::mem::take(sentence),
        };
        s.check_tree().map_err(|message| Error::Tree {
            doc: doc.article_id.clone(),
            sentence: doc.sentences.len() + 1,
            message,
        })?;
        doc.sentences.push(s);
        Ok(())
    }

    fn close_doc(
        docs: &mut BTreeMap<String, AnnotatedDocument>,
        current: &mut Option<AnnotatedDocument>,
    ) {
        if let Some(d) = current.take() {
            docs.insert(d.article_id.clone(), d);
        }
    }

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<conllu>", e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            close_sentence(&mut current, &mut sentence)?;
            continue;
        }
        if line.starts_with('#') {
            if let Some(id) = newdoc_id(line) {
                close_sentence(&mut current, &mut sentence)?;
                close_doc(&mut docs, &mut current);
                if id.is_empty() {
                    return Err(Error::Conllu {
                        line: lineno,
                        message: "empty newdoc id".into(),
                    });
                }
                if docs.contains_key(id) {
                    return Err(Error::Conllu {
                        line: lineno,
                        message: format!("document {id:?} appears twice"),
                    });
                }
                order.push(id.to_string());
                current = Some(AnnotatedDocument {
                    article_id: id.to_string(),
                    sentences: Vec::new(),
                });
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Conllu {
                line: lineno,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        if current.is_none() {
            return Err(Error::Conllu {
                line: lineno,
                message: "token before any `# newdoc id =` marker".into(),
            });
        }
        let bad = |what: &str| Error::Conllu {
            line: lineno,
            message: format!("invalid {what}"),
        };
        let index: usize = cols[0].parse().map_err(|_| bad("ID"))?;
        if sentence.is_empty() {
            sentence_start = lineno;
        }
        if index != sentence.len() + 1 {
            return Err(Error::Conllu {
                line: lineno,
                message: format!(
                    "token index {index} out of sequence (sentence starts at line {sentence_start})"
                ),
            });
        }
        let upos = Upos::from_str(cols[3]).map_err(|_| Error::UnknownUpos {
            line: lineno,
            tag: cols[3].to_string(),
        })?;
        let head: usize = cols[6].parse().map_err(|_| bad("HEAD"))?;
        let deprel = cols[7];
        if deprel.is_empty() || deprel == "_" {
            return Err(bad("DEPREL"));
        }
        sentence.push(Token {
            index,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos,
            head,
            deprel: deprel.to_string(),
        });
    }
    close_sentence(&mut current, &mut sentence)?;
    close_doc(&mut docs, &mut current);
    Ok(docs)
}

pub fn write_conllu<'a, W: Write>(
    mut w: W,
    docs: impl IntoIterator<Item = &'a AnnotatedDocument>,
) -> std::io::Result<()> {
    for doc in docs {
        writeln!(w, "# newdoc id = {}", doc.article_id)?;
        for (i, s) in doc.sentences.iter().enumerate() {
            writeln!(w, "# sent_id = {}-{}", doc.article_id, i + 1)?;
            writeln!(w, "# text = {}", s.text())?;
            for t in &s.tokens {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
                    t.index, t.form, t.lemma, t.upos, t.head, t.deprel
                )?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn save_conllu<'a>(
    path: impl AsRef<Path>,
    docs: impl IntoIterator<Item = &'a AnnotatedDocument>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_conllu(&mut w, docs).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(s: &str) -> Result<BTreeMap<String, AnnotatedDocument>> {
        parse_conllu(Cursor::new(s.as_bytes().to_vec()))
    }

    const CAT: &str = "# newdoc id = d1\n\
1\tthe\tthe\tDET\t_\t_\t2\tdet\t_\t_\n\
2\tcat\tcat\tNOUN\t_\t_\t3\tnsubj\t_\t_\n\
3\tsat\tsit\tVERB\t_\t_\t0\troot\t_\t_\n\n";

    #[test]
    fn single_sentence() {
        let docs = parse(CAT).unwrap();
        assert_eq!(docs.len(), 1);
        let d = &docs["d1"];
        assert_eq!(d.sentences.len(), 1);
        assert_eq!(d.sentences[0].tokens.len(), 3);
        assert_eq!(d.sentences[0].tokens[2].lemma, "sit");
    }

    #[test]
    fn two_sentence_document() {
        let two = format!("{CAT}1\tit\tit\tPRON\t_\t_\t2\tnsubj\t_\t_\n2\tran\trun\tVERB\t_\t_\t0\troot\t_\t_\n\n");
        let docs = parse(&two).unwrap();
        assert_eq!(docs["d1"].sentences.len(), 2);
    }

    #[test]
    fn cycle_is_rejected_with_ordinal() {
        let s = "# newdoc id = d\n\
1\ta\ta\tNOUN\t_\t_\t2\tdep\t_\t_\n\
2\tb\tb\tNOUN\t_\t_\t1\tdep\t_\t_\n\n";
        match parse(s).unwrap_err() {
            Error::Tree { sentence, message, .. } => {
                assert_eq!(sentence, 1);
                assert!(message.contains("cycle"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn multiple_roots_rejected() {
        let s = "# newdoc id = d\n\
1\ta\ta\tNOUN\t_\t_\t0\troot\t_\t_\n\
2\tb\tb\tNOUN\t_\t_\t0\troot\t_\t_\n\n";
        assert!(matches!(parse(s), Err(Error::Tree { .. })));
    }

    #[test]
    fn unknown_upos_rejected() {
        let s = "# newdoc id = d\n1\ta\ta\tNOUNISH\t_\t_\t0\troot\t_\t_\n\n";
        assert!(matches!(parse(s), Err(Error::UnknownUpos { line: 2, .. })));
    }

    #[test]
    fn multiword_and_empty_nodes_skipped() {
        let s = "# newdoc id = d\n\
1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\t_\n\
2\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_\n\
3\tgo\tgo\tVERB\t_\t_\t0\troot\t_\t_\n\
3.1\tx\tx\tVERB\t_\t_\t_\t_\t_\t_\n\n";
        let docs = parse(s).unwrap();
        assert_eq!(docs["d"].sentences[0].len(), 3);
    }

    #[test]
    fn tokens_outside_document_rejected() {
        let s = "1\ta\ta\tNOUN\t_\t_\t0\troot\t_\t_\n";
        assert!(matches!(parse(s), Err(Error::Conllu { line: 1, .. })));
    }

    #[test]
    fn documents_split_on_newdoc_without_blank_line() {
        let s = "# newdoc id = a\n1\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\n# newdoc id = b\n1\ty\ty\tNOUN\t_\t_\t0\troot\t_\t_\n";
        let docs = parse(s).unwrap();
        assert_eq!(docs.len(), 2);
    }

    #[test]
    fn write_then_read() {
        let docs = parse(CAT).unwrap();
        let mut buf = Vec::new();
        write_conllu(&mut buf, docs.values()).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), docs);
    }

    #[test]
    fn text_rendering() {
        let mut s = parse(CAT).unwrap()["d1"].sentences[0].clone();
        s.tokens.push(Token::new(4, ".", ".", Upos::Punct, 3, "punct"));
        assert_eq!(s.text(), "the cat sat.");
    }

    proptest::proptest! {
        /// Random head assignments: whenever the validator accepts, every token
        /// reaches the root within sentence-length steps.
        #[test]
        fn accepted_trees_reach_root(heads in proptest::collection::vec(0usize..8, 1..8)) {
            let n = heads.len();
            let tokens: Vec<Token> = heads.iter().enumerate()
                .map(|(i, &h)| Token::new(i + 1, "w", "w", Upos::Noun, h.min(n), "dep"))
                .collect();
            let s = Sentence { tokens };
            if s.check_tree().is_ok() {
                for t in &s.tokens {
                    let mut cur = t.index;
                    let mut steps = 0;
                    while cur != 0 { cur = s.tokens[cur - 1].head; steps += 1; }
                    proptest::prop_assert!(steps <= n);
                }
            }
        }
    }
}
