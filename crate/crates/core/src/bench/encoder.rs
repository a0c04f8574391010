//! Deterministic document encoder standing in for a pretrained sentence
//! encoder: a signed feature-hashing bag of content lemmas, a hashed block of
//! POS bigrams and dependency relations, and a few style scalars. Each block
//! is normalised and weighted before the whole vector is L2-normalised.

use crate::conllu::{AnnotatedDocument, Upos};
use crate::features::{adj_adv_per_1000, simple_sentence_ratio};
use crate::rng::fnv1a;

#[derive(Debug, Clone, PartialEq)]
pub struct StyleEncoder {
    pub lexical_dim: usize,
    pub syntax_dim: usize,
    pub lexical_weight: f64,
    pub syntax_weight: f64,
    pub style_weight: f64,
}

impl Default for StyleEncoder {
    fn default() -> Self {
        StyleEncoder {
            lexical_dim: 256,
            syntax_dim: 24,
            lexical_weight: 1.0,
            syntax_weight: 0.3,
            style_weight: 0.5,
        }
    }
}

pub const STYLE_DIM: usize = 8;

fn add_hashed(v: &mut [f64], key: &str, weight: f64) {
    let h = fnv1a(key.as_bytes());
    let i = (h % v.len() as u64) as usize;
    let sign = if (h >> 40) & 1 == 0 { 1.0 } else { -1.0 };
    v[i] += sign * weight;
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

impl StyleEncoder {
    pub fn dim(&self) -> usize {
        self.lexical_dim + self.syntax_dim + STYLE_DIM
    }

    pub fn encode(&self, doc: &AnnotatedDocument) -> Vec<f32> {
        let mut lex = vec![0.0; self.lexical_dim];
        for t in doc.tokens() {
            if matches!(t.upos, Upos::Noun | Upos::Verb | Upos::Adj | Upos::Adv | Upos::Propn | Upos::Num) {
                add_hashed(&mut lex, &t.lemma.to_lowercase(), 1.0);
            }
        }
        lex.iter_mut().for_each(|x| *x = x.signum() * x.abs().sqrt());
        normalize(&mut lex);

        let mut syn = vec![0.0; self.syntax_dim];
        for s in &doc.sentences {
            for p in s.tokens.windows(2) {
                add_hashed(&mut syn, &format!("{}>{}", p[0].upos, p[1].upos), 1.0);
            }
            for t in &s.tokens {
                add_hashed(&mut syn, &format!("rel:{}", t.deprel.split(':').next().unwrap_or_default()), 1.0);
            }
        }
        normalize(&mut syn);

        let n_sent = doc.sentences.len().max(1) as f64;
        let words: Vec<String> = doc.word_forms();
        let n_words = words.len().max(1) as f64;
        let types = words.iter().collect::<std::collections::BTreeSet<_>>().len() as f64;
        let (adj, adv) = adj_adv_per_1000(doc);
        let style = [
            (n_sent - 15.0) / 10.0,
            (n_words / n_sent - 12.0) / 6.0,
            simple_sentence_ratio(doc) - 0.5,
            (adj - 80.0) / 80.0,
            (adv - 20.0) / 40.0,
            (types / n_words.sqrt() - 7.0) / 3.0,
            doc.tokens().filter(|t| t.upos == Upos::Aux).count() as f64 / n_sent - 0.3,
            doc.tokens().filter(|t| t.upos == Upos::Sconj).count() as f64 / n_sent - 0.3,
        ];

        let mut out = Vec::with_capacity(self.dim());
        out.extend(lex.iter().map(|x| x * self.lexical_weight));
        out.extend(syn.iter().map(|x| x * self.syntax_weight));
        out.extend(style.iter().map(|x| x * self.style_weight / (STYLE_DIM as f64).sqrt()));
        normalize(&mut out);
        out.into_iter().map(|x| x as f32).collect()
    }
}
