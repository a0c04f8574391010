//! Phrase trees that linearise into annotated sentences.

use crate::conllu::{Sentence, Token, Upos};

fn left_rank(deprel: &str) -> usize {
    const ORDER: [&str; 10] = ["cc", "mark", "case", "advmod", "nsubj", "aux", "det", "nummod", "amod", "compound"];
    ORDER.iter().position(|&d| d == deprel).unwrap_or(ORDER.len())
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    form: String,
    lemma: String,
    upos: Upos,
    deprel: String,
    left: Vec<Node>,
    right: Vec<Node>,
}

pub(crate) fn word(form: &str, lemma: &str, upos: Upos) -> Node {
    Node {
        form: form.to_string(),
        lemma: lemma.to_string(),
        upos,
        deprel: "dep".into(),
        left: Vec::new(),
        right: Vec::new(),
    }
}

/// Word whose lemma is its lowercased form.
pub(crate) fn w(form: &str, upos: Upos) -> Node {
    word(form, &form.to_lowercase(), upos)
}

impl Node {
    pub(crate) fn rel(mut self, deprel: &str) -> Self {
        self.deprel = deprel.to_string();
        self
    }

    /// Adds a left dependent. Left dependents are kept in English surface
    /// order by relation, so call order only matters within one relation.
    pub(crate) fn left(mut self, child: Node, deprel: &str) -> Self {
        let child = child.rel(deprel);
        let rank = left_rank(&child.deprel);
        let at = self.left.iter().position(|c| left_rank(&c.deprel) > rank).unwrap_or(self.left.len());
        self.left.insert(at, child);
        self
    }

    pub(crate) fn right(mut self, child: Node, deprel: &str) -> Self {
        self.right.push(child.rel(deprel));
        self
    }

    pub(crate) fn right_opt(self, child: Option<Node>, deprel: &str) -> Self {
        match child {
            Some(c) => self.right(c, deprel),
            None => self,
        }
    }

    /// Capitalises the first word of the linearised phrase.
    pub(crate) fn capitalize(mut self) -> Self {
        fn first(n: &mut Node) -> &mut Node {
            if n.left.is_empty() {
                n
            } else {
                first(&mut n.left[0])
            }
        }
        let f = first(&mut self);
        let mut c = f.form.chars();
        if let Some(h) = c.next() {
            f.form = h.to_uppercase().chain(c).collect();
        }
        self
    }

    /// Linearises a clause rooted here, appending a final full stop.
    pub(crate) fn sentence(self) -> Sentence {
        let root = self.right(w(".", Upos::Punct), "punct").capitalize().rel("root");
        let mut flat: Vec<(Node, usize)> = Vec::new();
        fn walk(n: Node, parent: usize, out: &mut Vec<(Node, usize)>) -> usize {
            let Node {
                form,
                lemma,
                upos,
                deprel,
                left,
                right,
            } = n;
            let leaf = Node {
                form,
                lemma,
                upos,
                deprel,
                left: Vec::new(),
                right: Vec::new(),
            };
            let left_ids: Vec<usize> = left.into_iter().map(|c| walk(c, 0, out)).collect();
            out.push((leaf, parent));
            let me = out.len();
            for id in left_ids {
                out[id - 1].1 = me;
            }
            for c in right {
                walk(c, me, out);
            }
            me
        }
        walk(root, 0, &mut flat);
        let tokens = flat
            .into_iter()
            .enumerate()
            .map(|(i, (n, head))| Token::new(i + 1, &n.form, &n.lemma, n.upos, head, &n.deprel))
            .collect();
        Sentence { tokens }
    }
}
