//! Detection of templated ("pink slime") local news from linguistic and
//! structural evidence, a surrogate adversary that rewrites those articles,
//! and a continual-learning loop that adapts a detector to the rewrites.
//!
//! The crate is organised along the pipeline:
//!
//! * [`corpus`] and [`conllu`]: articles (JSON Lines) and their dependency
//!   annotations (CoNLL-U).
//! * [`matrix`]: the `PSEMB`/`PSCRD` binary matrix files.
//! * [`dedup`]: cosine near-duplicate removal.
//! * [`features`]: the handcrafted feature engine.
//! * [`split`]: PCA, DBSCAN and cluster-aware train/test splits.
//! * [`models`]: random forest, linear max-margin model, MLP head.
//! * [`adversary`]: surrogate obfuscation and attack corpora.
//! * [`adapt`]: staged continual adaptation with a replay buffer.
//! * [`evalreport`]: permutation tests, model consensus, report files.
//! * [`bench`]: a seeded synthetic corpus generator.

pub mod adapt;
pub mod adversary;
pub mod bench;
pub mod conllu;
pub mod corpus;
pub mod dedup;
pub mod error;
pub mod evalreport;
pub mod features;
pub mod matrix;
pub mod models;
pub mod rng;
pub mod split;

pub use error::{Error, Result};

/// Crate version, recorded in pipeline artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
