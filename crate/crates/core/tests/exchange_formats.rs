// Files in the exchange formats written as an external producer would, then
// read back through the core validators.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use pinkslime_core::adapt::{run_adaptation_curve, AdaptConfig, AdaptData, AdaptMode};
use pinkslime_core::adversary::{load_attack_corpus, surrogate_attack, AttackRecord, ObfuscationConfig};
use pinkslime_core::bench::{self, make_synthetic_benchmark, BenchConfig, StyleEncoder};
use pinkslime_core::conllu::{read_conllu, save_conllu};
use pinkslime_core::corpus::{ingest_articles, join, write_articles, ArticleRecord, ClassLabel, LabelSource};
use pinkslime_core::matrix::{load_embeddings, read_matrix, EmbeddingMatrix, COORDS_MAGIC, EMBEDDING_MAGIC};
use pinkslime_core::models::{train_head, Dataset, Model, TrainConfig};
use pinkslime_core::split::{pca_reduce, ReducedCoords, SplitPlan};
use pinkslime_core::Error;

struct Fixture {
    ps: Vec<ArticleRecord>,
    ln: Vec<ArticleRecord>,
    docs: BTreeMap<String, pinkslime_core::conllu::AnnotatedDocument>,
}

// Six PS and fourteen LN articles.
fn fixture() -> Fixture {
    let b = make_synthetic_benchmark(&BenchConfig {
        n_ps: 50,
        n_ln: 50,
        n_templates: 3,
        ..Default::default()
    })
    .unwrap();
    let ps: Vec<ArticleRecord> = b.by_label(ClassLabel::Ps).take(6).cloned().collect();
    let ln: Vec<ArticleRecord> = b.by_label(ClassLabel::Ln).take(14).cloned().collect();
    let docs = ps.iter().chain(&ln).map(|a| (a.id.clone(), b.docs[&a.id].clone())).collect();
    Fixture { ps, ln, docs }
}

fn embed(ids: &[String], docs: &BTreeMap<String, pinkslime_core::conllu::AnnotatedDocument>) -> EmbeddingMatrix {
    let enc = StyleEncoder::default();
    let rows: Vec<Vec<f32>> = ids.iter().map(|id| enc.encode(&docs[id])).collect();
    EmbeddingMatrix::from_rows(ids.to_vec(), &rows).unwrap()
}

fn write_all(f: &Fixture, dir: &Path) -> Vec<String> {
    write_articles(dir.join("ps.jsonl"), &f.ps).unwrap();
    write_articles(dir.join("ln.jsonl"), &f.ln).unwrap();
    save_conllu(dir.join("ann.conllu"), f.docs.values()).unwrap();
    let ids: Vec<String> = f.ps.iter().chain(&f.ln).map(|a| a.id.clone()).collect();
    let emb = embed(&ids, &f.docs);
    emb.save(dir.join("emb.psemb"), dir.join("emb.ids.jsonl")).unwrap();
    pca_reduce(&emb, 2).unwrap().save(dir.join("xy.pscrd"), dir.join("xy.ids.jsonl")).unwrap();
    ids
}

#[test]
fn twenty_article_fixture_round_trips() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let ids = write_all(&f, dir.path());
    assert_eq!(ids.len(), 20);

    let ps = ingest_articles(dir.path().join("ps.jsonl"), LabelSource::Fixed(ClassLabel::Ps)).unwrap();
    let ln = ingest_articles(dir.path().join("ln.jsonl"), LabelSource::Fixed(ClassLabel::Ln)).unwrap();
    let corpus = ps.merge(ln).unwrap();
    assert_eq!(corpus.len(), 20);

    let docs = read_conllu(dir.path().join("ann.conllu")).unwrap();
    assert_eq!(docs, f.docs);
    assert_eq!(join(&corpus, &docs).unwrap().len(), 20);

    let emb = load_embeddings(dir.path().join("emb.psemb"), dir.path().join("emb.ids.jsonl")).unwrap();
    assert_eq!(emb.ids(), &ids[..]);
    assert_eq!(emb, embed(&ids, &f.docs));

    let xy = ReducedCoords::load(dir.path().join("xy.pscrd"), dir.path().join("xy.ids.jsonl")).unwrap();
    assert_eq!((xy.n(), xy.k), (20, 2));
    assert!(read_matrix(dir.path().join("xy.pscrd"), EMBEDDING_MAGIC).is_err());
    assert!(read_matrix(dir.path().join("emb.psemb"), COORDS_MAGIC).is_err());
}

#[test]
fn attack_corpus_round_trips_and_drives_adaptation() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let ids = write_all(&f, dir.path());
    let corpus = pinkslime_core::corpus::Corpus::from_records(f.ps.iter().chain(&f.ln).cloned().collect()).unwrap();

    let pairs: Vec<(&ArticleRecord, &_)> = f.ps.iter().map(|a| (a, &f.docs[&a.id])).collect();
    let cfg = ObfuscationConfig {
        adjective_drop_rate: 0.8,
        merge_rate: 0.5,
        synonym_rate: 0.3,
        seed: 1,
    };
    let lex = bench::lexicon();
    let (attack, attack_docs) = surrogate_attack(&pairs, &cfg, Some(&lex), "llm-external").unwrap();
    attack.save(dir.path().join("attack.jsonl")).unwrap();
    save_conllu(dir.path().join("attack.conllu"), attack_docs.values()).unwrap();
    let attack_ids: Vec<String> = attack.records.iter().map(|r| r.id.clone()).collect();
    embed(&attack_ids, &attack_docs)
        .save(dir.path().join("attack.psemb"), dir.path().join("attack.ids.jsonl"))
        .unwrap();

    let attack = load_attack_corpus(dir.path().join("attack.jsonl"), &corpus).unwrap();
    assert_eq!(attack.len(), 6);
    assert_eq!(read_conllu(dir.path().join("attack.conllu")).unwrap(), attack_docs);
    let attack_emb = load_embeddings(dir.path().join("attack.psemb"), dir.path().join("attack.ids.jsonl")).unwrap();

    let emb = load_embeddings(dir.path().join("emb.psemb"), dir.path().join("emb.ids.jsonl")).unwrap();
    let label = |id: &str| corpus.get(id).map(|a| a.label);
    let rows = Dataset::from_embeddings(&emb, label);
    let attack_rows = Dataset::from_embeddings(&attack_emb, |_| Some(ClassLabel::Ps));

    let (ps_ids, ln_ids) = (&ids[..6], &ids[6..]);
    let plan = SplitPlan {
        seed: 3,
        repetition_index: 0,
        train_ids: ps_ids[..4].iter().chain(&ln_ids[..10]).cloned().collect(),
        test_ids: ps_ids[4..].iter().chain(&ln_ids[10..]).cloned().collect(),
        ps_train_fraction: 4.0 / 6.0,
        ln_train_fraction: 10.0 / 14.0,
    };
    let train = rows.select(&plan.train_ids).unwrap();
    let base = train_head(&train.rows, &train.labels, [16, 8], &TrainConfig::default()).unwrap();
    let model_path = dir.path().join("head.pshead");
    Model::Head(base).save(&model_path).unwrap();
    let Model::Head(base) = Model::load(&model_path).unwrap() else {
        panic!("expected a head model");
    };

    let data = AdaptData::new(&plan, &rows, &attack, &attack_rows).unwrap();
    assert_eq!(data.pool.adv_ids.len(), 4);
    for mode in [AdaptMode::Controlled, AdaptMode::Uncontrolled] {
        let curve = run_adaptation_curve(&base, &AdaptConfig::default(), &[0.5, 1.0], mode, &data).unwrap();
        assert_eq!(curve.rows.len(), 3);
        assert_eq!(curve.stages[1].adv_ids.len(), 4);
    }
}

#[test]
fn orphan_attack_parent_is_rejected() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let corpus = pinkslime_core::corpus::Corpus::from_records(f.ps.iter().chain(&f.ln).cloned().collect()).unwrap();
    let lines = [
        AttackRecord {
            id: "x1".into(),
            parent_id: f.ln[0].id.clone(),
            generator: "llm-external".into(),
            text: "Some text.".into(),
        },
        AttackRecord {
            id: "x2".into(),
            parent_id: "missing".into(),
            generator: "llm-external".into(),
            text: "Some text.".into(),
        },
    ];
    for rec in lines {
        let p = dir.path().join("a.jsonl");
        fs::write(&p, serde_json::to_string(&rec).unwrap() + "\n").unwrap();
        assert!(matches!(load_attack_corpus(&p, &corpus), Err(Error::OrphanParent { .. })));
    }
}

#[test]
fn truncated_embedding_file_is_rejected() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    write_all(&f, dir.path());
    let p = dir.path().join("emb.psemb");
    let bytes = fs::read(&p).unwrap();
    fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(
        load_embeddings(&p, dir.path().join("emb.ids.jsonl")),
        Err(Error::Format(_))
    ));
}
