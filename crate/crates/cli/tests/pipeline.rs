use std::fs;
use std::path::{Path, PathBuf};

use pinkslime_cli::config::{BenchSection, InputPaths, ModelKind, RunConfig, Stage};
use pinkslime_cli::run_pipeline;
use pinkslime_core::bench::BenchFiles;

fn small(dir: &Path, stages: &[Stage]) -> RunConfig {
    let mut cfg = RunConfig {
        out_dir: dir.to_path_buf(),
        seed: 3,
        stages: stages.to_vec(),
        bench: BenchSection {
            n_ps: 120,
            n_ln: 200,
            n_templates: 6,
            ..BenchSection::default()
        },
        ..RunConfig::default()
    };
    cfg.split.min_samples = 5;
    cfg.report.permutations = 200;
    cfg.adapt.stages = 2;
    cfg.train.head_epochs = 10;
    cfg
}

fn bench_inputs(dir: &Path) -> InputPaths {
    let f = BenchFiles::in_dir(&dir.join("bench"));
    InputPaths {
        ps: Some(f.ps_articles),
        ln: Some(f.ln_articles),
        annotations: Some(f.annotations),
        embeddings: Some(f.embeddings),
        embedding_ids: Some(f.embedding_ids),
        lexicon: Some(f.lexicon),
        ..InputPaths::default()
    }
}

fn listing(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/"));
            }
        }
    }
    walk(dir, dir, &mut out);
    out.sort();
    out
}

fn make_bench(dir: &Path) {
    run_pipeline(&small(dir, &[Stage::BenchMake])).unwrap();
}

#[test]
fn featurize_only_writes_features() {
    let tmp = tempfile::tempdir().unwrap();
    make_bench(tmp.path());
    let out = tmp.path().join("feat");
    let mut cfg = small(&out, &[Stage::Featurize]);
    cfg.inputs = bench_inputs(tmp.path());
    let summary = run_pipeline(&cfg).unwrap();
    assert_eq!(
        listing(&out),
        ["featurize/features.csv", "featurize/schema.json", "featurize/stamp.json", "run_manifest.json"]
    );
    assert_eq!(summary.manifest.stages, ["featurize"]);
    let csv = fs::read_to_string(out.join("featurize/features.csv")).unwrap();
    assert_eq!(csv.lines().count(), 321);
}

#[test]
fn missing_input_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(&tmp.path().join("out"), &[Stage::Ingest]);
    cfg.inputs = bench_inputs(tmp.path());
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(format!("{err:#}").contains("ps"), "{err:#}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn failed_stage_leaves_partial_files() {
    let tmp = tempfile::tempdir().unwrap();
    make_bench(tmp.path());
    let votes = tmp.path().join("votes.csv");
    fs::write(&votes, "article_id,m1\na,x\n").unwrap();
    let out = tmp.path().join("out");
    let mut cfg = small(&out, &[Stage::Report]);
    cfg.inputs = bench_inputs(tmp.path());
    cfg.inputs.votes = Some(votes);
    assert!(run_pipeline(&cfg).is_err());
    let files = listing(&out);
    assert!(files.contains(&"report/contrast.json.partial".to_string()), "{files:?}");
    assert!(!files.iter().any(|f| f == "report/contrast.json" || f == "report/stamp.json"));
}

#[test]
fn adapt_needs_a_head_model() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut cfg = small(&out, &[Stage::BenchMake, Stage::Dedup, Stage::Split, Stage::Featurize, Stage::Train, Stage::Attack, Stage::Adapt]);
    cfg.train.models = vec![ModelKind::Forest];
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(format!("{err:#}").contains("head model"), "{err:#}");
    assert!(out.join("attack/attack.jsonl").is_file());
    assert!(!out.join("adapt").join("summary-r0.json").exists());
}

#[test]
fn full_small_run_commits_every_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let summary = run_pipeline(&small(&out, &Stage::ALL)).unwrap();
    let stages: Vec<&str> = Stage::ALL.iter().map(|s| s.as_str()).collect();
    assert_eq!(summary.manifest.stages, stages);
    for s in Stage::ALL {
        assert!(out.join(s.dir()).join("stamp.json").is_file(), "{s}");
    }
    assert!(!listing(&out).iter().any(|f| f.ends_with(".partial")));
    for (path, digest) in &summary.manifest.artifacts {
        let p: PathBuf = out.join(path);
        assert_eq!(&pinkslime_cli::artifacts::sha256_file(&p).unwrap(), digest, "{path}");
    }
}

#[test]
fn later_stages_reuse_artifacts_on_disk() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    run_pipeline(&small(&out, &[Stage::BenchMake, Stage::Dedup, Stage::Split, Stage::Featurize])).unwrap();
    let mut cfg = small(&out, &[Stage::Train, Stage::Eval]);
    cfg.inputs = bench_inputs(&out);
    cfg.train.models = vec![ModelKind::Forest];
    run_pipeline(&cfg).unwrap();
    let metrics = fs::read_to_string(out.join("eval/metrics.csv")).unwrap();
    assert!(metrics.contains("forest-r0"));
}
