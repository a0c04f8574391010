// Acceptance suite: one pass/fail line per criterion. Exits non-zero when any
// criterion fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use pinkslime_cli::config::{InputPaths, RunConfig, Stage};
use pinkslime_cli::data;
use pinkslime_cli::run_pipeline;
use pinkslime_core::adapt::{run_adaptation_curve, stage_fractions, AdaptConfig, AdaptData, AdaptMode, AdaptationCurve};
use pinkslime_core::adversary::load_attack_corpus;
use pinkslime_core::bench::BenchFiles;
use pinkslime_core::corpus::ClassLabel;
use pinkslime_core::dedup::{deduplicate, ScanOrder};
use pinkslime_core::features::{cttr, mtld, rttr, MTLD_THRESHOLD};
use pinkslime_core::matrix::{load_embeddings, EmbeddingMatrix};
use pinkslime_core::models::{Dataset, Model};
use pinkslime_core::rng;
use pinkslime_core::split::{dbscan, ClusterAssignment, ReducedCoords, SplitPlan};
use rand::Rng;
use serde_json::Value;

const SEEDS: [u64; 3] = [7, 8, 9];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn lexical_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng::seeded(101);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let t = oracles::random_tokens(&mut r);
        worst = worst
            .max((rttr(&t).unwrap() - oracles::rttr(&t)).abs())
            .max((cttr(&t).unwrap() - oracles::cttr(&t)).abs())
            .max((mtld(&t, MTLD_THRESHOLD).unwrap() - oracles::mtld(&t, MTLD_THRESHOLD)).abs());
    }
    let took = start.elapsed();
    outcome(
        worst <= 1e-9 && took < Duration::from_secs(1),
        format!("max abs diff {worst:.2e}, {took:.2?}"),
    )
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut r = rng::seeded(102);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (m, xs, ys) = oracles::gradient_point(&mut r, [6, 8, 5, 2]);
        let (_, g) = m.loss_and_gradient(&xs, &ys).unwrap();
        let fd = oracles::finite_difference(&m, &xs, &ys, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            worst = worst.max(oracles::relative_error(*a, *b));
        }
    }
    let took = start.elapsed();
    outcome(
        worst <= 1e-4 && took < Duration::from_secs(10),
        format!("max rel err {worst:.2e}, {took:.2?}"),
    )
}

fn dedup_oracle() -> Outcome {
    let mut r = rng::seeded(103);
    let mut mismatches = 0;
    let mut elapsed = Duration::ZERO;
    let mut planted = 0;
    for case in 0..50 {
        let n = if case < 3 { 2000 } else { r.random_range(2..=2000) };
        let rows = oracles::planted_corpus(&mut r, n, 24);
        let ids: Vec<String> = (0..n).map(|i| format!("a{i:05}")).collect();
        let emb = EmbeddingMatrix::from_rows(ids, &rows).unwrap();
        let start = Instant::now();
        let report = deduplicate(&emb, 0.8, ScanOrder::Input).unwrap();
        elapsed += start.elapsed();
        let index = emb.index();
        let got: BTreeSet<usize> = report.removed.iter().map(|x| index[x.removed_id.as_str()]).collect();
        let want = oracles::dedup_all_pairs(&rows, 0.8);
        planted += want.len();
        if got != want {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(30),
        format!("{mismatches}/50 mismatched, {planted} removals, dedup time {elapsed:.2?}"),
    )
}

fn dbscan_reference() -> Outcome {
    let mut r = rng::seeded(104);
    let mut mismatches = 0;
    let (mut all_noise, mut single) = (0, 0);
    for case in 0..100 {
        let n = r.random_range(1..=500);
        let dim = r.random_range(1..5);
        let (points, eps, ms) = match case {
            // Far-apart points: every label is noise.
            0..=4 => ((0..n).map(|i| vec![i as f64 * 100.0; dim]).collect::<Vec<_>>(), 1.0, 2),
            // One tight blob under a wide radius: one cluster.
            5..=9 => (oracles::blobs(&mut r, n, dim, 1, 0.5), 5.0, 1),
            _ => {
                let centres = r.random_range(1..6);
                let spread = r.random_range(0.2..3.0);
                let eps = r.random_range(0.3..4.0);
                let ms = r.random_range(1..15);
                (oracles::blobs(&mut r, n, dim, centres, spread), eps, ms)
            }
        };
        let ids = (0..n).map(|i| format!("p{i}")).collect();
        let coords = ReducedCoords::from_rows(ids, &points).unwrap();
        let got = dbscan(&coords, eps, ms).unwrap();
        if got.labels.iter().all(|&l| l < 0) {
            all_noise += 1;
        }
        if got.n_clusters() == 1 {
            single += 1;
        }
        if !oracles::same_partition(&got.labels, &oracles::dbscan_naive(&points, eps, ms)) {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0 && all_noise > 0 && single > 0,
        format!("{mismatches}/100 mismatched ({all_noise} all-noise, {single} single-cluster)"),
    )
}

/// One benchmark seed run stage by stage so that the timed criteria measure
/// only their own stages.
struct SeedRun {
    seed: u64,
    dir: PathBuf,
    files: BenchFiles,
    train_eval: Duration,
}

fn config(seed: u64, dir: &Path, stages: &[Stage], inputs: Option<&BenchFiles>) -> RunConfig {
    let mut cfg = RunConfig {
        seed,
        out_dir: dir.to_path_buf(),
        stages: stages.to_vec(),
        ..RunConfig::default()
    };
    if let Some(f) = inputs {
        cfg.inputs = InputPaths {
            ps: Some(f.ps_articles.clone()),
            ln: Some(f.ln_articles.clone()),
            annotations: Some(f.annotations.clone()),
            embeddings: Some(f.embeddings.clone()),
            embedding_ids: Some(f.embedding_ids.clone()),
            lexicon: Some(f.lexicon.clone()),
            ..InputPaths::default()
        };
    }
    cfg
}

fn run_seed(seed: u64, root: &Path) -> anyhow::Result<SeedRun> {
    let dir = root.join(format!("seed-{seed}"));
    use Stage::*;
    run_pipeline(&config(seed, &dir, &[BenchMake, Ingest, Dedup, Split, Featurize], None))?;
    let files = BenchFiles::in_dir(&dir.join(BenchMake.dir()));
    let start = Instant::now();
    run_pipeline(&config(seed, &dir, &[Train, Eval], Some(&files)))?;
    let train_eval = start.elapsed();
    run_pipeline(&config(seed, &dir, &[Attack, Report], Some(&files)))?;
    Ok(SeedRun {
        seed,
        dir,
        files,
        train_eval,
    })
}

fn read_json(path: impl AsRef<Path>) -> Value {
    let path = path.as_ref();
    serde_json::from_str(&fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn read_f1(path: impl AsRef<Path>) -> BTreeMap<String, f64> {
    let mut rd = csv_rows(path.as_ref());
    let header = rd.remove(0);
    let name = header.iter().position(|h| h == "name").unwrap();
    let f1 = header.iter().position(|h| h == "f1_ps").unwrap();
    rd.into_iter().map(|r| (r[name].clone(), r[f1].parse().unwrap())).collect()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn labels(run: &SeedRun) -> HashMap<String, ClassLabel> {
    let corpus = data::read_corpus(Some(&run.files.ps_articles), Some(&run.files.ln_articles)).unwrap();
    corpus.records().iter().map(|r| (r.id.clone(), r.label)).collect()
}

fn plans(run: &SeedRun) -> Vec<SplitPlan> {
    (0..3).map(|r| SplitPlan::load(run.dir.join(format!("split/plan-r{r}.json"))).unwrap()).collect()
}

fn split_leakage(runs: &[SeedRun]) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for run in runs {
        let clusters: ClusterAssignment = serde_json::from_value(read_json(run.dir.join("split/clusters.json"))).unwrap();
        let labels = labels(run);
        let ps: Vec<&String> = clusters.ids.iter().collect();
        for plan in plans(run) {
            let train = plan.train_set();
            let mut sides: BTreeMap<i64, BTreeSet<bool>> = BTreeMap::new();
            for (id, &l) in clusters.ids.iter().zip(&clusters.labels) {
                if l >= 0 {
                    sides.entry(l).or_default().insert(train.contains(id.as_str()));
                }
            }
            let straddling = sides.values().filter(|s| s.len() > 1).count();
            let n_train = ps.iter().filter(|id| train.contains(id.as_str())).count();
            let n_test = ps.iter().filter(|id| plan.test_set().contains(id.as_str())).count();
            let frac = n_train as f64 / (n_train + n_test) as f64;
            let covered = ps.iter().all(|id| labels[id.as_str()] == ClassLabel::Ps) && n_train + n_test == ps.len();
            ok &= straddling == 0 && (0.75..=0.88).contains(&frac) && covered;
            notes.push(format!("{}/r{}: {straddling} straddling, ps train {frac:.3}", run.seed, plan.repetition_index));
        }
    }
    outcome(ok, notes.join("; "))
}

fn contrast_direction(runs: &[SeedRun]) -> Outcome {
    // (feature, PS expected above LN)
    let expect = [
        ("sentence_count", false),
        ("simple_sentence_ratio", true),
        ("adj_per_1000", true),
        ("rttr", false),
        ("unique_noun_phrases", false),
    ];
    let mut ok = true;
    let mut worst_p: f64 = 0.0;
    for run in runs {
        let rows = csv_rows(&run.dir.join("report/contrast.csv"));
        let header = &rows[0];
        let col = |name: &str| header.iter().position(|h| h == name).unwrap();
        let by_feature: HashMap<&str, &Vec<String>> = rows[1..].iter().map(|r| (r[0].as_str(), r)).collect();
        for (f, ps_higher) in expect {
            let Some(r) = by_feature.get(f) else {
                ok = false;
                continue;
            };
            let ps: f64 = r[col("mean_ps")].parse().unwrap();
            let ln: f64 = r[col("mean_ln")].parse().unwrap();
            let p: f64 = r[col("p_value")].parse().unwrap();
            worst_p = worst_p.max(p);
            ok &= (ps > ln) == ps_higher && p < 0.01;
        }
    }
    outcome(ok, format!("5 directions x {} seeds, max p {worst_p:.2e}", runs.len()))
}

fn detection(runs: &[SeedRun]) -> Outcome {
    let mut ok = true;
    let mut low: f64 = 1.0;
    let mut slowest = Duration::ZERO;
    for run in runs {
        let f1 = read_f1(run.dir.join("eval/metrics.csv"));
        for kind in ["forest", "head"] {
            for r in 0..3 {
                let v = f1.get(&format!("{kind}-r{r}")).copied().unwrap_or(0.0);
                low = low.min(v);
                ok &= v >= 0.90;
            }
        }
        slowest = slowest.max(run.train_eval);
        ok &= run.train_eval < Duration::from_secs(120);
    }
    outcome(ok, format!("min F1 {low:.3}, slowest train+eval {slowest:.2?}"))
}

fn attack_degradation(runs: &[SeedRun]) -> Outcome {
    let mut ok = true;
    let mut smallest = f64::INFINITY;
    for run in runs {
        let f1 = read_f1(run.dir.join("attack/eval.csv"));
        for kind in ["forest", "linear"] {
            for r in 0..3 {
                let orig = f1[&format!("{kind}-r{r}/original")];
                let att = f1[&format!("{kind}-r{r}/surrogate-v1")];
                smallest = smallest.min(orig - att);
                ok &= orig - att >= 0.10;
            }
        }
    }
    outcome(ok, format!("smallest F1 drop {smallest:.3}"))
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Exact stage sizes, recomputed with integer arithmetic.
fn stage_sizes_hold(curve: &AdaptationCurve, n_adv: usize, n_stages: usize) -> bool {
    curve.stages.iter().enumerate().all(|(i, s)| {
        let adv = ceil_div((i + 1) * n_adv, n_stages);
        let base = match curve.mode {
            AdaptMode::Controlled => ceil_div(adv, 2),
            AdaptMode::Uncontrolled => 0,
        };
        s.adv_ids.len() == adv && s.ps_base_ids.len() == base && s.ln_ids.len() == adv + base
    })
}

fn adaptation(runs: &[SeedRun]) -> Outcome {
    let defaults = RunConfig::default();
    let n_stages = defaults.adapt.stages;
    let mut elapsed = Duration::ZERO;
    let mut min_gain = f64::INFINITY;
    let mut sizes_ok = true;
    let mut seeds_controlled_better = 0;
    let mut notes = Vec::new();
    for run in runs {
        let labels = labels(run);
        let emb = load_embeddings(&run.files.embeddings, &run.files.embedding_ids).unwrap();
        let rows = data::embedding_dataset(&emb, &labels);
        let corpus = data::read_corpus(Some(&run.files.ps_articles), Some(&run.files.ln_articles)).unwrap();
        let attack = load_attack_corpus(run.dir.join("attack/attack.jsonl"), &corpus).unwrap();
        let attack_emb = load_embeddings(run.dir.join("attack/embeddings.psemb"), run.dir.join("attack/embeddings.ids.jsonl")).unwrap();
        let attack_rows = Dataset::from_embeddings(&attack_emb, |_| Some(ClassLabel::Ps));
        let (mut dc, mut du) = (0.0, 0.0);
        for plan in plans(run) {
            let Model::Head(base) = Model::load(run.dir.join(format!("train/head-r{}.pshead", plan.repetition_index))).unwrap() else {
                panic!("head model expected");
            };
            let data = AdaptData::new(&plan, &rows, &attack, &attack_rows).unwrap();
            let cfg = AdaptConfig {
                eta0: defaults.train.head_learning_rate,
                lr_divisor: defaults.adapt.lr_divisor,
                epochs_per_stage: defaults.adapt.epochs_per_stage,
                batch_size: defaults.adapt.batch_size,
                seed: plan.seed,
                replay: defaults.adapt.replay,
            };
            let start = Instant::now();
            let fr = stage_fractions(n_stages);
            let u = run_adaptation_curve(&base, &cfg, &fr, AdaptMode::Uncontrolled, &data).unwrap();
            let c = run_adaptation_curve(&base, &cfg, &fr, AdaptMode::Controlled, &data).unwrap();
            elapsed += start.elapsed();
            for curve in [&u, &c] {
                let gain = curve.last().f1_llmmod - curve.baseline().f1_llmmod;
                min_gain = min_gain.min(gain);
                sizes_ok &= stage_sizes_hold(curve, data.pool.adv_ids.len(), n_stages);
            }
            dc += c.baseline().f1_original - c.last().f1_original;
            du += u.baseline().f1_original - u.last().f1_original;
        }
        if dc <= du {
            seeds_controlled_better += 1;
        }
        notes.push(format!("seed {}: decline c {:.3} u {:.3}", run.seed, dc / 3.0, du / 3.0));
    }
    let ok = min_gain >= 0.15 && seeds_controlled_better >= 2 && sizes_ok && elapsed < Duration::from_secs(300);
    outcome(
        ok,
        format!(
            "min gain {min_gain:.3}, controlled <= uncontrolled in {seeds_controlled_better}/3 seeds, sizes {}, {elapsed:.2?}; {}",
            if sizes_ok { "exact" } else { "WRONG" },
            notes.join("; ")
        ),
    )
}

fn determinism(root: &Path) -> Outcome {
    let run = |name: &str| {
        let mut cfg = config(7, &root.join(name), &Stage::ALL, None);
        cfg.threads = 0;
        run_pipeline(&cfg).map(|s| s.manifest.artifacts)
    };
    match (run("det-a"), run("det-b")) {
        (Ok(a), Ok(b)) => {
            let differing: Vec<&String> = a.iter().filter(|(k, v)| b.get(*k) != Some(v)).map(|(k, _)| k).collect();
            outcome(
                a == b && !a.is_empty(),
                format!("{} artifacts, {} differ {:?}", a.len(), differing.len(), differing),
            )
        }
        (a, b) => outcome(false, format!("run failed: {:?} {:?}", a.err(), b.err())),
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut results: Vec<(&str, Outcome)> = vec![
        ("lexical-metric oracle", lexical_oracle()),
        ("head gradient check", gradient_check()),
        ("dedup oracle", dedup_oracle()),
        ("dbscan reference", dbscan_reference()),
    ];
    let runs: Result<Vec<SeedRun>, _> = SEEDS.iter().map(|&s| run_seed(s, tmp.path())).collect();
    match runs {
        Ok(runs) => {
            results.push(("split leakage", split_leakage(&runs)));
            results.push(("contrast directions", contrast_direction(&runs)));
            results.push(("detection", detection(&runs)));
            results.push(("attack degradation", attack_degradation(&runs)));
            results.push(("adaptation recovery", adaptation(&runs)));
        }
        Err(e) => {
            for name in ["split leakage", "contrast directions", "detection", "attack degradation", "adaptation recovery"] {
                results.push((name, outcome(false, format!("benchmark run failed: {e:#}"))));
            }
        }
    }
    results.push(("determinism", determinism(tmp.path())));

    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        if !o.pass {
            failed += 1;
        }
        println!("[{}] {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
