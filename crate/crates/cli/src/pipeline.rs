//! End-to-end run: executes the configured stages in order. A stage takes
//! its upstream data from this run when the upstream stage ran, and from the
//! upstream artifacts in the output directory otherwise.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::Serialize;

use pinkslime_core::adapt::{
    forgetting_report, run_adaptation_curve, save_curves, stage_fractions, AdaptConfig, AdaptData, AdaptMode,
    AdaptationCurve,
};
use pinkslime_core::adversary::{
    attack_eval, load_attack_corpus, surrogate_attack, AttackCorpus, AttackReport, Lexicon, ObfuscationConfig,
};
use pinkslime_core::bench::{self, make_synthetic_benchmark, BenchConfig, BenchFiles, StyleEncoder};
use pinkslime_core::conllu::{read_conllu, save_conllu, AnnotatedDocument};
use pinkslime_core::corpus::ClassLabel;
use pinkslime_core::dedup::{deduplicate_grouped, DedupMode, DuplicateReport};
use pinkslime_core::evalreport::{
    compare_table, contrast_report, load_votes, write_comparisons_csv, write_consensus_csv, write_json,
    write_metrics_csv,
};
use pinkslime_core::features::{read_feature_csv, write_feature_csv, FeatureSchema};
use pinkslime_core::matrix::{load_embeddings, EmbeddingMatrix};
use pinkslime_core::models::{
    permutation_importance, train_forest, train_head, train_linear, Dataset, ForestConfig, LinearConfig, Metrics,
    Model, TrainConfig,
};
use pinkslime_core::rng;
use pinkslime_core::split::{dbscan, pca_reduce, repeated_splits, suggest_eps, ReducedCoords, SplitPlan};

use crate::artifacts::{OutputDir, RunManifest};
use crate::config::{AdaptModes, DedupScope, ModelKind, RunConfig, Stage};
use crate::data::{self, Inputs};

/// Features of one split repetition, or of the whole corpus when no split
/// exists.
#[derive(Debug, Clone)]
struct FeatureSet {
    schema: FeatureSchema,
    rows: Dataset,
}

#[derive(Debug, Clone)]
struct AttackState {
    corpus: AttackCorpus,
    docs: BTreeMap<String, AnnotatedDocument>,
    embeddings: Dataset,
}

#[derive(Debug, Clone, Serialize)]
struct SplitSummary {
    eps: f64,
    min_samples: usize,
    pca_dims: usize,
    n_ps: usize,
    n_ln: usize,
    n_clusters: usize,
    noise: usize,
    repetitions: Vec<RepetitionSummary>,
}

#[derive(Debug, Clone, Serialize)]
struct RepetitionSummary {
    seed: u64,
    ps_train_fraction: f64,
    ln_train_fraction: f64,
    straddling_clusters: usize,
    warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
struct LabelDedup {
    total: usize,
    removed: usize,
    reduction: f64,
}

pub struct Pipeline {
    cfg: RunConfig,
    out: OutputDir,
    inputs: Option<Inputs>,
    lexicon: Option<Lexicon>,
    kept: Option<Vec<String>>,
    plans: Option<Vec<SplitPlan>>,
    features: Option<Vec<FeatureSet>>,
    models: BTreeMap<(ModelKind, usize), Model>,
    attack: Option<AttackState>,
}

/// Outcome of a successful run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

/// Validates the config and runs its stages. On a stage failure the stage's
/// `.partial` files are left in place and the error is returned.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let out = OutputDir::create(&cfg.out_dir, &cfg.hash())?;
    let mut p = Pipeline {
        cfg: cfg.clone(),
        out,
        inputs: None,
        lexicon: None,
        kept: None,
        plans: None,
        features: None,
        models: BTreeMap::new(),
        attack: None,
    };
    for stage in cfg.stage_list() {
        info!("stage {stage}");
        if let Err(e) = p.run_stage(stage) {
            let left = p.out.abandon();
            for f in &left {
                warn!("partial artifact left at {}", f.display());
            }
            return Err(e.context(format!("stage {stage} failed")));
        }
        p.out.commit(stage)?;
    }
    p.out.write_manifest()?;
    Ok(RunSummary {
        out_dir: p.out.root().to_path_buf(),
        manifest: p.out.manifest(),
    })
}

fn rep_suffix(rep: Option<usize>) -> String {
    rep.map(|r| format!("-r{r}")).unwrap_or_default()
}

impl Pipeline {
    fn run_stage(&mut self, stage: Stage) -> Result<()> {
        match stage {
            Stage::BenchMake => self.bench_make(),
            Stage::Ingest => self.ingest(),
            Stage::Dedup => self.dedup(),
            Stage::Split => self.split(),
            Stage::Featurize => self.featurize(),
            Stage::Train => self.train(),
            Stage::Eval => self.eval(),
            Stage::Attack => self.attack(),
            Stage::Adapt => self.adapt(),
            Stage::Report => self.report(),
        }
    }

    fn bench_make(&mut self) -> Result<()> {
        let b = &self.cfg.bench;
        let bench = make_synthetic_benchmark(&BenchConfig {
            seed: b.seed.unwrap_or(self.cfg.seed),
            n_ps: b.n_ps,
            n_ln: b.n_ln,
            n_templates: b.n_templates,
            near_copy_rate: b.near_copy_rate,
            slot_noise: b.slot_noise,
        })?;
        let tmp = self.out.root().join("bench.partial.d");
        let files = bench.write(&tmp)?;
        for src in [
            &files.ps_articles,
            &files.ln_articles,
            &files.annotations,
            &files.embeddings,
            &files.embedding_ids,
            &files.lexicon,
            &files.templates,
        ] {
            let name = src.file_name().expect("file name").to_string_lossy().to_string();
            let dst = self.out.begin(Stage::BenchMake, &name)?;
            fs::rename(src, &dst)?;
        }
        fs::remove_dir(&tmp)?;
        let files = BenchFiles::in_dir(&self.out.root().join(Stage::BenchMake.dir()));
        let i = &mut self.cfg.inputs;
        i.ps = Some(files.ps_articles);
        i.ln = Some(files.ln_articles);
        i.annotations = Some(files.annotations);
        i.embeddings = Some(files.embeddings);
        i.embedding_ids = Some(files.embedding_ids);
        i.lexicon = Some(files.lexicon);
        self.inputs = None;
        self.lexicon = Some(bench::lexicon());
        Ok(())
    }

    fn inputs(&mut self) -> Result<&Inputs> {
        if self.inputs.is_none() {
            let i = &self.cfg.inputs;
            let need = |p: &Option<PathBuf>, name: &str| p.clone().with_context(|| format!("inputs.{name} is not set"));
            let loaded = data::load_inputs(
                &need(&i.ps, "ps")?,
                &need(&i.ln, "ln")?,
                &need(&i.annotations, "annotations")?,
                &need(&i.embeddings, "embeddings")?,
                &need(&i.embedding_ids, "embedding_ids")?,
            )?;
            self.inputs = Some(loaded);
        }
        Ok(self.inputs.as_ref().expect("loaded"))
    }

    fn lexicon(&mut self) -> Result<Option<Lexicon>> {
        if self.lexicon.is_none() {
            if let Some(p) = &self.cfg.inputs.lexicon {
                self.lexicon = Some(Lexicon::load(p)?);
            }
        }
        Ok(self.lexicon.clone())
    }

    fn ingest(&mut self) -> Result<()> {
        let report = self.inputs()?.report.clone();
        if report.missing_embeddings > 0 {
            warn!("{} aligned articles have no embedding and are dropped", report.missing_embeddings);
        }
        let p = self.out.begin(Stage::Ingest, "manifest.json")?;
        write_json(&p, &report)?;
        Ok(())
    }

    /// Article ids surviving dedup, in corpus order.
    fn kept(&mut self) -> Result<Vec<String>> {
        if let Some(k) = &self.kept {
            return Ok(k.clone());
        }
        let removed: Option<Vec<String>> = match self.out.existing(Stage::Dedup, "report.json") {
            Some(p) => {
                let report: DuplicateReport = serde_json::from_str(&fs::read_to_string(&p)?)
                    .with_context(|| p.display().to_string())?;
                Some(report.removed.into_iter().map(|r| r.removed_id).collect())
            }
            None => None,
        };
        let inputs = self.inputs()?;
        let kept: Vec<String> = match removed {
            Some(removed) => {
                let removed: std::collections::HashSet<String> = removed.into_iter().collect();
                inputs.corpus.ids().filter(|id| !removed.contains(*id)).map(str::to_string).collect()
            }
            None => inputs.corpus.ids().map(str::to_string).collect(),
        };
        self.kept = Some(kept.clone());
        Ok(kept)
    }

    fn dedup(&mut self) -> Result<()> {
        let d = self.cfg.dedup.clone();
        let seed = self.cfg.seed;
        let inputs = self.inputs()?;
        let groups: Option<Vec<usize>> = match d.scope {
            DedupScope::WithinLabel => {
                Some(inputs.embeddings.ids().iter().map(|id| inputs.labels[id].index()).collect())
            }
            DedupScope::Global => None,
        };
        let mode = match (d.bands, d.rows_per_band) {
            (Some(bands), Some(rows_per_band)) => DedupMode::Banded {
                bands,
                rows_per_band,
                seed,
            },
            _ => DedupMode::Exact,
        };
        let report = deduplicate_grouped(&inputs.embeddings, d.threshold, d.order, groups.as_deref(), mode)?;
        let removed = report.removed_ids();
        let mut summary = BTreeMap::new();
        for label in [ClassLabel::Ps, ClassLabel::Ln] {
            let ids = data::ids_with_label(inputs.embeddings.ids(), &inputs.labels, label);
            let r = ids.iter().filter(|id| removed.contains(id.as_str())).count();
            summary.insert(
                label.as_str(),
                LabelDedup {
                    total: ids.len(),
                    removed: r,
                    reduction: if ids.is_empty() { 0.0 } else { r as f64 / ids.len() as f64 },
                },
            );
        }
        let kept: Vec<String> =
            inputs.corpus.ids().filter(|id| !removed.contains(id)).map(str::to_string).collect();
        info!("dedup kept {} of {}", kept.len(), inputs.corpus.len());
        let p = self.out.begin(Stage::Dedup, "report.json")?;
        fs::write(&p, report.to_json() + "\n")?;
        let p = self.out.begin(Stage::Dedup, "summary.json")?;
        write_json(&p, &summary)?;
        self.kept = Some(kept);
        Ok(())
    }

    fn plans(&mut self) -> Result<Option<Vec<SplitPlan>>> {
        if self.plans.is_none() {
            let mut plans = Vec::new();
            for r in 0..self.cfg.split.repetitions {
                match self.out.existing(Stage::Split, &format!("plan-r{r}.json")) {
                    Some(p) => plans.push(SplitPlan::load(p)?),
                    None => break,
                }
            }
            if plans.len() == self.cfg.split.repetitions {
                self.plans = Some(plans);
            }
        }
        Ok(self.plans.clone())
    }

    fn require_plans(&mut self, stage: Stage) -> Result<Vec<SplitPlan>> {
        self.plans()?
            .with_context(|| format!("{stage} needs split plans; run the split stage first"))
    }

    fn split(&mut self) -> Result<()> {
        let s = self.cfg.split.clone();
        let seed = self.cfg.seed;
        let kept = self.kept()?;
        let inputs = self.inputs()?;
        let ps_ids = data::ids_with_label(&kept, &inputs.labels, ClassLabel::Ps);
        let ln_ids = data::ids_with_label(&kept, &inputs.labels, ClassLabel::Ln);
        if ps_ids.is_empty() || ln_ids.is_empty() {
            bail!("split needs articles of both labels after dedup");
        }
        let coords = match (&s.coords, &s.coord_ids) {
            (Some(c), Some(i)) => {
                let all = ReducedCoords::load(c, i)?;
                let index: BTreeMap<&str, usize> = all.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
                let rows = ps_ids
                    .iter()
                    .map(|id| index.get(id.as_str()).copied().with_context(|| format!("no coordinates for {id:?}")))
                    .collect::<Result<Vec<_>>>()?;
                all.select(&rows)?
            }
            _ => {
                let emb_index = inputs.embeddings.index();
                let rows: Vec<usize> = ps_ids.iter().map(|id| emb_index[id.as_str()]).collect();
                let ps_emb = inputs.embeddings.select(&rows)?;
                let k = s.pca_dims.min(ps_emb.n()).min(ps_emb.d());
                pca_reduce(&ps_emb, k)?
            }
        };
        let eps = match s.eps {
            Some(e) => e,
            None => suggest_eps(&coords, s.min_samples)?,
        };
        let clusters = dbscan(&coords, eps, s.min_samples)?;
        info!("dbscan eps {eps:.4}: {} clusters, {} noise", clusters.n_clusters(), clusters.noise_count());
        let outcomes = repeated_splits(&clusters, &ln_ids, s.fraction, seed, s.repetitions)?;
        let mut reps = Vec::new();
        for (r, o) in outcomes.iter().enumerate() {
            for w in &o.warnings {
                warn!("split r{r}: {w}");
            }
            let p = self.out.begin(Stage::Split, &format!("plan-r{r}.json"))?;
            o.plan.save(&p)?;
            reps.push(RepetitionSummary {
                seed: o.plan.seed,
                ps_train_fraction: o.plan.ps_train_fraction,
                ln_train_fraction: o.plan.ln_train_fraction,
                straddling_clusters: o.plan.straddling(&clusters).len(),
                warnings: o.warnings.clone(),
            });
        }
        let summary = SplitSummary {
            eps,
            min_samples: s.min_samples,
            pca_dims: coords.k,
            n_ps: ps_ids.len(),
            n_ln: ln_ids.len(),
            n_clusters: clusters.n_clusters(),
            noise: clusters.noise_count(),
            repetitions: reps,
        };
        let p = self.out.begin(Stage::Split, "coords.pscrd")?;
        let q = self.out.begin(Stage::Split, "coords.ids.jsonl")?;
        coords.save(&p, &q)?;
        let p = self.out.begin(Stage::Split, "clusters.json")?;
        write_json(&p, &clusters)?;
        let p = self.out.begin(Stage::Split, "summary.json")?;
        write_json(&p, &summary)?;
        self.plans = Some(outcomes.into_iter().map(|o| o.plan).collect());
        Ok(())
    }

    fn feature_names(rep: Option<usize>) -> (String, String) {
        let s = rep_suffix(rep);
        (format!("schema{s}.json"), format!("features{s}.csv"))
    }

    fn featurize(&mut self) -> Result<()> {
        let f = self.cfg.featurize.clone();
        let kept = self.kept()?;
        let plans = self.plans()?;
        let inputs = self.inputs()?;
        let fit_sets: Vec<(Option<usize>, Vec<String>)> = match &plans {
            Some(plans) => plans.iter().enumerate().map(|(r, p)| (Some(r), p.train_ids.clone())).collect(),
            None => vec![(None, kept.clone())],
        };
        let mut sets = Vec::new();
        let mut files = Vec::new();
        for (rep, fit_ids) in fit_sets {
            let schema = data::fit_schema(&inputs.docs, &inputs.labels, &fit_ids, f.top_pairs, f.chain_mode)?;
            let rows = data::featurize(&inputs.docs, &inputs.labels, &kept, &schema)?;
            files.push((rep, schema.clone(), rows.clone()));
            sets.push(FeatureSet {
                schema,
                rows: data::feature_dataset(&rows),
            });
        }
        for (rep, schema, rows) in files {
            let (sn, fname) = Self::feature_names(rep);
            let p = self.out.begin(Stage::Featurize, &sn)?;
            schema.save(&p)?;
            let p = self.out.begin(Stage::Featurize, &fname)?;
            write_feature_csv(&p, &schema, &rows)?;
        }
        self.features = Some(sets);
        Ok(())
    }

    /// Feature sets per repetition.
    fn features(&mut self, stage: Stage) -> Result<Vec<FeatureSet>> {
        if let Some(f) = &self.features {
            return Ok(f.clone());
        }
        let plans = self.require_plans(stage)?;
        let mut sets = Vec::new();
        for r in 0..plans.len() {
            let (sn, fname) = Self::feature_names(Some(r));
            let (Some(sp), Some(fp)) = (self.out.existing(Stage::Featurize, &sn), self.out.existing(Stage::Featurize, &fname))
            else {
                bail!("{stage} needs per-split features; run the featurize stage after split");
            };
            let schema = FeatureSchema::load(sp)?;
            let table = read_feature_csv(fp)?;
            if table.names != schema.names {
                bail!("features{} columns do not match the schema", rep_suffix(Some(r)));
            }
            sets.push(FeatureSet {
                schema,
                rows: Dataset::from_table(&table),
            });
        }
        self.features = Some(sets.clone());
        Ok(sets)
    }

    fn embedding_rows(&mut self) -> Result<Dataset> {
        let inputs = self.inputs()?;
        Ok(data::embedding_dataset(&inputs.embeddings, &inputs.labels))
    }

    fn train(&mut self) -> Result<()> {
        let t = self.cfg.train.clone();
        let plans = self.require_plans(Stage::Train)?;
        let needs_features = t.models.iter().any(|m| m.uses_features());
        let features = if needs_features { Some(self.features(Stage::Train)?) } else { None };
        let emb = if t.models.contains(&ModelKind::Head) { Some(self.embedding_rows()?) } else { None };
        for (r, plan) in plans.iter().enumerate() {
            for &kind in &t.models {
                let model = match kind {
                    ModelKind::Forest | ModelKind::Linear => {
                        let fs = &features.as_ref().expect("loaded")[r];
                        let train = fs.rows.select(&plan.train_ids)?;
                        if kind == ModelKind::Forest {
                            let cfg = ForestConfig {
                                n_trees: t.forest_trees,
                                max_depth: t.forest_max_depth,
                                feature_subsample: t.forest_feature_subsample,
                                seed: plan.seed,
                            };
                            Model::Forest(train_forest(&train.rows, &train.labels, &fs.schema.names, &cfg)?)
                        } else {
                            let cfg = LinearConfig {
                                learning_rate: t.linear_learning_rate,
                                l2: t.linear_l2,
                                epochs: t.linear_epochs,
                                seed: plan.seed,
                            };
                            Model::Linear(train_linear(&train.rows, &train.labels, &fs.schema.names, &cfg)?)
                        }
                    }
                    ModelKind::Head => {
                        let train = emb.as_ref().expect("loaded").select(&plan.train_ids)?;
                        let cfg = TrainConfig {
                            learning_rate: t.head_learning_rate,
                            epochs: t.head_epochs,
                            batch_size: t.head_batch_size,
                            seed: plan.seed,
                            l2: t.head_l2,
                        };
                        Model::Head(train_head(&train.rows, &train.labels, t.head_hidden, &cfg)?)
                    }
                };
                info!("trained {} r{r}", kind.as_str());
                let p = self.out.begin(Stage::Train, &kind.file_name(r))?;
                model.save(&p)?;
                self.models.insert((kind, r), model);
            }
        }
        Ok(())
    }

    fn model(&mut self, kind: ModelKind, rep: usize) -> Result<Option<Model>> {
        if let Some(m) = self.models.get(&(kind, rep)) {
            return Ok(Some(m.clone()));
        }
        match self.out.existing(Stage::Train, &kind.file_name(rep)) {
            Some(p) => {
                let m = Model::load(&p).with_context(|| p.display().to_string())?;
                self.models.insert((kind, rep), m.clone());
                Ok(Some(m))
            }
            None => Ok(None),
        }
    }

    /// Test-side rows the model reads, for repetition `rep`.
    fn model_rows(&mut self, kind: ModelKind, rep: usize, stage: Stage) -> Result<Dataset> {
        if kind.uses_features() {
            Ok(self.features(stage)?[rep].rows.clone())
        } else {
            self.embedding_rows()
        }
    }

    fn eval(&mut self) -> Result<()> {
        let plans = self.require_plans(Stage::Eval)?;
        let kinds = self.cfg.train.models.clone();
        let repeats = self.cfg.eval.importance_repeats;
        let mut rows: Vec<(String, Metrics)> = Vec::new();
        let mut summary: BTreeMap<&str, serde_json::Value> = BTreeMap::new();
        let mut importance = Vec::new();
        for kind in kinds {
            let mut per_rep = Vec::new();
            for (r, plan) in plans.iter().enumerate() {
                let model = self
                    .model(kind, r)?
                    .with_context(|| format!("eval needs the {} model r{r}; run the train stage first", kind.as_str()))?;
                let test = self.model_rows(kind, r, Stage::Eval)?.select(&plan.test_ids)?;
                let m = test.evaluate(&model)?;
                rows.push((format!("{}-r{r}", kind.as_str()), m.clone()));
                per_rep.push(m);
                if kind.uses_features() && repeats > 0 {
                    let names = model.feature_names().to_vec();
                    let imp =
                        permutation_importance(&model, &test.rows, &test.labels, &names, repeats, rng::derive(plan.seed, 7))?;
                    importance.push((format!("importance-{}-r{r}.json", kind.as_str()), imp));
                }
            }
            let n = per_rep.len() as f64;
            summary.insert(
                kind.as_str(),
                serde_json::json!({
                    "mean_f1_ps": per_rep.iter().map(|m| m.f1_ps).sum::<f64>() / n,
                    "mean_f1_macro": per_rep.iter().map(|m| m.f1_macro).sum::<f64>() / n,
                    "mean_accuracy": per_rep.iter().map(|m| m.accuracy).sum::<f64>() / n,
                    "repetitions": per_rep,
                }),
            );
        }
        let p = self.out.begin(Stage::Eval, "metrics.csv")?;
        write_metrics_csv(&p, &rows)?;
        let p = self.out.begin(Stage::Eval, "summary.json")?;
        write_json(&p, &summary)?;
        for (name, imp) in importance {
            let p = self.out.begin(Stage::Eval, &name)?;
            write_json(&p, &imp)?;
        }
        Ok(())
    }

    fn attack_state(&mut self, stage: Stage) -> Result<AttackState> {
        if let Some(a) = &self.attack {
            return Ok(a.clone());
        }
        let (Some(jp), Some(cp)) =
            (self.out.existing(Stage::Attack, "attack.jsonl"), self.out.existing(Stage::Attack, "attack.conllu"))
        else {
            bail!("{stage} needs an attack corpus; run the attack stage first");
        };
        let corpus = load_attack_corpus(&jp, &self.inputs()?.corpus)?;
        let docs = read_conllu(&cp)?;
        let emb = self.attack_embeddings_from_files()?;
        let state = AttackState {
            embeddings: attack_rows(&emb, &corpus),
            corpus,
            docs,
        };
        self.attack = Some(state.clone());
        Ok(state)
    }

    fn attack_embeddings_from_files(&mut self) -> Result<EmbeddingMatrix> {
        let a = &self.cfg.attack;
        match (&a.embeddings, &a.embedding_ids) {
            (Some(e), Some(i)) => Ok(load_embeddings(e, i)?),
            _ => {
                let (Some(e), Some(i)) = (
                    self.out.existing(Stage::Attack, "embeddings.psemb"),
                    self.out.existing(Stage::Attack, "embeddings.ids.jsonl"),
                ) else {
                    bail!("no embeddings for the attack corpus");
                };
                Ok(load_embeddings(e, i)?)
            }
        }
    }

    fn attack(&mut self) -> Result<()> {
        let a = self.cfg.attack.clone();
        let seed = self.cfg.seed;
        let lexicon = self.lexicon()?;
        let kept = self.kept()?;
        let inputs = self.inputs()?;
        let ps: Vec<_> = data::ids_with_label(&kept, &inputs.labels, ClassLabel::Ps)
            .into_iter()
            .map(|id| (inputs.corpus.get(&id).expect("kept id"), &inputs.docs[&id]))
            .collect();
        let cfg = ObfuscationConfig {
            adjective_drop_rate: a.adjective_drop_rate,
            merge_rate: a.merge_rate,
            synonym_rate: a.synonym_rate,
            seed,
        };
        let (corpus, docs) = surrogate_attack(&ps, &cfg, lexicon.as_ref(), &a.generator)?;
        let emb = match (&a.embeddings, &a.embedding_ids) {
            (Some(e), Some(i)) => load_embeddings(e, i)?,
            _ => {
                let enc = StyleEncoder::default();
                let rows: Vec<Vec<f32>> = corpus.records.iter().map(|r| enc.encode(&docs[&r.id])).collect();
                let emb = EmbeddingMatrix::from_rows(corpus.records.iter().map(|r| r.id.clone()).collect(), &rows)?;
                let p = self.out.begin(Stage::Attack, "embeddings.psemb")?;
                let q = self.out.begin(Stage::Attack, "embeddings.ids.jsonl")?;
                emb.save(&p, &q)?;
                emb
            }
        };
        let p = self.out.begin(Stage::Attack, "attack.jsonl")?;
        corpus.save(&p)?;
        let p = self.out.begin(Stage::Attack, "attack.conllu")?;
        save_conllu(&p, corpus.records.iter().map(|r| &docs[&r.id]))?;
        let p = self.out.begin(Stage::Attack, "manifest.json")?;
        write_json(&p, &corpus.manifest())?;
        let state = AttackState {
            embeddings: attack_rows(&emb, &corpus),
            corpus,
            docs,
        };
        self.attack = Some(state.clone());

        // Attacked-test evaluation of every trained model.
        let Some(plans) = self.plans()? else {
            warn!("no split plans; attack evaluation skipped");
            return Ok(());
        };
        let mut reports: BTreeMap<String, AttackReport> = BTreeMap::new();
        let mut rows = Vec::new();
        for kind in self.cfg.train.models.clone() {
            for (r, plan) in plans.iter().enumerate() {
                let Some(model) = self.model(kind, r)? else {
                    warn!("no {} model r{r}; attack evaluation skipped for it", kind.as_str());
                    continue;
                };
                let test_set = plan.test_set();
                let test_attack = AttackCorpus {
                    records: state
                        .corpus
                        .records
                        .iter()
                        .filter(|rec| test_set.contains(rec.parent_id.as_str()))
                        .cloned()
                        .collect(),
                };
                let test = self.model_rows(kind, r, Stage::Attack)?.select(&plan.test_ids)?;
                let attacked = if kind.uses_features() {
                    let schema = &self.features(Stage::Attack)?[r].schema;
                    let labels = test_attack.records.iter().map(|rec| (rec.id.clone(), ClassLabel::Ps)).collect();
                    let ids: Vec<String> = test_attack.records.iter().map(|rec| rec.id.clone()).collect();
                    data::feature_dataset(&data::featurize(&state.docs, &labels, &ids, schema)?)
                } else {
                    state.embeddings.clone()
                };
                let report = attack_eval(&model, plan, &test, &test_attack, &attacked)?;
                let name = format!("{}-r{r}", kind.as_str());
                rows.push((format!("{name}/original"), report.original.clone()));
                for (g, m) in &report.generators {
                    rows.push((format!("{name}/{g}"), m.clone()));
                }
                reports.insert(name, report);
            }
        }
        let p = self.out.begin(Stage::Attack, "eval.json")?;
        write_json(&p, &reports)?;
        let p = self.out.begin(Stage::Attack, "eval.csv")?;
        write_metrics_csv(&p, &rows)?;
        Ok(())
    }

    fn adapt(&mut self) -> Result<()> {
        let a = self.cfg.adapt.clone();
        let plans = self.require_plans(Stage::Adapt)?;
        let attack = self.attack_state(Stage::Adapt)?;
        let rows = self.embedding_rows()?;
        let modes: Vec<AdaptMode> = match a.mode {
            AdaptModes::Controlled => vec![AdaptMode::Controlled],
            AdaptModes::Uncontrolled => vec![AdaptMode::Uncontrolled],
            AdaptModes::Both => vec![AdaptMode::Uncontrolled, AdaptMode::Controlled],
        };
        for (r, plan) in plans.iter().enumerate() {
            let Some(Model::Head(base)) = self.model(ModelKind::Head, r)? else {
                bail!("adapt needs the head model r{r}; run the train stage with the head model first");
            };
            let data = AdaptData::new(plan, &rows, &attack.corpus, &attack.embeddings)?;
            let cfg = AdaptConfig {
                eta0: self.cfg.train.head_learning_rate,
                lr_divisor: a.lr_divisor,
                epochs_per_stage: a.epochs_per_stage,
                batch_size: a.batch_size,
                seed: plan.seed,
                replay: a.replay,
            };
            let curves: Vec<AdaptationCurve> = modes
                .iter()
                .map(|&m| run_adaptation_curve(&base, &cfg, &stage_fractions(a.stages), m, &data))
                .collect::<pinkslime_core::Result<_>>()?;
            let report = match (&curves[..], a.mode) {
                ([u, c], AdaptModes::Both) => Some(forgetting_report(c, u)?),
                _ => None,
            };
            let p = self.out.begin(Stage::Adapt, &format!("curves-r{r}.csv"))?;
            let q = self.out.begin(Stage::Adapt, &format!("summary-r{r}.json"))?;
            save_curves(&p, &q, &curves.iter().collect::<Vec<_>>(), report.as_ref())?;
        }
        Ok(())
    }

    fn report(&mut self) -> Result<()> {
        let n = self.cfg.report.permutations;
        let seed = self.cfg.seed;
        let kept = self.kept()?;
        let inputs = self.inputs()?;
        let docs: Vec<(&AnnotatedDocument, ClassLabel)> =
            kept.iter().map(|id| (&inputs.docs[id], inputs.labels[id])).collect();
        let contrast = contrast_report(&docs, n, seed)?;
        let p = self.out.begin(Stage::Report, "contrast.json")?;
        write_json(&p, &contrast)?;
        let p = self.out.begin(Stage::Report, "contrast.csv")?;
        write_comparisons_csv(&p, &contrast.rows)?;

        let features = match self.plans()? {
            Some(_) => self.features(Stage::Report).ok().map(|f| f[0].clone()),
            None => None,
        };
        if let Some(fs) = features {
            let table = pinkslime_core::features::FeatureTable {
                names: fs.schema.names.clone(),
                ids: fs.rows.ids.clone(),
                labels: fs.rows.labels.clone(),
                rows: fs.rows.rows.clone(),
            };
            let cmp = compare_table(&table, &fs.schema.names, n, seed)?;
            let p = self.out.begin(Stage::Report, "compare.csv")?;
            write_comparisons_csv(&p, &cmp)?;
        }
        if let Some(v) = self.cfg.inputs.votes.clone() {
            let table = load_votes(&v)?;
            let p = self.out.begin(Stage::Report, "consensus.csv")?;
            write_consensus_csv(&p, &table)?;
        }
        Ok(())
    }
}

/// Attack-article embedding rows labelled PS.
fn attack_rows(emb: &EmbeddingMatrix, corpus: &AttackCorpus) -> Dataset {
    let ids: std::collections::HashSet<&str> = corpus.records.iter().map(|r| r.id.as_str()).collect();
    Dataset::from_embeddings(emb, |id| ids.contains(id).then_some(ClassLabel::Ps))
}
