//! Subcommands. Each one runs a single stage on explicit files; `run` drives
//! the whole pipeline from a config file.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use pinkslime_core::adapt::{
    forgetting_report, run_adaptation_curve, save_curves, stage_fractions, AdaptConfig, AdaptData, AdaptMode,
    ReplayPolicy,
};
use pinkslime_core::adversary::{
    attack_eval, load_attack_corpus, surrogate_attack, AttackCorpus, Lexicon, ObfuscationConfig, SURROGATE_GENERATOR,
};
use pinkslime_core::bench::{make_synthetic_benchmark, BenchConfig};
use pinkslime_core::conllu::{read_conllu, save_conllu};
use pinkslime_core::corpus::{join, ClassLabel};
use pinkslime_core::dedup::{deduplicate_grouped, DedupMode, ScanOrder};
use pinkslime_core::evalreport::{
    compare_table, contrast_report, load_votes, write_comparisons_csv, write_consensus_csv, DEFAULT_PERMUTATIONS,
};
use pinkslime_core::features::{read_feature_csv, write_feature_csv, ChainMode, FeatureSchema};
use pinkslime_core::matrix::{load_embeddings, read_ids, EmbeddingMatrix};
use pinkslime_core::models::{
    train_forest, train_head, train_linear, Dataset, ForestConfig, LinearConfig, Model, TrainConfig,
};
use pinkslime_core::split::{dbscan, pca_reduce, repeated_splits, suggest_eps, ReducedCoords, SplitPlan};

use crate::config::{ModelKind, RunConfig, Stage};
use crate::data;

#[derive(Debug, Parser)]
#[command(name = "pinkslime", version, about = "Templated local-news detection pipeline")]
pub struct Cli {
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and align articles with annotations; print the corpus manifest.
    Ingest(IngestArgs),
    /// Remove near-duplicate articles by embedding cosine similarity.
    Dedup(DedupArgs),
    /// Extract the handcrafted features to CSV.
    Featurize(FeaturizeArgs),
    /// Cluster PS articles and write cluster-aware split plans.
    Split(SplitArgs),
    /// Train a detector on the training side of a split.
    Train(TrainArgs),
    /// Evaluate a detector on one side of a split.
    Eval(EvalArgs),
    /// Generate or evaluate attack corpora.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Staged continual adaptation of the head model.
    Adapt(AdaptArgs),
    /// Statistical comparisons and consensus tables.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Write the seeded synthetic benchmark.
    BenchMake(BenchArgs),
    /// Run the pipeline described by a config file.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct ArticleArgs {
    /// PS articles (JSON Lines).
    #[arg(long)]
    pub ps: Option<PathBuf>,
    /// LN articles (JSON Lines).
    #[arg(long)]
    pub ln: Option<PathBuf>,
}

impl ArticleArgs {
    fn labels(&self) -> Result<HashMap<String, ClassLabel>> {
        let corpus = data::read_corpus(self.ps.as_deref(), self.ln.as_deref())?;
        Ok(corpus.records().iter().map(|r| (r.id.clone(), r.label)).collect())
    }
}

/// Model inputs: a feature CSV, or embeddings labelled from article files.
#[derive(Debug, Args)]
pub struct RowArgs {
    #[arg(long, conflicts_with_all = ["embeddings", "ids"])]
    pub features: Option<PathBuf>,
    #[arg(long, requires = "ids")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, requires = "embeddings")]
    pub ids: Option<PathBuf>,
    #[command(flatten)]
    pub articles: ArticleArgs,
}

impl RowArgs {
    fn load(&self) -> Result<Dataset> {
        match (&self.features, &self.embeddings, &self.ids) {
            (Some(f), _, _) => Ok(Dataset::from_table(&read_feature_csv(f)?)),
            (None, Some(e), Some(i)) => {
                let emb = load_embeddings(e, i)?;
                Ok(data::embedding_dataset(&emb, &self.articles.labels()?))
            }
            _ => bail!("give --features, or --embeddings with --ids and the article files"),
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub articles: ArticleArgs,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Manifest output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DedupArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub ids: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
    #[arg(long)]
    pub report: PathBuf,
    /// Compare across labels; the default compares PS with PS and LN with LN
    /// when article files are given.
    #[arg(long)]
    pub global: bool,
    #[command(flatten)]
    pub articles: ArticleArgs,
    #[arg(long, value_enum, default_value_t = OrderArg::Input)]
    pub order: OrderArg,
    /// Hyperplane banding: number of bands.
    #[arg(long, requires = "rows_per_band")]
    pub bands: Option<usize>,
    #[arg(long, requires = "bands")]
    pub rows_per_band: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderArg {
    Input,
    Id,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub articles: ArticleArgs,
    #[arg(long)]
    pub annotations: PathBuf,
    /// Use an existing schema instead of fitting one.
    #[arg(long, conflicts_with = "fit_split")]
    pub schema: Option<PathBuf>,
    /// Fit the co-occurrence slots on this plan's training side only.
    #[arg(long)]
    pub fit_split: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub top_pairs: usize,
    #[arg(long, value_enum, default_value_t = ChainArg::ArcSpan)]
    pub chain_mode: ChainArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub schema_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ChainArg {
    ArcSpan,
    PathLength,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// PS coordinates (PSCRD) with their id file.
    #[arg(long, requires = "ps_coord_ids", conflicts_with = "ps_embeddings")]
    pub ps_coords: Option<PathBuf>,
    #[arg(long)]
    pub ps_coord_ids: Option<PathBuf>,
    /// PS embeddings (PSEMB), reduced by PCA.
    #[arg(long, requires = "ps_ids")]
    pub ps_embeddings: Option<PathBuf>,
    #[arg(long)]
    pub ps_ids: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub pca_dims: usize,
    /// LN ids: JSON Lines id file or one id per line.
    #[arg(long)]
    pub ln_ids: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub min_samples: usize,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 0.8)]
    pub fraction: f64,
    /// Number of repetitions; repetition r uses seed + r.
    #[arg(long, default_value_t = 3)]
    pub seeds: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub model: ModelKind,
    #[command(flatten)]
    pub rows: RowArgs,
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the split's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Side {
    Train,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub rows: RowArgs,
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long, value_enum, default_value_t = Side::Test)]
    pub on: Side,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AttackCommand {
    /// Rewrite PS articles with the surrogate obfuscator.
    Surrogate(SurrogateArgs),
    /// Evaluate a detector on the attacked test side.
    Eval(AttackEvalArgs),
}

#[derive(Debug, Args)]
pub struct SurrogateArgs {
    /// PS articles (JSON Lines).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    pub drop: f64,
    #[arg(long, default_value_t = 0.5)]
    pub merge: f64,
    #[arg(long, default_value_t = 0.3)]
    pub syn: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value = SURROGATE_GENERATOR)]
    pub generator: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Annotations of the rewritten articles.
    #[arg(long)]
    pub out_annotations: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttackEvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub attack: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[command(flatten)]
    pub rows: RowArgs,
    /// Feature models: annotations of the attack articles and the schema the
    /// model was trained with.
    #[arg(long, requires = "schema")]
    pub attack_annotations: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Head model: embeddings of the attack articles.
    #[arg(long, requires = "attack_ids")]
    pub attack_embeddings: Option<PathBuf>,
    #[arg(long)]
    pub attack_ids: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Controlled,
    Uncontrolled,
    Both,
}

#[derive(Debug, Args)]
pub struct AdaptArgs {
    #[arg(long)]
    pub base_model: PathBuf,
    #[arg(long)]
    pub attack: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub ids: PathBuf,
    #[command(flatten)]
    pub articles: ArticleArgs,
    #[arg(long)]
    pub attack_embeddings: PathBuf,
    #[arg(long)]
    pub attack_ids: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10)]
    pub stages: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Learning rate of the base model's training run.
    #[arg(long, default_value_t = 0.05)]
    pub eta0: f64,
    #[arg(long, default_value_t = 100.0)]
    pub lr_divisor: f64,
    #[arg(long, default_value_t = 3)]
    pub epochs_per_stage: usize,
    /// Replay buffer as half of the whole PS training pool instead of half
    /// the stage's adversarial set.
    #[arg(long)]
    pub replay_half_pool: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Permutation tests of every feature between the label groups.
    Compare(CompareArgs),
    /// Agreement table of external detector votes.
    Consensus(ConsensusArgs),
    /// The PS-vs-LN stylistic contrast table.
    Contrast(ContrastArgs),
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Grouping column; only `label` is supported.
    #[arg(long, default_value = "label")]
    pub by: String,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConsensusArgs {
    #[arg(long)]
    pub votes: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ContrastArgs {
    #[command(flatten)]
    pub articles: ArticleArgs,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 400)]
    pub n_ps: usize,
    #[arg(long, default_value_t = 800)]
    pub n_ln: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `seed` in the file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `out_dir` in the file.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Overrides `stages` in the file (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub stages: Option<Vec<Stage>>,
}

fn write_output<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => fs::write(p, s).with_context(|| p.display().to_string()),
        None => {
            std::io::stdout().write_all(s.as_bytes())?;
            Ok(())
        }
    }
}

/// Reads ids from a JSON Lines id file or from one id per line.
pub fn read_id_list(path: &Path) -> Result<Vec<String>> {
    let s = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    if s.trim_start().starts_with('{') {
        return Ok(read_ids(path)?);
    }
    Ok(s.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

pub fn execute(cli: Cli) -> Result<()> {
    crate::init_threads(cli.threads);
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Dedup(a) => dedup(a),
        Command::Featurize(a) => featurize(a),
        Command::Split(a) => split(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Attack(AttackCommand::Surrogate(a)) => surrogate(a),
        Command::Attack(AttackCommand::Eval(a)) => attack_evaluate(a),
        Command::Adapt(a) => adapt(a),
        Command::Report(ReportCommand::Compare(a)) => compare(a),
        Command::Report(ReportCommand::Consensus(a)) => consensus(a),
        Command::Report(ReportCommand::Contrast(a)) => contrast(a),
        Command::BenchMake(a) => bench_make(a),
        Command::Run(a) => run(a, cli.threads),
    }
}

fn ingest(a: IngestArgs) -> Result<()> {
    let corpus = data::read_corpus(a.articles.ps.as_deref(), a.articles.ln.as_deref())?;
    let join_report = match &a.annotations {
        Some(p) => Some(join(&corpus, &read_conllu(p)?)?.report),
        None => None,
    };
    write_output(
        a.out.as_deref(),
        &serde_json::json!({ "manifest": corpus.manifest(), "join": join_report }),
    )
}

fn dedup(a: DedupArgs) -> Result<()> {
    let emb = load_embeddings(&a.embeddings, &a.ids)?;
    let groups = if a.global || (a.articles.ps.is_none() && a.articles.ln.is_none()) {
        None
    } else {
        let labels = a.articles.labels()?;
        let g = emb
            .ids()
            .iter()
            .map(|id| labels.get(id).map(|l| l.index()).with_context(|| format!("no article for embedding {id:?}")))
            .collect::<Result<Vec<_>>>()?;
        Some(g)
    };
    let order = match a.order {
        OrderArg::Input => ScanOrder::Input,
        OrderArg::Id => ScanOrder::Id,
    };
    let mode = match (a.bands, a.rows_per_band) {
        (Some(bands), Some(rows_per_band)) => DedupMode::Banded {
            bands,
            rows_per_band,
            seed: a.seed,
        },
        _ => DedupMode::Exact,
    };
    let report = deduplicate_grouped(&emb, a.threshold, order, groups.as_deref(), mode)?;
    info!("removed {} of {}", report.removed.len(), emb.n());
    fs::write(&a.report, report.to_json() + "\n")?;
    Ok(())
}

fn featurize(a: FeaturizeArgs) -> Result<()> {
    let corpus = data::read_corpus(a.articles.ps.as_deref(), a.articles.ln.as_deref())?;
    let docs = read_conllu(&a.annotations)?;
    let aligned = join(&corpus, &docs)?;
    let labels: HashMap<String, ClassLabel> = aligned.items.iter().map(|x| (x.record.id.clone(), x.record.label)).collect();
    let ids: Vec<String> = aligned.items.iter().map(|x| x.record.id.clone()).collect();
    let chain = match a.chain_mode {
        ChainArg::ArcSpan => ChainMode::ArcSpan,
        ChainArg::PathLength => ChainMode::PathLength,
    };
    let schema = match (&a.schema, &a.fit_split) {
        (Some(p), _) => FeatureSchema::load(p)?,
        (None, Some(p)) => data::fit_schema(&docs, &labels, &SplitPlan::load(p)?.train_ids, a.top_pairs, chain)?,
        (None, None) => data::fit_schema(&docs, &labels, &ids, a.top_pairs, chain)?,
    };
    let rows = data::featurize(&docs, &labels, &ids, &schema)?;
    write_feature_csv(&a.out, &schema, &rows)?;
    if let Some(p) = &a.schema_out {
        schema.save(p)?;
    }
    Ok(())
}

fn split(a: SplitArgs) -> Result<()> {
    let coords = match (&a.ps_coords, &a.ps_coord_ids, &a.ps_embeddings, &a.ps_ids) {
        (Some(c), Some(i), _, _) => ReducedCoords::load(c, i)?,
        (_, _, Some(e), Some(i)) => {
            let emb = load_embeddings(e, i)?;
            pca_reduce(&emb, a.pca_dims.min(emb.n()).min(emb.d()))?
        }
        _ => bail!("give --ps-coords with --ps-coord-ids, or --ps-embeddings with --ps-ids"),
    };
    let ln_ids = read_id_list(&a.ln_ids)?;
    let eps = match a.eps {
        Some(e) => e,
        None => suggest_eps(&coords, a.min_samples)?,
    };
    let clusters = dbscan(&coords, eps, a.min_samples)?;
    info!("eps {eps:.4}: {} clusters, {} noise", clusters.n_clusters(), clusters.noise_count());
    fs::create_dir_all(&a.out_dir)?;
    for (r, o) in repeated_splits(&clusters, &ln_ids, a.fraction, a.seed, a.seeds)?.iter().enumerate() {
        for w in &o.warnings {
            warn!("{w}");
        }
        o.plan.save(a.out_dir.join(format!("plan-r{r}.json")))?;
    }
    write_output(Some(&a.out_dir.join("clusters.json")), &clusters)
}

fn train(a: TrainArgs) -> Result<()> {
    let plan = SplitPlan::load(&a.split)?;
    let seed = a.seed.unwrap_or(plan.seed);
    let train = a.rows.load()?.select(&plan.train_ids)?;
    let names = match &a.rows.features {
        Some(f) => read_feature_csv(f)?.names,
        None => Vec::new(),
    };
    let model = match a.model {
        ModelKind::Forest => {
            let cfg = ForestConfig {
                seed,
                ..Default::default()
            };
            Model::Forest(train_forest(&train.rows, &train.labels, &names, &cfg)?)
        }
        ModelKind::Linear => {
            let cfg = LinearConfig {
                seed,
                ..Default::default()
            };
            Model::Linear(train_linear(&train.rows, &train.labels, &names, &cfg)?)
        }
        ModelKind::Head => {
            let cfg = TrainConfig {
                seed,
                ..Default::default()
            };
            Model::Head(train_head(&train.rows, &train.labels, [256, 64], &cfg)?)
        }
    };
    model.save(&a.out)?;
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let model = Model::load(&a.model)?;
    let plan = SplitPlan::load(&a.split)?;
    let ids = match a.on {
        Side::Train => &plan.train_ids,
        Side::Test => &plan.test_ids,
    };
    let m = a.rows.load()?.select(ids)?.evaluate(&model)?;
    write_output(a.out.as_deref(), &m)
}

fn surrogate(a: SurrogateArgs) -> Result<()> {
    let corpus = data::read_corpus(Some(&a.input), None)?;
    let docs = read_conllu(&a.annotations)?;
    let aligned = join(&corpus, &docs)?;
    let lexicon = a.lexicon.as_ref().map(Lexicon::load).transpose()?;
    let cfg = ObfuscationConfig {
        adjective_drop_rate: a.drop,
        merge_rate: a.merge,
        synonym_rate: a.syn,
        seed: a.seed,
    };
    let items: Vec<_> = aligned.items.iter().map(|x| (&x.record, &x.doc)).collect();
    let (attack, attack_docs) = surrogate_attack(&items, &cfg, lexicon.as_ref(), &a.generator)?;
    attack.save(&a.out)?;
    if let Some(p) = &a.out_annotations {
        save_conllu(p, attack.records.iter().map(|r| &attack_docs[&r.id]))?;
    }
    info!("{} articles rewritten", attack.len());
    Ok(())
}

fn attack_evaluate(a: AttackEvalArgs) -> Result<()> {
    let model = Model::load(&a.model)?;
    let plan = SplitPlan::load(&a.split)?;
    let rows = a.rows.load()?;
    let test = rows.select(&plan.test_ids)?;
    let all = pinkslime_core::adversary::read_attack_corpus(std::io::BufReader::new(
        fs::File::open(&a.attack).with_context(|| a.attack.display().to_string())?,
    ))?;
    let test_set = plan.test_set();
    let attack = AttackCorpus {
        records: all.records.into_iter().filter(|r| test_set.contains(r.parent_id.as_str())).collect(),
    };
    let attacked = match (&a.attack_annotations, &a.schema, &a.attack_embeddings, &a.attack_ids) {
        (Some(ann), Some(s), _, _) => {
            let docs = read_conllu(ann)?;
            let schema = FeatureSchema::load(s)?;
            let labels = attack.records.iter().map(|r| (r.id.clone(), ClassLabel::Ps)).collect();
            let ids: Vec<String> = attack.records.iter().map(|r| r.id.clone()).collect();
            data::feature_dataset(&data::featurize(&docs, &labels, &ids, &schema)?)
        }
        (_, _, Some(e), Some(i)) => {
            let emb = load_embeddings(e, i)?;
            Dataset::from_embeddings(&emb, |_| Some(ClassLabel::Ps))
        }
        _ => bail!("give --attack-annotations with --schema, or --attack-embeddings with --attack-ids"),
    };
    let report = attack_eval(&model, &plan, &test, &attack, &attacked)?;
    write_output(a.out.as_deref(), &report)
}

fn adapt(a: AdaptArgs) -> Result<()> {
    let Model::Head(base) = Model::load(&a.base_model)? else {
        bail!("adapt works on the head model only");
    };
    let plan = SplitPlan::load(&a.split)?;
    let corpus = data::read_corpus(a.articles.ps.as_deref(), a.articles.ln.as_deref())?;
    let labels: HashMap<String, ClassLabel> = corpus.records().iter().map(|r| (r.id.clone(), r.label)).collect();
    let rows = data::embedding_dataset(&load_embeddings(&a.embeddings, &a.ids)?, &labels);
    let attack = load_attack_corpus(&a.attack, &corpus)?;
    let attack_emb: EmbeddingMatrix = load_embeddings(&a.attack_embeddings, &a.attack_ids)?;
    let attack_rows = Dataset::from_embeddings(&attack_emb, |_| Some(ClassLabel::Ps));
    let data = AdaptData::new(&plan, &rows, &attack, &attack_rows)?;
    let cfg = AdaptConfig {
        eta0: a.eta0,
        lr_divisor: a.lr_divisor,
        epochs_per_stage: a.epochs_per_stage,
        seed: a.seed,
        replay: if a.replay_half_pool { ReplayPolicy::HalfOfPsPool } else { ReplayPolicy::HalfOfAdv },
        ..Default::default()
    };
    let modes = match a.mode {
        ModeArg::Controlled => vec![AdaptMode::Controlled],
        ModeArg::Uncontrolled => vec![AdaptMode::Uncontrolled],
        ModeArg::Both => vec![AdaptMode::Uncontrolled, AdaptMode::Controlled],
    };
    let curves = modes
        .iter()
        .map(|&m| run_adaptation_curve(&base, &cfg, &stage_fractions(a.stages), m, &data))
        .collect::<pinkslime_core::Result<Vec<_>>>()?;
    let report = match &curves[..] {
        [u, c] => Some(forgetting_report(c, u)?),
        _ => None,
    };
    fs::create_dir_all(&a.out_dir)?;
    save_curves(
        a.out_dir.join("curves.csv"),
        a.out_dir.join("summary.json"),
        &curves.iter().collect::<Vec<_>>(),
        report.as_ref(),
    )?;
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    if a.by != "label" {
        bail!("only --by label is supported");
    }
    let table = read_feature_csv(&a.features)?;
    let rows = compare_table(&table, &table.names, a.permutations, a.seed)?;
    match &a.out {
        Some(p) => write_comparisons_csv(p, &rows)?,
        None => write_output(None, &rows)?,
    }
    Ok(())
}

fn consensus(a: ConsensusArgs) -> Result<()> {
    let table = load_votes(&a.votes)?;
    match &a.out {
        Some(p) => write_consensus_csv(p, &table)?,
        None => write_output(None, &table)?,
    }
    Ok(())
}

fn contrast(a: ContrastArgs) -> Result<()> {
    let corpus = data::read_corpus(a.articles.ps.as_deref(), a.articles.ln.as_deref())?;
    let docs = read_conllu(&a.annotations)?;
    let aligned = join(&corpus, &docs)?;
    let items: Vec<_> = aligned.items.iter().map(|x| (&x.doc, x.record.label)).collect();
    let report = contrast_report(&items, a.permutations, a.seed)?;
    write_output(a.out.as_deref(), &report)
}

fn bench_make(a: BenchArgs) -> Result<()> {
    let bench = make_synthetic_benchmark(&BenchConfig {
        seed: a.seed,
        n_ps: a.n_ps,
        n_ln: a.n_ln,
        ..Default::default()
    })?;
    let files = bench.write(&a.out)?;
    write_output(None, &files)
}

fn run(a: RunArgs, threads: usize) -> Result<()> {
    let mut cfg = RunConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = a.out_dir {
        cfg.out_dir = o;
    }
    if let Some(s) = a.stages {
        cfg.stages = s;
    }
    if threads > 0 {
        cfg.threads = threads;
    }
    crate::init_threads(cfg.threads);
    let summary = crate::run_pipeline(&cfg)?;
    let artifacts: BTreeMap<_, _> = summary.manifest.artifacts.iter().collect();
    info!("{} artifacts in {}", artifacts.len(), summary.out_dir.display());
    write_output(None, &summary.manifest)
}
