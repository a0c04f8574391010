//! Run configuration: one TOML file with a flat section per stage. Every
//! field has a default, so an empty file is a valid config once inputs are
//! given or the bench stage is enabled.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pinkslime_core::adapt::ReplayPolicy;
use pinkslime_core::adversary::SURROGATE_GENERATOR;
use pinkslime_core::dedup::ScanOrder;
use pinkslime_core::features::ChainMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    BenchMake,
    Ingest,
    Dedup,
    Split,
    Featurize,
    Train,
    Eval,
    Attack,
    Adapt,
    Report,
}

impl Stage {
    /// Execution order. Split runs before featurize because the feature
    /// schema is fitted on the training side only.
    pub const ALL: [Stage; 10] = [
        Stage::BenchMake,
        Stage::Ingest,
        Stage::Dedup,
        Stage::Split,
        Stage::Featurize,
        Stage::Train,
        Stage::Eval,
        Stage::Attack,
        Stage::Adapt,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::BenchMake => "bench-make",
            Stage::Ingest => "ingest",
            Stage::Dedup => "dedup",
            Stage::Split => "split",
            Stage::Featurize => "featurize",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Attack => "attack",
            Stage::Adapt => "adapt",
            Stage::Report => "report",
        }
    }

    /// Directory under the output root holding this stage's artifacts.
    pub fn dir(self) -> &'static str {
        match self {
            Stage::BenchMake => "bench",
            s => s.as_str(),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .with_context(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Forest,
    Linear,
    Head,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Forest => "forest",
            ModelKind::Linear => "linear",
            ModelKind::Head => "head",
        }
    }

    /// Feature-based models read the hand-crafted features; the head reads
    /// embeddings.
    pub fn uses_features(self) -> bool {
        self != ModelKind::Head
    }

    pub fn file_name(self, rep: usize) -> String {
        match self {
            ModelKind::Head => format!("head-r{rep}.pshead"),
            k => format!("{}-r{rep}.json", k.as_str()),
        }
    }
}

impl FromStr for ModelKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forest" => Ok(ModelKind::Forest),
            "linear" => Ok(ModelKind::Linear),
            "head" => Ok(ModelKind::Head),
            _ => bail!("unknown model {s:?} (forest, linear, head)"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    /// PS articles, JSON Lines.
    pub ps: Option<PathBuf>,
    /// LN articles, JSON Lines.
    pub ln: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub embedding_ids: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    /// External-detector votes for the consensus table.
    pub votes: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    /// Defaults to the run seed.
    pub seed: Option<u64>,
    pub n_ps: usize,
    pub n_ln: usize,
    pub n_templates: usize,
    pub near_copy_rate: f64,
    pub slot_noise: f64,
}

impl Default for BenchSection {
    fn default() -> Self {
        let d = pinkslime_core::bench::BenchConfig::default();
        BenchSection {
            seed: None,
            n_ps: d.n_ps,
            n_ln: d.n_ln,
            n_templates: d.n_templates,
            near_copy_rate: d.near_copy_rate,
            slot_noise: d.slot_noise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DedupScope {
    /// PS compared against PS, LN against LN.
    #[default]
    WithinLabel,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupSection {
    pub threshold: f64,
    pub scope: DedupScope,
    pub order: ScanOrder,
    /// Hyperplane banding instead of the exact scan when both are set.
    pub bands: Option<usize>,
    pub rows_per_band: Option<usize>,
}

impl Default for DedupSection {
    fn default() -> Self {
        DedupSection {
            threshold: 0.8,
            scope: DedupScope::WithinLabel,
            order: ScanOrder::Input,
            bands: None,
            rows_per_band: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub pca_dims: usize,
    pub min_samples: usize,
    /// Data-driven when absent.
    pub eps: Option<f64>,
    pub fraction: f64,
    pub repetitions: usize,
    /// Precomputed PS coordinates (PSCRD) used instead of PCA.
    pub coords: Option<PathBuf>,
    pub coord_ids: Option<PathBuf>,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            pca_dims: 50,
            min_samples: pinkslime_core::split::DEFAULT_MIN_SAMPLES,
            eps: None,
            fraction: pinkslime_core::split::DEFAULT_TRAIN_FRACTION,
            repetitions: 3,
            coords: None,
            coord_ids: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturizeSection {
    pub top_pairs: usize,
    pub chain_mode: ChainMode,
}

impl Default for FeaturizeSection {
    fn default() -> Self {
        FeaturizeSection {
            top_pairs: 4,
            chain_mode: ChainMode::ArcSpan,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub models: Vec<ModelKind>,
    pub forest_trees: usize,
    pub forest_max_depth: Option<usize>,
    pub forest_feature_subsample: f64,
    pub linear_learning_rate: f64,
    pub linear_l2: f64,
    pub linear_epochs: usize,
    pub head_hidden: [usize; 2],
    pub head_learning_rate: f64,
    pub head_epochs: usize,
    pub head_batch_size: usize,
    pub head_l2: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let f = pinkslime_core::models::ForestConfig::default();
        let l = pinkslime_core::models::LinearConfig::default();
        let h = pinkslime_core::models::TrainConfig::default();
        TrainSection {
            models: vec![ModelKind::Forest, ModelKind::Linear, ModelKind::Head],
            forest_trees: f.n_trees,
            forest_max_depth: f.max_depth,
            forest_feature_subsample: f.feature_subsample,
            linear_learning_rate: l.learning_rate,
            linear_l2: l.l2,
            linear_epochs: l.epochs,
            head_hidden: [256, 64],
            head_learning_rate: h.learning_rate,
            head_epochs: h.epochs,
            head_batch_size: h.batch_size,
            head_l2: h.l2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Repeats per feature for permutation importance; 0 disables it.
    pub importance_repeats: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { importance_repeats: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSection {
    pub adjective_drop_rate: f64,
    pub merge_rate: f64,
    pub synonym_rate: f64,
    pub generator: String,
    /// Embeddings of the attack articles. When absent they are computed with
    /// the built-in synthetic encoder, which only matches inputs made by
    /// `bench-make`.
    pub embeddings: Option<PathBuf>,
    pub embedding_ids: Option<PathBuf>,
}

impl Default for AttackSection {
    fn default() -> Self {
        AttackSection {
            adjective_drop_rate: 0.8,
            merge_rate: 0.5,
            synonym_rate: 0.3,
            generator: SURROGATE_GENERATOR.to_string(),
            embeddings: None,
            embedding_ids: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdaptModes {
    Controlled,
    Uncontrolled,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptSection {
    pub mode: AdaptModes,
    pub stages: usize,
    pub lr_divisor: f64,
    pub epochs_per_stage: usize,
    pub batch_size: usize,
    pub replay: ReplayPolicy,
}

impl Default for AdaptSection {
    fn default() -> Self {
        let d = pinkslime_core::adapt::AdaptConfig::default();
        AdaptSection {
            mode: AdaptModes::Both,
            stages: 10,
            lr_divisor: d.lr_divisor,
            epochs_per_stage: d.epochs_per_stage,
            batch_size: d.batch_size,
            replay: d.replay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub permutations: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            permutations: pinkslime_core::evalreport::DEFAULT_PERMUTATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide. Results do not depend on it.
    pub threads: usize,
    /// Stages to execute; empty means all except `bench-make`.
    pub stages: Vec<Stage>,
    pub inputs: InputPaths,
    pub bench: BenchSection,
    pub dedup: DedupSection,
    pub split: SplitSection,
    pub featurize: FeaturizeSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub attack: AttackSection,
    pub adapt: AdaptSection,
    pub report: ReportSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: PathBuf::from("out"),
            seed: 7,
            threads: 0,
            stages: Vec::new(),
            inputs: InputPaths::default(),
            bench: BenchSection::default(),
            dedup: DedupSection::default(),
            split: SplitSection::default(),
            featurize: FeaturizeSection::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
            attack: AttackSection::default(),
            adapt: AdaptSection::default(),
            report: ReportSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).context("parsing run config")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::from_toml(&s).with_context(|| path.display().to_string())?;
        cfg.resolve_relative_to(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes relative paths in the file relative to the file's directory.
    fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        let i = &mut self.inputs;
        for p in [
            &mut i.ps,
            &mut i.ln,
            &mut i.annotations,
            &mut i.embeddings,
            &mut i.embedding_ids,
            &mut i.lexicon,
            &mut i.votes,
            &mut self.split.coords,
            &mut self.split.coord_ids,
            &mut self.attack.embeddings,
            &mut self.attack.embedding_ids,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Requested stages in execution order.
    pub fn stage_list(&self) -> Vec<Stage> {
        if self.stages.is_empty() {
            Stage::ALL.into_iter().filter(|&s| s != Stage::BenchMake).collect()
        } else {
            Stage::ALL.into_iter().filter(|s| self.stages.contains(s)).collect()
        }
    }

    pub fn runs(&self, stage: Stage) -> bool {
        self.stage_list().contains(&stage)
    }

    /// Hash of everything that can change results. The output directory and
    /// thread count are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        c.threads = 0;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Checks parameters and that every input file exists, before any work.
    /// Inputs that `bench-make` will write are not required up front.
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, x: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&x) {
                bail!("{name} = {x} outside [0, 1]");
            }
            Ok(())
        };
        if !(self.dedup.threshold > 0.0 && self.dedup.threshold <= 1.0) {
            bail!("dedup.threshold = {} outside (0, 1]", self.dedup.threshold);
        }
        if !(self.split.fraction > 0.0 && self.split.fraction < 1.0) {
            bail!("split.fraction = {} outside (0, 1)", self.split.fraction);
        }
        if self.split.repetitions == 0 {
            bail!("split.repetitions must be at least 1");
        }
        unit("attack.adjective_drop_rate", self.attack.adjective_drop_rate)?;
        unit("attack.merge_rate", self.attack.merge_rate)?;
        unit("attack.synonym_rate", self.attack.synonym_rate)?;
        unit("bench.near_copy_rate", self.bench.near_copy_rate)?;
        unit("bench.slot_noise", self.bench.slot_noise)?;
        if self.adapt.stages == 0 {
            bail!("adapt.stages must be at least 1");
        }
        if self.train.models.is_empty() && self.runs(Stage::Train) {
            bail!("train.models is empty");
        }
        if self.dedup.bands.is_some() != self.dedup.rows_per_band.is_some() {
            bail!("dedup.bands and dedup.rows_per_band go together");
        }
        if self.split.coords.is_some() != self.split.coord_ids.is_some() {
            bail!("split.coords and split.coord_ids go together");
        }
        if self.attack.embeddings.is_some() != self.attack.embedding_ids.is_some() {
            bail!("attack.embeddings and attack.embedding_ids go together");
        }

        let generated = self.runs(Stage::BenchMake);
        let i = &self.inputs;
        let needs_inputs = self.stage_list().iter().any(|&s| s != Stage::BenchMake);
        if needs_inputs && !generated {
            for (name, p) in [
                ("inputs.ps", &i.ps),
                ("inputs.ln", &i.ln),
                ("inputs.annotations", &i.annotations),
                ("inputs.embeddings", &i.embeddings),
                ("inputs.embedding_ids", &i.embedding_ids),
            ] {
                if p.is_none() {
                    bail!("{name} is required (or enable the bench-make stage)");
                }
            }
        }
        for (name, p) in [
            ("inputs.ps", &i.ps),
            ("inputs.ln", &i.ln),
            ("inputs.annotations", &i.annotations),
            ("inputs.embeddings", &i.embeddings),
            ("inputs.embedding_ids", &i.embedding_ids),
            ("inputs.lexicon", &i.lexicon),
        ] {
            if let (false, Some(p)) = (generated, p) {
                if !p.is_file() {
                    bail!("{name}: {} does not exist", p.display());
                }
            }
        }
        for (name, p) in [
            ("inputs.votes", &i.votes),
            ("split.coords", &self.split.coords),
            ("split.coord_ids", &self.split.coord_ids),
            ("attack.embeddings", &self.attack.embeddings),
            ("attack.embedding_ids", &self.attack.embedding_ids),
        ] {
            if let Some(p) = p {
                if !p.is_file() {
                    bail!("{name}: {} does not exist", p.display());
                }
            }
        }
        if self.runs(Stage::Attack) && self.attack.synonym_rate > 0.0 && i.lexicon.is_none() && !generated {
            bail!("attack.synonym_rate > 0 needs inputs.lexicon");
        }
        Ok(())
    }
}
