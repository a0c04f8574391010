//! Staged continual adaptation of the head model to modified PS articles.
//!
//! Stage `t` trains on the first `⌈t·|adv|⌉` modified training-side articles,
//! an optional replay buffer of original PS articles, and as many LN articles
//! as the two together. Parameters carry over from stage to stage at a
//! reduced learning rate.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::adversary::AttackCorpus;
use crate::corpus::ClassLabel;
use crate::models::{Dataset, HeadModel};
use crate::split::SplitPlan;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptMode {
    Controlled,
    Uncontrolled,
}

impl AdaptMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AdaptMode::Controlled => "controlled",
            AdaptMode::Uncontrolled => "uncontrolled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "controlled" => Some(AdaptMode::Controlled),
            "uncontrolled" => Some(AdaptMode::Uncontrolled),
            _ => None,
        }
    }
}

impl fmt::Display for AdaptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Size of the replay buffer in controlled mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplayPolicy {
    /// `⌈0.5·|adv_ids|⌉` original PS articles.
    #[default]
    HalfOfAdv,
    /// Half of the training-side PS pool, independent of the stage.
    HalfOfPsPool,
}

/// Training-side ids available to the stages.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainPool {
    pub ps_ids: Vec<String>,
    pub ln_ids: Vec<String>,
    /// Modified articles whose parents are on the training side.
    pub adv_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    pub t: f64,
    pub mode: AdaptMode,
    pub adv_ids: Vec<String>,
    pub ps_base_ids: Vec<String>,
    pub ln_ids: Vec<String>,
}

impl StagePlan {
    pub fn len(&self) -> usize {
        self.adv_ids.len() + self.ps_base_ids.len() + self.ln_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `⌈x⌉` that ignores representation error just above an integer.
fn ceil_count(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

fn shuffled(ids: &[String], seed: u64) -> Vec<String> {
    let mut v = ids.to_vec();
    v.shuffle(&mut rng::seeded(seed));
    v
}

/// Stage composition. The adversarial, replay and LN orders are each fixed
/// by `seed` alone, so stages are nested prefixes of the same sequences and
/// the replay buffer is drawn once.
pub fn build_stage_dataset(pool: &TrainPool, t: f64, mode: AdaptMode, policy: ReplayPolicy, seed: u64) -> Result<StagePlan> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidParameter(format!("stage fraction {t} outside (0, 1]")));
    }
    if pool.adv_ids.is_empty() {
        return Err(Error::EmptyInput("adversarial training pool".into()));
    }
    let n_adv = ceil_count(t * pool.adv_ids.len() as f64);
    let adv_ids = shuffled(&pool.adv_ids, rng::derive(seed, 0))[..n_adv].to_vec();
    let n_base = match (mode, policy) {
        (AdaptMode::Uncontrolled, _) => 0,
        (AdaptMode::Controlled, ReplayPolicy::HalfOfAdv) => ceil_count(0.5 * n_adv as f64),
        (AdaptMode::Controlled, ReplayPolicy::HalfOfPsPool) => ceil_count(0.5 * pool.ps_ids.len() as f64),
    };
    if n_base > pool.ps_ids.len() {
        return Err(Error::InsufficientData(format!(
            "replay buffer needs {n_base} PS articles, training side has {}",
            pool.ps_ids.len()
        )));
    }
    let ps_base_ids = shuffled(&pool.ps_ids, rng::derive(seed, 1))[..n_base].to_vec();
    let n_ln = n_adv + n_base;
    if n_ln > pool.ln_ids.len() {
        return Err(Error::InsufficientData(format!(
            "stage t = {t} needs {n_ln} LN articles, training side has {} (short by {})",
            pool.ln_ids.len(),
            n_ln - pool.ln_ids.len()
        )));
    }
    let ln_ids = shuffled(&pool.ln_ids, rng::derive(seed, 2))[..n_ln].to_vec();
    Ok(StagePlan {
        t,
        mode,
        adv_ids,
        ps_base_ids,
        ln_ids,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    /// Learning rate of the base training run.
    pub eta0: f64,
    pub lr_divisor: f64,
    pub epochs_per_stage: usize,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub replay: ReplayPolicy,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            eta0: 0.05,
            lr_divisor: 100.0,
            epochs_per_stage: 3,
            batch_size: 32,
            seed: 0,
            replay: ReplayPolicy::HalfOfAdv,
        }
    }
}

impl AdaptConfig {
    pub fn stage_lr(&self) -> f64 {
        self.eta0 / self.lr_divisor
    }
}

/// Stage rows in order adv, replay, LN.
pub fn stage_rows(stage: &StagePlan, rows: &Dataset) -> Result<Dataset> {
    let mut data = rows.select(&stage.adv_ids)?;
    data.extend(rows.select(&stage.ps_base_ids)?);
    data.extend(rows.select(&stage.ln_ids)?);
    let expected = stage
        .adv_ids
        .iter()
        .chain(&stage.ps_base_ids)
        .map(|_| ClassLabel::Ps)
        .chain(stage.ln_ids.iter().map(|_| ClassLabel::Ln));
    if !data.labels.iter().copied().eq(expected) {
        return Err(Error::Mismatch("stage rows carry unexpected labels".into()));
    }
    Ok(data)
}

/// Returns a copy of `model` trained for `epochs_per_stage` passes over the
/// stage at rate `η₀ / lr_divisor`.
pub fn continual_update(model: &HeadModel, stage: &StagePlan, cfg: &AdaptConfig, rows: &Dataset, stage_index: usize) -> Result<HeadModel> {
    if !(cfg.lr_divisor > 0.0) || !(cfg.eta0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta0 = {}, lr_divisor = {}",
            cfg.eta0, cfg.lr_divisor
        )));
    }
    let mut next = model.clone();
    if cfg.epochs_per_stage == 0 {
        return Ok(next);
    }
    let data = stage_rows(stage, rows)?;
    let seed = rng::derive(cfg.seed, 1000 + stage_index as u64);
    next.fit_epochs(&data.rows, &data.labels, cfg.stage_lr(), cfg.epochs_per_stage, cfg.batch_size, seed)
        .map_err(|e| match e {
            Error::Divergence { context } => Error::Divergence {
                context: format!("{} stage t = {}: {context}", stage.mode, stage.t),
            },
            e => e,
        })?;
    Ok(next)
}

/// Everything a curve needs: training pool, rows for every id it may touch,
/// and the two test sets.
#[derive(Debug, Clone)]
pub struct AdaptData {
    pub pool: TrainPool,
    pub train_rows: Dataset,
    pub original_test: Dataset,
    pub llmmod_test: Dataset,
    test_parents: HashSet<String>,
    parent_of: HashMap<String, String>,
}

impl AdaptData {
    /// Splits `attack` by parent side. `rows` must hold original articles;
    /// `attack_rows` the modified ones.
    pub fn new(plan: &SplitPlan, rows: &Dataset, attack: &AttackCorpus, attack_rows: &Dataset) -> Result<Self> {
        let train = plan.train_set();
        let test = plan.test_set();
        let label: HashMap<&str, ClassLabel> = rows.ids.iter().map(String::as_str).zip(rows.labels.iter().copied()).collect();
        let mut pool = TrainPool {
            ps_ids: Vec::new(),
            ln_ids: Vec::new(),
            adv_ids: Vec::new(),
        };
        for id in &plan.train_ids {
            match label.get(id.as_str()) {
                Some(ClassLabel::Ps) => pool.ps_ids.push(id.clone()),
                Some(ClassLabel::Ln) => pool.ln_ids.push(id.clone()),
                None => return Err(Error::Mismatch(format!("no row for training article {id:?}"))),
            }
        }
        let mut test_attack: HashMap<&str, &str> = HashMap::new();
        let mut test_parents = HashSet::new();
        for r in &attack.records {
            if train.contains(r.parent_id.as_str()) {
                pool.adv_ids.push(r.id.clone());
            } else if test.contains(r.parent_id.as_str()) {
                test_attack.insert(r.parent_id.as_str(), r.id.as_str());
                test_parents.insert(r.parent_id.clone());
            } else {
                return Err(Error::Mismatch(format!("attack parent {:?} is not in the split", r.parent_id)));
            }
        }
        let original_test = rows.select(&plan.test_ids)?;
        let mut llmmod_ids = Vec::new();
        for (id, l) in original_test.ids.iter().zip(&original_test.labels) {
            match l {
                ClassLabel::Ln => llmmod_ids.push(id.clone()),
                ClassLabel::Ps => {
                    if let Some(a) = test_attack.get(id.as_str()) {
                        llmmod_ids.push((*a).to_string());
                    }
                }
            }
        }
        let mut all = rows.clone();
        all.extend(attack_rows.clone());
        let llmmod_test = all.select(&llmmod_ids)?;
        let mut train_rows = rows.select(&plan.train_ids)?;
        train_rows.extend(attack_rows.select(&pool.adv_ids)?);
        let parent_of = attack.records.iter().map(|r| (r.id.clone(), r.parent_id.clone())).collect();
        Ok(AdaptData {
            pool,
            train_rows,
            original_test,
            llmmod_test,
            test_parents,
            parent_of,
        })
    }

    fn check_leakage(&self, stage: &StagePlan) -> Result<()> {
        let test: HashSet<&str> = self.original_test.ids.iter().map(String::as_str).collect();
        for id in stage.adv_ids.iter().chain(&stage.ps_base_ids).chain(&stage.ln_ids) {
            let parent = self.parent_of.get(id).map_or(id.as_str(), String::as_str);
            if test.contains(id.as_str()) || self.test_parents.contains(parent) {
                return Err(Error::Leakage(format!("stage t = {} uses test-side article {id:?}", stage.t)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub mode: AdaptMode,
    pub stage: f64,
    pub f1_original: f64,
    pub f1_llmmod: f64,
    pub acc_original: f64,
    pub acc_llmmod: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationCurve {
    pub mode: AdaptMode,
    /// Baseline row (`stage = 0`) followed by one row per stage.
    pub rows: Vec<CurveRow>,
    pub stages: Vec<StagePlan>,
}

impl AdaptationCurve {
    pub fn baseline(&self) -> &CurveRow {
        &self.rows[0]
    }

    pub fn last(&self) -> &CurveRow {
        self.rows.last().expect("curve has a baseline row")
    }
}

fn evaluate_row(model: &HeadModel, data: &AdaptData, mode: AdaptMode, stage: f64) -> Result<CurveRow> {
    let (orig, llm) = rayon::join(|| data.original_test.evaluate(model), || data.llmmod_test.evaluate(model));
    let (orig, llm) = (orig?, llm?);
    Ok(CurveRow {
        mode,
        stage,
        f1_original: orig.f1_ps,
        f1_llmmod: llm.f1_ps,
        acc_original: orig.accuracy,
        acc_llmmod: llm.accuracy,
    })
}

/// `stages` fractions `0.1, 0.2, …, 1.0` for `n = 10`.
pub fn stage_fractions(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / n as f64).collect()
}

/// Cumulative adaptation from `base` over `stages`, evaluated after each.
pub fn run_adaptation_curve(base: &HeadModel, cfg: &AdaptConfig, stages: &[f64], mode: AdaptMode, data: &AdaptData) -> Result<AdaptationCurve> {
    let mut rows = vec![evaluate_row(base, data, mode, 0.0)?];
    let mut plans = Vec::with_capacity(stages.len());
    let mut model = base.clone();
    for (i, &t) in stages.iter().enumerate() {
        let stage = build_stage_dataset(&data.pool, t, mode, cfg.replay, cfg.seed)?;
        data.check_leakage(&stage)?;
        model = continual_update(&model, &stage, cfg, &data.train_rows, i)?;
        rows.push(evaluate_row(&model, data, mode, t)?);
        plans.push(stage);
    }
    Ok(AdaptationCurve {
        mode,
        rows,
        stages: plans,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgettingReport {
    pub stages: Vec<f64>,
    /// `f1_original(θ⁰) − f1_original(θᵗ)` per stage.
    pub delta_controlled: Vec<f64>,
    pub delta_uncontrolled: Vec<f64>,
    pub final_delta_controlled: f64,
    pub final_delta_uncontrolled: f64,
    pub gain_llmmod_controlled: f64,
    pub gain_llmmod_uncontrolled: f64,
    /// Whether the replay buffer limited forgetting at the final stage.
    pub controlled_forgets_less: bool,
}

pub fn forgetting_report(controlled: &AdaptationCurve, uncontrolled: &AdaptationCurve) -> Result<ForgettingReport> {
    let stages = |c: &AdaptationCurve| c.rows.iter().map(|r| r.stage).collect::<Vec<_>>();
    if stages(controlled) != stages(uncontrolled) {
        return Err(Error::Mismatch("curves cover different stages".into()));
    }
    let deltas = |c: &AdaptationCurve| {
        let b = c.baseline().f1_original;
        c.rows[1..].iter().map(|r| b - r.f1_original).collect::<Vec<_>>()
    };
    let dc = deltas(controlled);
    let du = deltas(uncontrolled);
    let fc = dc.last().copied().unwrap_or(0.0);
    let fu = du.last().copied().unwrap_or(0.0);
    let gain = |c: &AdaptationCurve| c.last().f1_llmmod - c.baseline().f1_llmmod;
    Ok(ForgettingReport {
        stages: stages(controlled)[1..].to_vec(),
        delta_controlled: dc,
        delta_uncontrolled: du,
        final_delta_controlled: fc,
        final_delta_uncontrolled: fu,
        gain_llmmod_controlled: gain(controlled),
        gain_llmmod_uncontrolled: gain(uncontrolled),
        controlled_forgets_less: fc <= fu,
    })
}

/// `mode,stage,f1_original,f1_llmmod,acc_original,acc_llmmod` rows.
pub fn write_curve_csv<W: Write>(w: W, curves: &[&AdaptationCurve]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["mode", "stage", "f1_original", "f1_llmmod", "acc_original", "acc_llmmod"])?;
    for c in curves {
        for r in &c.rows {
            out.write_record([
                r.mode.to_string(),
                format!("{:.1}", r.stage),
                format!("{:.6}", r.f1_original),
                format!("{:.6}", r.f1_llmmod),
                format!("{:.6}", r.acc_original),
                format!("{:.6}", r.acc_llmmod),
            ])?;
        }
    }
    out.flush().map_err(|e| Error::io("<curve csv>", e))
}

pub fn save_curves(csv_path: impl AsRef<Path>, json_path: impl AsRef<Path>, curves: &[&AdaptationCurve], report: Option<&ForgettingReport>) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let file = std::fs::File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    write_curve_csv(file, curves)?;
    let mut summary = BTreeMap::new();
    for c in curves {
        summary.insert(
            c.mode.as_str(),
            serde_json::json!({
                "baseline": c.baseline(),
                "final": c.last(),
                "stage_sizes": c.stages.iter().map(|s| [s.adv_ids.len(), s.ps_base_ids.len(), s.ln_ids.len()]).collect::<Vec<_>>(),
            }),
        );
    }
    let json = serde_json::json!({ "curves": summary, "forgetting": report });
    let json_path = json_path.as_ref();
    std::fs::write(json_path, serde_json::to_string_pretty(&json)? + "\n").map_err(|e| Error::io(json_path, e))
}
