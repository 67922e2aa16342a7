//! End-to-end fit/predict: mine, diversify, sweep k, train the final ELM.
//!
//! Everything in [`fit`] reads the training partition only. The k sweep
//! evaluates each prefix of the diversified top-kappa list (the greedy
//! selection for `k` is a prefix of the one for `k + 1`) with an ELM, by
//! stratified cross-validation on the training set by default, and keeps
//! the most accurate `k`, preferring the smaller `k` on ties.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_folds, Dataset};
use crate::distance::DistanceConfig;
use crate::elm::{ElmBlob, ElmConfig, ElmModel};
use crate::error::{Error, Result};
use crate::graph::{div_topk_streaming, SimilarityConfig};
use crate::mining::{mine_shapelets, CandidatePool, MiningConfig, Shapelet};
use crate::transform::{apply_scaling, fit_scaling, transform, FeatureMatrix, Scaling};

pub const MODEL_FORMAT: &str = "divshap-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum EvalMode {
    /// Stratified cross-validation on the training set.
    CrossValidation { folds: usize },
    /// Accuracy on the data the ELM was trained on.
    TrainingAccuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub mode: EvalMode,
    /// Independently seeded repetitions averaged per k.
    pub repeats: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            mode: EvalMode::CrossValidation { folds: 5 },
            repeats: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Largest k considered.
    pub kappa: usize,
    pub mining: MiningConfig,
    /// Used for mining, similarity and the transform alike.
    pub distance: DistanceConfig,
    pub elm: ElmConfig,
    pub eval: EvalConfig,
    pub same_class_only: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            kappa: 9,
            mining: MiningConfig::default(),
            distance: DistanceConfig::default(),
            elm: ElmConfig::default(),
            eval: EvalConfig::default(),
            same_class_only: true,
        }
    }
}

impl PipelineConfig {
    /// Sets every seed (ELM, evaluation, SAX masks) from one value.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.elm.seed = seed;
        self.eval.seed = seed;
        self.mining.sax.seed = seed;
        self
    }

    pub fn mining_config(&self) -> MiningConfig {
        MiningConfig {
            distance: self.distance,
            ..self.mining.clone()
        }
    }

    pub fn similarity(&self) -> SimilarityConfig {
        SimilarityConfig {
            distance: self.distance,
            same_class_only: self.same_class_only,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kappa == 0 {
            return Err(Error::InvalidArgument("kappa must be at least 1".into()));
        }
        if self.eval.repeats == 0 {
            return Err(Error::InvalidArgument("eval repeats must be at least 1".into()));
        }
        if let EvalMode::CrossValidation { folds } = self.eval.mode {
            if folds < 2 {
                return Err(Error::InvalidArgument("cross-validation needs >= 2 folds".into()));
            }
        }
        Ok(())
    }
}

/// SplitMix64 finalizer over a base seed and a stream of indices.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for &p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub mean_accuracy: f64,
    pub repeat_accuracies: Vec<f64>,
    /// Number of the k shapelets drawn from each class.
    pub class_composition: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub k: usize,
    pub shapelets: Vec<Shapelet>,
    pub sweep: Vec<SweepRow>,
}

/// Picks `k` in `1..=diversified.len()` by evaluated ELM accuracy.
///
/// `diversified` is the greedy top-kappa list; the candidate set for each k
/// is its length-k prefix.
pub fn select_k(diversified: &[Shapelet], train: &Dataset, cfg: &PipelineConfig) -> Result<KSelection> {
    if diversified.is_empty() {
        return Err(Error::InvalidArgument("no diversified shapelets to select from".into()));
    }
    let kmax = diversified.len().min(cfg.kappa);
    let features = transform(train, &diversified[..kmax], cfg.distance)?;
    let sweep: Vec<SweepRow> = (1..=kmax)
        .into_par_iter()
        .map(|k| {
            let fm = features.prefix_columns(k);
            let repeat_accuracies = (0..cfg.eval.repeats)
                .map(|r| evaluate(&fm, k, r, cfg))
                .collect::<Result<Vec<f64>>>()?;
            let mean_accuracy = repeat_accuracies.iter().sum::<f64>() / repeat_accuracies.len() as f64;
            let mut class_composition = vec![0; train.classes().len()];
            for s in &diversified[..k] {
                class_composition[s.class_label] += 1;
            }
            Ok(SweepRow {
                k,
                mean_accuracy,
                repeat_accuracies,
                class_composition,
            })
        })
        .collect::<Result<_>>()?;
    let best = sweep
        .iter()
        .fold(&sweep[0], |best, row| {
            if row.mean_accuracy > best.mean_accuracy {
                row
            } else {
                best
            }
        })
        .k;
    Ok(KSelection {
        k: best,
        shapelets: diversified[..best].to_vec(),
        sweep,
    })
}

// Mean accuracy of one evaluation repeat for the k-column features.
fn evaluate(fm: &FeatureMatrix, k: usize, repeat: usize, cfg: &PipelineConfig) -> Result<f64> {
    let elm = ElmConfig {
        seed: derive_seed(cfg.eval.seed, &[1, k as u64, repeat as u64]),
        ..cfg.elm.clone()
    };
    match cfg.eval.mode {
        EvalMode::TrainingAccuracy => {
            let all: Vec<usize> = (0..fm.n_rows()).collect();
            fold_accuracy(fm, &all, &all, &elm)
        }
        EvalMode::CrossValidation { folds } => {
            let folds = folds.min(fm.n_rows());
            let labels_only = label_dataset(fm)?;
            let assignment = stratified_folds(
                &labels_only,
                folds,
                derive_seed(cfg.eval.seed, &[2, repeat as u64]),
            )?;
            let mut total = 0.0;
            for f in 0..folds {
                let (tr, va) = assignment.split(f);
                total += fold_accuracy(fm, &tr, &va, &elm)?;
            }
            Ok(total / folds as f64)
        }
    }
}

// Fold assignment only looks at class membership.
fn label_dataset(fm: &FeatureMatrix) -> Result<Dataset> {
    Dataset::from_rows("folds", fm.labels.iter().map(|l| (l.to_string(), vec![0.0])))
}

fn fold_accuracy(fm: &FeatureMatrix, train: &[usize], valid: &[usize], elm: &ElmConfig) -> Result<f64> {
    if valid.is_empty() {
        return Ok(0.0);
    }
    let tr = fm.select_rows(train);
    let va = fm.select_rows(valid);
    let scaling = fit_scaling(&tr);
    let tr = apply_scaling(&tr, &scaling)?;
    let va = apply_scaling(&va, &scaling)?;
    let predicted = match ElmModel::train_features(&tr, elm) {
        Ok(model) => model.predict_features(&va)?,
        // A fold whose training part holds one class predicts that class.
        Err(Error::SingleClassTraining) => vec![tr.labels[0]; va.n_rows()],
        Err(e) => return Err(e),
    };
    Ok(accuracy(&predicted, &va.labels))
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineModel {
    pub config: PipelineConfig,
    pub classes: Vec<String>,
    pub series_len: usize,
    pub selected_k: usize,
    pub shapelets: Vec<Shapelet>,
    pub scaling: Scaling,
    pub elm: ElmModel,
    pub sweep: Vec<SweepRow>,
    /// The full greedy top-kappa list the sweep chose a prefix of.
    pub diversified: Vec<Shapelet>,
}

/// Wall-clock time of each fitting phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitTimings {
    pub candidate_selection: f64,
    pub diversified_selection: f64,
    pub transform: f64,
    pub classifier_training: f64,
}

pub fn fit(train: &Dataset, cfg: &PipelineConfig) -> Result<PipelineModel> {
    fit_timed(train, cfg).map(|(m, _)| m)
}

pub fn fit_timed(train: &Dataset, cfg: &PipelineConfig) -> Result<(PipelineModel, FitTimings)> {
    cfg.validate()?;
    if train.present_class_count() < 2 {
        return Err(Error::SingleClassTraining);
    }
    let start = Instant::now();
    let pool = mine_shapelets(train, &cfg.mining_config())?;
    let mining = start.elapsed();
    info!("mined {} ranked candidates in {:.2?}", pool.len(), mining);
    let (model, mut timings) = fit_from_pool(train, &pool, cfg)?;
    timings.candidate_selection = secs(mining);
    Ok((model, timings))
}

/// Fits from an already mined pool; the pool must come from `train` with
/// `cfg.mining_config()`.
pub fn fit_from_pool(
    train: &Dataset,
    pool: &CandidatePool,
    cfg: &PipelineConfig,
) -> Result<(PipelineModel, FitTimings)> {
    cfg.validate()?;
    if train.present_class_count() < 2 {
        return Err(Error::SingleClassTraining);
    }
    let mut timings = FitTimings::default();
    let t = Instant::now();
    let diversified: Vec<Shapelet> = div_topk_streaming(pool.shapelets(train), cfg.kappa, &cfg.similarity())
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let selection = select_k(&diversified, train, cfg)?;
    timings.diversified_selection = secs(t.elapsed());
    info!(
        "selected k = {} of {} diversified shapelets",
        selection.k,
        diversified.len()
    );

    let t = Instant::now();
    let features = transform(train, &selection.shapelets, cfg.distance)?;
    let scaling = fit_scaling(&features);
    let scaled = apply_scaling(&features, &scaling)?;
    timings.transform = secs(t.elapsed());

    let t = Instant::now();
    let elm = ElmModel::train_features(&scaled, &cfg.elm)?;
    timings.classifier_training = secs(t.elapsed());

    Ok((
        PipelineModel {
            config: cfg.clone(),
            classes: train.classes().to_vec(),
            series_len: train.series_len(),
            selected_k: selection.k,
            shapelets: selection.shapelets,
            scaling,
            elm,
            sweep: selection.sweep,
            diversified,
        },
        timings,
    ))
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Indices into the model's class list.
    pub labels: Vec<usize>,
    pub names: Vec<String>,
    /// Fraction correct; `None` for an empty test set.
    pub accuracy: Option<f64>,
}

impl PipelineModel {
    /// Scaled shapelet features of `d`, which must have the training length.
    pub fn features(&self, d: &Dataset) -> Result<FeatureMatrix> {
        if d.series_len() != self.series_len {
            return Err(Error::LengthMismatch {
                left: self.series_len,
                right: d.series_len(),
            });
        }
        let fm = transform(d, &self.shapelets, self.config.distance)?;
        apply_scaling(&fm, &self.scaling)
    }

    pub fn predict(&self, test: &Dataset) -> Result<Prediction> {
        if test.is_empty() {
            return Ok(Prediction {
                labels: Vec::new(),
                names: Vec::new(),
                accuracy: None,
            });
        }
        let test = test.aligned_to_classes(&self.classes);
        let fm = self.features(&test)?;
        let labels = self.elm.predict_features(&fm)?;
        let names = labels.iter().map(|&l| self.classes[l].clone()).collect();
        let acc = accuracy(&labels, &test.labels());
        Ok(Prediction {
            labels,
            names,
            accuracy: Some(acc),
        })
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            config: self.config.clone(),
            classes: self.classes.clone(),
            series_len: self.series_len,
            selected_k: self.selected_k,
            shapelets: self.shapelets.clone(),
            scaling: self.scaling.clone(),
            elm: self.elm.to_blob(),
            sweep: self.sweep.clone(),
            diversified: self.diversified.clone(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        if file.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!("unexpected format tag {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {}", file.version)));
        }
        if file.shapelets.len() != file.selected_k || file.elm.n_inputs != file.selected_k {
            return Err(Error::ModelFormat("shapelet count does not match selected k".into()));
        }
        Ok(Self {
            elm: ElmModel::from_blob(&file.elm)?,
            config: file.config,
            classes: file.classes,
            series_len: file.series_len,
            selected_k: file.selected_k,
            shapelets: file.shapelets,
            scaling: file.scaling,
            sweep: file.sweep,
            diversified: file.diversified,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// On-disk model layout (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub config: PipelineConfig,
    pub classes: Vec<String>,
    pub series_len: usize,
    pub selected_k: usize,
    pub shapelets: Vec<Shapelet>,
    pub scaling: Scaling,
    pub elm: ElmBlob,
    pub sweep: Vec<SweepRow>,
    pub diversified: Vec<Shapelet>,
}
