//! Experiment harness: DivShapELM against raw-series ELM and 1NN baselines,
//! with per-phase wall-clock timings and a per-k sweep.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::elm::{ElmConfig, ElmModel};
use crate::error::{Error, Result};
use crate::mining::{mine_shapelets, CandidatePool};
use crate::pipeline::{accuracy, derive_seed, fit_from_pool, PipelineConfig, SweepRow};
use crate::transform::{apply_scaling, fit_scaling, transform, FeatureMatrix};

/// Input representation for [`baseline_1nn`].
#[derive(Debug, Clone, Copy)]
pub enum NnInput<'a> {
    Raw(&'a Dataset),
    Features(&'a FeatureMatrix),
}

impl NnInput<'_> {
    fn kind(&self) -> &'static str {
        match self {
            NnInput::Raw(_) => "raw",
            NnInput::Features(_) => "features",
        }
    }
}

/// 1NN predictions under squared Euclidean distance; ties go to the lower
/// training index. Raw test labels are aligned to the training classes by
/// name.
pub fn predict_1nn(train: NnInput, test: NnInput) -> Result<(Vec<usize>, Vec<usize>)> {
    let (train_rows, train_labels, test_rows, test_labels): (Vec<&[f64]>, Vec<usize>, Vec<Vec<f64>>, Vec<usize>) =
        match (train, test) {
            (NnInput::Raw(tr), NnInput::Raw(te)) => {
                let te = te.aligned_to(tr);
                (
                    tr.series().iter().map(|s| s.values.as_slice()).collect(),
                    tr.labels(),
                    te.series().iter().map(|s| s.values.clone()).collect(),
                    te.labels(),
                )
            }
            (NnInput::Features(tr), NnInput::Features(te)) => (
                tr.rows().collect(),
                tr.labels.clone(),
                te.rows().map(<[f64]>::to_vec).collect(),
                te.labels.clone(),
            ),
            (a, b) => {
                return Err(Error::KindMismatch {
                    train: a.kind(),
                    test: b.kind(),
                })
            }
        };
    if train_rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let width = train_rows[0].len();
    if let Some(bad) = test_rows.iter().find(|r| r.len() != width) {
        return Err(Error::DimensionMismatch {
            expected: width,
            found: bad.len(),
        });
    }
    let predicted = test_rows
        .iter()
        .map(|q| {
            let mut best = (f64::INFINITY, 0);
            for (i, r) in train_rows.iter().enumerate() {
                let d: f64 = r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best.0 {
                    best = (d, i);
                }
            }
            train_labels[best.1]
        })
        .collect();
    Ok((predicted, test_labels))
}

/// Fraction of test points whose nearest training point shares their label
/// (0 for an empty test set).
pub fn baseline_1nn(train: NnInput, test: NnInput) -> Result<f64> {
    let (predicted, truth) = predict_1nn(train, test)?;
    Ok(accuracy(&predicted, &truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMode {
    /// All four methods.
    Compare,
    /// DivShapELM only, with test accuracy for every k.
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracies {
    pub raw_elm: Option<f64>,
    pub divshap_elm: f64,
    pub raw_1nn: Option<f64>,
    /// 1NN on the unscaled distances to the diversified top-kappa shapelets.
    pub transformed_1nn: Option<f64>,
}

/// Seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub candidate_selection: f64,
    /// Greedy top-kappa plus the k sweep.
    pub diversified_selection: f64,
    /// Transforming the test set.
    pub transform: f64,
    /// ELM prediction on the transformed test set.
    pub classify: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub elm: u64,
    pub eval: u64,
    pub sax: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KReport {
    pub k: usize,
    pub cv_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub class_composition: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub mode: ExperimentMode,
    pub classes: Vec<String>,
    pub accuracy: Accuracies,
    pub selected_k: usize,
    pub timings: Timings,
    pub seeds: Seeds,
    pub config: PipelineConfig,
    pub sweep: Vec<KReport>,
}

/// Mines the training set, then runs [`run_with_pool`].
pub fn run_experiment(
    train: &Dataset,
    test: &Dataset,
    cfg: &PipelineConfig,
    mode: ExperimentMode,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let pool = mine_shapelets(train, &cfg.mining_config())?;
    let mining = start.elapsed().as_secs_f64();
    let mut report = run_with_pool(train, test, &pool, cfg, mode)?;
    report.timings.candidate_selection = mining;
    report.timings.total = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Runs an experiment from a pool mined on `train` with
/// `cfg.mining_config()`. Candidate selection time is left at zero.
pub fn run_with_pool(
    train: &Dataset,
    test: &Dataset,
    pool: &CandidatePool,
    cfg: &PipelineConfig,
    mode: ExperimentMode,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    if test.series_len() != train.series_len() && !test.is_empty() {
        return Err(Error::LengthMismatch {
            left: train.series_len(),
            right: test.series_len(),
        });
    }
    let test = test.aligned_to(train);
    let (model, fit_timings) = fit_from_pool(train, pool, cfg)?;

    let t = Instant::now();
    let test_features = model.features(&test)?;
    let transform_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let predicted = model.elm.predict_features(&test_features)?;
    let classify_secs = t.elapsed().as_secs_f64();
    let divshap_elm = accuracy(&predicted, &test.labels());

    let sweep_test = match mode {
        ExperimentMode::Sweep => Some(per_k_test_accuracy(train, &test, &model.diversified, cfg)?),
        ExperimentMode::Compare => None,
    };
    let sweep = model
        .sweep
        .iter()
        .enumerate()
        .map(|(i, row)| KReport {
            test_accuracy: sweep_test.as_ref().map(|v| v[i]),
            ..KReport::from(row)
        })
        .collect();

    let (raw_elm, raw_1nn, transformed_1nn) = match mode {
        ExperimentMode::Sweep => (None, None, None),
        ExperimentMode::Compare => {
            let raw_elm = raw_elm_accuracy(train, &test, &cfg.elm)?;
            let raw_1nn = baseline_1nn(NnInput::Raw(train), NnInput::Raw(&test))?;
            let tr = transform(train, &model.diversified, cfg.distance)?;
            let te = transform(&test, &model.diversified, cfg.distance)?;
            let transformed_1nn = baseline_1nn(NnInput::Features(&tr), NnInput::Features(&te))?;
            (Some(raw_elm), Some(raw_1nn), Some(transformed_1nn))
        }
    };

    Ok(ExperimentReport {
        dataset: train.name.clone(),
        mode,
        classes: train.classes().to_vec(),
        accuracy: Accuracies {
            raw_elm,
            divshap_elm,
            raw_1nn,
            transformed_1nn,
        },
        selected_k: model.selected_k,
        timings: Timings {
            candidate_selection: fit_timings.candidate_selection,
            diversified_selection: fit_timings.diversified_selection,
            transform: transform_secs,
            classify: classify_secs,
            total: start.elapsed().as_secs_f64(),
        },
        seeds: Seeds {
            elm: cfg.elm.seed,
            eval: cfg.eval.seed,
            sax: cfg.mining.sax.seed,
        },
        config: cfg.clone(),
        sweep,
    })
}

/// ELM on min-max-scaled raw series, scaling fitted on `train`.
pub fn raw_elm_accuracy(train: &Dataset, test: &Dataset, elm: &ElmConfig) -> Result<f64> {
    let test = test.aligned_to(train);
    let tr = FeatureMatrix::from_series(train);
    let te = FeatureMatrix::from_series(&test);
    let scaling = fit_scaling(&tr);
    let model = ElmModel::train_features(&apply_scaling(&tr, &scaling)?, elm)?;
    let predicted = model.predict_features(&apply_scaling(&te, &scaling)?)?;
    Ok(accuracy(&predicted, &te.labels))
}

// Test accuracy of an ELM trained on each prefix of the diversified list.
fn per_k_test_accuracy(
    train: &Dataset,
    test: &Dataset,
    diversified: &[crate::mining::Shapelet],
    cfg: &PipelineConfig,
) -> Result<Vec<f64>> {
    let tr_all = transform(train, diversified, cfg.distance)?;
    let te_all = transform(test, diversified, cfg.distance)?;
    (1..=diversified.len().min(cfg.kappa))
        .map(|k| {
            let tr = tr_all.prefix_columns(k);
            let te = te_all.prefix_columns(k);
            let scaling = fit_scaling(&tr);
            let elm = ElmConfig {
                seed: derive_seed(cfg.elm.seed, &[3, k as u64]),
                ..cfg.elm.clone()
            };
            let model = ElmModel::train_features(&apply_scaling(&tr, &scaling)?, &elm)?;
            let predicted = model.predict_features(&apply_scaling(&te, &scaling)?)?;
            Ok(accuracy(&predicted, &te.labels))
        })
        .collect()
}

impl From<&SweepRow> for KReport {
    fn from(row: &SweepRow) -> Self {
        KReport {
            k: row.k,
            cv_accuracy: row.mean_accuracy,
            test_accuracy: None,
            class_composition: row.class_composition.clone(),
        }
    }
}

/// Per-k CSV: `k,cv_accuracy,test_accuracy,class_<name>...`.
pub fn sweep_csv(classes: &[String], rows: &[KReport]) -> String {
    let mut out = String::from("k,cv_accuracy,test_accuracy");
    for c in classes {
        write!(out, ",class_{c}").unwrap();
    }
    out.push('\n');
    for row in rows {
        write!(out, "{},{},{}", row.k, row.cv_accuracy, opt(row.test_accuracy)).unwrap();
        for n in &row.class_composition {
            write!(out, ",{n}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One header line and one data line.
    pub fn summary_csv(&self) -> String {
        let a = &self.accuracy;
        let t = &self.timings;
        format!(
            "dataset,selected_k,raw_elm,divshap_elm,raw_1nn,transformed_1nn,\
             candidate_selection_s,diversified_selection_s,transform_s,classify_s,total_s\n\
             {},{},{},{},{},{},{},{},{},{},{}\n",
            self.dataset,
            self.selected_k,
            opt(a.raw_elm),
            a.divshap_elm,
            opt(a.raw_1nn),
            opt(a.transformed_1nn),
            t.candidate_selection,
            t.diversified_selection,
            t.transform,
            t.classify,
            t.total,
        )
    }

    /// One row per evaluated k with the number of shapelets per class.
    pub fn sweep_csv(&self) -> String {
        sweep_csv(&self.classes, &self.sweep)
    }

    /// Aligned text table for terminals.
    pub fn table(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{:.2}", 100.0 * x));
        let a = &self.accuracy;
        let t = &self.timings;
        let mut out = String::new();
        writeln!(out, "dataset            {}", self.dataset).unwrap();
        writeln!(out, "selected k         {}", self.selected_k).unwrap();
        writeln!(out, "accuracy (%)").unwrap();
        writeln!(out, "  DivShapELM       {}", pct(Some(a.divshap_elm))).unwrap();
        writeln!(out, "  ELM (raw)        {}", pct(a.raw_elm)).unwrap();
        writeln!(out, "  1NN (raw)        {}", pct(a.raw_1nn)).unwrap();
        writeln!(out, "  1NN (shapelets)  {}", pct(a.transformed_1nn)).unwrap();
        writeln!(out, "time (s)").unwrap();
        writeln!(out, "  candidates       {:.3}", t.candidate_selection).unwrap();
        writeln!(out, "  diversified      {:.3}", t.diversified_selection).unwrap();
        writeln!(out, "  transform        {:.3}", t.transform).unwrap();
        writeln!(out, "  classify         {:.6}", t.classify).unwrap();
        writeln!(out, "  total            {:.3}", t.total).unwrap();
        if !self.sweep.is_empty() {
            writeln!(out, "k sweep").unwrap();
            writeln!(out, "  k   cv      test").unwrap();
            for row in &self.sweep {
                writeln!(
                    out,
                    "  {:<3} {:<7} {}",
                    row.k,
                    format!("{:.2}", 100.0 * row.cv_accuracy),
                    pct(row.test_accuracy)
                )
                .unwrap();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planar(points: &[(f64, f64, &str)]) -> Dataset {
        Dataset::from_rows("p", points.iter().map(|&(x, y, l)| (l, vec![x, y]))).unwrap()
    }

    #[test]
    fn exact_match_and_single_instance() {
        let train = planar(&[(0.0, 0.0, "a"), (5.0, 5.0, "b")]);
        let test = planar(&[(5.0, 5.0, "b")]);
        assert_eq!(baseline_1nn(NnInput::Raw(&train), NnInput::Raw(&test)).unwrap(), 1.0);
        let one = planar(&[(1.0, 1.0, "a")]);
        let test = planar(&[(9.0, 9.0, "a"), (-3.0, 2.0, "a")]);
        let (pred, _) = predict_1nn(NnInput::Raw(&one), NnInput::Raw(&test)).unwrap();
        assert_eq!(pred, vec![0, 0]);
    }

    #[test]
    fn planar_toy_matches_hand_enumeration() {
        // Training: a at (0,0) and (0,2), b at (3,0) and (3,2).
        let train = planar(&[(0.0, 0.0, "a"), (0.0, 2.0, "a"), (3.0, 0.0, "b"), (3.0, 2.0, "b")]);
        // (1,1): nearest (0,0)/(0,2) at 2 -> a, correct.
        // (2,0): nearest (3,0) at 1 -> b, labelled a, wrong.
        let test = planar(&[(1.0, 1.0, "a"), (2.0, 0.0, "a")]);
        assert_eq!(baseline_1nn(NnInput::Raw(&train), NnInput::Raw(&test)).unwrap(), 0.5);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let train = planar(&[(1.0, 0.0, "b"), (-1.0, 0.0, "a")]);
        let test = planar(&[(0.0, 0.0, "a")]);
        let (pred, _) = predict_1nn(NnInput::Raw(&train), NnInput::Raw(&test)).unwrap();
        assert_eq!(train.classes()[pred[0]], "b");
    }

    #[test]
    fn kind_mismatch_and_empty_train() {
        let d = planar(&[(0.0, 0.0, "a")]);
        let fm = FeatureMatrix::from_series(&d);
        assert!(matches!(
            baseline_1nn(NnInput::Raw(&d), NnInput::Features(&fm)),
            Err(Error::KindMismatch { train: "raw", test: "features" })
        ));
        let empty = fm.select_rows(&[]);
        assert!(matches!(
            baseline_1nn(NnInput::Features(&empty), NnInput::Features(&fm)),
            Err(Error::EmptyInput)
        ));
    }
}
