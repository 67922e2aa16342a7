//! Shapelet transform: one distance feature per shapelet.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distance::{subsequence_dist, DistanceConfig};
use crate::error::{Error, Result};
use crate::mining::Shapelet;

/// Row-major feature matrix with per-row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    n_cols: usize,
    pub labels: Vec<usize>,
    pub column_ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        values: Vec<f64>,
        n_cols: usize,
        labels: Vec<usize>,
        column_ids: Vec<String>,
    ) -> Result<Self> {
        if n_cols == 0 || values.len() != labels.len() * n_cols || column_ids.len() != n_cols {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * n_cols,
                found: values.len(),
            });
        }
        Ok(Self {
            values,
            n_cols,
            labels,
            column_ids,
        })
    }

    /// Raw series as features, one column per sample.
    pub fn from_series(d: &Dataset) -> Self {
        let values = d.series().iter().flat_map(|s| s.values.iter().copied()).collect();
        Self {
            values,
            n_cols: d.series_len(),
            labels: d.labels(),
            column_ids: (0..d.series_len()).map(|t| format!("t{t}")).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// The first `k` columns.
    pub fn prefix_columns(&self, k: usize) -> FeatureMatrix {
        let k = k.min(self.n_cols);
        let values = self.rows().flat_map(|r| r[..k].iter().copied()).collect();
        FeatureMatrix {
            values,
            n_cols: k,
            labels: self.labels.clone(),
            column_ids: self.column_ids[..k].to_vec(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let values = rows.iter().flat_map(|&r| self.row(r).iter().copied()).collect();
        FeatureMatrix {
            values,
            n_cols: self.n_cols,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            column_ids: self.column_ids.clone(),
        }
    }

    /// CSV with the column ids as header and the label in the last column.
    pub fn to_csv(&self, classes: &[String]) -> String {
        let mut out = self.column_ids.join(",");
        out.push_str(",label\n");
        for (row, &label) in self.rows().zip(&self.labels) {
            for v in row {
                write!(out, "{v},").unwrap();
            }
            let name = classes.get(label).cloned().unwrap_or_else(|| label.to_string());
            writeln!(out, "{name}").unwrap();
        }
        out
    }
}

/// Entry `(i, j)` is the distance from series `i` to shapelet `j`.
pub fn transform(d: &Dataset, shapelets: &[Shapelet], cfg: DistanceConfig) -> Result<FeatureMatrix> {
    if shapelets.is_empty() {
        return Err(Error::InvalidArgument("no shapelets to transform with".into()));
    }
    if let Some(s) = shapelets.iter().find(|s| s.len() > d.series_len()) {
        return Err(Error::ShapeletLongerThanSeries {
            shapelet: s.len(),
            series: d.series_len(),
        });
    }
    let rows: Vec<Vec<f64>> = d
        .series()
        .par_iter()
        .map(|s| {
            shapelets
                .iter()
                .map(|sh| subsequence_dist(&s.values, &sh.values, cfg))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(FeatureMatrix {
        values: rows.into_iter().flatten().collect(),
        n_cols: shapelets.len(),
        labels: d.labels(),
        column_ids: shapelets.iter().map(Shapelet::id).collect(),
    })
}

/// Per-column min-max range fitted on training features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_scaling(fm: &FeatureMatrix) -> Scaling {
    let mut min = vec![f64::INFINITY; fm.n_cols];
    let mut max = vec![f64::NEG_INFINITY; fm.n_cols];
    for row in fm.rows() {
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    if fm.n_rows() == 0 {
        min.fill(0.0);
        max.fill(0.0);
    }
    Scaling { min, max }
}

/// `(x - min) / (max - min)` clamped to `[0, 1]`; constant columns map to 0.
pub fn apply_scaling(fm: &FeatureMatrix, scaling: &Scaling) -> Result<FeatureMatrix> {
    if scaling.min.len() != fm.n_cols {
        return Err(Error::DimensionMismatch {
            expected: scaling.min.len(),
            found: fm.n_cols,
        });
    }
    let values = fm
        .rows()
        .flat_map(|row| {
            row.iter().enumerate().map(|(j, &v)| {
                let span = scaling.max[j] - scaling.min[j];
                if span > 0.0 {
                    ((v - scaling.min[j]) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
        })
        .collect();
    Ok(FeatureMatrix {
        values,
        ..fm.clone()
    })
}
