//! UCR-format datasets, z-normalization and stratified fold assignment.
//!
//! A UCR file holds one series per line: the class label first, then the
//! samples. Fields are separated either by commas or by whitespace (tabs in
//! the 2018 archive, spaces in the older one). Lines starting with `#` are
//! comments.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Standard deviation below which a vector counts as flat.
pub const FLAT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    /// Index into [`Dataset::classes`].
    pub label: usize,
    pub id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    series: Vec<TimeSeries>,
    len: usize,
    classes: Vec<String>,
}

/// How fields are separated on each line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    /// Comma if the first data line contains one, whitespace otherwise.
    #[default]
    Auto,
    Comma,
    Whitespace,
}

impl Dataset {
    /// Builds a dataset from `(label, values)` rows. Class names are sorted
    /// numerically when they all parse as numbers, lexically otherwise.
    pub fn from_rows<S: AsRef<str>>(
        name: impl Into<String>,
        rows: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self> {
        let rows: Vec<(String, Vec<f64>)> = rows
            .into_iter()
            .map(|(l, v)| (l.as_ref().to_string(), v))
            .collect();
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        let len = rows[0].1.len();
        if len == 0 {
            return Err(Error::EmptyInput);
        }
        for (i, (_, v)) in rows.iter().enumerate() {
            if v.len() != len {
                return Err(Error::RaggedRow {
                    line: i + 1,
                    expected: len + 1,
                    found: v.len() + 1,
                });
            }
            if let Some(pos) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonNumericField {
                    line: i + 1,
                    field: pos + 2,
                    text: v[pos].to_string(),
                });
            }
        }
        let classes = sort_class_names(rows.iter().map(|(l, _)| l.clone()).collect());
        let series = rows
            .into_iter()
            .enumerate()
            .map(|(id, (label, values))| TimeSeries {
                label: classes.iter().position(|c| *c == label).unwrap(),
                values,
                id,
            })
            .collect();
        Ok(Self {
            name: name.into(),
            series,
            len,
            classes,
        })
    }

    /// An empty dataset sharing `other`'s length and class list.
    pub fn empty_like(other: &Dataset) -> Self {
        Self {
            name: other.name.clone(),
            series: Vec::new(),
            len: other.len,
            classes: other.classes.clone(),
        }
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    /// Series length `m`.
    pub fn series_len(&self) -> usize {
        self.len
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn labels(&self) -> Vec<usize> {
        self.series.iter().map(|s| s.label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for s in &self.series {
            counts[s.label] += 1;
        }
        counts
    }

    /// Number of classes that actually occur among the series.
    pub fn present_class_count(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }

    /// Recodes labels so class indices match `reference`. Classes unknown to
    /// `reference` are appended after its classes.
    pub fn aligned_to(&self, reference: &Dataset) -> Dataset {
        self.aligned_to_classes(&reference.classes)
    }

    pub fn aligned_to_classes(&self, reference: &[String]) -> Dataset {
        let mut classes = reference.to_vec();
        for c in &self.classes {
            if !classes.contains(c) {
                classes.push(c.clone());
            }
        }
        let series = self
            .series
            .iter()
            .map(|s| TimeSeries {
                values: s.values.clone(),
                label: classes
                    .iter()
                    .position(|c| *c == self.classes[s.label])
                    .unwrap(),
                id: s.id,
            })
            .collect();
        Dataset {
            name: self.name.clone(),
            series,
            len: self.len,
            classes,
        }
    }

    /// Keeps the series at `indices` (in that order), renumbering ids.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let series = indices
            .iter()
            .enumerate()
            .map(|(id, &i)| TimeSeries {
                id,
                ..self.series[i].clone()
            })
            .collect();
        Dataset {
            name: self.name.clone(),
            series,
            len: self.len,
            classes: self.classes.clone(),
        }
    }

    /// Writes the dataset back in comma-separated UCR layout. Values are
    /// printed in shortest round-trip form, so parsing the output yields the
    /// same dataset.
    pub fn to_ucr_string(&self) -> String {
        let mut out = String::new();
        for s in &self.series {
            out.push_str(&self.classes[s.label]);
            for v in &s.values {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn sort_class_names(names: Vec<String>) -> Vec<String> {
    let unique: BTreeSet<String> = names.into_iter().collect();
    let mut classes: Vec<String> = unique.into_iter().collect();
    let numeric: Option<Vec<f64>> = classes.iter().map(|c| c.parse::<f64>().ok()).collect();
    if let Some(keys) = numeric {
        let mut paired: Vec<(f64, String)> = keys.into_iter().zip(classes).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        classes = paired.into_iter().map(|(_, c)| c).collect();
    }
    classes
}

/// Parses UCR text. Blank lines and `#` comment lines are skipped.
pub fn parse_ucr(source: &str, delimiter: Delimiter) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut expected = None;
    let mut delimiter = delimiter;
    for (lineno, line) in source.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if delimiter == Delimiter::Auto {
            delimiter = if line.contains(',') {
                Delimiter::Comma
            } else {
                Delimiter::Whitespace
            };
        }
        let fields: Vec<&str> = match delimiter {
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            _ => line.split_whitespace().collect(),
        };
        let expected = *expected.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(Error::RaggedRow {
                line: lineno + 1,
                expected,
                found: fields.len(),
            });
        }
        if fields.len() < 2 {
            return Err(Error::RaggedRow {
                line: lineno + 1,
                expected: 2,
                found: fields.len(),
            });
        }
        let values = fields[1..]
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::NonNumericField {
                        line: lineno + 1,
                        field: i + 2,
                        text: (*f).to_string(),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((normalize_label(fields[0]), values));
    }
    Dataset::from_rows("", rows)
}

// "1.0" and "1" name the same class in some archive files.
fn normalize_label(label: &str) -> String {
    match label.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
        _ => label.to_string(),
    }
}

pub fn read_ucr(reader: &mut impl Read, delimiter: Delimiter) -> Result<Dataset> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_ucr(&text, delimiter)
}

/// Loads a UCR file, naming the dataset after the file stem minus any
/// `_TRAIN`/`_TEST` suffix.
pub fn load_ucr(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut ds = parse_ucr(&text, Delimiter::Auto)?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    ds.name = stem
        .trim_end_matches("_TRAIN")
        .trim_end_matches("_TEST")
        .to_string();
    Ok(ds)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Z-normalizes to mean 0 and population standard deviation 1. Flat input
/// (std below [`FLAT_EPSILON`]) maps to all zeros.
pub fn znormalize(values: &[f64]) -> Vec<f64> {
    let (mean, std) = mean_std(values);
    if std < FLAT_EPSILON {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / std).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Folds {
    /// Fold index per series.
    pub assignment: Vec<usize>,
    pub count: usize,
    pub warnings: Vec<String>,
}

impl Folds {
    /// `(train, validation)` series indices for fold `fold`.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut valid = Vec::new();
        for (i, &f) in self.assignment.iter().enumerate() {
            if f == fold {
                valid.push(i);
            } else {
                train.push(i);
            }
        }
        (train, valid)
    }
}

/// Assigns each series to one of `folds` folds, stratified by class.
///
/// Members of each class are shuffled with a seeded generator and dealt
/// round-robin, continuing from where the previous class stopped so fold
/// sizes stay balanced. A class with fewer members than folds ends up with
/// one member per fold (leave-one-out on that class) and a warning.
pub fn stratified_folds(d: &Dataset, folds: usize, seed: u64) -> Result<Folds> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!(
            "fold count must be at least 2, got {folds}"
        )));
    }
    if folds > d.len() {
        return Err(Error::FoldCountTooLarge {
            folds,
            series: d.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; d.len()];
    let mut warnings = Vec::new();
    let mut next = 0;
    for class in 0..d.classes().len() {
        let mut members: Vec<usize> = d
            .series()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == class)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            let msg = format!(
                "class {} has {} members for {} folds; using leave-one-out on it",
                d.classes()[class],
                members.len(),
                folds
            );
            warn!("{msg}");
            warnings.push(msg);
        }
        members.shuffle(&mut rng);
        for m in members {
            assignment[m] = next % folds;
            next += 1;
        }
    }
    Ok(Folds {
        assignment,
        count: folds,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_comma_layout() {
        let ds = parse_ucr("1,0.5,0.3\n2,0.1,0.2", Delimiter::Auto).unwrap();
        assert_eq!(ds.series_len(), 2);
        assert_eq!(ds.classes(), ["1", "2"]);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.series()[0].values, vec![0.5, 0.3]);
        assert_eq!(ds.series()[1].label, 1);
    }

    #[test]
    fn whitespace_matches_comma() {
        let a = parse_ucr("1 0.5 0.3", Delimiter::Auto).unwrap();
        let b = parse_ucr("1,0.5,0.3", Delimiter::Auto).unwrap();
        assert_eq!(a, b);
        let tabs = parse_ucr("1\t0.5\t0.3\n", Delimiter::Whitespace).unwrap();
        assert_eq!(tabs, b);
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = parse_ucr("1,0.5\n2,0.1,0.2", Delimiter::Auto).unwrap_err();
        assert!(matches!(err, Error::RaggedRow { line: 2, .. }), "{err}");
    }

    #[test]
    fn rejects_bad_fields_and_empty_input() {
        assert!(matches!(
            parse_ucr("1,0.5,abc", Delimiter::Auto),
            Err(Error::NonNumericField { field: 3, .. })
        ));
        assert!(matches!(
            parse_ucr("1,0.5,NaN", Delimiter::Auto),
            Err(Error::NonNumericField { .. })
        ));
        assert!(matches!(parse_ucr("", Delimiter::Auto), Err(Error::EmptyInput)));
        assert!(matches!(
            parse_ucr("# only a comment\n\n", Delimiter::Auto),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn comments_and_float_labels() {
        let ds = parse_ucr("# header\n1.0,1,2\n-1,3,4\n10,5,6\n2,7,8\n", Delimiter::Auto).unwrap();
        assert_eq!(ds.classes(), ["-1", "1", "2", "10"]);
        assert_eq!(ds.labels(), vec![1, 0, 3, 2]);
    }

    #[test]
    fn alignment_recodes_labels() {
        let train = parse_ucr("a,1,2\nb,3,4", Delimiter::Auto).unwrap();
        let test = parse_ucr("b,1,2\nc,3,4", Delimiter::Auto).unwrap();
        let aligned = test.aligned_to(&train);
        assert_eq!(aligned.classes(), ["a", "b", "c"]);
        assert_eq!(aligned.labels(), vec![1, 2]);
    }

    #[test]
    fn znormalize_examples() {
        assert_eq!(znormalize(&[2.0, 3.0]), vec![-1.0, 1.0]);
        assert_eq!(znormalize(&[5.0, 5.0, 5.0]), vec![0.0, 0.0, 0.0]);
        let z = znormalize(&[0.0, 1.0, 2.0, 3.0]);
        let (mean, std) = mean_std(&z);
        assert!(mean.abs() <= 1e-12);
        assert!((std - 1.0).abs() <= 1e-12);
    }

    fn two_class(n_per_class: usize) -> Dataset {
        let rows = (0..2 * n_per_class).map(|i| {
            let label = if i % 2 == 0 { "0" } else { "1" };
            (label, vec![i as f64, 1.0])
        });
        Dataset::from_rows("toy", rows).unwrap()
    }

    #[test]
    fn folds_are_stratified() {
        let ds = two_class(5);
        let folds = stratified_folds(&ds, 5, 7).unwrap();
        for f in 0..5 {
            for class in 0..2 {
                let n = ds
                    .series()
                    .iter()
                    .zip(&folds.assignment)
                    .filter(|(s, &a)| a == f && s.label == class)
                    .count();
                assert_eq!(n, 1, "fold {f} class {class}");
            }
        }
        assert!(folds.warnings.is_empty());
        assert_eq!(folds, stratified_folds(&ds, 5, 7).unwrap());
    }

    #[test]
    fn fold_errors_and_small_classes() {
        let ds = two_class(5);
        assert!(matches!(
            stratified_folds(&ds, 11, 0),
            Err(Error::FoldCountTooLarge { folds: 11, series: 10 })
        ));
        assert!(stratified_folds(&ds, 1, 0).is_err());
        let folds = stratified_folds(&two_class(2), 3, 1).unwrap();
        assert_eq!(folds.warnings.len(), 2);
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        (1usize..6, 1usize..8).prop_flat_map(|(n, m)| {
            proptest::collection::vec(
                (0u8..3, proptest::collection::vec(-1e6f64..1e6, m)),
                n,
            )
            .prop_map(|rows| {
                Dataset::from_rows("p", rows.into_iter().map(|(l, v)| (l.to_string(), v)))
                    .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(ds in arb_dataset()) {
            let back = parse_ucr(&ds.to_ucr_string(), Delimiter::Auto).unwrap();
            prop_assert_eq!(back.series(), ds.series());
            prop_assert_eq!(back.classes(), ds.classes());
        }

        #[test]
        fn znormalize_is_idempotent(v in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
            let once = znormalize(&v);
            let twice = znormalize(&once);
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }

        #[test]
        fn folds_partition_series(n in 4usize..40, f in 2usize..5, seed in any::<u64>()) {
            let rows = (0..n).map(|i| ((i % 3).to_string(), vec![i as f64]));
            let ds = Dataset::from_rows("p", rows).unwrap();
            prop_assume!(f <= n);
            let folds = stratified_folds(&ds, f, seed).unwrap();
            prop_assert_eq!(folds.assignment.len(), n);
            let mut seen = vec![0usize; n];
            for fold in 0..f {
                let (train, valid) = folds.split(fold);
                prop_assert_eq!(train.len() + valid.len(), n);
                for v in valid { seen[v] += 1; }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            for class in 0..ds.classes().len() {
                let mut per_fold = vec![0usize; f];
                for (s, &a) in ds.series().iter().zip(&folds.assignment) {
                    if s.label == class { per_fold[a] += 1; }
                }
                let lo = per_fold.iter().min().unwrap();
                let hi = per_fold.iter().max().unwrap();
                prop_assert!(hi - lo <= 1);
            }
        }
    }
}
