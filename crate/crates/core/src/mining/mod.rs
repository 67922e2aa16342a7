//! Shapelet candidate generation and information-gain scoring.
//!
//! Every subsequence of every training series within the length band is a
//! candidate. A candidate is scored by its orderline: the sorted distances
//! from the candidate to each training series. The best threshold on that
//! line (the split point) gives the candidate's information gain, and the
//! candidate list sorted by gain is the input to the diversity graph.

mod kernel;
pub mod sax;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distance::{subsequence_dist, DistanceConfig};
use crate::error::{Error, Result};

pub use sax::{sax_filter, SaxConfig, SaxFilterOutput};

/// Gains closer than this are treated as tied.
pub const GAIN_TIE_EPSILON: f64 = 1e-12;

/// A scored subsequence of a training series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shapelet {
    pub values: Vec<f64>,
    pub source_series: usize,
    pub start: usize,
    /// Label of the source series.
    pub class_label: usize,
    /// Distance threshold of the optimal split point.
    pub split_threshold: f64,
    /// Information gain of the split, in bits.
    pub gain: f64,
    /// Mean distance above the threshold minus mean distance at or below it.
    pub gap: f64,
}

impl Shapelet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Stable identifier, `s<series>_<start>_<length>`.
    pub fn id(&self) -> String {
        format!("s{}_{}_{}", self.source_series, self.start, self.len())
    }
}

/// Position of an unscored candidate inside the training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CandidateRef {
    pub series: usize,
    pub start: usize,
    pub length: usize,
}

impl CandidateRef {
    pub fn values<'a>(&self, train: &'a Dataset) -> &'a [f64] {
        &train.series()[self.series].values[self.start..self.start + self.length]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub threshold: f64,
    pub gain: f64,
    pub gap: f64,
    /// Set when the orderline holds a single class or a single distance,
    /// so no threshold can separate anything.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredCandidate {
    pub candidate: CandidateRef,
    pub class_label: usize,
    pub split: Split,
}

impl ScoredCandidate {
    pub fn materialize(&self, train: &Dataset) -> Shapelet {
        Shapelet {
            values: self.candidate.values(train).to_vec(),
            source_series: self.candidate.series,
            start: self.candidate.start,
            class_label: self.class_label,
            split_threshold: self.split.threshold,
            gain: self.split.gain,
            gap: self.split.gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    /// Shortest candidate; `None` means `max(3, m / 11)`.
    pub min_len: Option<usize>,
    /// Longest candidate; `None` means `m / 2`.
    pub max_len: Option<usize>,
    pub length_stride: usize,
    pub position_stride: usize,
    pub use_sax_filter: bool,
    pub sax: SaxConfig,
    pub distance: DistanceConfig,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            min_len: None,
            max_len: None,
            length_stride: 1,
            position_stride: 1,
            use_sax_filter: false,
            sax: SaxConfig::default(),
            distance: DistanceConfig::default(),
        }
    }
}

impl MiningConfig {
    /// Resolved `(min_len, max_len)` for series of length `m`.
    pub fn band(&self, m: usize) -> Result<(usize, usize)> {
        let min = self.min_len.unwrap_or_else(|| (m / 11).max(3));
        let max = self.max_len.unwrap_or(m / 2);
        if self.length_stride == 0 || self.position_stride == 0 {
            return Err(Error::InvalidArgument("strides must be positive".into()));
        }
        if min < 2 {
            return Err(Error::InvalidArgument(format!(
                "min_len must be at least 2, got {min}"
            )));
        }
        if max > m {
            return Err(Error::InvalidArgument(format!(
                "max_len {max} exceeds series length {m}"
            )));
        }
        if min > max {
            return Err(Error::BandEmpty { min, max });
        }
        Ok((min, max))
    }

    fn lengths(&self, min: usize, max: usize) -> Vec<usize> {
        (min..=max).step_by(self.length_stride).collect()
    }
}

/// Enumerates candidates in (series, length, start) order, dropping exact
/// value duplicates after their first occurrence.
pub fn generate_candidates(train: &Dataset, cfg: &MiningConfig) -> Result<Vec<CandidateRef>> {
    let (min, max) = cfg.band(train.series_len())?;
    let lengths = cfg.lengths(min, max);
    let m = train.series_len();
    let mut seen: HashMap<(usize, u64), Vec<CandidateRef>> = HashMap::new();
    let mut out = Vec::new();
    for s in train.series() {
        for &length in &lengths {
            for start in (0..=m - length).step_by(cfg.position_stride) {
                let cand = CandidateRef {
                    series: s.id,
                    start,
                    length,
                };
                let values = cand.values(train);
                let bucket = seen.entry((length, value_hash(values))).or_default();
                if bucket.iter().any(|c| c.values(train) == values) {
                    continue;
                }
                bucket.push(cand);
                out.push(cand);
            }
        }
    }
    Ok(out)
}

fn value_hash(values: &[f64]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for v in values {
        // +0.0 and -0.0 compare equal, so they must hash equal.
        let bits = if *v == 0.0 { 0 } else { v.to_bits() };
        bits.hash(&mut h);
    }
    h.finish()
}

/// Shannon entropy in bits; zero counts contribute nothing.
pub fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderlineEntry {
    pub distance: f64,
    pub label: usize,
    pub series: usize,
}

/// Distances from `shapelet` to every training series, ascending, ties in
/// series order.
pub fn orderline(
    shapelet: &[f64],
    train: &Dataset,
    cfg: DistanceConfig,
) -> Result<Vec<OrderlineEntry>> {
    let mut line = train
        .series()
        .iter()
        .map(|s| {
            Ok(OrderlineEntry {
                distance: subsequence_dist(&s.values, shapelet, cfg)?,
                label: s.label,
                series: s.id,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    sort_orderline(&mut line);
    Ok(line)
}

pub(crate) fn sort_orderline(line: &mut [OrderlineEntry]) {
    line.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.series.cmp(&b.series))
    });
}

/// Finds the information-gain maximizing threshold on a sorted orderline.
///
/// Thresholds are midpoints between consecutive distinct distances. Gain
/// ties (within [`GAIN_TIE_EPSILON`]) go to the larger gap, then to the
/// smaller threshold. A single-class or single-distance line is degenerate:
/// gain 0 at the midpoint of the distance range.
pub fn best_split(line: &[OrderlineEntry], n_classes: usize) -> Split {
    let n = line.len();
    let n_classes = n_classes.max(line.iter().map(|e| e.label + 1).max().unwrap_or(0));
    let mut total = vec![0usize; n_classes];
    for e in line {
        total[e.label] += 1;
    }
    let present = total.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return degenerate_split(line);
    }

    let parent = entropy(&total);
    let sum_all: f64 = line.iter().map(|e| e.distance).sum();
    let mut left = vec![0usize; n_classes];
    let mut right = total.clone();
    let mut sum_left = 0.0;
    let mut best: Option<Split> = None;
    for i in 0..n.saturating_sub(1) {
        let e = &line[i];
        left[e.label] += 1;
        right[e.label] -= 1;
        sum_left += e.distance;
        let threshold = (e.distance + line[i + 1].distance) / 2.0;
        // Adjacent floats have no midpoint strictly between them; such a
        // split could not be reproduced by its own threshold.
        if threshold >= line[i + 1].distance {
            continue;
        }
        let nl = (i + 1) as f64;
        let nr = (n - i - 1) as f64;
        let gain = parent - (nl / n as f64) * entropy(&left) - (nr / n as f64) * entropy(&right);
        let gap = (sum_all - sum_left) / nr - sum_left / nl;
        let cand = Split {
            threshold,
            gain,
            gap,
            degenerate: false,
        };
        if best.map_or(true, |b| split_beats(&cand, &b)) {
            best = Some(cand);
        }
    }
    best.unwrap_or_else(|| degenerate_split(line))
}

fn degenerate_split(line: &[OrderlineEntry]) -> Split {
    let threshold = match (line.first(), line.last()) {
        (Some(a), Some(b)) => (a.distance + b.distance) / 2.0,
        _ => 0.0,
    };
    Split {
        threshold,
        gain: 0.0,
        gap: gap_at(line, threshold),
        degenerate: true,
    }
}

// Candidates arrive in ascending threshold order, so keeping the incumbent
// on a full tie prefers the smaller threshold.
fn split_beats(cand: &Split, incumbent: &Split) -> bool {
    if cand.gain > incumbent.gain + GAIN_TIE_EPSILON {
        return true;
    }
    if cand.gain < incumbent.gain - GAIN_TIE_EPSILON {
        return false;
    }
    cand.gap > incumbent.gap
}

fn gap_at(line: &[OrderlineEntry], threshold: f64) -> f64 {
    let (mut sl, mut nl, mut sr, mut nr) = (0.0, 0usize, 0.0, 0usize);
    for e in line {
        if e.distance <= threshold {
            sl += e.distance;
            nl += 1;
        } else {
            sr += e.distance;
            nr += 1;
        }
    }
    let ml = if nl > 0 { sl / nl as f64 } else { 0.0 };
    let mr = if nr > 0 { sr / nr as f64 } else { 0.0 };
    if nl == 0 || nr == 0 {
        0.0
    } else {
        mr - ml
    }
}

/// Mining order: gain desc, gap desc, length asc, source series asc, start
/// asc.
pub fn rank_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.split
        .gain
        .total_cmp(&a.split.gain)
        .then(b.split.gap.total_cmp(&a.split.gap))
        .then(a.candidate.length.cmp(&b.candidate.length))
        .then(a.candidate.series.cmp(&b.candidate.series))
        .then(a.candidate.start.cmp(&b.candidate.start))
}

/// Scored candidates in mining order. Values stay in the training set until
/// a candidate is materialized; full candidate sets run to hundreds of
/// thousands of entries.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    pub ranked: Vec<ScoredCandidate>,
    /// Candidates enumerated before any filtering.
    pub generated: usize,
    pub warnings: Vec<String>,
}

impl CandidatePool {
    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }

    pub fn shapelet(&self, index: usize, train: &Dataset) -> Shapelet {
        self.ranked[index].materialize(train)
    }

    pub fn shapelets<'a>(&'a self, train: &'a Dataset) -> impl Iterator<Item = Shapelet> + 'a {
        self.ranked.iter().map(move |c| c.materialize(train))
    }

    /// CSV dump: `source,start,length,gain,threshold,values`, values
    /// space-separated.
    pub fn to_csv(&self, train: &Dataset, limit: Option<usize>) -> String {
        let mut out = String::from("source,start,length,gain,threshold,values\n");
        let n = limit.unwrap_or(self.ranked.len()).min(self.ranked.len());
        for c in &self.ranked[..n] {
            let values: Vec<String> = c
                .candidate
                .values(train)
                .iter()
                .map(|v| v.to_string())
                .collect();
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.candidate.series,
                c.candidate.start,
                c.candidate.length,
                c.split.gain,
                c.split.threshold,
                values.join(" ")
            )
            .unwrap();
        }
        out
    }
}

/// Generates, optionally SAX-filters, scores and ranks candidates.
pub fn mine_shapelets(train: &Dataset, cfg: &MiningConfig) -> Result<CandidatePool> {
    let candidates = generate_candidates(train, cfg)?;
    let generated = candidates.len();
    let n_classes = train.classes().len();
    let mut warnings = Vec::new();
    let mut ranked: Vec<ScoredCandidate> = if cfg.use_sax_filter {
        let filtered = sax_filter(train, &candidates, &cfg.sax);
        warnings.extend(filtered.warnings);
        info!(
            "sax filter kept {} of {} candidates",
            filtered.kept.len(),
            generated
        );
        filtered
            .kept
            .par_iter()
            .map(|c| {
                let line = orderline(c.values(train), train, cfg.distance)?;
                Ok(ScoredCandidate {
                    candidate: *c,
                    class_label: train.series()[c.series].label,
                    split: best_split(&line, n_classes),
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        kernel::score_all(train, cfg, &candidates)?
    };
    ranked.par_sort_by(rank_order);
    debug!("mined {} candidates", ranked.len());
    Ok(CandidatePool {
        ranked,
        generated,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_ucr, Delimiter};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(d: &[f64], l: &[usize]) -> Vec<OrderlineEntry> {
        d.iter()
            .zip(l)
            .enumerate()
            .map(|(i, (&distance, &label))| OrderlineEntry {
                distance,
                label,
                series: i,
            })
            .collect()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[4, 4]), 1.0);
        assert_eq!(entropy(&[8, 0]), 0.0);
        assert_eq!(entropy(&[1, 1, 1, 1]), 2.0);
    }

    #[test]
    fn perfect_split() {
        let s = best_split(&line(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]), 2);
        assert_eq!(s.threshold, 2.5);
        assert_eq!(s.gain, 1.0);
        assert_eq!(s.gap, 2.0);
        assert!(!s.degenerate);
    }

    #[test]
    fn degenerate_split() {
        let s = best_split(&line(&[1.0, 2.0, 3.0], &[0, 0, 0]), 2);
        assert_eq!(s.gain, 0.0);
        assert_eq!(s.threshold, 2.0);
        assert!(s.degenerate);
        let s = best_split(&line(&[1.0, 1.0], &[0, 1]), 2);
        assert!(s.degenerate);
        assert_eq!(s.threshold, 1.0);
    }

    #[test]
    fn adjacent_float_distances_are_not_split() {
        let a = 0.3f64;
        let b = f64::from_bits(a.to_bits() + 1);
        assert_eq!((a + b) / 2.0, b);
        let s = best_split(&line(&[a, b], &[0, 1]), 2);
        assert!(s.degenerate);
        // The reported threshold must induce the scored partition.
        let s = best_split(&line(&[a, b, 1.0], &[0, 1, 1]), 2);
        assert!(s.threshold > b && s.threshold < 1.0);
    }

    #[test]
    fn default_band_for_length_110() {
        assert_eq!(MiningConfig::default().band(110).unwrap(), (10, 55));
        let bad = MiningConfig {
            min_len: Some(5),
            max_len: Some(4),
            ..Default::default()
        };
        assert!(matches!(bad.band(10), Err(Error::BandEmpty { min: 5, max: 4 })));
    }

    #[test]
    fn enumerates_tiny_series() {
        let ds = parse_ucr("0,1,2,3\n1,5,4,3", Delimiter::Auto).unwrap();
        let cfg = MiningConfig {
            min_len: Some(2),
            max_len: Some(2),
            ..Default::default()
        };
        let c = generate_candidates(&ds, &cfg).unwrap();
        let vals: Vec<&[f64]> = c.iter().filter(|c| c.series == 0).map(|c| c.values(&ds)).collect();
        assert_eq!(vals, vec![&[1.0, 2.0][..], &[2.0, 3.0][..]]);
    }

    #[test]
    fn candidate_count_formula() {
        // n = 2, m = 8, strides 1, no duplicate windows in random data.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows = (0..2).map(|i| {
            (
                i.to_string(),
                (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>(),
            )
        });
        let ds = Dataset::from_rows("c", rows).unwrap();
        for (min, max) in [(2, 4), (3, 8), (2, 2)] {
            let cfg = MiningConfig {
                min_len: Some(min),
                max_len: Some(max),
                ..Default::default()
            };
            let expected: usize = 2 * (min..=max).map(|l| 8 - l + 1).sum::<usize>();
            assert_eq!(generate_candidates(&ds, &cfg).unwrap().len(), expected);
        }
    }

    #[test]
    fn duplicates_keep_first_occurrence() {
        let ds = parse_ucr("0,1,2,1,2\n1,1,2,0,0", Delimiter::Auto).unwrap();
        let cfg = MiningConfig {
            min_len: Some(2),
            max_len: Some(2),
            ..Default::default()
        };
        let c = generate_candidates(&ds, &cfg).unwrap();
        let starts: Vec<(usize, usize)> = c.iter().map(|c| (c.series, c.start)).collect();
        assert_eq!(starts, vec![(0, 0), (0, 1), (1, 1), (1, 2)]);
    }

    #[test]
    fn orderline_self_distance_is_zero() {
        let ds = parse_ucr("0,1,3,2,5\n1,4,4,1,0\n0,2,2,2,9", Delimiter::Auto).unwrap();
        let s = &ds.series()[1].values[1..4];
        let ol = orderline(s, &ds, DistanceConfig::default()).unwrap();
        assert_eq!(ol.len(), 3);
        assert!(ol.windows(2).all(|w| w[0].distance <= w[1].distance));
        let own = ol.iter().find(|e| e.series == 1).unwrap();
        assert_eq!(own.distance, 0.0);
    }

    // Exhaustive oracle: recompute every midpoint partition from scratch.
    pub(crate) fn brute_force_split(line: &[OrderlineEntry], n_classes: usize) -> Option<Split> {
        let mut ds: Vec<f64> = line.iter().map(|e| e.distance).collect();
        ds.sort_by(f64::total_cmp);
        ds.dedup();
        let mut best: Option<Split> = None;
        for w in ds.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let mut all = vec![0; n_classes];
            let mut lo = vec![0; n_classes];
            let mut hi = vec![0; n_classes];
            let (mut sl, mut sr) = (0.0, 0.0);
            for e in line {
                all[e.label] += 1;
                if e.distance <= t {
                    lo[e.label] += 1;
                    sl += e.distance;
                } else {
                    hi[e.label] += 1;
                    sr += e.distance;
                }
            }
            let n = line.len() as f64;
            let nl: usize = lo.iter().sum();
            let nr: usize = hi.iter().sum();
            let gain = entropy(&all)
                - nl as f64 / n * entropy(&lo)
                - nr as f64 / n * entropy(&hi);
            let gap = sr / nr as f64 - sl / nl as f64;
            let better = match best {
                None => true,
                Some(b) => {
                    gain > b.gain + GAIN_TIE_EPSILON
                        || ((gain - b.gain).abs() <= GAIN_TIE_EPSILON && gap > b.gap)
                }
            };
            if better {
                best = Some(Split {
                    threshold: t,
                    gain,
                    gap,
                    degenerate: false,
                });
            }
        }
        best
    }

    proptest! {
        #[test]
        fn best_split_matches_exhaustive_oracle(
            entries in proptest::collection::vec((0u8..8, 0usize..3), 2..=12)
        ) {
            let mut l: Vec<OrderlineEntry> = entries
                .iter()
                .enumerate()
                .map(|(i, &(d, label))| OrderlineEntry { distance: d as f64 * 0.25, label, series: i })
                .collect();
            sort_orderline(&mut l);
            let fast = best_split(&l, 3);
            let present = l.iter().map(|e| e.label).collect::<std::collections::BTreeSet<_>>().len();
            if present >= 2 {
                if let Some(oracle) = brute_force_split(&l, 3) {
                    prop_assert!((fast.gain - oracle.gain).abs() <= 1e-12);
                    prop_assert_eq!(fast.threshold, oracle.threshold);
                }
            }
            let h = entropy(&{
                let mut c = vec![0; 3];
                for e in &l { c[e.label] += 1; }
                c
            });
            prop_assert!(fast.gain >= 0.0 && fast.gain <= h + 1e-12);
        }
    }
}
