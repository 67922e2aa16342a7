// Batch scoring of every candidate of a source series against every training
// series.
//
// For a fixed source start p and target start q, the dot products of the
// windows of all lengths L grow by one term per length, so all band lengths
// for the pair (p, q) cost one pass of max_len multiply-adds. Window means and
// deviations are precomputed, and the z-normalized squared distance follows
// from the correlation:
//
//     sum_t (za_t - zb_t)^2 = 2 L (1 - corr(a, b)).
//
// The result equals `subsequence_dist` up to rounding.

use rayon::prelude::*;

use super::{best_split, sort_orderline, CandidateRef, MiningConfig, OrderlineEntry, ScoredCandidate};
use crate::dataset::{Dataset, FLAT_EPSILON};
use crate::error::Result;

#[derive(Clone, Copy, Default)]
struct Window {
    mean: f64,
    /// Zero for flat windows.
    inv_std: f64,
    sum_sq: f64,
}

// Stats of every window `(start, lengths[li])` of one series, indexed
// `start * lengths.len() + li`. Entries for windows running past the end are
// left at their default and never read.
fn window_stats(values: &[f64], lengths: &[usize]) -> Vec<Window> {
    let m = values.len();
    let nb = lengths.len();
    let mut out = vec![Window::default(); m * nb];
    for start in 0..m {
        let (mut mean, mut m2, mut sum_sq) = (0.0f64, 0.0f64, 0.0f64);
        let mut li = 0;
        for l in 1..=(m - start) {
            if li == nb {
                break;
            }
            let v = values[start + l - 1];
            let delta = v - mean;
            mean += delta / l as f64;
            m2 += delta * (v - mean);
            sum_sq += v * v;
            if l == lengths[li] {
                let std = (m2 / l as f64).max(0.0).sqrt();
                out[start * nb + li] = Window {
                    mean,
                    inv_std: if std < FLAT_EPSILON { 0.0 } else { 1.0 / std },
                    sum_sq,
                };
                li += 1;
            }
        }
    }
    out
}

pub(super) fn score_all(
    train: &Dataset,
    cfg: &MiningConfig,
    candidates: &[CandidateRef],
) -> Result<Vec<ScoredCandidate>> {
    let m = train.series_len();
    let (min, max) = cfg.band(m)?;
    let lengths = cfg.lengths(min, max);
    let stats: Vec<Vec<Window>> = train
        .series()
        .par_iter()
        .map(|s| window_stats(&s.values, &lengths))
        .collect();
    let n_classes = train.classes().len();

    let mut by_series: Vec<Vec<CandidateRef>> = vec![Vec::new(); train.len()];
    for c in candidates {
        by_series[c.series].push(*c);
    }
    let scored: Vec<Vec<ScoredCandidate>> = by_series
        .par_iter()
        .enumerate()
        .filter(|(_, cands)| !cands.is_empty())
        .map(|(i, cands)| {
            let mut starts: Vec<usize> = cands.iter().map(|c| c.start).collect();
            starts.sort_unstable();
            starts.dedup();
            let table = SourceTable::compute(train, cfg, &lengths, &stats, i, &starts);
            cands
                .iter()
                .map(|c| {
                    let pi = starts.binary_search(&c.start).unwrap();
                    let li = lengths.binary_search(&c.length).unwrap();
                    let mut line: Vec<OrderlineEntry> = train
                        .series()
                        .iter()
                        .map(|s| OrderlineEntry {
                            distance: table.get(s.id, pi, li),
                            label: s.label,
                            series: s.id,
                        })
                        .collect();
                    sort_orderline(&mut line);
                    ScoredCandidate {
                        candidate: *c,
                        class_label: train.series()[i].label,
                        split: best_split(&line, n_classes),
                    }
                })
                .collect()
        })
        .collect();
    Ok(scored.into_iter().flatten().collect())
}

// Minimum distances of one source series' candidates to every series,
// indexed `(target * starts + pi) * lengths + li`.
struct SourceTable {
    dist: Vec<f64>,
    n_starts: usize,
    n_lengths: usize,
}

impl SourceTable {
    fn compute(
        train: &Dataset,
        cfg: &MiningConfig,
        lengths: &[usize],
        stats: &[Vec<Window>],
        source: usize,
        starts: &[usize],
    ) -> Self {
        let m = train.series_len();
        let nb = lengths.len();
        let np = starts.len();
        let normalize = cfg.distance.normalize_windows;
        let length_normalize = cfg.distance.length_normalize;
        let x = &train.series()[source].values;
        let xs = &stats[source];
        let mut dist = vec![f64::INFINITY; train.len() * np * nb];
        for (j, target) in train.series().iter().enumerate() {
            let y = &target.values;
            let ys = &stats[j];
            for (pi, &p) in starts.iter().enumerate() {
                let row = &mut dist[(j * np + pi) * nb..(j * np + pi + 1) * nb];
                let xw = &xs[p * nb..(p + 1) * nb];
                for q in 0..m {
                    let fit = (m - p).min(m - q);
                    let yw = &ys[q * nb..(q + 1) * nb];
                    let mut dot = 0.0;
                    let mut l = 0;
                    for li in 0..nb {
                        let len = lengths[li];
                        if len > fit {
                            break;
                        }
                        while l < len {
                            dot += x[p + l] * y[q + l];
                            l += 1;
                        }
                        let (a, b) = (&xw[li], &yw[li]);
                        let lf = len as f64;
                        let sum = if normalize {
                            if a.inv_std == 0.0 || b.inv_std == 0.0 {
                                if a.inv_std == 0.0 && b.inv_std == 0.0 {
                                    0.0
                                } else {
                                    lf
                                }
                            } else {
                                let corr = (dot / lf - a.mean * b.mean) * a.inv_std * b.inv_std;
                                (2.0 * lf * (1.0 - corr)).max(0.0)
                            }
                        } else {
                            (a.sum_sq + b.sum_sq - 2.0 * dot).max(0.0)
                        };
                        let d = if length_normalize { sum / lf } else { sum };
                        if d < row[li] {
                            row[li] = d;
                        }
                    }
                }
            }
        }
        Self {
            dist,
            n_starts: np,
            n_lengths: nb,
        }
    }

    fn get(&self, target: usize, pi: usize, li: usize) -> f64 {
        self.dist[(target * self.n_starts + pi) * self.n_lengths + li]
    }
}
