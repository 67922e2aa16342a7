//! SAX-based candidate pre-filter.
//!
//! Each candidate becomes a SAX word: the z-normalized window is reduced by
//! piecewise aggregate approximation (PAA) and each segment mean is mapped
//! to a symbol using equiprobable breakpoints of the standard normal. Over a
//! number of rounds a random subset of word positions is masked and words
//! that still collide are grouped. A candidate whose projected word is
//! shared mostly by one class distinguishes classes well; the filter keeps
//! the best fraction of candidates and never rescores them.

use std::collections::HashMap;

use log::warn;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::CandidateRef;
use crate::dataset::{znormalize, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaxConfig {
    pub word_length: usize,
    pub alphabet_size: usize,
    pub projection_iterations: usize,
    /// Fraction of candidates kept, in `(0, 1]`.
    pub keep_fraction: f64,
    pub seed: u64,
}

impl Default for SaxConfig {
    fn default() -> Self {
        Self {
            word_length: 16,
            alphabet_size: 4,
            projection_iterations: 10,
            keep_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaxFilterOutput {
    /// Survivors, in input order.
    pub kept: Vec<CandidateRef>,
    pub warnings: Vec<String>,
}

/// Piecewise aggregate approximation to `segments` means. Lengths that do
/// not divide evenly are handled by weighting boundary samples fractionally.
pub fn paa(values: &[f64], segments: usize) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; segments];
    // Sample i covers [i*segments, (i+1)*segments) on a grid of n*segments
    // units; segment k covers [k*n, (k+1)*n).
    for (i, &v) in values.iter().enumerate() {
        let (lo, hi) = (i * segments, (i + 1) * segments);
        let mut k = lo / n;
        while k < segments && k * n < hi {
            let overlap = hi.min((k + 1) * n) - lo.max(k * n);
            out[k] += v * overlap as f64;
            k += 1;
        }
    }
    out.iter_mut().for_each(|x| *x /= n as f64);
    out
}

/// Breakpoints splitting N(0, 1) into `alphabet` equiprobable regions.
pub fn breakpoints(alphabet: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    (1..alphabet)
        .map(|i| normal.inverse_cdf(i as f64 / alphabet as f64))
        .collect()
}

pub fn sax_word(values: &[f64], word_length: usize, cuts: &[f64]) -> Vec<u8> {
    paa(&znormalize(values), word_length)
        .iter()
        .map(|&v| cuts.iter().take_while(|&&c| c <= v).count() as u8)
        .collect()
}

/// Keeps the `ceil(keep_fraction * n)` candidates with the highest
/// distinguishing power. Ties keep earlier candidates.
pub fn sax_filter(train: &Dataset, candidates: &[CandidateRef], cfg: &SaxConfig) -> SaxFilterOutput {
    let mut warnings = Vec::new();
    if cfg.keep_fraction >= 1.0 || candidates.is_empty() {
        return SaxFilterOutput {
            kept: candidates.to_vec(),
            warnings,
        };
    }
    if cfg.alphabet_size < 2 || cfg.word_length == 0 {
        let msg = format!(
            "sax alphabet {} / word length {} cannot separate words; keeping all candidates",
            cfg.alphabet_size, cfg.word_length
        );
        warn!("{msg}");
        warnings.push(msg);
        return SaxFilterOutput {
            kept: candidates.to_vec(),
            warnings,
        };
    }

    let cuts = breakpoints(cfg.alphabet_size);
    let words: Vec<Vec<u8>> = candidates
        .iter()
        .map(|c| sax_word(c.values(train), cfg.word_length, &cuts))
        .collect();
    let n_series = train.len();
    let n_classes = train.classes().len();
    let class_sizes = train.class_counts();
    let blocks = n_series.div_ceil(64);
    let masked = (cfg.word_length / 4).max(1).min(cfg.word_length - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // hits[c * n_classes + k]: series of class k sharing candidate c's word,
    // summed over rounds.
    let mut hits = vec![0u32; candidates.len() * n_classes];

    for _ in 0..cfg.projection_iterations.max(1) {
        let mask = sample(&mut rng, cfg.word_length, masked).into_vec();
        let key = |i: usize| -> (usize, Vec<u8>) {
            let w = words[i]
                .iter()
                .enumerate()
                .filter(|(p, _)| !mask.contains(p))
                .map(|(_, &s)| s)
                .collect();
            (candidates[i].length, w)
        };
        let mut buckets: HashMap<(usize, Vec<u8>), Vec<u64>> = HashMap::new();
        for (i, c) in candidates.iter().enumerate() {
            let bits = buckets.entry(key(i)).or_insert_with(|| vec![0; blocks]);
            bits[c.series / 64] |= 1 << (c.series % 64);
        }
        for i in 0..candidates.len() {
            let bits = &buckets[&key(i)];
            for s in train.series() {
                if bits[s.id / 64] & (1 << (s.id % 64)) != 0 {
                    hits[i * n_classes + s.label] += 1;
                }
            }
        }
    }

    let rounds = cfg.projection_iterations.max(1) as f64;
    let power: Vec<f64> = (0..candidates.len())
        .map(|i| {
            let fractions: Vec<f64> = (0..n_classes)
                .filter(|&k| class_sizes[k] > 0)
                .map(|k| hits[i * n_classes + k] as f64 / (rounds * class_sizes[k] as f64))
                .collect();
            let hi = fractions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = fractions.iter().cloned().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .collect();
    let keep = ((cfg.keep_fraction.max(0.0) * candidates.len() as f64).ceil() as usize)
        .clamp(1, candidates.len());
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| power[b].total_cmp(&power[a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = order[..keep].to_vec();
    chosen.sort_unstable();
    SaxFilterOutput {
        kept: chosen.into_iter().map(|i| candidates[i]).collect(),
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mining::{generate_candidates, MiningConfig};
    use rand::Rng;

    fn toy() -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows = (0..8).map(|i| {
            let v: Vec<f64> = (0..20)
                .map(|t| {
                    let bump = if i % 2 == 0 && (8..12).contains(&t) { 3.0 } else { 0.0 };
                    bump + rng.gen_range(-0.3..0.3)
                })
                .collect();
            ((i % 2).to_string(), v)
        });
        Dataset::from_rows("sax", rows).unwrap()
    }

    fn candidates(ds: &Dataset) -> Vec<CandidateRef> {
        let cfg = MiningConfig {
            min_len: Some(4),
            max_len: Some(8),
            ..Default::default()
        };
        generate_candidates(ds, &cfg).unwrap()
    }

    #[test]
    fn paa_even_and_fractional() {
        assert_eq!(paa(&[1.0, 3.0, 5.0, 7.0], 2), vec![2.0, 6.0]);
        let p = paa(&[0.0, 3.0, 6.0], 2);
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] - 5.0).abs() < 1e-12);
        assert_eq!(paa(&[2.0, 4.0], 4), vec![2.0, 2.0, 4.0, 4.0]);
    }

    #[test]
    fn breakpoints_for_four_symbols() {
        let b = breakpoints(4);
        assert_eq!(b.len(), 3);
        assert!((b[0] + 0.6745).abs() < 1e-4 && b[1].abs() < 1e-12 && (b[2] - 0.6745).abs() < 1e-4);
    }

    #[test]
    fn keep_all_is_identity() {
        let ds = toy();
        let c = candidates(&ds);
        let cfg = SaxConfig {
            keep_fraction: 1.0,
            ..Default::default()
        };
        assert_eq!(sax_filter(&ds, &c, &cfg).kept, c);
    }

    #[test]
    fn unit_alphabet_keeps_everything_with_warning() {
        let ds = toy();
        let c = candidates(&ds);
        let cfg = SaxConfig {
            alphabet_size: 1,
            keep_fraction: 0.2,
            ..Default::default()
        };
        let out = sax_filter(&ds, &c, &cfg);
        assert_eq!(out.kept, c);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn half_fraction_cardinality() {
        let ds = toy();
        let c = candidates(&ds);
        let cfg = SaxConfig {
            keep_fraction: 0.5,
            word_length: 4,
            ..Default::default()
        };
        let out = sax_filter(&ds, &c, &cfg);
        assert_eq!(out.kept.len(), c.len().div_ceil(2));
        let pos: Vec<usize> = out
            .kept
            .iter()
            .map(|k| c.iter().position(|x| x == k).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(out, sax_filter(&ds, &c, &cfg));
    }
}
