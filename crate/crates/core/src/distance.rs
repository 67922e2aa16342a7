//! Distance kernels shared by mining, the diversity graph and the transform.

use serde::{Deserialize, Serialize};

use crate::dataset::{mean_std, znormalize, FLAT_EPSILON};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceConfig {
    /// Z-normalize each window and the query before comparing.
    pub normalize_windows: bool,
    /// Divide the squared distance by the compared length.
    pub length_normalize: bool,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self {
            normalize_windows: true,
            length_normalize: true,
        }
    }
}

/// Squared Euclidean distance.
pub fn euclid_sq(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Minimum distance between `query` and every aligned window of `series`.
///
/// Windows are scanned with stride 1. A window is abandoned as soon as its
/// running sum exceeds the best complete sum seen so far, which never
/// changes the result.
pub fn subsequence_dist(series: &[f64], query: &[f64], cfg: DistanceConfig) -> Result<f64> {
    let len = query.len();
    if len == 0 {
        return Err(Error::InvalidArgument("empty query".into()));
    }
    if len > series.len() {
        return Err(Error::ShapeletLongerThanSeries {
            shapelet: len,
            series: series.len(),
        });
    }
    let query = if cfg.normalize_windows {
        znormalize(query)
    } else {
        query.to_vec()
    };
    let mut best = f64::INFINITY;
    for window in series.windows(len) {
        let sum = if cfg.normalize_windows {
            let (mean, std) = mean_std(window);
            if std < FLAT_EPSILON {
                abandoning_sum(query.iter().map(|q| q * q), best)
            } else {
                abandoning_sum(
                    window.iter().zip(&query).map(|(w, q)| {
                        let d = (w - mean) / std - q;
                        d * d
                    }),
                    best,
                )
            }
        } else {
            abandoning_sum(
                window.iter().zip(&query).map(|(w, q)| (w - q) * (w - q)),
                best,
            )
        };
        if let Some(sum) = sum {
            if sum < best {
                best = sum;
            }
        }
    }
    Ok(if cfg.length_normalize {
        best / len as f64
    } else {
        best
    })
}

// None once the partial sum passes `limit`.
#[inline]
fn abandoning_sum(terms: impl Iterator<Item = f64>, limit: f64) -> Option<f64> {
    let mut sum = 0.0;
    for t in terms {
        sum += t;
        if sum > limit {
            return None;
        }
    }
    Some(sum)
}

/// Distance between two shapelets of possibly different lengths: the shorter
/// one slides along the longer one. Symmetric by construction.
pub fn shapelet_dist(a: &[f64], b: &[f64], cfg: DistanceConfig) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("empty shapelet".into()));
    }
    if a.len() >= b.len() {
        subsequence_dist(a, b, cfg)
    } else {
        subsequence_dist(b, a, cfg)
    }
}
