#![allow(dead_code)]

use std::path::PathBuf;

use divshap::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Directory holding `<Name>/<Name>_TRAIN.tsv` files: `DIVSHAP_UCR_DIR` if
/// set, else the repository's `data/ucr`.
pub fn ucr_dir() -> PathBuf {
    std::env::var_os("DIVSHAP_UCR_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ucr"))
}

/// Train and test splits, or `None` when the files are absent.
pub fn load_ucr_pair(name: &str) -> Option<(Dataset, Dataset)> {
    let dir = ucr_dir().join(name);
    let find = |part: &str| {
        ["tsv", "txt", "csv"]
            .iter()
            .map(|ext| dir.join(format!("{name}_{part}.{ext}")))
            .find(|p| p.exists())
            .or_else(|| Some(dir.join(format!("{name}_{part}"))).filter(|p| p.exists()))
    };
    let train = divshap::load_ucr(find("TRAIN")?).expect("train file parses");
    let test = divshap::load_ucr(find("TEST")?).expect("test file parses");
    Some((train, test))
}

/// Gaussian-ish background noise plus `patterns` pasted at random offsets.
pub fn noisy_series(rng: &mut ChaCha8Rng, m: usize, patterns: &[&[f64]]) -> Vec<f64> {
    let mut v: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.05..0.05)).collect();
    let mut taken = vec![false; m];
    for p in patterns {
        for _ in 0..100 {
            let at = rng.gen_range(0..=m - p.len());
            if taken[at..at + p.len()].iter().all(|t| !t) {
                for (i, x) in p.iter().enumerate() {
                    v[at + i] += x;
                    taken[at + i] = true;
                }
                break;
            }
        }
    }
    v
}

pub const BUMP: &[f64] = &[0.0, 1.5, 3.0, 1.5, 0.0];
pub const SAW: &[f64] = &[0.0, -3.0, 3.0, -3.0, 0.0];

/// Two classes; class "1" carries a bump, class "0" is noise.
pub fn bump_dataset(seed: u64, per_class: usize, m: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<(String, Vec<f64>)> = (0..2 * per_class)
        .map(|i| {
            let label = i % 2;
            let pats: Vec<&[f64]> = if label == 1 { vec![BUMP] } else { vec![] };
            (label.to_string(), noisy_series(&mut rng, m, &pats))
        })
        .collect();
    Dataset::from_rows("bump", rows).unwrap()
}

/// Class "a" carries a bump, "b" a saw tooth, "c" neither. Under raw
/// distances one pattern's shapelet cannot tell the other two classes
/// apart, since both contain plain noise windows.
pub fn three_pattern_dataset(seed: u64, per_class: usize, m: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<(String, Vec<f64>)> = (0..3 * per_class)
        .map(|i| {
            let (label, pats): (&str, Vec<&[f64]>) = match i % 3 {
                0 => ("a", vec![BUMP]),
                1 => ("b", vec![SAW]),
                _ => ("c", vec![]),
            };
            (label.to_string(), noisy_series(&mut rng, m, &pats))
        })
        .collect();
    Dataset::from_rows("three", rows).unwrap()
}
