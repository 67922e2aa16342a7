//! Plain `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys not listed in
//! [`apply`] are rejected so that typos surface early.
//!
//! ```
//! use divshap::config::parse_config;
//!
//! let cfg = parse_config("kappa = 5\nseed = 3\neval_mode = train\n").unwrap();
//! assert_eq!(cfg.pipeline.kappa, 5);
//! assert_eq!(cfg.pipeline.elm.seed, 3);
//! ```

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pipeline::{EvalMode, PipelineConfig};

/// Parsed file: pipeline settings plus runtime options.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FileConfig {
    pub pipeline: PipelineConfig,
    /// Worker threads; `None` leaves the choice to the caller.
    pub workers: Option<usize>,
}

pub fn parse_config(text: &str) -> Result<FileConfig> {
    let mut out = FileConfig::default();
    let mut folds = 5;
    let mut cross_validation = true;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            message: format!("expected `key = value`, found {line:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let err = |message: String| Error::Config {
            line: line_no,
            message,
        };
        match key {
            "eval_mode" => {
                cross_validation = match value {
                    "cv" | "cross_validation" => true,
                    "train" | "training_accuracy" => false,
                    other => return Err(err(format!("unknown eval_mode {other:?}"))),
                }
            }
            "folds" => folds = parse(value).map_err(err)?,
            _ => apply(&mut out, key, value).map_err(err)?,
        }
    }
    out.pipeline.eval.mode = if cross_validation {
        EvalMode::CrossValidation { folds }
    } else {
        EvalMode::TrainingAccuracy
    };
    Ok(out)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<FileConfig> {
    parse_config(&fs::read_to_string(path)?)
}

fn parse<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("invalid value {value:?}: {e}"))
}

fn optional(value: &str) -> std::result::Result<Option<usize>, String> {
    match value {
        "auto" | "none" => Ok(None),
        v => parse(v).map(Some),
    }
}

fn apply(out: &mut FileConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    let p = &mut out.pipeline;
    match key {
        "kappa" => p.kappa = parse(value)?,
        "seed" => *p = p.clone().with_seed(parse(value)?),
        "min_len" => p.mining.min_len = optional(value)?,
        "max_len" => p.mining.max_len = optional(value)?,
        "length_stride" => p.mining.length_stride = parse(value)?,
        "position_stride" => p.mining.position_stride = parse(value)?,
        "sax_filter" => p.mining.use_sax_filter = parse(value)?,
        "sax.word_length" => p.mining.sax.word_length = parse(value)?,
        "sax.alphabet_size" => p.mining.sax.alphabet_size = parse(value)?,
        "sax.projection_iterations" => p.mining.sax.projection_iterations = parse(value)?,
        "sax.keep_fraction" => p.mining.sax.keep_fraction = parse(value)?,
        "repeats" => p.eval.repeats = parse(value)?,
        "hidden_nodes" => p.elm.hidden_nodes = optional(value)?,
        "activation" => p.elm.activation = parse(value)?,
        "ridge" => p.elm.ridge = parse(value)?,
        "same_class_only" => p.same_class_only = parse(value)?,
        "normalize_windows" => p.distance.normalize_windows = parse(value)?,
        "length_normalize" => p.distance.length_normalize = parse(value)?,
        "workers" => out.workers = optional(value)?,
        other => return Err(format!("unknown key {other:?}")),
    }
    Ok(())
}
