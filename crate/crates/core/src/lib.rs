//! Time-series classification with diversified shapelets and an extreme
//! learning machine.
//!
//! The pipeline mines every subsequence of the training series as a shapelet
//! candidate and scores it by the information gain of its best distance
//! split. Highly ranked candidates tend to be near-duplicates of each other,
//! so the final shapelets are chosen greedily from a diversity graph: a
//! candidate is kept only if it is not similar to one already kept. The
//! training series are then mapped to their distances to the chosen
//! shapelets and a single-hidden-layer network with random hidden weights
//! is trained on those features in closed form.
//!
//! ```
//! use divshap::{Dataset, PipelineConfig};
//!
//! let rows = (0..12).map(|i| {
//!     let bump = if i % 2 == 0 { 2.0 } else { -2.0 };
//!     let values: Vec<f64> = (0..16)
//!         .map(|t| if (6..10).contains(&t) { bump } else { (t as f64 * 0.7 + i as f64).sin() * 0.1 })
//!         .collect();
//!     ((i % 2).to_string(), values)
//! });
//! let train = Dataset::from_rows("toy", rows).unwrap();
//! let model = divshap::fit(&train, &PipelineConfig::default().with_seed(7)).unwrap();
//! assert!((1..=9).contains(&model.selected_k));
//! let prediction = model.predict(&train).unwrap();
//! assert_eq!(prediction.labels.len(), train.len());
//! ```

pub mod bench;
pub mod config;
pub mod dataset;
pub mod distance;
pub mod elm;
pub mod error;
pub mod graph;
pub mod mining;
pub mod pipeline;
pub mod transform;

pub use dataset::{load_ucr, parse_ucr, Dataset, Delimiter, TimeSeries};
pub use distance::{shapelet_dist, subsequence_dist, DistanceConfig};
pub use elm::{pinv_solve, Activation, ElmConfig, ElmModel};
pub use error::{Error, Result};
pub use graph::{build_graph, div_topk, div_topk_streaming, DiversityGraph, SimilarityConfig};
pub use mining::{mine_shapelets, CandidatePool, MiningConfig, Shapelet};
pub use pipeline::{fit, EvalConfig, EvalMode, PipelineConfig, PipelineModel, Prediction};
pub use transform::{transform, FeatureMatrix};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    pub mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    pub mod datasets {}
    #[doc = include_str!("../../../book/src/distances.md")]
    pub mod distances {}
    #[doc = include_str!("../../../book/src/mining.md")]
    pub mod mining {}
    #[doc = include_str!("../../../book/src/diversity.md")]
    pub mod diversity {}
    #[doc = include_str!("../../../book/src/transform.md")]
    pub mod transform {}
    #[doc = include_str!("../../../book/src/elm.md")]
    pub mod elm {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    pub mod pipeline {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
