//! Diversity graph over ranked shapelets and greedy diversified top-k.
//!
//! Two shapelets are similar when they come from the same class and their
//! distance is within both of their split thresholds. The diversity graph
//! links similar shapelets; the diversified top-k scans vertices in rank
//! order and keeps a vertex only if none of its neighbours was kept.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{shapelet_dist, DistanceConfig};
use crate::mining::Shapelet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub distance: DistanceConfig,
    /// Only shapelets of the same class can be similar.
    pub same_class_only: bool,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            distance: DistanceConfig::default(),
            same_class_only: true,
        }
    }
}

/// `dist(a, b) <= min(threshold_a, threshold_b)`, restricted to same-class
/// pairs when configured.
pub fn similar(a: &Shapelet, b: &Shapelet, cfg: &SimilarityConfig) -> bool {
    if cfg.same_class_only && a.class_label != b.class_label {
        return false;
    }
    let limit = a.split_threshold.min(b.split_threshold);
    // Both are non-empty by construction.
    shapelet_dist(&a.values, &b.values, cfg.distance).is_ok_and(|d| d <= limit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityGraph {
    vertices: Vec<Shapelet>,
    /// Sorted neighbour indices per vertex.
    adjacency: Vec<Vec<usize>>,
}

impl DiversityGraph {
    pub fn vertices(&self) -> &[Shapelet] {
        &self.vertices
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Edge list CSV with header `i,j`, each edge once with `i < j`.
    pub fn edges_csv(&self) -> String {
        let mut out = String::from("i,j\n");
        for (i, j) in self.edges() {
            writeln!(out, "{i},{j}").unwrap();
        }
        out
    }

    /// Vertex table CSV: `index,gain,threshold,class`.
    pub fn vertices_csv(&self) -> String {
        let mut out = String::from("index,gain,threshold,class\n");
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(out, "{i},{},{},{}", v.gain, v.split_threshold, v.class_label).unwrap();
        }
        out
    }
}

/// Builds the graph over shapelets already in mining order, testing every
/// pair.
pub fn build_graph(ranked: Vec<Shapelet>, cfg: &SimilarityConfig) -> DiversityGraph {
    let n = ranked.len();
    let upper: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .filter(|&j| similar(&ranked[i], &ranked[j], cfg))
                .collect()
        })
        .collect();
    let mut adjacency = vec![Vec::new(); n];
    for (i, js) in upper.iter().enumerate() {
        for &j in js {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
    }
    adjacency.iter_mut().for_each(|a| a.sort_unstable());
    DiversityGraph {
        vertices: ranked,
        adjacency,
    }
}

/// Greedy diversified top-k: indices of the selected vertices, in rank
/// order. Returns fewer than `k` only when the greedy maximal independent
/// set is smaller than `k`.
pub fn div_topk(graph: &DiversityGraph, k: usize) -> Vec<usize> {
    let mut selected = Vec::new();
    let mut blocked = vec![false; graph.vertices.len()];
    for v in 0..graph.vertices.len() {
        if selected.len() >= k {
            break;
        }
        if blocked[v] {
            continue;
        }
        selected.push(v);
        for &u in &graph.adjacency[v] {
            blocked[u] = true;
        }
    }
    selected
}

/// Same selection as [`div_topk`] on the graph of all `ranked` shapelets,
/// without building the graph: a vertex only needs to be tested against the
/// vertices already selected. Costs at most `k` similarity tests per
/// scanned vertex instead of all pairs.
pub fn div_topk_streaming(
    ranked: impl IntoIterator<Item = Shapelet>,
    k: usize,
    cfg: &SimilarityConfig,
) -> Vec<(usize, Shapelet)> {
    let mut selected: Vec<(usize, Shapelet)> = Vec::new();
    if k == 0 {
        return selected;
    }
    for (i, s) in ranked.into_iter().enumerate() {
        if selected.iter().all(|(_, t)| !similar(t, &s, cfg)) {
            selected.push((i, s));
            if selected.len() == k {
                break;
            }
        }
    }
    selected
}
