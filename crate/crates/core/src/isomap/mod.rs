//! Isomap: symmetric kNN graph → graph geodesics → classical MDS.

mod graph;
mod mds;

use std::collections::HashMap;

pub use graph::{
    connected_components, geodesic_distances, knn_graph, NeighborGraph, MIN_EDGE_WEIGHT,
};
pub use mds::{classical_mds, classical_mds_with, pairwise_distances, EmbeddingResult};

use crate::error::{Error, Result};
use crate::numerics::Vector;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_TARGET_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct IsomapOptions {
    pub k: usize,
    pub target_dim: usize,
    /// Double `k` (up to `n − 1`) until the neighbour graph is connected
    /// instead of failing on a disconnected graph.
    pub grow_k: bool,
    /// Embed each distinct point once and copy its coordinates to its
    /// duplicates. `k` is capped at the number of distinct points minus one.
    pub merge_duplicates: bool,
}

impl Default for IsomapOptions {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            target_dim: DEFAULT_TARGET_DIM,
            grow_k: false,
            merge_duplicates: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IsomapOutcome {
    pub embedding: EmbeddingResult,
    pub k_used: usize,
    pub distinct_points: usize,
}

pub fn isomap(points: &[Vector], k: usize, target_dim: usize) -> Result<EmbeddingResult> {
    let opts = IsomapOptions {
        k,
        target_dim,
        ..Default::default()
    };
    Ok(isomap_with(points, &opts)?.embedding)
}

pub fn isomap_with(points: &[Vector], opts: &IsomapOptions) -> Result<IsomapOutcome> {
    if points.is_empty() {
        return Err(Error::EmptyInput("isomap of no points".into()));
    }
    let (unique, owner) = if opts.merge_duplicates {
        dedup(points)
    } else {
        (points.to_vec(), (0..points.len()).collect())
    };
    let n = unique.len();
    if n == 1 {
        return Ok(IsomapOutcome {
            embedding: EmbeddingResult::collapsed(points.len(), opts.target_dim),
            k_used: 0,
            distinct_points: 1,
        });
    }
    let mut k = if opts.merge_duplicates {
        opts.k.min(n - 1)
    } else {
        opts.k
    };
    let geodesic = loop {
        let graph = knn_graph(&unique, k)?;
        match geodesic_distances(&graph) {
            Ok(d) => break d,
            Err(Error::Disconnected { .. }) if opts.grow_k && k < n - 1 => {
                k = (2 * k).min(n - 1);
            }
            Err(e) => return Err(e),
        }
    };
    let reduced = classical_mds(&geodesic, opts.target_dim)?;
    let embedding = EmbeddingResult {
        coordinates: owner
            .iter()
            .map(|&u| reduced.coordinates[u].clone())
            .collect(),
        ..reduced
    };
    Ok(IsomapOutcome {
        embedding,
        k_used: k,
        distinct_points: n,
    })
}

/// Distinct points in first-occurrence order, and the distinct index of every input.
fn dedup(points: &[Vector]) -> (Vec<Vector>, Vec<usize>) {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut unique = Vec::new();
    let owner = points
        .iter()
        .map(|p| {
            // +0.0 and -0.0 coincide
            let key: Vec<u64> = p.iter().map(|x| (x + 0.0).to_bits()).collect();
            *seen.entry(key).or_insert_with(|| {
                unique.push(p.clone());
                unique.len() - 1
            })
        })
        .collect();
    (unique, owner)
}
