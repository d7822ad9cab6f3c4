use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{dist, Matrix, Vector};

/// Weight given to edges between coincident points.
pub const MIN_EDGE_WEIGHT: f64 = 1e-12;

/// Undirected graph with positive edge weights, stored as sorted adjacency lists.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl NeighborGraph {
    /// Builds a graph from undirected edges `(i, j, w)`; repeated edges keep the smallest weight.
    pub fn from_edges(nodes: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes];
        for &(i, j, w) in edges {
            if i >= nodes || j >= nodes {
                return Err(Error::Index {
                    index: i.max(j),
                    len: nodes,
                });
            }
            if i == j {
                return Err(Error::Spec(format!("self-loop at node {i}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Spec(format!("edge ({i}, {j}) has weight {w}")));
            }
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        for list in &mut adjacency {
            list.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            list.dedup_by_key(|e| e.0);
        }
        Ok(Self { adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.adjacency[i]
            .binary_search_by_key(&j, |e| e.0)
            .ok()
            .map(|pos| self.adjacency[i][pos].1)
    }
}

/// Edge `(i, j)` whenever `j` is among the `k` nearest points of `i` or vice
/// versa; ties in distance are broken by index.
pub fn knn_graph(points: &[Vector], k: usize) -> Result<NeighborGraph> {
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::Spec(format!("k = {k} needs 1 <= k < {n} points")));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Dimension("points of mixed dimension".into()));
    }
    let nearest: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, dist(&points[i], &points[j])))
                .collect();
            let by_dist =
                |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_dist);
                cand.truncate(k);
            }
            cand.sort_by(by_dist);
            cand
        })
        .collect();
    let edges: Vec<(usize, usize, f64)> = nearest
        .iter()
        .enumerate()
        .flat_map(|(i, list)| {
            list.iter()
                .map(move |&(j, d)| (i, j, d.max(MIN_EDGE_WEIGHT)))
        })
        .collect();
    NeighborGraph::from_edges(n, &edges)
}

/// Components in order of their smallest node, each sorted ascending.
pub fn connected_components(g: &NeighborGraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(g: &NeighborGraph, source: usize) -> Vec<f64> {
    let mut best = vec![f64::INFINITY; g.node_count()];
    let mut heap = BinaryHeap::new();
    best[source] = 0.0;
    heap.push(Frontier {
        cost: 0.0,
        node: source,
    });
    while let Some(Frontier { cost, node }) = heap.pop() {
        if cost > best[node] {
            continue;
        }
        for &(next, w) in g.neighbors(node) {
            let c = cost + w;
            if c < best[next] {
                best[next] = c;
                heap.push(Frontier {
                    cost: c,
                    node: next,
                });
            }
        }
    }
    best
}

/// All-pairs shortest-path lengths, one Dijkstra run per source.
pub fn geodesic_distances(g: &NeighborGraph) -> Result<Matrix> {
    let components = connected_components(g);
    if components.len() > 1 {
        return Err(Error::Disconnected { components });
    }
    let n = g.node_count();
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(g, s)).collect();
    // path sums may differ in the last bit between directions
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j].min(rows[j][i])))
}
