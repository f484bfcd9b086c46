use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::{singleton_groups, Instance, InstanceParts};
use crate::rng::{derive, stream, tag};

/// Undirected simple graph with nodes `0..n_nodes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeListGraph {
    pub n_nodes: usize,
    /// Each edge once, as `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl EdgeListGraph {
    /// Builds a graph from raw id pairs: ids are compacted to `0..n` in
    /// ascending order, self-loops and duplicates dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let ids: BTreeSet<u64> = pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
        let index: BTreeMap<u64, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
        let edges: BTreeSet<(usize, usize)> = pairs
            .iter()
            .filter(|(u, v)| u != v)
            .map(|(u, v)| {
                let (a, b) = (index[u], index[v]);
                (a.min(b), a.max(b))
            })
            .collect();
        EdgeListGraph {
            n_nodes: ids.len(),
            edges: edges.into_iter().collect(),
        }
    }
}

/// Parses whitespace-separated `u v` lines. Lines starting with `%` or `#`
/// and blank lines are ignored, as are columns after the second.
pub fn parse_edge_list<R: BufRead>(input: R) -> Result<EdgeListGraph> {
    let mut pairs = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<edge list>", e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace().map(str::parse::<u64>);
        match (it.next(), it.next()) {
            (Some(Ok(u)), Some(Ok(v))) => pairs.push((u, v)),
            _ => {
                return Err(Error::Data(format!(
                    "edge list line {}: expected two integer node ids, got {line:?}",
                    k + 1
                )))
            }
        }
    }
    Ok(EdgeListGraph::from_pairs(pairs))
}

/// Keeps a uniformly random set of `n` nodes and the edges among them.
pub fn downsample(graph: &EdgeListGraph, n: usize, seed: u64) -> EdgeListGraph {
    if n >= graph.n_nodes {
        return graph.clone();
    }
    let mut rng = stream(derive(seed, tag::DOWNSAMPLE));
    let mut keep = index::sample(&mut rng, graph.n_nodes, n).into_vec();
    keep.sort_unstable();
    let mut new_id = vec![usize::MAX; graph.n_nodes];
    for (k, &v) in keep.iter().enumerate() {
        new_id[v] = k;
    }
    let edges = graph
        .edges
        .iter()
        .filter(|&&(u, v)| new_id[u] != usize::MAX && new_id[v] != usize::MAX)
        .map(|&(u, v)| (new_id[u], new_id[v]))
        .collect();
    EdgeListGraph { n_nodes: n, edges }
}

/// Splits the nodes uniformly into `L` (`⌊|V|/2⌋` nodes, offline) and `R`
/// (the rest, online), keeps the crossing edges, and draws offline weights
/// from `Uniform[0, 1]`. `T = |R|` with unit rates; groups are singletons.
pub fn balanced_partition(graph: &EdgeListGraph, seed: u64, weight_seed: u64) -> Result<Instance> {
    if graph.n_nodes == 0 {
        return Err(Error::Data("cannot partition an empty graph".into()));
    }
    let mut order: Vec<usize> = (0..graph.n_nodes).collect();
    order.shuffle(&mut stream(derive(seed, tag::PARTITION)));
    let n_left = graph.n_nodes / 2;
    let mut left: Vec<usize> = order[..n_left].to_vec();
    let mut right: Vec<usize> = order[n_left..].to_vec();
    left.sort_unstable();
    right.sort_unstable();
    // side[v] = (is_left, position within its block)
    let mut side = vec![(false, 0); graph.n_nodes];
    for (k, &v) in left.iter().enumerate() {
        side[v] = (true, k);
    }
    for (k, &v) in right.iter().enumerate() {
        side[v] = (false, k);
    }
    let edges = graph
        .edges
        .iter()
        .filter_map(|&(u, v)| match (side[u], side[v]) {
            ((true, i), (false, j)) | ((false, j), (true, i)) => Some((i, j)),
            _ => None,
        })
        .collect();
    let mut wrng = stream(derive(weight_seed, tag::WEIGHTS));
    let weights = (0..left.len()).map(|_| wrng.gen::<f64>()).collect();
    Instance::new(InstanceParts {
        weights,
        rates: vec![1.0; right.len()],
        edges,
        groups: singleton_groups(left.len()),
        horizon: right.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_one_based_ids() {
        let text = "% header\n# another\n1 2\n2 3 0.5\n\n3 1\n3 3\n2 1\n";
        let g = parse_edge_list(text.as_bytes()).unwrap();
        assert_eq!(g.n_nodes, 3);
        assert_eq!(g.edges, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn malformed_line_is_reported() {
        let err = parse_edge_list("1 2\nx y\n".as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn triangle_partition() {
        let g = EdgeListGraph::from_pairs([(0, 1), (1, 2), (0, 2)]);
        let inst = balanced_partition(&g, 3, 4).unwrap();
        assert_eq!(inst.n_offline(), 1);
        assert_eq!(inst.n_online(), 2);
        assert_eq!(inst.horizon(), 2);
        assert!(inst.n_edges() <= 2);
        assert!(inst.weights().iter().all(|w| (0.0..=1.0).contains(w)));
    }

    #[test]
    fn downsample_keeps_induced_edges() {
        let pairs: Vec<_> = (0..50u64).flat_map(|u| (u + 1..50).map(move |v| (u, v))).collect();
        let g = EdgeListGraph::from_pairs(pairs);
        let d = downsample(&g, 10, 1);
        assert_eq!(d.n_nodes, 10);
        assert_eq!(d.edges.len(), 45);
        assert_eq!(downsample(&g, 10, 1), d);
    }
}
