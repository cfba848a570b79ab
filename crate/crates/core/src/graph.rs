//! Compact undirected weighted graph shared by the metric and motif
//! modules. Nodes are dense `u32` indices; callers keep their own id maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge ({0}, {1}) out of range for {2} nodes")]
    NodeOutOfRange(u32, u32, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(u32),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(u32, u32),
    #[error("edge ({0}, {1}) has zero weight")]
    ZeroWeight(u32, u32),
}

/// Undirected simple graph with positive integer edge weights.
#[derive(Debug, Clone)]
pub struct UGraph {
    n: usize,
    adj: Vec<Vec<u32>>,
    weights: Vec<Vec<u64>>,
    edge_count: usize,
    total_weight: u64,
}

impl UGraph {
    /// Builds from an explicit edge list. Endpoint order within a pair does
    /// not matter; self-loops and repeated pairs are rejected.
    pub fn from_edges(n: usize, edges: &[(u32, u32, u64)]) -> Result<Self, GraphError> {
        let mut adj: Vec<Vec<(u32, u64)>> = vec![Vec::new(); n];
        let mut total_weight = 0u64;
        for &(a, b, w) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(GraphError::NodeOutOfRange(a, b, n));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if w == 0 {
                return Err(GraphError::ZeroWeight(a, b));
            }
            adj[a as usize].push((b, w));
            adj[b as usize].push((a, w));
            total_weight += w;
        }
        let mut sorted_adj = Vec::with_capacity(n);
        let mut sorted_weights = Vec::with_capacity(n);
        for mut row in adj {
            row.sort_unstable_by_key(|&(v, _)| v);
            for pair in row.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(GraphError::DuplicateEdge(pair[0].0, pair[1].0));
                }
            }
            sorted_adj.push(row.iter().map(|&(v, _)| v).collect::<Vec<_>>());
            sorted_weights.push(row.iter().map(|&(_, w)| w).collect::<Vec<_>>());
        }
        Ok(UGraph {
            n,
            adj: sorted_adj,
            weights: sorted_weights,
            edge_count: edges.len(),
            total_weight,
        })
    }

    /// Unit-weight convenience.
    pub fn from_pairs(n: usize, pairs: &[(u32, u32)]) -> Result<Self, GraphError> {
        let weighted: Vec<(u32, u32, u64)> = pairs.iter().map(|&(a, b)| (a, b, 1)).collect();
        Self::from_edges(n, &weighted)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn degree(&self, u: u32) -> usize {
        self.adj[u as usize].len()
    }

    /// Weighted degree (strength) of `u`.
    pub fn strength(&self, u: u32) -> u64 {
        self.weights[u as usize].iter().sum()
    }

    /// Neighbors of `u` in ascending index order.
    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.adj[u as usize]
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    pub fn weight_between(&self, u: u32, v: u32) -> Option<u64> {
        let i = self.adj[u as usize].binary_search(&v).ok()?;
        Some(self.weights[u as usize][i])
    }

    /// Every edge once, with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, u64)> + '_ {
        (0..self.n as u32).flat_map(move |u| {
            self.adj[u as usize]
                .iter()
                .zip(&self.weights[u as usize])
                .filter(move |&(&v, _)| u < v)
                .map(move |(&v, &w)| (u, v, w))
        })
    }

    /// Row-per-node adjacency bitset for O(1) edge tests.
    pub fn adjacency_bits(&self) -> AdjBits {
        let words = self.n.div_ceil(64);
        let mut bits = vec![0u64; words * self.n];
        for (u, row) in self.adj.iter().enumerate() {
            for &v in row {
                bits[u * words + (v as usize >> 6)] |= 1u64 << (v & 63);
            }
        }
        AdjBits { words, bits }
    }

    /// Component id per node; ids are assigned in order of the smallest
    /// node index in each component.
    pub fn components(&self) -> Vec<u32> {
        let mut comp = vec![u32::MAX; self.n];
        let mut next = 0u32;
        let mut queue = std::collections::VecDeque::new();
        for start in 0..self.n as u32 {
            if comp[start as usize] != u32::MAX {
                continue;
            }
            comp[start as usize] = next;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if comp[v as usize] == u32::MAX {
                        comp[v as usize] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Node indices of the largest connected component, smallest component
    /// id winning ties. Empty graph gives an empty slice.
    pub fn largest_component(&self) -> Vec<u32> {
        let comp = self.components();
        let mut sizes: Vec<usize> = Vec::new();
        for &c in &comp {
            let c = c as usize;
            if c >= sizes.len() {
                sizes.resize(c + 1, 0);
            }
            sizes[c] += 1;
        }
        let Some((best, _)) = sizes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        else {
            return Vec::new();
        };
        (0..self.n as u32)
            .filter(|&u| comp[u as usize] as usize == best)
            .collect()
    }
}

/// Flat adjacency bitset; `words` is the stride per node row.
pub struct AdjBits {
    words: usize,
    bits: Vec<u64>,
}

impl AdjBits {
    #[inline]
    pub fn test(&self, u: u32, v: u32) -> bool {
        self.bits[u as usize * self.words + (v as usize >> 6)] & (1u64 << (v & 63)) != 0
    }
}

/// Seeded graph generators used by tests and scale checks.
pub mod gen {
    use super::*;
    use std::collections::BTreeSet;

    /// Uniform random graph with exactly `m` distinct edges.
    pub fn gnm_edges(n: usize, m: usize, seed: u64) -> Vec<(u32, u32)> {
        assert!(n >= 2, "need at least two nodes");
        let max_edges = n * (n - 1) / 2;
        assert!(m <= max_edges, "requested {m} edges, max is {max_edges}");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked: BTreeSet<(u32, u32)> = BTreeSet::new();
        while picked.len() < m {
            let a = rng.gen_range(0..n as u32);
            let b = rng.gen_range(0..n as u32);
            if a != b {
                picked.insert((a.min(b), a.max(b)));
            }
        }
        picked.into_iter().collect()
    }

    /// Erdos-Renyi G(n, p).
    pub fn gnp_edges(n: usize, p: f64, seed: u64) -> Vec<(u32, u32)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                if rng.gen::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        edges
    }
}
