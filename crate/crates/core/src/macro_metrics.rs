//! Global (macroscopic) characteristics of a daily mobility network.
//!
//! Shortest paths, diameter, and clustering are unweighted; paths are
//! restricted to the largest connected component so values stay comparable
//! across sources with very different volumes. Degenerate cases come back
//! as `None` (rendered "NA" downstream) rather than a silent zero.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::date::Date;
use crate::graph::UGraph;
use crate::network::MobilityNetwork;

/// One day's battery of global metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroRecord {
    pub date: Date,
    pub avg_degree: Option<f64>,
    pub avg_clustering: Option<f64>,
    pub avg_shortest_path: Option<f64>,
    pub assortativity: Option<f64>,
    pub modularity: Option<f64>,
    pub density: Option<f64>,
    pub diameter: Option<u32>,
    pub giant_component_size: usize,
}

/// Metric names in the order records serialize, one series file each.
pub const MACRO_METRIC_NAMES: [&str; 8] = [
    "avg_degree",
    "avg_clustering",
    "avg_shortest_path",
    "assortativity",
    "modularity",
    "density",
    "diameter",
    "giant_component_size",
];

impl MacroRecord {
    /// Values aligned with [`MACRO_METRIC_NAMES`].
    pub fn values(&self) -> [Option<f64>; 8] {
        [
            self.avg_degree,
            self.avg_clustering,
            self.avg_shortest_path,
            self.assortativity,
            self.modularity,
            self.density,
            self.diameter.map(f64::from),
            Some(self.giant_component_size as f64),
        ]
    }
}

/// Computes the full record for one network day.
pub fn macro_record(net: &MobilityNetwork) -> MacroRecord {
    let (graph, _, _) = net.to_graph();
    let paths = path_stats(&graph);
    MacroRecord {
        date: net.date,
        avg_degree: average_degree(&graph),
        avg_clustering: average_clustering(&graph),
        avg_shortest_path: paths.as_ref().and_then(|p| p.aspl),
        assortativity: assortativity(&graph),
        modularity: modularity(&graph).map(|(_, q)| q),
        density: density(&graph),
        diameter: paths.as_ref().and_then(|p| p.diameter),
        giant_component_size: giant_component_size(&graph),
    }
}

/// 2|E| / |V|; `None` on an empty network.
pub fn average_degree(g: &UGraph) -> Option<f64> {
    if g.node_count() == 0 {
        return None;
    }
    Some(2.0 * g.edge_count() as f64 / g.node_count() as f64)
}

/// Mean local clustering coefficient, unweighted; degree-<2 nodes
/// contribute 0. `None` on an empty network.
pub fn average_clustering(g: &UGraph) -> Option<f64> {
    let n = g.node_count();
    if n == 0 {
        return None;
    }
    let bits = g.adjacency_bits();
    let per_node: Vec<f64> = (0..n as u32)
        .into_par_iter()
        .map(|v| {
            let nbrs = g.neighbors(v);
            let d = nbrs.len();
            if d < 2 {
                return 0.0;
            }
            let mut tri = 0u64;
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    if bits.test(a, b) {
                        tri += 1;
                    }
                }
            }
            2.0 * tri as f64 / (d as f64 * (d as f64 - 1.0))
        })
        .collect();
    Some(per_node.iter().sum::<f64>() / n as f64)
}

/// Degree correlation across edge endpoints (edges listed in both
/// orientations). `None` when there are no edges or all endpoint degrees
/// are equal.
pub fn assortativity(g: &UGraph) -> Option<f64> {
    if g.edge_count() == 0 {
        return None;
    }
    // Integer accumulation keeps the result independent of edge order.
    let mut s_x: i128 = 0;
    let mut s_xx: i128 = 0;
    let mut s_xy: i128 = 0;
    let mut n_pts: i128 = 0;
    for (u, v, _) in g.edges() {
        let du = g.degree(u) as i128;
        let dv = g.degree(v) as i128;
        s_x += du + dv;
        s_xx += du * du + dv * dv;
        s_xy += 2 * du * dv;
        n_pts += 2;
    }
    let num = n_pts * s_xy - s_x * s_x;
    let den = n_pts * s_xx - s_x * s_x;
    if den == 0 {
        return None;
    }
    Some(num as f64 / den as f64)
}

/// 2|E| / (|V| (|V|-1)); `None` below two nodes.
pub fn density(g: &UGraph) -> Option<f64> {
    let n = g.node_count();
    if n < 2 {
        return None;
    }
    Some(2.0 * g.edge_count() as f64 / (n as f64 * (n as f64 - 1.0)))
}

pub fn giant_component_size(g: &UGraph) -> usize {
    g.largest_component().len()
}

/// Unweighted mean hop distance over ordered node pairs of the largest
/// component. `None` when that component has fewer than two nodes.
pub fn average_shortest_path(g: &UGraph) -> Option<f64> {
    path_stats(g)?.aspl
}

/// Max eccentricity within the largest component, `None` below two nodes.
pub fn diameter(g: &UGraph) -> Option<u32> {
    path_stats(g)?.diameter
}

struct PathStats {
    aspl: Option<f64>,
    diameter: Option<u32>,
}

/// One BFS sweep over the largest component covering both path metrics.
/// Distance sums are exact integers, so the parallel merge is
/// order-independent.
fn path_stats(g: &UGraph) -> Option<PathStats> {
    let members = g.largest_component();
    let k = members.len();
    if k < 2 {
        return Some(PathStats {
            aspl: None,
            diameter: None,
        });
    }
    let per_source: Vec<(u64, u32)> = members
        .par_iter()
        .map(|&src| {
            let mut dist = vec![u32::MAX; g.node_count()];
            let mut queue = VecDeque::new();
            dist[src as usize] = 0;
            queue.push_back(src);
            let mut sum = 0u64;
            let mut ecc = 0u32;
            while let Some(u) = queue.pop_front() {
                let du = dist[u as usize];
                sum += u64::from(du);
                ecc = ecc.max(du);
                for &v in g.neighbors(u) {
                    if dist[v as usize] == u32::MAX {
                        dist[v as usize] = du + 1;
                        queue.push_back(v);
                    }
                }
            }
            (sum, ecc)
        })
        .collect();
    let total: u64 = per_source.iter().map(|&(s, _)| s).sum();
    let diameter = per_source.iter().map(|&(_, e)| e).max().unwrap();
    Some(PathStats {
        aspl: Some(total as f64 / (k as f64 * (k as f64 - 1.0))),
        diameter: Some(diameter),
    })
}

// --- greedy modularity ----------------------------------------------------

#[derive(Debug)]
struct MergeCandidate {
    dq: f64,
    a: u32,
    b: u32,
    version_a: u64,
    version_b: u64,
}

impl PartialEq for MergeCandidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for MergeCandidate {}

impl PartialOrd for MergeCandidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MergeCandidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: larger gain first, then the smaller community-id pair.
        self.dq
            .total_cmp(&other.dq)
            .then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

/// Deterministic greedy agglomerative modularity maximization on the
/// weighted graph (merge the connected community pair with the largest
/// gain, ties to the smallest id pair, stop when no gain is positive).
///
/// Returns the node-to-community assignment (labels renumbered by first
/// appearance over node index) and its weighted Newman modularity.
/// `None` when the graph has no edges.
pub fn modularity(g: &UGraph) -> Option<(Vec<u32>, f64)> {
    let n = g.node_count();
    if g.edge_count() == 0 {
        return None;
    }
    let m = g.total_weight() as f64;

    let mut alive = vec![true; n];
    let mut version = vec![0u64; n];
    let mut sum_tot: Vec<u64> = (0..n as u32).map(|u| g.strength(u)).collect();
    let mut internal: Vec<u64> = vec![0; n];
    let mut members: Vec<Vec<u32>> = (0..n as u32).map(|u| vec![u]).collect();
    let mut links: Vec<BTreeMap<u32, u64>> = vec![BTreeMap::new(); n];
    for (u, v, w) in g.edges() {
        links[u as usize].insert(v, w);
        links[v as usize].insert(u, w);
    }

    let gain = |w_ab: u64, tot_a: u64, tot_b: u64| -> f64 {
        w_ab as f64 / m - (tot_a as f64 * tot_b as f64) / (2.0 * m * m)
    };

    let mut heap: BinaryHeap<MergeCandidate> = BinaryHeap::new();
    for (u, v, w) in g.edges() {
        heap.push(MergeCandidate {
            dq: gain(w, sum_tot[u as usize], sum_tot[v as usize]),
            a: u,
            b: v,
            version_a: 0,
            version_b: 0,
        });
    }

    while let Some(cand) = heap.pop() {
        let (a, b) = (cand.a as usize, cand.b as usize);
        if !alive[a] || !alive[b] || version[a] != cand.version_a || version[b] != cand.version_b {
            continue;
        }
        if cand.dq <= 0.0 {
            break;
        }
        // Merge b into a (a < b by construction of candidates).
        alive[b] = false;
        version[a] += 1;
        let w_ab = links[a].remove(&(cand.b)).unwrap_or(0);
        links[b].remove(&cand.a);
        internal[a] += internal[b] + w_ab;
        sum_tot[a] += sum_tot[b];
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);

        let b_links = std::mem::take(&mut links[b]);
        for (x, w_bx) in b_links {
            let xi = x as usize;
            links[xi].remove(&cand.b);
            *links[a].entry(x).or_insert(0) += w_bx;
            let back = links[a][&x];
            links[xi].insert(cand.a, back);
        }
        // Refresh candidates for every pair touching the merged community.
        let neighbor_list: Vec<(u32, u64)> = links[a].iter().map(|(&x, &w)| (x, w)).collect();
        for (x, w_ax) in neighbor_list {
            let (lo, hi) = if cand.a < x { (cand.a, x) } else { (x, cand.a) };
            heap.push(MergeCandidate {
                dq: gain(w_ax, sum_tot[a], sum_tot[x as usize]),
                a: lo,
                b: hi,
                version_a: version[lo as usize],
                version_b: version[hi as usize],
            });
        }
    }

    let mut q = 0.0;
    for c in 0..n {
        if !alive[c] {
            continue;
        }
        let tot = sum_tot[c] as f64 / (2.0 * m);
        q += internal[c] as f64 / m - tot * tot;
    }

    if q < 0.0 {
        // Greedy stalled below the trivial partition; return that instead.
        return Some((vec![0; n], 0.0));
    }

    let mut assignment = vec![u32::MAX; n];
    for c in 0..n {
        if alive[c] {
            for &node in &members[c] {
                assignment[node as usize] = c as u32;
            }
        }
    }
    // Renumber labels by first appearance over node index.
    let mut relabel: BTreeMap<u32, u32> = BTreeMap::new();
    let mut next = 0u32;
    for label in &mut assignment {
        let new = *relabel.entry(*label).or_insert_with(|| {
            let v = next;
            next += 1;
            v
        });
        *label = new;
    }
    Some((assignment, q))
}

/// Weighted Newman modularity of an explicit partition; the oracle-facing
/// half of the modularity pair.
pub fn modularity_of_partition(g: &UGraph, assignment: &[u32]) -> f64 {
    let m = g.total_weight() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let n_comms = assignment
        .iter()
        .copied()
        .max()
        .map_or(0, |c| c as usize + 1);
    let mut internal = vec![0u64; n_comms];
    let mut sum_tot = vec![0u64; n_comms];
    for u in 0..g.node_count() as u32 {
        sum_tot[assignment[u as usize] as usize] += g.strength(u);
    }
    for (u, v, w) in g.edges() {
        if assignment[u as usize] == assignment[v as usize] {
            internal[assignment[u as usize] as usize] += w;
        }
    }
    (0..n_comms)
        .map(|c| {
            let tot = sum_tot[c] as f64 / (2.0 * m);
            internal[c] as f64 / m - tot * tot
        })
        .sum()
}

// --- series files ---------------------------------------------------------
//
// One file per (county, metric): date,value with NA for undefined days.

pub const SERIES_FILE_HEADER: &str = "date,value";

pub fn write_series<W: Write>(mut w: W, series: &[(Date, Option<f64>)]) -> std::io::Result<()> {
    writeln!(w, "{SERIES_FILE_HEADER}")?;
    for (date, value) in series {
        match value {
            Some(v) => writeln!(w, "{date},{v}")?,
            None => writeln!(w, "{date},NA")?,
        }
    }
    Ok(())
}

pub fn read_series<R: BufRead>(reader: R) -> std::io::Result<Vec<(Date, Option<f64>)>> {
    let bad = |line: usize, what: &str| {
        std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("series line {line}: {what}"),
        )
    };
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.is_empty() {
            continue;
        }
        let (date_s, value_s) = line
            .split_once(',')
            .ok_or_else(|| bad(i + 1, "expected 2 columns"))?;
        let date: Date = date_s.parse().map_err(|_| bad(i + 1, "bad date"))?;
        let value = if value_s == "NA" {
            None
        } else {
            Some(value_s.parse().map_err(|_| bad(i + 1, "bad value"))?)
        };
        out.push((date, value));
    }
    Ok(out)
}
