//! Four-node motif census: exhaustive enumeration of connected induced
//! 4-node subgraphs, classification into seven types, and per-type link
//! attribute medians.
//!
//! Six connected isomorphism classes are ordered by descending edge count
//! (complete, diamond, cycle, paw, path, star); type 0 collects every
//! disconnected 4-set and is obtained by subtraction from C(n,4) rather
//! than by scanning all subsets. Enumeration partitions by root node and
//! merges exact integer counters, so results are independent of thread
//! scheduling.

use std::io::{BufRead, Write};
use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::date::Date;
use crate::geodata::{haversine, GeoPoint, TractIndex};
use crate::graph::{AdjBits, UGraph};
use crate::network::MobilityNetwork;

pub const DEFAULT_EXACT_MEDIAN_THRESHOLD: u64 = 10_000_000;
pub const DISTANCE_BIN_M: f64 = 50.0;
pub const VOLUME_BIN: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum MotifError {
    #[error("network too small: {0} nodes, need at least 4")]
    NetworkTooSmall(usize),
    #[error("centroid list has {got} entries for {expected} nodes")]
    CentroidMismatch { expected: usize, got: usize },
    #[error("sample size must be at least 1")]
    BadSampleSize,
    #[error("network node {0} has no centroid in the tract index")]
    MissingCentroid(String),
}

/// The seven motif classes of a 4-node induced subgraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MotifClass {
    /// Type 0: at least one node disconnected from the rest (or a 2+2 split).
    Disconnected = 0,
    /// Type 1: complete K4.
    Complete = 1,
    /// Type 2: K4 minus one edge.
    Diamond = 2,
    /// Type 3: 4-cycle.
    Cycle = 3,
    /// Type 4: triangle with a pendant edge.
    Paw = 4,
    /// Type 5: path on 4 nodes.
    Path = 5,
    /// Type 6: star K1,3 (hub and spokes).
    Star = 6,
}

impl MotifClass {
    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        use MotifClass::*;
        [Disconnected, Complete, Diamond, Cycle, Paw, Path, Star]
            .get(id)
            .copied()
    }

    pub fn is_connected(self) -> bool {
        self != MotifClass::Disconnected
    }
}

/// Pair order for the 6-bit induced-edge mask of a quad `[a, b, c, d]`.
const QUAD_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Lookup from edge mask to class; the mask is permutation-closed because
/// the class depends only on edge count, degree multiset, and connectivity.
static CLASS_TABLE: LazyLock<[MotifClass; 64]> = LazyLock::new(|| {
    let mut table = [MotifClass::Disconnected; 64];
    for (mask, slot) in table.iter_mut().enumerate() {
        *slot = classify_mask(mask as u8);
    }
    table
});

fn classify_mask(mask: u8) -> MotifClass {
    let mut deg = [0u8; 4];
    let mut adj = [[false; 4]; 4];
    let mut edge_count = 0;
    for (bit, &(i, j)) in QUAD_PAIRS.iter().enumerate() {
        if mask & (1 << bit) != 0 {
            deg[i] += 1;
            deg[j] += 1;
            adj[i][j] = true;
            adj[j][i] = true;
            edge_count += 1;
        }
    }
    // Connectivity first: any unreachable node makes the quad type 0.
    let mut seen = [false; 4];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for v in 0..4 {
            if adj[u][v] && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    if seen != [true; 4] {
        return MotifClass::Disconnected;
    }
    let mut d = deg;
    d.sort_unstable();
    match (edge_count, d) {
        (6, _) => MotifClass::Complete,
        (5, _) => MotifClass::Diamond,
        (4, [2, 2, 2, 2]) => MotifClass::Cycle,
        (4, [1, 2, 2, 3]) => MotifClass::Paw,
        (3, [1, 1, 2, 2]) => MotifClass::Path,
        (3, [1, 1, 1, 3]) => MotifClass::Star,
        _ => unreachable!("a connected 4-node graph has 3..=6 edges"),
    }
}

/// Classifies the induced subgraph on four distinct nodes.
pub fn classify_quad(g: &UGraph, quad: [u32; 4]) -> MotifClass {
    let mut mask = 0u8;
    for (bit, &(i, j)) in QUAD_PAIRS.iter().enumerate() {
        if g.has_edge(quad[i], quad[j]) {
            mask |= 1 << bit;
        }
    }
    CLASS_TABLE[mask as usize]
}

#[inline]
fn classify_bits(bits: &AdjBits, quad: [u32; 4]) -> MotifClass {
    let mut mask = 0u8;
    for (b, &(i, j)) in QUAD_PAIRS.iter().enumerate() {
        if bits.test(quad[i], quad[j]) {
            mask |= 1 << b;
        }
    }
    CLASS_TABLE[mask as usize]
}

/// How a census was produced; sampled censuses carry their draw count,
/// which is also the share denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensusMode {
    Exact,
    Sampled { n_samples: u64 },
}

/// Per-type attribute medians; `None` where a type has no quads.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MotifAttributes {
    pub median_avg_distance_m: [Option<f64>; 7],
    pub median_avg_volume: [Option<f64>; 7],
}

/// Counts, shares, and (optionally) attribute medians of the 7 motif types.
///
/// For an exact census the counts sum to C(|V|, 4) and shares divide by it;
/// sampled counts are draw tallies and shares are sample frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifCensus {
    pub counts: [u64; 7],
    pub n_quads_total: u64,
    pub mode: CensusMode,
    pub attributes: Option<MotifAttributes>,
}

impl MotifCensus {
    pub fn share_denominator(&self) -> u64 {
        match self.mode {
            CensusMode::Exact => self.n_quads_total,
            CensusMode::Sampled { n_samples } => n_samples,
        }
    }

    pub fn shares(&self) -> [f64; 7] {
        let d = self.share_denominator() as f64;
        let mut shares = [0.0; 7];
        for (s, &c) in shares.iter_mut().zip(&self.counts) {
            *s = c as f64 / d;
        }
        shares
    }
}

pub fn choose4(n: u64) -> u64 {
    if n < 4 {
        return 0;
    }
    let n = n as u128;
    (n * (n - 1) / 2 * (n - 2) / 3 * (n - 3) / 4) as u64
}

/// Exhaustive census of connected quads via canonical subgraph extension;
/// every connected 4-set is visited exactly once, and the disconnected
/// count falls out of C(n,4) by subtraction.
pub fn motif_census(g: &UGraph) -> Result<MotifCensus, MotifError> {
    let n = g.node_count();
    if n < 4 {
        return Err(MotifError::NetworkTooSmall(n));
    }
    let bits = g.adjacency_bits();
    let counts = (0..n as u32)
        .into_par_iter()
        .fold(
            || [0u64; 7],
            |mut counts, root| {
                for_each_connected_quad(g, root, |quad| {
                    counts[classify_bits(&bits, quad).id()] += 1;
                });
                counts
            },
        )
        .reduce(
            || [0u64; 7],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                a
            },
        );
    let total = choose4(n as u64);
    let connected: u64 = counts[1..].iter().sum();
    let mut counts = counts;
    counts[0] = total - connected;
    Ok(MotifCensus {
        counts,
        n_quads_total: total,
        mode: CensusMode::Exact,
        attributes: None,
    })
}

/// Enumerates every connected induced 4-node subgraph whose smallest node
/// is `root`, visiting each exactly once (Wernicke-style extension with
/// exclusive neighborhoods).
fn for_each_connected_quad(g: &UGraph, root: u32, mut visit: impl FnMut([u32; 4])) {
    let n = g.node_count();
    let mut marked = vec![false; n];
    marked[root as usize] = true;
    let ext1: Vec<u32> = g
        .neighbors(root)
        .iter()
        .copied()
        .filter(|&u| u > root)
        .collect();
    for &u in &ext1 {
        marked[u as usize] = true;
    }

    // Depth 2: subgraph {root, a}.
    let mut ext1 = ext1;
    while let Some(a) = ext1.pop() {
        let mut ext2 = ext1.clone();
        let mut marks2 = Vec::new();
        for &u in g.neighbors(a) {
            if u > root && !marked[u as usize] {
                marked[u as usize] = true;
                marks2.push(u);
                ext2.push(u);
            }
        }

        // Depth 3: subgraph {root, a, b}.
        while let Some(b) = ext2.pop() {
            let mut marks3 = Vec::new();
            // Remaining siblings first, then b's exclusive neighbors.
            for &c in &ext2 {
                visit([root, a, b, c]);
            }
            for &u in g.neighbors(b) {
                if u > root && !marked[u as usize] {
                    marked[u as usize] = true;
                    marks3.push(u);
                    visit([root, a, b, u]);
                }
            }
            for u in marks3 {
                marked[u as usize] = false;
            }
        }

        for u in marks2 {
            marked[u as usize] = false;
        }
    }
}

/// Attribute accumulation regime per type: exact values up to the
/// configured quad threshold, fixed-bin histograms beyond it (bin centers
/// keep the reported median within half a bin of the true one).
#[derive(Debug, Clone)]
pub struct AttributeConfig {
    pub exact_median_threshold: u64,
    pub distance_bin_m: f64,
    pub volume_bin: f64,
}

impl Default for AttributeConfig {
    fn default() -> Self {
        AttributeConfig {
            exact_median_threshold: DEFAULT_EXACT_MEDIAN_THRESHOLD,
            distance_bin_m: DISTANCE_BIN_M,
            volume_bin: VOLUME_BIN,
        }
    }
}

/// Which per-quad volume statistic feeds the median. The reported metric
/// averages the edge weights; the sum variant is kept behind a switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VolumeStat {
    #[default]
    MeanEdgeWeight,
    SumEdgeWeight,
}

#[derive(Clone)]
enum MedianAcc {
    Exact(Vec<f64>),
    Hist {
        bin_width: f64,
        bins: Vec<u64>,
        count: u64,
    },
}

impl MedianAcc {
    fn new(expected: u64, threshold: u64, bin_width: f64) -> Self {
        if expected <= threshold {
            MedianAcc::Exact(Vec::new())
        } else {
            MedianAcc::Hist {
                bin_width,
                bins: Vec::new(),
                count: 0,
            }
        }
    }

    fn push(&mut self, value: f64) {
        match self {
            MedianAcc::Exact(values) => values.push(value),
            MedianAcc::Hist {
                bin_width,
                bins,
                count,
            } => {
                let idx = (value / *bin_width).floor() as usize;
                if idx >= bins.len() {
                    bins.resize(idx + 1, 0);
                }
                bins[idx] += 1;
                *count += 1;
            }
        }
    }

    fn merge(&mut self, other: MedianAcc) {
        match (self, other) {
            (MedianAcc::Exact(a), MedianAcc::Exact(b)) => a.extend(b),
            (
                MedianAcc::Hist {
                    bins: a, count: ca, ..
                },
                MedianAcc::Hist {
                    bins: b, count: cb, ..
                },
            ) => {
                if b.len() > a.len() {
                    a.resize(b.len(), 0);
                }
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                *ca += cb;
            }
            _ => unreachable!("accumulator regimes are fixed per type up front"),
        }
    }

    /// Lower median: the k-th smallest with k = (count-1)/2, zero-based.
    fn lower_median(self) -> Option<f64> {
        match self {
            MedianAcc::Exact(mut values) => {
                if values.is_empty() {
                    return None;
                }
                values.sort_by(f64::total_cmp);
                Some(values[(values.len() - 1) / 2])
            }
            MedianAcc::Hist {
                bin_width,
                bins,
                count,
            } => {
                if count == 0 {
                    return None;
                }
                let k = (count - 1) / 2;
                let mut cum = 0u64;
                for (i, &c) in bins.iter().enumerate() {
                    cum += c;
                    if cum > k {
                        return Some((i as f64 + 0.5) * bin_width);
                    }
                }
                None
            }
        }
    }
}

/// Per-quad link attributes: for each connected quad, the mean over its
/// induced edges of the centroid distance and of the edge weight; the
/// per-type medians of those means. Requires a prior census so each type's
/// accumulation regime is known up front.
pub fn motif_attributes(
    g: &UGraph,
    centroids: &[GeoPoint],
    census: &MotifCensus,
    volume_stat: VolumeStat,
    cfg: &AttributeConfig,
) -> Result<MotifAttributes, MotifError> {
    let n = g.node_count();
    if n < 4 {
        return Err(MotifError::NetworkTooSmall(n));
    }
    if centroids.len() != n {
        return Err(MotifError::CentroidMismatch {
            expected: n,
            got: centroids.len(),
        });
    }
    let bits = g.adjacency_bits();
    // Distances per adjacency slot, computed once per edge direction.
    let dist: Vec<Vec<f64>> = (0..n as u32)
        .map(|u| {
            g.neighbors(u)
                .iter()
                .map(|&v| haversine(centroids[u as usize], centroids[v as usize]))
                .collect()
        })
        .collect();
    let edge_vals = |u: u32, v: u32| -> (f64, u64) {
        let i = g
            .neighbors(u)
            .binary_search(&v)
            .expect("quad edges exist by construction");
        (dist[u as usize][i], g.weight_between(u, v).unwrap())
    };

    let fresh = || -> [(MedianAcc, MedianAcc); 7] {
        std::array::from_fn(|t| {
            let expected = census.counts[t];
            (
                MedianAcc::new(expected, cfg.exact_median_threshold, cfg.distance_bin_m),
                MedianAcc::new(expected, cfg.exact_median_threshold, cfg.volume_bin),
            )
        })
    };

    let merged = (0..n as u32)
        .into_par_iter()
        .fold(fresh, |mut acc, root| {
            for_each_connected_quad(g, root, |quad| {
                let class = classify_bits(&bits, quad);
                let (dist_mean, vol) = quad_attr_values(&bits, quad, &edge_vals, volume_stat);
                acc[class.id()].0.push(dist_mean);
                acc[class.id()].1.push(vol);
            });
            acc
        })
        .reduce(fresh, |mut a, b| {
            for (slot, other) in a.iter_mut().zip(b) {
                slot.0.merge(other.0);
                slot.1.merge(other.1);
            }
            a
        });

    let mut out = MotifAttributes::default();
    for (t, (d_acc, v_acc)) in merged.into_iter().enumerate() {
        if t == 0 {
            continue;
        }
        out.median_avg_distance_m[t] = d_acc.lower_median();
        out.median_avg_volume[t] = v_acc.lower_median();
    }
    Ok(out)
}

fn quad_attr_values(
    bits: &AdjBits,
    quad: [u32; 4],
    edge_vals: &impl Fn(u32, u32) -> (f64, u64),
    volume_stat: VolumeStat,
) -> (f64, f64) {
    // Canonical node order fixes the float accumulation order, so a quad's
    // value never depends on the enumeration path that discovered it.
    let mut quad = quad;
    quad.sort_unstable();
    let mut dist_sum = 0.0;
    let mut vol_sum = 0u64;
    let mut k = 0u32;
    for &(i, j) in &QUAD_PAIRS {
        let (u, v) = (quad[i], quad[j]);
        if bits.test(u, v) {
            let (d, w) = edge_vals(u, v);
            dist_sum += d;
            vol_sum += w;
            k += 1;
        }
    }
    let vol = match volume_stat {
        VolumeStat::MeanEdgeWeight => vol_sum as f64 / f64::from(k),
        VolumeStat::SumEdgeWeight => vol_sum as f64,
    };
    (dist_sum / f64::from(k), vol)
}

/// Census plus attributes for a mobility network, resolving centroids from
/// the tract index.
pub fn motif_census_for_network(
    net: &MobilityNetwork,
    idx: &TractIndex,
    volume_stat: VolumeStat,
    cfg: &AttributeConfig,
) -> Result<MotifCensus, MotifError> {
    let (graph, geoids, _) = net.to_graph();
    let centroids = centroids_from_index(&geoids, idx)?;
    let mut census = motif_census(&graph)?;
    census.attributes = Some(motif_attributes(
        &graph,
        &centroids,
        &census,
        volume_stat,
        cfg,
    )?);
    Ok(census)
}

/// Approximate census from uniform 4-subset draws (with replacement);
/// falls back to the exact census when C(n,4) does not exceed the draw
/// count. Attribute medians come from the sampled connected quads.
pub fn sample_census(
    g: &UGraph,
    centroids: &[GeoPoint],
    n_samples: u64,
    seed: u64,
    volume_stat: VolumeStat,
) -> Result<MotifCensus, MotifError> {
    let n = g.node_count();
    if n < 4 {
        return Err(MotifError::NetworkTooSmall(n));
    }
    if n_samples == 0 {
        return Err(MotifError::BadSampleSize);
    }
    if centroids.len() != n {
        return Err(MotifError::CentroidMismatch {
            expected: n,
            got: centroids.len(),
        });
    }
    let total = choose4(n as u64);
    if total <= n_samples {
        let mut census = motif_census(g)?;
        census.attributes = Some(motif_attributes(
            g,
            centroids,
            &census,
            volume_stat,
            &AttributeConfig::default(),
        )?);
        return Ok(census);
    }

    let bits = g.adjacency_bits();
    let dist: Vec<Vec<f64>> = (0..n as u32)
        .map(|u| {
            g.neighbors(u)
                .iter()
                .map(|&v| haversine(centroids[u as usize], centroids[v as usize]))
                .collect()
        })
        .collect();
    let edge_vals = |u: u32, v: u32| -> (f64, u64) {
        let i = g.neighbors(u).binary_search(&v).unwrap();
        (dist[u as usize][i], g.weight_between(u, v).unwrap())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; 7];
    let mut dist_vals: [Vec<f64>; 7] = Default::default();
    let mut vol_vals: [Vec<f64>; 7] = Default::default();
    for _ in 0..n_samples {
        let quad = draw_distinct4(&mut rng, n as u32);
        let class = classify_bits(&bits, quad);
        counts[class.id()] += 1;
        if class.is_connected() {
            let (d, v) = quad_attr_values(&bits, quad, &edge_vals, volume_stat);
            dist_vals[class.id()].push(d);
            vol_vals[class.id()].push(v);
        }
    }
    let mut attrs = MotifAttributes::default();
    for t in 1..7 {
        attrs.median_avg_distance_m[t] =
            MedianAcc::Exact(std::mem::take(&mut dist_vals[t])).lower_median();
        attrs.median_avg_volume[t] =
            MedianAcc::Exact(std::mem::take(&mut vol_vals[t])).lower_median();
    }
    Ok(MotifCensus {
        counts,
        n_quads_total: total,
        mode: CensusMode::Sampled { n_samples },
        attributes: Some(attrs),
    })
}

/// Sampled census for a mobility network (see [`sample_census`]).
pub fn sample_census_for_network(
    net: &MobilityNetwork,
    idx: &TractIndex,
    n_samples: u64,
    seed: u64,
    volume_stat: VolumeStat,
) -> Result<MotifCensus, MotifError> {
    let (graph, geoids, _) = net.to_graph();
    let centroids = centroids_from_index(&geoids, idx)?;
    sample_census(&graph, &centroids, n_samples, seed, volume_stat)
}

fn centroids_from_index(geoids: &[String], idx: &TractIndex) -> Result<Vec<GeoPoint>, MotifError> {
    geoids
        .iter()
        .map(|g| {
            idx.centroid(g)
                .ok_or_else(|| MotifError::MissingCentroid(g.clone()))
        })
        .collect()
}

fn draw_distinct4(rng: &mut ChaCha8Rng, n: u32) -> [u32; 4] {
    loop {
        let quad = [
            rng.gen_range(0..n),
            rng.gen_range(0..n),
            rng.gen_range(0..n),
            rng.gen_range(0..n),
        ];
        let mut sorted = quad;
        sorted.sort_unstable();
        if sorted[0] != sorted[1] && sorted[1] != sorted[2] && sorted[2] != sorted[3] {
            return quad;
        }
    }
}

/// Trailing moving average over a window of up to 7 days; the first six
/// outputs average whatever came before them (including themselves), so
/// output length equals input length.
pub fn moving_average_7d(values: &[f64]) -> Vec<f64> {
    let wrapped: Vec<Option<f64>> = values.iter().map(|&v| Some(v)).collect();
    moving_average_7d_with_missing(&wrapped)
        .into_iter()
        .map(|v| v.expect("window of present values is never empty"))
        .collect()
}

/// Missing-aware variant: each output averages the present values in its
/// window, `None` when the whole window is missing.
pub fn moving_average_7d_with_missing(values: &[Option<f64>]) -> Vec<Option<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let lo = i.saturating_sub(6);
            let window: Vec<f64> = values[lo..=i].iter().flatten().copied().collect();
            if window.is_empty() {
                None
            } else {
                Some(window.iter().sum::<f64>() / window.len() as f64)
            }
        })
        .collect()
}

// --- motif table file ------------------------------------------------------
//
// Per county and source: date,type,count,share,share_ma7,
// median_avg_distance_m,median_avg_volume with NA for absent values.

pub const MOTIF_FILE_HEADER: &str =
    "date,type,count,share,share_ma7,median_avg_distance_m,median_avg_volume";

#[derive(Debug, Clone, PartialEq)]
pub struct MotifRow {
    pub date: Date,
    pub motif_type: u8,
    pub count: Option<u64>,
    pub share: Option<f64>,
    pub share_ma7: Option<f64>,
    pub median_avg_distance_m: Option<f64>,
    pub median_avg_volume: Option<f64>,
}

/// Flattens a day sequence of censuses (missing days allowed) into table
/// rows, computing the per-type 7-day share moving average across days.
pub fn motif_rows(days: &[(Date, Option<MotifCensus>)]) -> Vec<MotifRow> {
    let mut rows = Vec::with_capacity(days.len() * 7);
    let mut ma_by_type: Vec<Vec<Option<f64>>> = Vec::with_capacity(7);
    for t in 0..7 {
        let series: Vec<Option<f64>> = days
            .iter()
            .map(|(_, census)| census.as_ref().map(|c| c.shares()[t]))
            .collect();
        ma_by_type.push(moving_average_7d_with_missing(&series));
    }
    for (day_idx, (date, census)) in days.iter().enumerate() {
        for t in 0..7u8 {
            let (count, share, dist, vol) = match census {
                Some(c) => (
                    Some(c.counts[t as usize]),
                    Some(c.shares()[t as usize]),
                    c.attributes
                        .as_ref()
                        .and_then(|a| a.median_avg_distance_m[t as usize]),
                    c.attributes
                        .as_ref()
                        .and_then(|a| a.median_avg_volume[t as usize]),
                ),
                None => (None, None, None, None),
            };
            rows.push(MotifRow {
                date: *date,
                motif_type: t,
                count,
                share,
                share_ma7: ma_by_type[t as usize][day_idx],
                median_avg_distance_m: dist,
                median_avg_volume: vol,
            });
        }
    }
    rows
}

pub fn write_motif_rows<W: Write>(mut w: W, rows: &[MotifRow]) -> std::io::Result<()> {
    writeln!(w, "{MOTIF_FILE_HEADER}")?;
    fn opt_f(v: Option<f64>) -> String {
        v.map_or_else(|| "NA".to_string(), |x| x.to_string())
    }
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.date,
            r.motif_type,
            r.count.map_or_else(|| "NA".to_string(), |c| c.to_string()),
            opt_f(r.share),
            opt_f(r.share_ma7),
            opt_f(r.median_avg_distance_m),
            opt_f(r.median_avg_volume),
        )?;
    }
    Ok(())
}

pub fn read_motif_rows<R: BufRead>(reader: R) -> std::io::Result<Vec<MotifRow>> {
    let bad = |line: usize, what: &str| {
        std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("motif table line {line}: {what}"),
        )
    };
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(i + 1, "expected 7 columns"));
        }
        let opt_f = |s: &str| -> Result<Option<f64>, std::io::Error> {
            if s == "NA" {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(i + 1, "bad number"))
            }
        };
        out.push(MotifRow {
            date: f[0].parse().map_err(|_| bad(i + 1, "bad date"))?,
            motif_type: f[1].parse().map_err(|_| bad(i + 1, "bad type"))?,
            count: if f[2] == "NA" {
                None
            } else {
                Some(f[2].parse().map_err(|_| bad(i + 1, "bad count"))?)
            },
            share: opt_f(f[3])?,
            share_ma7: opt_f(f[4])?,
            median_avg_distance_m: opt_f(f[5])?,
            median_avg_volume: opt_f(f[6])?,
        });
    }
    Ok(out)
}
