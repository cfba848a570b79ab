//! Daily aggregation of trips into the undirected weighted mobility
//! network G = (V, E, w).
//!
//! Nodes follow the active-node convention: a tract appears only when it is
//! an endpoint of at least one in-county trip that day, which is what makes
//! fractional mean node counts possible across a month. Edge weights sum
//! both directions of travel, the only order-independent choice for an
//! undirected graph.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::date::Date;
use crate::geodata::{GeoPoint, TractIndex};
use crate::graph::UGraph;
use crate::ingest::Trip;

pub type Geoid = String;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: line {line}: {reason}")]
    MalformedRow {
        path: String,
        line: u64,
        reason: String,
    },
}

/// One county-day origin-destination network.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityNetwork {
    pub county_fips: String,
    pub date: Date,
    nodes: BTreeMap<Geoid, GeoPoint>,
    edges: BTreeMap<(Geoid, Geoid), u64>,
}

/// Counters from one build; `inter_tract` is the number of directed trips
/// absorbed into edge weights, so the weight sum equals it exactly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub trips_in: u64,
    pub missing_geoid: u64,
    pub out_of_county: u64,
    pub intra_tract: u64,
    pub inter_tract: u64,
}

impl MobilityNetwork {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Geoids with centroids, lexicographic order.
    pub fn nodes(&self) -> impl Iterator<Item = (&str, GeoPoint)> {
        self.nodes.iter().map(|(g, &c)| (g.as_str(), c))
    }

    pub fn centroid_of(&self, geoid: &str) -> Option<GeoPoint> {
        self.nodes.get(geoid).copied()
    }

    /// Edges with `origin < dest` lexicographically, in that order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.edges
            .iter()
            .map(|((a, b), &w)| (a.as_str(), b.as_str(), w))
    }

    pub fn weight_between(&self, a: &str, b: &str) -> Option<u64> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges
            .get(&(key.0.to_string(), key.1.to_string()))
            .copied()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Dense indexed view for the metric and motif modules. The node order
    /// is the lexicographic geoid order; the second return value maps index
    /// back to geoid, the third holds centroids in the same order.
    pub fn to_graph(&self) -> (UGraph, Vec<Geoid>, Vec<GeoPoint>) {
        let geoids: Vec<Geoid> = self.nodes.keys().cloned().collect();
        let centroids: Vec<GeoPoint> = self.nodes.values().copied().collect();
        let index: BTreeMap<&str, u32> = geoids
            .iter()
            .enumerate()
            .map(|(i, g)| (g.as_str(), i as u32))
            .collect();
        let edges: Vec<(u32, u32, u64)> = self
            .edges
            .iter()
            .map(|((a, b), &w)| (index[a.as_str()], index[b.as_str()], w))
            .collect();
        let graph = UGraph::from_edges(geoids.len(), &edges)
            .expect("network invariants guarantee a valid simple graph");
        (graph, geoids, centroids)
    }
}

/// Aggregates one day of trips into a network. Trips with an unresolved
/// endpoint or an endpoint outside the county's tract index are filtered
/// and counted; intra-tract trips keep their node active but add no edge.
pub fn build_daily_network(
    trips: &[Trip],
    county_fips: &str,
    date: Date,
    idx: &TractIndex,
) -> (MobilityNetwork, BuildStats) {
    let mut stats = BuildStats {
        trips_in: trips.len() as u64,
        ..BuildStats::default()
    };
    let mut nodes: BTreeMap<Geoid, GeoPoint> = BTreeMap::new();
    let mut edges: BTreeMap<(Geoid, Geoid), u64> = BTreeMap::new();

    for trip in trips {
        let (Some(o), Some(d)) = (&trip.origin_geoid, &trip.dest_geoid) else {
            stats.missing_geoid += 1;
            continue;
        };
        let (Some(oc), Some(dc)) = (idx.centroid(o), idx.centroid(d)) else {
            stats.out_of_county += 1;
            continue;
        };
        nodes.entry(o.clone()).or_insert(oc);
        nodes.entry(d.clone()).or_insert(dc);
        if o == d {
            stats.intra_tract += 1;
            continue;
        }
        stats.inter_tract += 1;
        let key = if o < d {
            (o.clone(), d.clone())
        } else {
            (d.clone(), o.clone())
        };
        *edges.entry(key).or_insert(0) += 1;
    }

    (
        MobilityNetwork {
            county_fips: county_fips.to_string(),
            date,
            nodes,
            edges,
        },
        stats,
    )
}

/// Mean node and edge counts over a run of daily networks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeSummary {
    pub mean_nodes: f64,
    pub mean_edges: f64,
}

impl fmt::Display for SizeSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} {:.2}", self.mean_nodes, self.mean_edges)
    }
}

pub fn network_size_summary(networks: &[MobilityNetwork]) -> Option<SizeSummary> {
    if networks.is_empty() {
        return None;
    }
    let n = networks.len() as f64;
    Some(SizeSummary {
        mean_nodes: networks.iter().map(|x| x.node_count() as f64).sum::<f64>() / n,
        mean_edges: networks.iter().map(|x| x.edge_count() as f64).sum::<f64>() / n,
    })
}

// --- serialization -------------------------------------------------------
//
// One delimited file per county-month: date,origin_geoid,dest_geoid,weight
// with origin < dest. The edge list is the payload; a tract active only
// through intra-tract trips is recoverable from the trip store, not from
// this file.

pub const NETWORK_FILE_HEADER: &str = "date,origin_geoid,dest_geoid,weight";

pub fn write_networks<W: Write>(mut w: W, networks: &[MobilityNetwork]) -> std::io::Result<()> {
    writeln!(w, "{NETWORK_FILE_HEADER}")?;
    let mut by_date: Vec<&MobilityNetwork> = networks.iter().collect();
    by_date.sort_by_key(|n| n.date);
    for net in by_date {
        for (a, b, weight) in net.edges() {
            writeln!(w, "{},{a},{b},{weight}", net.date)?;
        }
    }
    Ok(())
}

/// Reads a county-month edge file back into one network per day present.
/// Node centroids are re-attached from the tract index.
pub fn read_networks<R: BufRead>(
    reader: R,
    county_fips: &str,
    idx: &TractIndex,
    path: &str,
) -> Result<Vec<MobilityNetwork>, NetworkError> {
    let mut days: BTreeMap<Date, BTreeMap<(Geoid, Geoid), u64>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.is_empty() {
            continue;
        }
        let err = |reason: String| NetworkError::MalformedRow {
            path: path.to_string(),
            line: i as u64 + 1,
            reason,
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 columns, got {}", f.len())));
        }
        let date: Date = f[0].parse().map_err(|e| err(format!("{e}")))?;
        let weight: u64 = f[3].parse().map_err(|_| err("bad weight".to_string()))?;
        if f[1] >= f[2] {
            return Err(err("origin_geoid must sort before dest_geoid".to_string()));
        }
        days.entry(date)
            .or_default()
            .insert((f[1].to_string(), f[2].to_string()), weight);
    }
    let mut out = Vec::new();
    for (date, edges) in days {
        let mut nodes = BTreeMap::new();
        for (a, b) in edges.keys() {
            for g in [a, b] {
                if let Some(c) = idx.centroid(g) {
                    nodes.insert(g.clone(), c);
                }
            }
        }
        out.push(MobilityNetwork {
            county_fips: county_fips.to_string(),
            date,
            nodes,
            edges,
        });
    }
    Ok(out)
}
