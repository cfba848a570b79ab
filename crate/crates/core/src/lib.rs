//! Construction and multi-scale analysis of daily human-mobility networks.
//!
//! The pipeline goes raw location pings -> stops -> trips -> one undirected
//! weighted origin-destination network per county-day, then computes metric
//! batteries at three scales (global network measures, a four-node motif
//! census with link attributes, per-tract daily mobility measures) and
//! quantifies cross-source agreement of the resulting time series.

pub mod date;
pub mod geodata;
pub mod graph;
pub mod ingest;
pub mod macro_metrics;
pub mod micro_metrics;
pub mod motifs;
pub mod network;
pub mod similarity;
pub mod synth;

pub use date::Date;
pub use geodata::{GeoPoint, TractIndex};
pub use graph::UGraph;
pub use network::MobilityNetwork;
