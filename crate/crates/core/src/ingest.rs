//! Raw ping parsing, staypoint detection, and trip derivation.
//!
//! Every operation here is a pure function of one device's data, so the
//! pipeline can fan out across devices freely.

use std::io::{BufRead, BufReader, Read, Write};

use thiserror::Error;

use crate::geodata::{haversine, GeoPoint, TractIndex};

pub const DEFAULT_STOP_RADIUS_M: f64 = 100.0;
pub const DEFAULT_MIN_DWELL_S: i64 = 300;

/// How many malformed rows keep their full diagnostic text; the count is
/// always exact.
const MAX_ROW_DIAGNOSTICS: usize = 100;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("pings not sorted by time at index {0}")]
    UnsortedPings(usize),
    #[error("pings from more than one device (saw {0:?} and {1:?})")]
    MixedDevices(String, String),
    #[error("min_dwell_s must be at least 1, got {0}")]
    BadDwell(i64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: line {line}: {reason}")]
    MalformedStoreRow {
        path: String,
        line: u64,
        reason: String,
    },
}

/// One raw device observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Ping {
    pub device_id: String,
    pub t: i64,
    pub pos: GeoPoint,
}

/// A detected dwell: the device stayed within the stop radius for at least
/// the minimum dwell time. Position is the medoid of the member pings.
#[derive(Debug, Clone, PartialEq)]
pub struct Stop {
    pub device_id: String,
    pub t_start: i64,
    pub t_end: i64,
    pub pos: GeoPoint,
    pub geoid: Option<String>,
}

/// Movement between two consecutive stops. Duration runs from leaving the
/// origin to arriving at the destination, so dwell time at both endpoints
/// is excluded by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub device_id: String,
    pub origin_geoid: Option<String>,
    pub dest_geoid: Option<String>,
    pub origin_pos: GeoPoint,
    pub dest_pos: GeoPoint,
    pub depart_t: i64,
    pub arrive_t: i64,
    pub distance_m: f64,
}

impl Trip {
    pub fn duration_s(&self) -> i64 {
        self.arrive_t - self.depart_t
    }

    /// True when both endpoints resolved to the same tract.
    pub fn is_intra_tract(&self) -> bool {
        match (&self.origin_geoid, &self.dest_geoid) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowDiagnostic {
    pub line: u64,
    pub reason: String,
}

/// Parse outcome: rows in = accepted + rejected (a recognized header line
/// is counted in neither).
#[derive(Debug, Default)]
pub struct PingParse {
    pub pings: Vec<Ping>,
    pub accepted: u64,
    pub rejected: u64,
    pub diagnostics: Vec<RowDiagnostic>,
}

/// Parses delimited ping text: `device_id,timestamp,lat,lon`, header
/// optional, extra trailing columns ignored. Valid rows come out in input
/// order; malformed rows are rejected with their line number.
pub fn parse_pings<R: BufRead>(reader: R) -> Result<PingParse, IngestError> {
    let mut out = PingParse::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i as u64 + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if i == 0 && is_header(&fields) {
            continue;
        }
        match parse_row(&fields) {
            Ok(ping) => {
                out.pings.push(ping);
                out.accepted += 1;
            }
            Err(reason) => {
                out.rejected += 1;
                if out.diagnostics.len() < MAX_ROW_DIAGNOSTICS {
                    out.diagnostics.push(RowDiagnostic {
                        line: line_no,
                        reason,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn is_header(fields: &[&str]) -> bool {
    fields.len() >= 4
        && fields[0].trim().eq_ignore_ascii_case("device_id")
        && fields[1].trim().eq_ignore_ascii_case("timestamp")
        && fields[2].trim().eq_ignore_ascii_case("lat")
        && fields[3].trim().eq_ignore_ascii_case("lon")
}

fn parse_row(fields: &[&str]) -> Result<Ping, String> {
    if fields.len() < 4 {
        return Err(format!("expected 4 columns, got {}", fields.len()));
    }
    let device_id = fields[0].trim();
    if device_id.is_empty() {
        return Err("empty device_id".to_string());
    }
    let t: i64 = fields[1]
        .trim()
        .parse()
        .map_err(|_| format!("non-numeric timestamp {:?}", fields[1]))?;
    if t < 0 {
        return Err(format!("negative timestamp {t}"));
    }
    let lat: f64 = fields[2]
        .trim()
        .parse()
        .map_err(|_| format!("non-numeric lat {:?}", fields[2]))?;
    let lon: f64 = fields[3]
        .trim()
        .parse()
        .map_err(|_| format!("non-numeric lon {:?}", fields[3]))?;
    let pos = GeoPoint::new(lat, lon)
        .ok_or_else(|| format!("coordinates out of range ({lat}, {lon})"))?;
    Ok(Ping {
        device_id: device_id.to_string(),
        t,
        pos,
    })
}

/// Reads a ping file, transparently inflating gzip (sniffed by magic bytes).
pub fn read_ping_file(path: &std::path::Path) -> Result<PingParse, IngestError> {
    let mut file = std::fs::File::open(path)?;
    let mut magic = [0u8; 2];
    let n = file.read(&mut magic)?;
    use std::io::Seek;
    file.seek(std::io::SeekFrom::Start(0))?;
    if n == 2 && magic == [0x1f, 0x8b] {
        parse_pings(BufReader::new(flate2::read::GzDecoder::new(file)))
    } else {
        parse_pings(BufReader::new(file))
    }
}

/// Greedy sequential staypoint detection over one device's time-sorted
/// pings.
///
/// A cluster grows while each new ping lies within `radius_m` of the
/// cluster's first ping (the anchor). Once growth stops, the cluster
/// becomes a [`Stop`] if its time span reaches `min_dwell_s`; otherwise the
/// anchor advances by one ping. Consecutive stops never overlap in time.
pub fn detect_stops(
    pings: &[Ping],
    radius_m: f64,
    min_dwell_s: i64,
) -> Result<Vec<Stop>, IngestError> {
    if min_dwell_s < 1 {
        return Err(IngestError::BadDwell(min_dwell_s));
    }
    for (i, pair) in pings.windows(2).enumerate() {
        if pair[1].t < pair[0].t {
            return Err(IngestError::UnsortedPings(i + 1));
        }
        if pair[1].device_id != pair[0].device_id {
            return Err(IngestError::MixedDevices(
                pair[0].device_id.clone(),
                pair[1].device_id.clone(),
            ));
        }
    }

    let mut stops = Vec::new();
    let mut i = 0;
    while i < pings.len() {
        let anchor = pings[i].pos;
        let mut j = i + 1;
        while j < pings.len() && haversine(pings[j].pos, anchor) <= radius_m {
            j += 1;
        }
        let span = pings[j - 1].t - pings[i].t;
        if span >= min_dwell_s {
            stops.push(Stop {
                device_id: pings[i].device_id.clone(),
                t_start: pings[i].t,
                t_end: pings[j - 1].t,
                pos: medoid(&pings[i..j]),
                geoid: None,
            });
            i = j;
        } else {
            i += 1;
        }
    }
    Ok(stops)
}

/// Member ping minimizing summed distance to the other members; earliest
/// member wins ties. Always a really observed location, robust to the odd
/// GPS outlier.
fn medoid(cluster: &[Ping]) -> GeoPoint {
    let mut best = 0;
    let mut best_sum = f64::INFINITY;
    for (i, p) in cluster.iter().enumerate() {
        let sum: f64 = cluster.iter().map(|q| haversine(p.pos, q.pos)).sum();
        if sum < best_sum {
            best_sum = sum;
            best = i;
        }
    }
    cluster[best].pos
}

/// Fills `geoid` on each stop via point-in-polygon lookup.
pub fn assign_geoids(stops: &mut [Stop], idx: &TractIndex) {
    for stop in stops {
        stop.geoid = idx.locate(stop.pos).map(str::to_string);
    }
}

/// Pairs consecutive stops into trips. Trips whose endpoints BOTH lack a
/// tract id are dropped and counted; a single resolvable endpoint is enough
/// to keep the trip.
pub fn extract_trips(stops: &[Stop]) -> (Vec<Trip>, u64) {
    let mut trips = Vec::new();
    let mut dropped = 0u64;
    for pair in stops.windows(2) {
        let (origin, dest) = (&pair[0], &pair[1]);
        debug_assert!(dest.t_start >= origin.t_end, "stops overlap in time");
        if origin.geoid.is_none() && dest.geoid.is_none() {
            dropped += 1;
            continue;
        }
        trips.push(Trip {
            device_id: origin.device_id.clone(),
            origin_geoid: origin.geoid.clone(),
            dest_geoid: dest.geoid.clone(),
            origin_pos: origin.pos,
            dest_pos: dest.pos,
            depart_t: origin.t_end,
            arrive_t: dest.t_start,
            distance_m: haversine(origin.pos, dest.pos),
        });
    }
    (trips, dropped)
}

// --- flat stores ---------------------------------------------------------
//
// Stops and trips persist as delimited text, one file per (source, county,
// date). Floats use shortest round-trip formatting so parse(serialize(x))
// is exact.

pub const STOP_STORE_HEADER: &str = "device_id,t_start,t_end,lat,lon,geoid";
pub const TRIP_STORE_HEADER: &str =
    "device_id,o_geoid,d_geoid,o_lat,o_lon,d_lat,d_lon,depart_t,arrive_t,distance_m";

pub fn write_stops<W: Write>(mut w: W, stops: &[Stop]) -> std::io::Result<()> {
    writeln!(w, "{STOP_STORE_HEADER}")?;
    for s in stops {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.device_id,
            s.t_start,
            s.t_end,
            s.pos.lat,
            s.pos.lon,
            s.geoid.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}

pub fn read_stops<R: BufRead>(reader: R, path: &str) -> Result<Vec<Stop>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let err = |reason: &str| IngestError::MalformedStoreRow {
            path: path.to_string(),
            line: i as u64 + 1,
            reason: reason.to_string(),
        };
        if f.len() != 6 {
            return Err(err("expected 6 columns"));
        }
        let pos = GeoPoint::new(
            f[3].parse().map_err(|_| err("bad lat"))?,
            f[4].parse().map_err(|_| err("bad lon"))?,
        )
        .ok_or_else(|| err("coordinates out of range"))?;
        out.push(Stop {
            device_id: f[0].to_string(),
            t_start: f[1].parse().map_err(|_| err("bad t_start"))?,
            t_end: f[2].parse().map_err(|_| err("bad t_end"))?,
            pos,
            geoid: if f[5].is_empty() {
                None
            } else {
                Some(f[5].to_string())
            },
        });
    }
    Ok(out)
}

pub fn write_trips<W: Write>(mut w: W, trips: &[Trip]) -> std::io::Result<()> {
    writeln!(w, "{TRIP_STORE_HEADER}")?;
    for t in trips {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            t.device_id,
            t.origin_geoid.as_deref().unwrap_or(""),
            t.dest_geoid.as_deref().unwrap_or(""),
            t.origin_pos.lat,
            t.origin_pos.lon,
            t.dest_pos.lat,
            t.dest_pos.lon,
            t.depart_t,
            t.arrive_t,
            t.distance_m
        )?;
    }
    Ok(())
}

pub fn read_trips<R: BufRead>(reader: R, path: &str) -> Result<Vec<Trip>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let err = |reason: &str| IngestError::MalformedStoreRow {
            path: path.to_string(),
            line: i as u64 + 1,
            reason: reason.to_string(),
        };
        if f.len() != 10 {
            return Err(err("expected 10 columns"));
        }
        let opt = |s: &str| {
            if s.is_empty() {
                None
            } else {
                Some(s.to_string())
            }
        };
        let origin_pos = GeoPoint::new(
            f[3].parse().map_err(|_| err("bad o_lat"))?,
            f[4].parse().map_err(|_| err("bad o_lon"))?,
        )
        .ok_or_else(|| err("origin out of range"))?;
        let dest_pos = GeoPoint::new(
            f[5].parse().map_err(|_| err("bad d_lat"))?,
            f[6].parse().map_err(|_| err("bad d_lon"))?,
        )
        .ok_or_else(|| err("dest out of range"))?;
        out.push(Trip {
            device_id: f[0].to_string(),
            origin_geoid: opt(f[1]),
            dest_geoid: opt(f[2]),
            origin_pos,
            dest_pos,
            depart_t: f[7].parse().map_err(|_| err("bad depart_t"))?,
            arrive_t: f[8].parse().map_err(|_| err("bad arrive_t"))?,
            distance_m: f[9].parse().map_err(|_| err("bad distance_m"))?,
        });
    }
    Ok(out)
}
