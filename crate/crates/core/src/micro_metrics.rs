//! Per-census-tract daily mobility metrics and the descending rank vectors
//! the cosine comparison consumes.
//!
//! Trip frequency is normalized by distinct devices so the metric survives
//! penetration differences between providers; the raw trip count is
//! emitted alongside it.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use crate::date::Date;
use crate::geodata::{haversine, GeoPoint};
use crate::ingest::{Stop, Trip};

/// One tract-day record. Absent entirely (not zeroed) when no trip touched
/// the tract that day.
#[derive(Debug, Clone, PartialEq)]
pub struct TractDayMetrics {
    pub geoid: String,
    pub date: Date,
    pub device_count: u64,
    /// Raw count of trips starting or ending in the tract.
    pub trip_count: u64,
    /// trip_count / device_count.
    pub avg_trip_count: f64,
    pub avg_distance_m: f64,
    pub avg_travel_time_s: f64,
    pub avg_radius_of_gyration_m: f64,
}

pub const MICRO_METRIC_NAMES: [&str; 4] = [
    "avg_trip_count",
    "avg_distance_m",
    "avg_travel_time_s",
    "avg_rog_m",
];

impl TractDayMetrics {
    /// Values aligned with [`MICRO_METRIC_NAMES`].
    pub fn metric_values(&self) -> [f64; 4] {
        [
            self.avg_trip_count,
            self.avg_distance_m,
            self.avg_travel_time_s,
            self.avg_radius_of_gyration_m,
        ]
    }
}

/// Root-mean-square haversine distance of the positions from their
/// coordinate mean. A single position (or none) spreads zero.
pub fn radius_of_gyration(positions: &[GeoPoint]) -> f64 {
    if positions.len() < 2 {
        return 0.0;
    }
    let n = positions.len() as f64;
    let center = GeoPoint {
        lat: positions.iter().map(|p| p.lat).sum::<f64>() / n,
        lon: positions.iter().map(|p| p.lon).sum::<f64>() / n,
    };
    let sum_sq: f64 = positions
        .iter()
        .map(|&p| {
            let d = haversine(p, center);
            d * d
        })
        .sum();
    (sum_sq / n).sqrt()
}

/// Metrics for one tract over one day's trips and stops (both already
/// restricted to the date). Trips qualify when they start or end in the
/// tract; the radius of gyration averages each contributing device's
/// full-day stop positions. `None` when no trip touches the tract.
pub fn tract_day_metrics(
    trips: &[Trip],
    stops: &[Stop],
    geoid: &str,
    date: Date,
) -> Option<TractDayMetrics> {
    let filtered: Vec<&Trip> = trips
        .iter()
        .filter(|t| {
            t.origin_geoid.as_deref() == Some(geoid) || t.dest_geoid.as_deref() == Some(geoid)
        })
        .collect();
    if filtered.is_empty() {
        return None;
    }
    let devices: BTreeSet<&str> = filtered.iter().map(|t| t.device_id.as_str()).collect();
    let trip_count = filtered.len() as u64;
    let avg_distance_m = filtered.iter().map(|t| t.distance_m).sum::<f64>() / trip_count as f64;
    let avg_travel_time_s =
        filtered.iter().map(|t| t.duration_s() as f64).sum::<f64>() / trip_count as f64;

    let mut stops_by_device: BTreeMap<&str, Vec<GeoPoint>> = BTreeMap::new();
    for s in stops {
        if devices.contains(s.device_id.as_str()) {
            stops_by_device.entry(&s.device_id).or_default().push(s.pos);
        }
    }
    let rogs: Vec<f64> = stops_by_device
        .values()
        .map(|positions| radius_of_gyration(positions))
        .collect();
    let avg_radius_of_gyration_m = if rogs.is_empty() {
        0.0
    } else {
        rogs.iter().sum::<f64>() / rogs.len() as f64
    };

    Some(TractDayMetrics {
        geoid: geoid.to_string(),
        date,
        device_count: devices.len() as u64,
        trip_count,
        avg_trip_count: trip_count as f64 / devices.len() as f64,
        avg_distance_m,
        avg_travel_time_s,
        avg_radius_of_gyration_m,
    })
}

/// All tract-day records for one county-day, one pass over the trips.
/// Equivalent to calling [`tract_day_metrics`] per touched tract.
pub fn county_day_metrics(trips: &[Trip], stops: &[Stop], date: Date) -> Vec<TractDayMetrics> {
    let mut touched: BTreeSet<&str> = BTreeSet::new();
    for t in trips {
        if let Some(g) = &t.origin_geoid {
            touched.insert(g);
        }
        if let Some(g) = &t.dest_geoid {
            touched.insert(g);
        }
    }
    touched
        .into_iter()
        .filter_map(|g| tract_day_metrics(trips, stops, g, date))
        .collect()
}

/// Descending ranks aligned to the input order (largest value gets rank 1).
/// Tied values share the average of their positions; missing entries get
/// rank `ranked + 1`.
pub fn rank_tracts(values: &[Option<f64>]) -> Vec<f64> {
    let mut present: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|x| (i, x)))
        .collect();
    present.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let ranked = present.len();
    let mut out = vec![ranked as f64 + 1.0; values.len()];
    let mut i = 0;
    while i < ranked {
        let mut j = i;
        while j < ranked && present[j].1 == present[i].1 {
            j += 1;
        }
        // Positions i+1 ..= j share the average rank.
        let avg = (i + 1 + j) as f64 / 2.0;
        for k in i..j {
            out[present[k].0] = avg;
        }
        i = j;
    }
    out
}

// --- micro table file -------------------------------------------------------

pub const MICRO_FILE_HEADER: &str =
    "date,geoid,device_count,trip_count,avg_trip_count,avg_distance_m,avg_travel_time_s,avg_rog_m";

pub fn write_micro_rows<W: Write>(mut w: W, rows: &[TractDayMetrics]) -> std::io::Result<()> {
    writeln!(w, "{MICRO_FILE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.date,
            r.geoid,
            r.device_count,
            r.trip_count,
            r.avg_trip_count,
            r.avg_distance_m,
            r.avg_travel_time_s,
            r.avg_radius_of_gyration_m,
        )?;
    }
    Ok(())
}

pub fn read_micro_rows<R: BufRead>(reader: R) -> std::io::Result<Vec<TractDayMetrics>> {
    let bad = |line: usize, what: &str| {
        std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("micro table line {line}: {what}"),
        )
    };
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad(i + 1, "expected 8 columns"));
        }
        out.push(TractDayMetrics {
            date: f[0].parse().map_err(|_| bad(i + 1, "bad date"))?,
            geoid: f[1].to_string(),
            device_count: f[2].parse().map_err(|_| bad(i + 1, "bad device_count"))?,
            trip_count: f[3].parse().map_err(|_| bad(i + 1, "bad trip_count"))?,
            avg_trip_count: f[4].parse().map_err(|_| bad(i + 1, "bad avg_trip_count"))?,
            avg_distance_m: f[5].parse().map_err(|_| bad(i + 1, "bad avg_distance_m"))?,
            avg_travel_time_s: f[6]
                .parse()
                .map_err(|_| bad(i + 1, "bad avg_travel_time_s"))?,
            avg_radius_of_gyration_m: f[7].parse().map_err(|_| bad(i + 1, "bad avg_rog_m"))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::EARTH_RADIUS_M;

    fn day() -> Date {
        "2020-02-01".parse().unwrap()
    }

    fn trip(device: &str, o: &str, d: &str, depart: i64, arrive: i64, dist: f64) -> Trip {
        let pos = GeoPoint::new(0.0, 0.0).unwrap();
        Trip {
            device_id: device.to_string(),
            origin_geoid: Some(o.to_string()),
            dest_geoid: Some(d.to_string()),
            origin_pos: pos,
            dest_pos: pos,
            depart_t: depart,
            arrive_t: arrive,
            distance_m: dist,
        }
    }

    #[test]
    fn one_device_two_trips() {
        let trips = vec![
            trip("d1", "A", "B", 0, 100, 1000.0),
            trip("d1", "B", "A", 200, 300, 3000.0),
        ];
        let m = tract_day_metrics(&trips, &[], "A", day()).unwrap();
        assert_eq!(m.avg_trip_count, 2.0);
        assert_eq!(m.trip_count, 2);
        assert_eq!(m.avg_distance_m, 2000.0);
    }

    #[test]
    fn travel_time_is_trip_duration() {
        let trips = vec![trip("d1", "A", "B", 1000, 1600, 500.0)];
        let m = tract_day_metrics(&trips, &[], "A", day()).unwrap();
        assert_eq!(m.avg_travel_time_s, 600.0);
    }

    #[test]
    fn two_devices_one_trip_each() {
        let trips = vec![
            trip("d1", "A", "B", 0, 100, 1000.0),
            trip("d2", "C", "A", 0, 100, 1000.0),
        ];
        let m = tract_day_metrics(&trips, &[], "A", day()).unwrap();
        assert_eq!(m.device_count, 2);
        assert_eq!(m.avg_trip_count, 1.0);
    }

    #[test]
    fn quiet_tract_yields_no_record() {
        let trips = vec![trip("d1", "A", "B", 0, 100, 1000.0)];
        assert!(tract_day_metrics(&trips, &[], "Z", day()).is_none());
    }

    #[test]
    fn avg_trip_count_at_least_one() {
        let trips = vec![
            trip("d1", "A", "B", 0, 100, 1.0),
            trip("d1", "A", "C", 200, 300, 1.0),
            trip("d2", "B", "A", 0, 50, 1.0),
        ];
        let m = tract_day_metrics(&trips, &[], "A", day()).unwrap();
        assert!(m.avg_trip_count >= 1.0);
    }

    #[test]
    fn rog_point_mass_is_zero() {
        let p = GeoPoint::new(41.0, -88.0).unwrap();
        assert_eq!(radius_of_gyration(&[p]), 0.0);
        assert_eq!(radius_of_gyration(&[]), 0.0);
    }

    #[test]
    fn rog_two_points_is_half_the_gap() {
        let meters_per_degree = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        let a = GeoPoint::new(0.0, 0.0).unwrap();
        let b = GeoPoint::new(0.0, 1000.0 / meters_per_degree).unwrap();
        let r = radius_of_gyration(&[a, b]);
        assert!((r - 500.0).abs() < 0.1, "got {r}");
    }

    #[test]
    fn rog_square_corners() {
        let s = 1000.0;
        let meters_per_degree = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        let d = s / meters_per_degree;
        let pts = [
            GeoPoint::new(0.0, 0.0).unwrap(),
            GeoPoint::new(0.0, d).unwrap(),
            GeoPoint::new(d, 0.0).unwrap(),
            GeoPoint::new(d, d).unwrap(),
        ];
        let r = radius_of_gyration(&pts);
        let expected = s / 2.0_f64.sqrt();
        assert!(
            (r - expected).abs() / expected < 0.001,
            "got {r}, want {expected}"
        );
    }

    #[test]
    fn rog_never_decreases_when_adding_a_far_point() {
        let meters_per_degree = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        let mut pts = vec![
            GeoPoint::new(0.0, 0.0).unwrap(),
            GeoPoint::new(0.0, 500.0 / meters_per_degree).unwrap(),
        ];
        let before = radius_of_gyration(&pts);
        pts.push(GeoPoint::new(0.0, 50_000.0 / meters_per_degree).unwrap());
        assert!(radius_of_gyration(&pts) > before);
    }

    #[test]
    fn rog_uses_full_day_stops_of_contributing_devices() {
        let meters_per_degree = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        let stops = vec![
            Stop {
                device_id: "d1".to_string(),
                t_start: 0,
                t_end: 400,
                pos: GeoPoint::new(0.0, 0.0).unwrap(),
                geoid: Some("A".to_string()),
            },
            Stop {
                device_id: "d1".to_string(),
                t_start: 1000,
                t_end: 1400,
                pos: GeoPoint::new(0.0, 1000.0 / meters_per_degree).unwrap(),
                geoid: Some("B".to_string()),
            },
            // A device that never touches tract A; must not contribute.
            Stop {
                device_id: "d2".to_string(),
                t_start: 0,
                t_end: 400,
                pos: GeoPoint::new(0.5, 0.5).unwrap(),
                geoid: Some("C".to_string()),
            },
        ];
        let trips = vec![trip("d1", "A", "B", 400, 1000, 1000.0)];
        let m = tract_day_metrics(&trips, &stops, "A", day()).unwrap();
        assert!((m.avg_radius_of_gyration_m - 500.0).abs() < 0.1);
    }

    #[test]
    fn batch_matches_per_tract_calls() {
        let trips = vec![
            trip("d1", "A", "B", 0, 100, 1000.0),
            trip("d2", "B", "C", 0, 100, 2000.0),
            trip("d2", "C", "C", 200, 400, 0.0),
        ];
        let batch = county_day_metrics(&trips, &[], day());
        let geoids: Vec<&str> = batch.iter().map(|m| m.geoid.as_str()).collect();
        assert_eq!(geoids, vec!["A", "B", "C"]);
        for m in &batch {
            let single = tract_day_metrics(&trips, &[], &m.geoid, day()).unwrap();
            assert_eq!(&single, m);
        }
    }

    #[test]
    fn union_of_disjoint_device_sets_composes() {
        let trips_a = vec![
            trip("d1", "A", "B", 0, 100, 1000.0),
            trip("d1", "A", "C", 200, 260, 3000.0),
        ];
        let trips_b = vec![trip("d2", "B", "A", 0, 40, 5000.0)];
        let all: Vec<Trip> = trips_a.iter().chain(&trips_b).cloned().collect();
        let ma = tract_day_metrics(&trips_a, &[], "A", day()).unwrap();
        let mb = tract_day_metrics(&trips_b, &[], "A", day()).unwrap();
        let mu = tract_day_metrics(&all, &[], "A", day()).unwrap();
        assert_eq!(mu.trip_count, ma.trip_count + mb.trip_count);
        assert_eq!(mu.device_count, ma.device_count + mb.device_count);
        let merged_dist = (ma.avg_distance_m * ma.trip_count as f64
            + mb.avg_distance_m * mb.trip_count as f64)
            / mu.trip_count as f64;
        assert!((mu.avg_distance_m - merged_dist).abs() < 1e-9);
    }

    #[test]
    fn rank_strict_order() {
        let ranks = rank_tracts(&[Some(5.0), Some(3.0), Some(1.0)]);
        assert_eq!(ranks, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rank_average_ties() {
        let ranks = rank_tracts(&[Some(5.0), Some(5.0), Some(1.0)]);
        assert_eq!(ranks, vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn rank_singleton_and_padding() {
        assert_eq!(rank_tracts(&[Some(2.0)]), vec![1.0]);
        let ranks = rank_tracts(&[Some(4.0), None, Some(9.0)]);
        assert_eq!(ranks, vec![2.0, 3.0, 1.0]);
    }

    #[test]
    fn ranks_sum_to_triangular_number() {
        let values = [Some(3.0), Some(3.0), Some(7.0), Some(1.0), None, Some(3.0)];
        let ranks = rank_tracts(&values);
        let ranked: f64 = values.iter().flatten().count() as f64;
        let sum: f64 = values
            .iter()
            .zip(&ranks)
            .filter(|(v, _)| v.is_some())
            .map(|(_, r)| r)
            .sum();
        assert!((sum - ranked * (ranked + 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn micro_table_round_trips() {
        let rows = vec![TractDayMetrics {
            geoid: "00000000001".to_string(),
            date: day(),
            device_count: 3,
            trip_count: 7,
            avg_trip_count: 7.0 / 3.0,
            avg_distance_m: 1234.5,
            avg_travel_time_s: 600.25,
            avg_radius_of_gyration_m: 432.1,
        }];
        let mut buf = Vec::new();
        write_micro_rows(&mut buf, &rows).unwrap();
        let back = read_micro_rows(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(back, rows);
    }
}
