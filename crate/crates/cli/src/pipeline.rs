//! Subcommand implementations: synth, ingest, build-network, analyze,
//! compare, report.
//!
//! Fan-out is per day or per device inside one (county, source) job;
//! sources run sequentially to bound memory. Every merge is
//! order-independent and every output file has a single writer, so reruns
//! and different thread counts produce byte-identical trees.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use mobnet_core::date::Date;
use mobnet_core::geodata::{GeoPoint, TractIndex};
use mobnet_core::ingest::{self, Ping, Stop, Trip};
use mobnet_core::macro_metrics::{self, MacroRecord, MACRO_METRIC_NAMES};
use mobnet_core::micro_metrics::{self, TractDayMetrics, MICRO_METRIC_NAMES};
use mobnet_core::motifs::{self, MotifCensus, MotifError};
use mobnet_core::network::{self, MobilityNetwork};
use mobnet_core::similarity::{
    self, closest_pair_cosine, closest_pair_dtw, cosine, dtw, euclidean, mape, pair_label, pearson,
    MetricSeries, SimilarityError, VerdictRow,
};
use mobnet_core::synth::{self, ProviderProfile};

use crate::config::Resolved;
use crate::manifest;
use crate::CliError;

/// Macro metrics compared across sources (the published table's columns).
pub const MACRO_COMPARE_METRICS: [&str; 4] = [
    "avg_degree",
    "avg_clustering",
    "avg_shortest_path",
    "assortativity",
];

/// Runs `f` on a dedicated rayon pool; 0 threads means the library default.
pub fn with_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if threads > 0 {
        builder = builder.num_threads(threads);
    }
    let pool = builder.build().expect("thread pool");
    pool.install(f)
}

fn io_data(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn create_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_data(parent, e))?;
    }
    Ok(())
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    create_parent(path)?;
    let file = fs::File::create(path).map_err(|e| io_data(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| io_data(path, e))?;
    w.flush().map_err(|e| io_data(path, e))
}

// --- synth -------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub out_dir: PathBuf,
    pub tracts_side: u32,
    pub devices: u32,
    pub world_seed: u64,
    pub emit_seed: u64,
    pub date_start: Date,
    pub date_end: Date,
    pub profiles: Vec<ProviderProfile>,
}

/// Three synthetic providers with distinct panel sizes, cadences, noise,
/// and dropout, so the downstream comparison has real divergence to find.
pub fn default_profiles() -> Vec<ProviderProfile> {
    vec![
        ProviderProfile {
            name: "S".to_string(),
            penetration: 0.20,
            ping_interval_s: 420.0,
            noise_sigma_m: 25.0,
            dropout_p: 0.02,
        },
        ProviderProfile {
            name: "X".to_string(),
            penetration: 0.15,
            ping_interval_s: 240.0,
            noise_sigma_m: 75.0,
            dropout_p: 0.10,
        },
        ProviderProfile {
            name: "V".to_string(),
            penetration: 0.05,
            ping_interval_s: 600.0,
            noise_sigma_m: 25.0,
            dropout_p: 0.02,
        },
    ]
}

/// Generates a world, emits per-provider-per-day ping files, the ground
/// truth trip list, the tract GeoJSON, and a ready-to-run config.
pub fn cmd_synth(opts: &SynthOptions) -> Result<(), CliError> {
    let world = synth::generate_world(opts.tracts_side, opts.devices, opts.world_seed);
    let out = &opts.out_dir;
    fs::create_dir_all(out).map_err(|e| io_data(out, e))?;

    let geojson_path = out.join("tracts.geojson");
    write_file(&geojson_path, |w| {
        w.write_all(world.to_geojson().as_bytes())
    })?;

    let truth = world.ground_truth_range(opts.date_start, opts.date_end);
    write_file(&out.join("truth/trips.csv"), |w| {
        synth::write_ground_truth(w, &truth)
    })?;

    let dates: Vec<Date> = Date::range_inclusive(opts.date_start, opts.date_end).collect();
    for profile in &opts.profiles {
        let panel = synth::provider_panel(&world, profile, opts.emit_seed);
        eprintln!(
            "synth: provider {} observes {} of {} devices",
            profile.name,
            panel.len(),
            opts.devices
        );
        let results: Vec<Result<u64, CliError>> = dates
            .par_iter()
            .map(|&date| {
                let pings = synth::emit_day_pings(&world, profile, date, opts.emit_seed, &panel);
                let path = out.join(format!("pings/{}/{date}.csv", profile.name));
                write_file(&path, |w| synth::write_pings(w, &pings))?;
                Ok(pings.len() as u64)
            })
            .collect();
        let mut total = 0u64;
        for r in results {
            total += r?;
        }
        eprintln!("synth: provider {} emitted {total} pings", profile.name);
    }

    let config = crate::config::RunConfig {
        run: crate::config::RunSection {
            date_start: opts.date_start.to_string(),
            date_end: opts.date_end.to_string(),
            out_dir: ".".to_string(),
            threads: 0,
            tz_offset_s: 0,
        },
        stops: Default::default(),
        motifs: Default::default(),
        similarity: Default::default(),
        counties: vec![crate::config::CountySection {
            fips: world.county_fips().to_string(),
            name: "Synthville".to_string(),
            geojson: "tracts.geojson".to_string(),
            sources: opts
                .profiles
                .iter()
                .map(|p| crate::config::SourceSection {
                    label: p.name.clone(),
                    pings_dir: format!("pings/{}", p.name),
                })
                .collect(),
        }],
    };
    let text = toml::to_string_pretty(&config)
        .map_err(|e| CliError::Data(format!("config encode: {e}")))?;
    write_file(&out.join("config.toml"), |w| w.write_all(text.as_bytes()))?;
    eprintln!("synth: wrote {}", out.join("config.toml").display());
    Ok(())
}

// --- shared loading ------------------------------------------------------

fn load_index(
    county: &crate::config::ResolvedCounty,
) -> Result<(TractIndex, Vec<String>), CliError> {
    let bytes = fs::read(&county.geojson).map_err(|e| {
        CliError::Data(format!(
            "county {}: cannot read {}: {e}",
            county.fips,
            county.geojson.display()
        ))
    })?;
    let (idx, diags) = TractIndex::load_tracts(&bytes, "GEOID")
        .map_err(|e| CliError::Data(format!("county {}: {e}", county.fips)))?;
    Ok((idx, diags.rejected))
}

fn ping_file(dir: &Path, date: Date) -> Option<PathBuf> {
    let plain = dir.join(format!("{date}.csv"));
    if plain.is_file() {
        return Some(plain);
    }
    let gz = dir.join(format!("{date}.csv.gz"));
    gz.is_file().then_some(gz)
}

fn trips_path(out: &Path, label: &str, fips: &str, date: Date) -> PathBuf {
    out.join(format!("trips/{label}/{fips}/{date}.csv"))
}

fn stops_path(out: &Path, label: &str, fips: &str, date: Date) -> PathBuf {
    out.join(format!("stops/{label}/{fips}/{date}.csv"))
}

fn read_day_trips(
    out: &Path,
    label: &str,
    fips: &str,
    date: Date,
) -> Result<Option<Vec<Trip>>, CliError> {
    let path = trips_path(out, label, fips, date);
    if !path.is_file() {
        return Ok(None);
    }
    let file = fs::File::open(&path).map_err(|e| io_data(&path, e))?;
    ingest::read_trips(BufReader::new(file), &path.to_string_lossy())
        .map(Some)
        .map_err(|e| CliError::Data(e.to_string()))
}

fn read_day_stops(
    out: &Path,
    label: &str,
    fips: &str,
    date: Date,
) -> Result<Option<Vec<Stop>>, CliError> {
    let path = stops_path(out, label, fips, date);
    if !path.is_file() {
        return Ok(None);
    }
    let file = fs::File::open(&path).map_err(|e| io_data(&path, e))?;
    ingest::read_stops(BufReader::new(file), &path.to_string_lossy())
        .map(Some)
        .map_err(|e| CliError::Data(e.to_string()))
}

// --- ingest ----------------------------------------------------------------

/// Pings -> stops -> trips, persisted per (source, county, date) with a
/// sidecar diagnostics report. Devices process independently over their
/// whole time range so overnight dwells never split at midnight; trips are
/// then assigned to days by departure time.
pub fn cmd_ingest(cfg: &Resolved) -> Result<(), CliError> {
    let dates = cfg.dates();
    for county in &cfg.counties {
        let (idx, geo_rejected) = load_index(county)?;
        for (label, pings_dir) in &county.sources {
            if !pings_dir.is_dir() {
                return Err(CliError::Data(format!(
                    "county {}, source {label}: ping directory {} is not readable",
                    county.fips,
                    pings_dir.display()
                )));
            }
            ingest_one_source(cfg, county, &idx, &geo_rejected, label, pings_dir, &dates)?;
        }
    }
    Ok(())
}

/// Compact ping rows for one device: (t, lat, lon).
type RawRows = Vec<(i64, f64, f64)>;

struct DeviceOutput {
    stops: Vec<Stop>,
    trips: Vec<Trip>,
    dropped_no_geoid: u64,
}

fn ingest_one_source(
    cfg: &Resolved,
    county: &crate::config::ResolvedCounty,
    idx: &TractIndex,
    geo_rejected: &[String],
    label: &str,
    pings_dir: &Path,
    dates: &[Date],
) -> Result<(), CliError> {
    let mut per_device: BTreeMap<String, RawRows> = BTreeMap::new();
    let mut accepted = 0u64;
    let mut rejected = 0u64;
    let mut missing_days = 0u64;
    let mut row_sample: Vec<serde_json::Value> = Vec::new();

    for &date in dates {
        let Some(path) = ping_file(pings_dir, date) else {
            missing_days += 1;
            continue;
        };
        let parsed = ingest::read_ping_file(&path).map_err(|e| io_data(&path, e))?;
        accepted += parsed.accepted;
        rejected += parsed.rejected;
        for d in parsed
            .diagnostics
            .iter()
            .take(20_usize.saturating_sub(row_sample.len()))
        {
            row_sample.push(serde_json::json!({
                "file": path.file_name().map(|f| f.to_string_lossy().into_owned()),
                "line": d.line,
                "reason": d.reason,
            }));
        }
        for p in parsed.pings {
            per_device
                .entry(p.device_id)
                .or_default()
                .push((p.t, p.pos.lat, p.pos.lon));
        }
    }
    if accepted == 0 {
        eprintln!(
            "warning: county {}, source {label}: zero accepted ping rows; writing empty stores",
            county.fips
        );
    }

    let devices: Vec<(String, RawRows)> = per_device.into_iter().collect();
    let outputs: Vec<Result<DeviceOutput, CliError>> = devices
        .into_par_iter()
        .map(|(device_id, mut rows)| {
            rows.sort_by_key(|&(t, _, _)| t);
            let pings: Vec<Ping> = rows
                .iter()
                .filter_map(|&(t, lat, lon)| {
                    GeoPoint::new(lat, lon).map(|pos| Ping {
                        device_id: device_id.clone(),
                        t,
                        pos,
                    })
                })
                .collect();
            let mut stops = ingest::detect_stops(&pings, cfg.radius_m, cfg.min_dwell_s)
                .map_err(|e| CliError::Data(format!("device {device_id}: {e}")))?;
            ingest::assign_geoids(&mut stops, idx);
            let (trips, dropped_no_geoid) = ingest::extract_trips(&stops);
            Ok(DeviceOutput {
                stops,
                trips,
                dropped_no_geoid,
            })
        })
        .collect();

    let mut trips_by_date: BTreeMap<Date, Vec<Trip>> =
        dates.iter().map(|&d| (d, Vec::new())).collect();
    let mut stops_by_date: BTreeMap<Date, Vec<Stop>> =
        dates.iter().map(|&d| (d, Vec::new())).collect();
    let mut device_count = 0u64;
    let mut stop_count = 0u64;
    let mut trip_count = 0u64;
    let mut dropped_no_geoid = 0u64;
    let mut trips_outside_range = 0u64;

    for out in outputs {
        let out = out?;
        device_count += 1;
        stop_count += out.stops.len() as u64;
        dropped_no_geoid += out.dropped_no_geoid;
        for trip in out.trips {
            let date = Date::from_unix(trip.depart_t, cfg.tz_offset_s);
            match trips_by_date.get_mut(&date) {
                Some(bucket) => {
                    bucket.push(trip);
                    trip_count += 1;
                }
                None => trips_outside_range += 1,
            }
        }
        for stop in out.stops {
            let first = Date::from_unix(stop.t_start, cfg.tz_offset_s);
            let last = Date::from_unix(stop.t_end, cfg.tz_offset_s);
            for day in first.days()..=last.days() {
                if let Some(bucket) = stops_by_date.get_mut(&Date::from_days(day)) {
                    bucket.push(stop.clone());
                }
            }
        }
    }

    for (&date, trips) in &mut trips_by_date {
        trips.sort_by(|a, b| {
            (a.device_id.as_str(), a.depart_t).cmp(&(b.device_id.as_str(), b.depart_t))
        });
        write_file(&trips_path(&cfg.out_dir, label, &county.fips, date), |w| {
            ingest::write_trips(w, trips)
        })?;
    }
    for (&date, stops) in &mut stops_by_date {
        stops.sort_by(|a, b| {
            (a.device_id.as_str(), a.t_start).cmp(&(b.device_id.as_str(), b.t_start))
        });
        write_file(&stops_path(&cfg.out_dir, label, &county.fips, date), |w| {
            ingest::write_stops(w, stops)
        })?;
    }

    let report = serde_json::json!({
        "county": county.fips,
        "source": label,
        "rows_accepted": accepted,
        "rows_rejected": rejected,
        "row_diagnostics_sample": row_sample,
        "missing_day_files": missing_days,
        "devices": device_count,
        "stops": stop_count,
        "trips": trip_count,
        "trips_dropped_no_geoid": dropped_no_geoid,
        "trips_outside_range": trips_outside_range,
        "geojson_rejected_features": geo_rejected,
    });
    write_file(
        &cfg.out_dir
            .join(format!("reports/ingest_{label}_{}.json", county.fips)),
        |w| {
            writeln!(
                w,
                "{}",
                serde_json::to_string_pretty(&report).expect("json")
            )
        },
    )?;
    Ok(())
}

// --- build-network -----------------------------------------------------------

/// Builds the daily networks from the trip stores and writes one edge file
/// per (source, county) month plus a size summary report.
pub fn cmd_build_network(cfg: &Resolved) -> Result<(), CliError> {
    let dates = cfg.dates();
    for county in &cfg.counties {
        let (idx, _) = load_index(county)?;
        for (label, _) in &county.sources {
            let mut networks: Vec<MobilityNetwork> = Vec::new();
            let mut missing_days = 0u64;
            let mut filtered_missing_geoid = 0u64;
            let mut filtered_out_of_county = 0u64;
            let mut intra_tract = 0u64;
            for &date in &dates {
                match read_day_trips(&cfg.out_dir, label, &county.fips, date)? {
                    Some(trips) => {
                        let (net, stats) =
                            network::build_daily_network(&trips, &county.fips, date, &idx);
                        filtered_missing_geoid += stats.missing_geoid;
                        filtered_out_of_county += stats.out_of_county;
                        intra_tract += stats.intra_tract;
                        networks.push(net);
                    }
                    None => missing_days += 1,
                }
            }
            write_file(
                &cfg.out_dir
                    .join(format!("networks/{label}/{}.csv", county.fips)),
                |w| network::write_networks(w, &networks),
            )?;
            // Means over the whole range; a missing day counts as empty.
            let n_days = dates.len() as f64;
            let mean_nodes = networks.iter().map(|n| n.node_count() as f64).sum::<f64>() / n_days;
            let mean_edges = networks.iter().map(|n| n.edge_count() as f64).sum::<f64>() / n_days;
            let report = serde_json::json!({
                "county": county.fips,
                "county_name": county.name,
                "source": label,
                "days": dates.len(),
                "missing_days": missing_days,
                "mean_nodes": mean_nodes,
                "mean_edges": mean_edges,
                "trips_filtered_missing_geoid": filtered_missing_geoid,
                "trips_filtered_out_of_county": filtered_out_of_county,
                "trips_intra_tract": intra_tract,
            });
            write_file(
                &cfg.out_dir
                    .join(format!("reports/network_{label}_{}.json", county.fips)),
                |w| {
                    writeln!(
                        w,
                        "{}",
                        serde_json::to_string_pretty(&report).expect("json")
                    )
                },
            )?;
        }
    }
    manifest::write_manifest(cfg)
}

// --- analyze -----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Macro,
    Motif,
    Micro,
}

/// Computes one scale's metric files from the trip/stop stores. Missing
/// days become missing points; the run continues.
pub fn cmd_analyze(cfg: &Resolved, scale: Scale) -> Result<(), CliError> {
    let dates = cfg.dates();
    for county in &cfg.counties {
        let (idx, _) = load_index(county)?;
        for (label, _) in &county.sources {
            let day_trips: Vec<(Date, Option<Vec<Trip>>)> = dates
                .iter()
                .map(|&d| Ok((d, read_day_trips(&cfg.out_dir, label, &county.fips, d)?)))
                .collect::<Result<_, CliError>>()?;
            match scale {
                Scale::Macro => analyze_macro(cfg, county, label, &idx, &day_trips)?,
                Scale::Motif => analyze_motif(cfg, county, label, &idx, &day_trips)?,
                Scale::Micro => analyze_micro(cfg, county, label, &day_trips)?,
            }
        }
    }
    manifest::write_manifest(cfg)
}

fn analyze_macro(
    cfg: &Resolved,
    county: &crate::config::ResolvedCounty,
    label: &str,
    idx: &TractIndex,
    day_trips: &[(Date, Option<Vec<Trip>>)],
) -> Result<(), CliError> {
    let records: Vec<(Date, Option<MacroRecord>)> = day_trips
        .par_iter()
        .map(|(date, trips)| {
            let record = trips.as_ref().map(|trips| {
                let (net, _) = network::build_daily_network(trips, &county.fips, *date, idx);
                macro_metrics::macro_record(&net)
            });
            (*date, record)
        })
        .collect();
    for (mi, metric) in MACRO_METRIC_NAMES.iter().enumerate() {
        let series: Vec<(Date, Option<f64>)> = records
            .iter()
            .map(|(date, rec)| (*date, rec.as_ref().and_then(|r| r.values()[mi])))
            .collect();
        write_file(
            &cfg.out_dir.join(format!(
                "metrics/macro/{label}/{}/{metric}.csv",
                county.fips
            )),
            |w| macro_metrics::write_series(w, &series),
        )?;
    }
    Ok(())
}

fn analyze_motif(
    cfg: &Resolved,
    county: &crate::config::ResolvedCounty,
    label: &str,
    idx: &TractIndex,
    day_trips: &[(Date, Option<Vec<Trip>>)],
) -> Result<(), CliError> {
    let censuses: Vec<Result<(Date, Option<MotifCensus>), CliError>> = day_trips
        .par_iter()
        .map(|(date, trips)| {
            let Some(trips) = trips else {
                return Ok((*date, None));
            };
            let (net, _) = network::build_daily_network(trips, &county.fips, *date, idx);
            let result = match cfg.motif_sample {
                None => motifs::motif_census_for_network(
                    &net,
                    idx,
                    cfg.volume_stat,
                    &cfg.attribute_config,
                ),
                Some((n_samples, seed)) => {
                    motifs::sample_census_for_network(&net, idx, n_samples, seed, cfg.volume_stat)
                }
            };
            match result {
                Ok(census) => Ok((*date, Some(census))),
                Err(MotifError::NetworkTooSmall(_)) => Ok((*date, None)),
                Err(e) => Err(CliError::Data(format!(
                    "county {}, source {label}, {date}: {e}",
                    county.fips
                ))),
            }
        })
        .collect();
    let days: Vec<(Date, Option<MotifCensus>)> =
        censuses.into_iter().collect::<Result<_, CliError>>()?;
    let rows = motifs::motif_rows(&days);
    write_file(
        &cfg.out_dir
            .join(format!("metrics/motif/{label}_{}.csv", county.fips)),
        |w| motifs::write_motif_rows(w, &rows),
    )
}

fn analyze_micro(
    cfg: &Resolved,
    county: &crate::config::ResolvedCounty,
    label: &str,
    day_trips: &[(Date, Option<Vec<Trip>>)],
) -> Result<(), CliError> {
    let day_rows: Vec<Result<Vec<TractDayMetrics>, CliError>> = day_trips
        .par_iter()
        .map(|(date, trips)| {
            let Some(trips) = trips else {
                return Ok(Vec::new());
            };
            let stops =
                read_day_stops(&cfg.out_dir, label, &county.fips, *date)?.unwrap_or_default();
            Ok(micro_metrics::county_day_metrics(trips, &stops, *date))
        })
        .collect();
    let mut rows = Vec::new();
    for day in day_rows {
        rows.extend(day?);
    }
    write_file(
        &cfg.out_dir
            .join(format!("metrics/micro/{label}_{}.csv", county.fips)),
        |w| micro_metrics::write_micro_rows(w, &rows),
    )
}

// --- compare -----------------------------------------------------------------

/// Cross-source verdicts (DTW over macro series, cosine over micro rank
/// vectors) plus the per-figure plot-data files.
pub fn cmd_compare(cfg: &Resolved) -> Result<(), CliError> {
    for county in &cfg.counties {
        let n = county.sources.len();
        if n < 2 {
            return Err(CliError::Config(format!(
                "county {}: comparison needs at least 2 sources, found {n}",
                county.fips
            )));
        }
        if n > 3 {
            return Err(CliError::Config(format!(
                "county {}: comparison supports 2 or 3 sources, found {n}",
                county.fips
            )));
        }
        // The verdict table has one score column per pair, so every county
        // must draw on the same ordered source labels.
        let labels: Vec<&str> = county.sources.iter().map(|(l, _)| l.as_str()).collect();
        let first: Vec<&str> = cfg.counties[0]
            .sources
            .iter()
            .map(|(l, _)| l.as_str())
            .collect();
        if labels != first {
            return Err(CliError::Config(format!(
                "county {}: source labels {labels:?} differ from {:?}; comparison needs one label set",
                county.fips, first
            )));
        }
    }

    let mut report_entries: Vec<serde_json::Value> = Vec::new();
    let mut macro_rows: Vec<VerdictRow> = Vec::new();
    let mut macro_two_source: Vec<String> = Vec::new();
    let mut micro_rows: Vec<VerdictRow> = Vec::new();
    let mut micro_two_source: Vec<String> = Vec::new();
    let mut macro_scores: Vec<String> = Vec::new();

    for county in &cfg.counties {
        let labels: Vec<String> = county.sources.iter().map(|(l, _)| l.clone()).collect();

        // Macro scale: DTW over each compared metric's daily series.
        for metric in MACRO_COMPARE_METRICS {
            let mut series = Vec::with_capacity(labels.len());
            for label in &labels {
                let path = cfg.out_dir.join(format!(
                    "metrics/macro/{label}/{}/{metric}.csv",
                    county.fips
                ));
                let file = fs::File::open(&path).map_err(|e| io_data(&path, e))?;
                let values = macro_metrics::read_series(BufReader::new(file))
                    .map_err(|e| io_data(&path, e))?;
                series.push(
                    MetricSeries::new(label, &county.fips, metric, values)
                        .map_err(|e| CliError::Data(e.to_string()))?,
                );
            }
            for (i, j) in pairwise(labels.len()) {
                macro_scores.push(pair_score_row(cfg, county, metric, &series[i], &series[j])?);
            }
            if labels.len() == 3 {
                let trio: [MetricSeries; 3] = series.try_into().expect("three sources");
                let verdict =
                    closest_pair_dtw(&trio).map_err(|e| verdict_error(county, metric, e))?;
                for p in &verdict.scores {
                    report_entries.push(serde_json::json!({
                        "scale": "macro", "county": county.fips, "metric": metric,
                        "pair": p.label, "dropped_points": p.dropped,
                    }));
                }
                macro_rows.push(VerdictRow {
                    fips: county.fips.clone(),
                    county: county.name.clone(),
                    verdict,
                });
            } else {
                let a = series[0].present();
                let b = series[1].present();
                if a.is_empty() || b.is_empty() {
                    return Err(verdict_error(county, metric, SimilarityError::Empty));
                }
                let score = dtw(&a, &b).map_err(|e| verdict_error(county, metric, e))?;
                macro_two_source.push(format!(
                    "{},{},{metric},n/a,{score}",
                    county.fips, county.name
                ));
            }
        }

        // Micro scale: daily cosine over rank vectors, reduced per config.
        let (idx, _) = load_index(county)?;
        let tract_order: Vec<String> = idx.geoids().map(str::to_string).collect();
        let mut by_source: Vec<BTreeMap<Date, BTreeMap<String, [f64; 4]>>> = Vec::new();
        for label in &labels {
            let path = cfg
                .out_dir
                .join(format!("metrics/micro/{label}_{}.csv", county.fips));
            let file = fs::File::open(&path).map_err(|e| io_data(&path, e))?;
            let rows = micro_metrics::read_micro_rows(BufReader::new(file))
                .map_err(|e| io_data(&path, e))?;
            let mut map: BTreeMap<Date, BTreeMap<String, [f64; 4]>> = BTreeMap::new();
            for r in rows {
                map.entry(r.date)
                    .or_default()
                    .insert(r.geoid.clone(), r.metric_values());
            }
            by_source.push(map);
        }

        for (mi, metric) in MICRO_METRIC_NAMES.iter().enumerate() {
            let rank_for = |src: usize, date: Date| -> Option<Vec<f64>> {
                let day = by_source[src].get(&date)?;
                let values: Vec<Option<f64>> = tract_order
                    .iter()
                    .map(|g| day.get(g).map(|m| m[mi]))
                    .collect();
                Some(micro_metrics::rank_tracts(&values))
            };
            if labels.len() == 3 {
                let daily: Vec<[Option<f64>; 3]> = cfg
                    .dates()
                    .iter()
                    .map(|&date| {
                        let mut day = [None, None, None];
                        for (k, &(i, j)) in similarity::PAIR_INDICES.iter().enumerate() {
                            if let (Some(a), Some(b)) = (rank_for(i, date), rank_for(j, date)) {
                                day[k] = cosine(&a, &b).ok().flatten();
                            }
                        }
                        day
                    })
                    .collect();
                let trio: [String; 3] = labels.clone().try_into().expect("three sources");
                let verdict =
                    closest_pair_cosine(&county.fips, metric, &trio, &daily, cfg.cosine_reduction)
                        .map_err(|e| verdict_error(county, metric, e))?;
                for p in &verdict.scores {
                    report_entries.push(serde_json::json!({
                        "scale": "micro", "county": county.fips, "metric": metric,
                        "pair": p.label, "dropped_days": p.dropped,
                    }));
                }
                micro_rows.push(VerdictRow {
                    fips: county.fips.clone(),
                    county: county.name.clone(),
                    verdict,
                });
            } else {
                let vals: Vec<f64> = cfg
                    .dates()
                    .iter()
                    .filter_map(|&date| {
                        let a = rank_for(0, date)?;
                        let b = rank_for(1, date)?;
                        cosine(&a, &b).ok().flatten()
                    })
                    .collect();
                if vals.is_empty() {
                    return Err(verdict_error(
                        county,
                        metric,
                        SimilarityError::EmptyPair(pair_label(&labels[0], &labels[1])),
                    ));
                }
                let score = vals.iter().sum::<f64>() / vals.len() as f64;
                micro_two_source.push(format!(
                    "{},{},{metric},n/a,{score}",
                    county.fips, county.name
                ));
            }
        }

        write_figure_data(cfg, county, &labels)?;
    }

    write_file(&cfg.out_dir.join("compare/macro_scores.csv"), |w| {
        writeln!(w, "fips,county,metric,pair,dtw,euclidean,mape,pearson")?;
        for line in &macro_scores {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })?;

    let three_source = cfg.counties.iter().all(|c| c.sources.len() == 3);
    if three_source {
        write_file(&cfg.out_dir.join("compare/macro_verdicts.csv"), |w| {
            similarity::write_verdicts(w, &macro_rows)
        })?;
        write_file(&cfg.out_dir.join("compare/micro_verdicts.csv"), |w| {
            similarity::write_verdicts(w, &micro_rows)
        })?;
    } else {
        let pair = {
            let first = &cfg.counties[0];
            pair_label(&first.sources[0].0, &first.sources[1].0)
        };
        write_file(&cfg.out_dir.join("compare/macro_verdicts.csv"), |w| {
            writeln!(w, "fips,county,metric,pair,score_{pair}")?;
            for line in &macro_two_source {
                writeln!(w, "{line}")?;
            }
            Ok(())
        })?;
        write_file(&cfg.out_dir.join("compare/micro_verdicts.csv"), |w| {
            writeln!(w, "fips,county,metric,pair,score_{pair}")?;
            for line in &micro_two_source {
                writeln!(w, "{line}")?;
            }
            Ok(())
        })?;
    }

    write_file(&cfg.out_dir.join("compare/compare_report.json"), |w| {
        let doc = serde_json::json!({ "missing_point_handling": report_entries });
        writeln!(w, "{}", serde_json::to_string_pretty(&doc).expect("json"))
    })?;
    manifest::write_manifest(cfg)
}

fn pairwise(n: usize) -> Vec<(usize, usize)> {
    match n {
        2 => vec![(0, 1)],
        3 => similarity::PAIR_INDICES.to_vec(),
        _ => unreachable!("source counts validated up front"),
    }
}

/// One supplementary-score row: DTW plus the point-by-point measures on
/// the pairwise-deleted series, NA where a measure is undefined.
fn pair_score_row(
    cfg: &Resolved,
    county: &crate::config::ResolvedCounty,
    metric: &str,
    a: &MetricSeries,
    b: &MetricSeries,
) -> Result<String, CliError> {
    let label = pair_label(&a.source_label, &b.source_label);
    let values_a: Vec<Option<f64>> = a.values.iter().map(|(_, v)| *v).collect();
    let values_b: Vec<Option<f64>> = b.values.iter().map(|(_, v)| *v).collect();
    let (xs, ys, _) = similarity::pairwise_delete(&values_a, &values_b)
        .map_err(|e| verdict_error(county, metric, e))?;
    let na = || "NA".to_string();
    let dtw_score = match (a.present(), b.present()) {
        (ref p, ref q) if !p.is_empty() && !q.is_empty() => dtw(p, q)
            .map_err(|e| verdict_error(county, metric, e))?
            .to_string(),
        _ => na(),
    };
    let (euclid, mape_score, pearson_score) = if xs.is_empty() {
        (na(), na(), na())
    } else {
        (
            euclidean(&xs, &ys)
                .map(|v| v.to_string())
                .unwrap_or_else(|_| na()),
            mape(&xs, &ys, cfg.mape_mode)
                .map(|m| m.value.to_string())
                .unwrap_or_else(|_| na()),
            match pearson(&xs, &ys) {
                Ok(Some(v)) => v.to_string(),
                _ => na(),
            },
        )
    };
    Ok(format!(
        "{},{},{metric},{label},{dtw_score},{euclid},{mape_score},{pearson_score}",
        county.fips, county.name
    ))
}

fn verdict_error(
    county: &crate::config::ResolvedCounty,
    metric: &str,
    e: SimilarityError,
) -> CliError {
    CliError::Data(format!("county {}, metric {metric}: {e}", county.fips))
}

/// Plot-data emission: per-day motif share bars (wide) and per-type
/// attribute medians, one file pair per (source, county).
fn write_figure_data(
    cfg: &Resolved,
    county: &crate::config::ResolvedCounty,
    labels: &[String],
) -> Result<(), CliError> {
    for label in labels {
        let path = cfg
            .out_dir
            .join(format!("metrics/motif/{label}_{}.csv", county.fips));
        let file = fs::File::open(&path).map_err(|e| io_data(&path, e))?;
        let rows = motifs::read_motif_rows(BufReader::new(file)).map_err(|e| io_data(&path, e))?;
        let mut by_date: BTreeMap<Date, [Option<&motifs::MotifRow>; 7]> = BTreeMap::new();
        for r in &rows {
            by_date.entry(r.date).or_default()[r.motif_type as usize] = Some(r);
        }
        write_file(
            &cfg.out_dir
                .join(format!("figures/motif_shares_{label}_{}.csv", county.fips)),
            |w| {
                writeln!(w, "date,type0,type1,type2,type3,type4,type5,type6")?;
                for (date, slots) in &by_date {
                    let cells: Vec<String> = slots
                        .iter()
                        .map(|r| {
                            r.and_then(|r| r.share)
                                .map_or_else(|| "NA".to_string(), |s| s.to_string())
                        })
                        .collect();
                    writeln!(w, "{date},{}", cells.join(","))?;
                }
                Ok(())
            },
        )?;
        write_file(
            &cfg.out_dir.join(format!(
                "figures/motif_attributes_{label}_{}.csv",
                county.fips
            )),
            |w| {
                writeln!(w, "date,type,median_avg_distance_m,median_avg_volume")?;
                for (date, slots) in &by_date {
                    for (t, slot) in slots.iter().enumerate().skip(1) {
                        let d = slot
                            .and_then(|r| r.median_avg_distance_m)
                            .map_or_else(|| "NA".to_string(), |v| v.to_string());
                        let v = slot
                            .and_then(|r| r.median_avg_volume)
                            .map_or_else(|| "NA".to_string(), |v| v.to_string());
                        writeln!(w, "{date},{t},{d},{v}")?;
                    }
                }
                Ok(())
            },
        )?;
    }
    Ok(())
}

// --- report --------------------------------------------------------------

/// Table-1-style network size summary assembled from the build-network
/// reports, two-decimal rendering.
pub fn cmd_report(cfg: &Resolved) -> Result<(), CliError> {
    let mut lines = Vec::new();
    let labels: Vec<String> = cfg.counties[0]
        .sources
        .iter()
        .map(|(l, _)| l.clone())
        .collect();
    let mut header = String::from("fips,county");
    for l in &labels {
        header.push_str(&format!(",nodes_{l}"));
    }
    for l in &labels {
        header.push_str(&format!(",edges_{l}"));
    }
    lines.push(header);

    for county in &cfg.counties {
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for (label, _) in &county.sources {
            let path = cfg
                .out_dir
                .join(format!("reports/network_{label}_{}.json", county.fips));
            let text = fs::read_to_string(&path).map_err(|e| {
                CliError::Data(format!("{}: {e} (run build-network first)", path.display()))
            })?;
            let doc: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| io_data(&path, e))?;
            nodes.push(doc["mean_nodes"].as_f64().unwrap_or(0.0));
            edges.push(doc["mean_edges"].as_f64().unwrap_or(0.0));
        }
        let mut line = format!("{},{}", county.fips, county.name);
        for v in nodes {
            line.push_str(&format!(",{v:.2}"));
        }
        for v in edges {
            line.push_str(&format!(",{v:.2}"));
        }
        lines.push(line);
    }
    write_file(&cfg.out_dir.join("report/table1_network_sizes.csv"), |w| {
        for line in &lines {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })?;
    manifest::write_manifest(cfg)
}

/// The whole pipeline after synth: ingest, networks, all three scales,
/// compare, report.
pub fn run_all(cfg: &Resolved) -> Result<(), CliError> {
    cmd_ingest(cfg)?;
    cmd_build_network(cfg)?;
    cmd_analyze(cfg, Scale::Macro)?;
    cmd_analyze(cfg, Scale::Motif)?;
    cmd_analyze(cfg, Scale::Micro)?;
    cmd_compare(cfg)?;
    cmd_report(cfg)
}
