//! Ground-truthed synthetic multi-provider ping data over a square-grid
//! county.
//!
//! A world fixes every device's true movement (home/work tracts, daily
//! schedules); providers then observe that shared truth through their own
//! panel, cadence, noise, and dropout. Every random draw derives from
//! explicit (seed, device, day, purpose) tuples, so worlds, ground truth,
//! and ping files are bit-reproducible and independent of emission order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use std::io::{BufRead, Write};

use crate::date::{Date, SECONDS_PER_DAY};
use crate::geodata::{haversine, GeoPoint};
use crate::ingest::Ping;

pub const SYNTH_COUNTY_FIPS: &str = "99001";
/// Grid anchor (south-west corner) and tract side in degrees.
const GRID_LAT0: f64 = 40.0;
const GRID_LON0: f64 = -88.0;
const TRACT_SIDE_DEG: f64 = 0.01;
/// Positions stay inside the central 80% of their tract so adjacent-tract
/// dwells are always farther apart than the stop radius.
const POSITION_MARGIN: f64 = 0.1;
const TRAVEL_SPEED_M_S: f64 = 10.0;
const LEISURE_PROB: f64 = 0.3;

const TAG_DEVICE: u64 = 1;
const TAG_SCHEDULE: u64 = 2;
const TAG_PANEL: u64 = 3;
const TAG_PINGS: u64 = 4;

/// How one provider observes the world.
#[derive(Debug, Clone, PartialEq)]
pub struct ProviderProfile {
    pub name: String,
    /// Fraction of devices in the panel, (0, 1].
    pub penetration: f64,
    /// Mean seconds between pings within a dwell.
    pub ping_interval_s: f64,
    /// Per-ping Gaussian position noise, meters.
    pub noise_sigma_m: f64,
    /// Per-ping drop probability, [0, 1).
    pub dropout_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub home_tract: u32,
    pub work_tract: u32,
    pub home_pos: GeoPoint,
    pub work_pos: GeoPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub seed: u64,
    pub n_side: u32,
    pub devices: Vec<Device>,
    geoids: Vec<String>,
}

/// One stay within a day plan; `start_t`/`end_t` are unix seconds clipped
/// to the day.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSegment {
    pub tract: u32,
    pub pos: GeoPoint,
    pub start_t: i64,
    pub end_t: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTrip {
    pub date: Date,
    pub device_id: String,
    pub origin_geoid: String,
    pub dest_geoid: String,
    pub depart_t: i64,
    pub arrive_t: i64,
}

fn rng_for(seed: u64, device: u64, day: u64, tag: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[0..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&device.to_le_bytes());
    bytes[16..24].copy_from_slice(&day.to_le_bytes());
    bytes[24..32].copy_from_slice(&tag.to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

pub fn device_id(index: u32) -> String {
    format!("d{index:06}")
}

/// Builds the world: a square tract grid plus devices with gravity-drawn
/// work tracts (weight 1/(1 + d_km^2) over centroid distances, home
/// excluded) and fixed home/work positions.
pub fn generate_world(n_side: u32, n_devices: u32, seed: u64) -> SyntheticWorld {
    assert!(n_side >= 2, "need at least a 2x2 grid");
    assert!(n_devices >= 1, "need at least one device");
    let n_tracts = n_side * n_side;
    let geoids: Vec<String> = (0..n_tracts)
        .map(|i| format!("{SYNTH_COUNTY_FIPS}{i:06}"))
        .collect();
    let centroids: Vec<GeoPoint> = (0..n_tracts).map(|i| grid_centroid(n_side, i)).collect();

    let devices: Vec<Device> = (0..n_devices)
        .map(|d| {
            let mut rng = rng_for(seed, u64::from(d), 0, TAG_DEVICE);
            let home_tract = rng.gen_range(0..n_tracts);
            let work_tract = gravity_draw(&mut rng, &centroids, home_tract, &[home_tract]);
            let home_pos = position_in_tract(&mut rng, n_side, home_tract);
            let work_pos = position_in_tract(&mut rng, n_side, work_tract);
            Device {
                home_tract,
                work_tract,
                home_pos,
                work_pos,
            }
        })
        .collect();

    SyntheticWorld {
        seed,
        n_side,
        devices,
        geoids,
    }
}

fn grid_centroid(n_side: u32, tract: u32) -> GeoPoint {
    let row = tract / n_side;
    let col = tract % n_side;
    GeoPoint {
        lat: GRID_LAT0 + (f64::from(row) + 0.5) * TRACT_SIDE_DEG,
        lon: GRID_LON0 + (f64::from(col) + 0.5) * TRACT_SIDE_DEG,
    }
}

fn position_in_tract(rng: &mut ChaCha8Rng, n_side: u32, tract: u32) -> GeoPoint {
    let row = tract / n_side;
    let col = tract % n_side;
    let u = POSITION_MARGIN + rng.gen::<f64>() * (1.0 - 2.0 * POSITION_MARGIN);
    let v = POSITION_MARGIN + rng.gen::<f64>() * (1.0 - 2.0 * POSITION_MARGIN);
    GeoPoint {
        lat: GRID_LAT0 + (f64::from(row) + u) * TRACT_SIDE_DEG,
        lon: GRID_LON0 + (f64::from(col) + v) * TRACT_SIDE_DEG,
    }
}

/// Weighted draw over tracts with kernel 1/(1 + d_km^2) from `from`,
/// skipping `exclude`.
fn gravity_draw(rng: &mut ChaCha8Rng, centroids: &[GeoPoint], from: u32, exclude: &[u32]) -> u32 {
    let origin = centroids[from as usize];
    let weights: Vec<f64> = centroids
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            if exclude.contains(&(j as u32)) {
                0.0
            } else {
                let d_km = haversine(origin, c) / 1000.0;
                1.0 / (1.0 + d_km * d_km)
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (j, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return j as u32;
        }
    }
    (centroids.len() - 1) as u32
}

impl SyntheticWorld {
    pub fn county_fips(&self) -> &str {
        SYNTH_COUNTY_FIPS
    }

    pub fn n_tracts(&self) -> u32 {
        self.n_side * self.n_side
    }

    pub fn geoid(&self, tract: u32) -> &str {
        &self.geoids[tract as usize]
    }

    pub fn tract_centroid(&self, tract: u32) -> GeoPoint {
        grid_centroid(self.n_side, tract)
    }

    /// GeoJSON feature collection of the tract grid, loadable by the
    /// geodata module.
    pub fn to_geojson(&self) -> String {
        let mut features = Vec::with_capacity(self.n_tracts() as usize);
        for t in 0..self.n_tracts() {
            let row = t / self.n_side;
            let col = t % self.n_side;
            let lat0 = GRID_LAT0 + f64::from(row) * TRACT_SIDE_DEG;
            let lat1 = lat0 + TRACT_SIDE_DEG;
            let lon0 = GRID_LON0 + f64::from(col) * TRACT_SIDE_DEG;
            let lon1 = lon0 + TRACT_SIDE_DEG;
            features.push(format!(
                concat!(
                    r#"{{"type":"Feature","properties":{{"GEOID":"{geoid}"}},"#,
                    r#""geometry":{{"type":"Polygon","coordinates":"#,
                    r#"[[[{lon0},{lat0}],[{lon1},{lat0}],[{lon1},{lat1}],[{lon0},{lat1}],[{lon0},{lat0}]]]}}}}"#
                ),
                geoid = self.geoid(t),
                lon0 = lon0,
                lat0 = lat0,
                lon1 = lon1,
                lat1 = lat1,
            ));
        }
        format!(
            "{{\"type\":\"FeatureCollection\",\"features\":[\n{}\n]}}\n",
            features.join(",\n")
        )
    }

    /// The device's stays for one calendar day (UTC), clipped to the day:
    /// home until the jittered departure, work, an optional leisure stop,
    /// then home again. Consecutive stays always sit in different tracts.
    pub fn day_plan(&self, device: u32, date: Date) -> Vec<PlanSegment> {
        let dev = &self.devices[device as usize];
        let mut rng = rng_for(
            self.seed,
            u64::from(device),
            date.days() as u64,
            TAG_SCHEDULE,
        );
        let day_start = date.start_unix(0);
        let day_end = day_start + SECONDS_PER_DAY - 1;

        let dep_home = day_start + rng.gen_range(27_000..=30_600); // 07:30-08:30
        let travel_to_work = travel_seconds(dev.home_pos, dev.work_pos);
        let arr_work = dep_home + travel_to_work;
        let dep_work = arr_work + rng.gen_range(28_800..=32_400); // 8-9 h

        let mut segments = vec![
            PlanSegment {
                tract: dev.home_tract,
                pos: dev.home_pos,
                start_t: day_start,
                end_t: dep_home,
            },
            PlanSegment {
                tract: dev.work_tract,
                pos: dev.work_pos,
                start_t: arr_work,
                end_t: dep_work,
            },
        ];

        let mut last_pos = dev.work_pos;
        let mut cursor = dep_work;
        if rng.gen::<f64>() < LEISURE_PROB {
            let centroids: Vec<GeoPoint> = (0..self.n_tracts())
                .map(|t| self.tract_centroid(t))
                .collect();
            let leisure_tract = gravity_draw(
                &mut rng,
                &centroids,
                dev.work_tract,
                &[dev.work_tract, dev.home_tract],
            );
            let leisure_pos = position_in_tract(&mut rng, self.n_side, leisure_tract);
            let arr = cursor + travel_seconds(last_pos, leisure_pos);
            let dep = arr + rng.gen_range(3_600..=7_200); // 1-2 h
            segments.push(PlanSegment {
                tract: leisure_tract,
                pos: leisure_pos,
                start_t: arr,
                end_t: dep,
            });
            last_pos = leisure_pos;
            cursor = dep;
        }

        let arr_home = cursor + travel_seconds(last_pos, dev.home_pos);
        segments.push(PlanSegment {
            tract: dev.home_tract,
            pos: dev.home_pos,
            start_t: arr_home,
            end_t: day_end,
        });
        segments
    }

    /// True trips of one device-day, straight from the plan.
    pub fn ground_truth_trips(&self, device: u32, date: Date) -> Vec<GroundTruthTrip> {
        let plan = self.day_plan(device, date);
        plan.windows(2)
            .map(|pair| GroundTruthTrip {
                date,
                device_id: device_id(device),
                origin_geoid: self.geoid(pair[0].tract).to_string(),
                dest_geoid: self.geoid(pair[1].tract).to_string(),
                depart_t: pair[0].end_t,
                arrive_t: pair[1].start_t,
            })
            .collect()
    }

    /// All true trips over a date range, ordered by (date, device, depart).
    pub fn ground_truth_range(&self, start: Date, end: Date) -> Vec<GroundTruthTrip> {
        let mut out = Vec::new();
        for date in Date::range_inclusive(start, end) {
            for device in 0..self.devices.len() as u32 {
                out.extend(self.ground_truth_trips(device, date));
            }
        }
        out
    }
}

fn travel_seconds(a: GeoPoint, b: GeoPoint) -> i64 {
    let s = (haversine(a, b) / TRAVEL_SPEED_M_S).round() as i64;
    s.max(60)
}

/// The device panel one provider observes: a stable subset drawn once per
/// (emit seed, provider, device), identical across days.
pub fn provider_panel(
    world: &SyntheticWorld,
    profile: &ProviderProfile,
    emit_seed: u64,
) -> Vec<u32> {
    let tag = TAG_PANEL ^ fnv1a(&profile.name);
    (0..world.devices.len() as u32)
        .filter(|&d| {
            let mut rng = rng_for(emit_seed, u64::from(d), 0, tag);
            rng.gen::<f64>() < profile.penetration
        })
        .collect()
}

/// One provider-day of pings: a ping at every stay entry and exit plus
/// exponential-gap pings inside the stay, Gaussian position noise, and
/// independent per-ping dropout. Rows sort by (t, device).
pub fn emit_day_pings(
    world: &SyntheticWorld,
    profile: &ProviderProfile,
    date: Date,
    emit_seed: u64,
    panel: &[u32],
) -> Vec<Ping> {
    let tag = TAG_PINGS ^ fnv1a(&profile.name);
    let mut pings: Vec<Ping> = panel
        .par_iter()
        .map(|&device| {
            let mut rng = rng_for(emit_seed, u64::from(device), date.days() as u64, tag);
            let id = device_id(device);
            let mut out = Vec::new();
            for seg in world.day_plan(device, date) {
                let mut ts = vec![seg.start_t];
                let mut t = seg.start_t;
                loop {
                    t += exp_gap(&mut rng, profile.ping_interval_s);
                    if t >= seg.end_t {
                        break;
                    }
                    ts.push(t);
                }
                ts.push(seg.end_t);
                for t in ts {
                    if profile.dropout_p > 0.0 && rng.gen::<f64>() < profile.dropout_p {
                        continue;
                    }
                    let pos = if profile.noise_sigma_m > 0.0 {
                        jitter(&mut rng, seg.pos, profile.noise_sigma_m)
                    } else {
                        seg.pos
                    };
                    out.push(Ping {
                        device_id: id.clone(),
                        t,
                        pos,
                    });
                }
            }
            out
        })
        .flatten()
        .collect();
    pings.sort_by(|a, b| a.t.cmp(&b.t).then_with(|| a.device_id.cmp(&b.device_id)));
    pings
}

fn exp_gap(rng: &mut ChaCha8Rng, mean_s: f64) -> i64 {
    let u: f64 = rng.gen();
    let gap = -(1.0 - u).ln() * mean_s;
    (gap.round() as i64).max(1)
}

/// Gaussian position noise via Box-Muller, sigma in meters.
fn jitter(rng: &mut ChaCha8Rng, pos: GeoPoint, sigma_m: f64) -> GeoPoint {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let r = (-2.0 * (1.0 - u1).ln()).sqrt();
    let z0 = r * (2.0 * std::f64::consts::PI * u2).cos();
    let z1 = r * (2.0 * std::f64::consts::PI * u2).sin();
    let meters_per_deg_lat = crate::geodata::EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    let meters_per_deg_lon = meters_per_deg_lat * pos.lat.to_radians().cos();
    GeoPoint {
        lat: pos.lat + z0 * sigma_m / meters_per_deg_lat,
        lon: pos.lon + z1 * sigma_m / meters_per_deg_lon,
    }
}

// --- files -----------------------------------------------------------------

pub const PING_FILE_HEADER: &str = "device_id,timestamp,lat,lon";
pub const GROUND_TRUTH_HEADER: &str = "date,device_id,o_geoid,d_geoid,depart_t,arrive_t";

pub fn write_pings<W: Write>(mut w: W, pings: &[Ping]) -> std::io::Result<()> {
    writeln!(w, "{PING_FILE_HEADER}")?;
    for p in pings {
        writeln!(w, "{},{},{},{}", p.device_id, p.t, p.pos.lat, p.pos.lon)?;
    }
    Ok(())
}

pub fn write_ground_truth<W: Write>(mut w: W, trips: &[GroundTruthTrip]) -> std::io::Result<()> {
    writeln!(w, "{GROUND_TRUTH_HEADER}")?;
    for t in trips {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            t.date, t.device_id, t.origin_geoid, t.dest_geoid, t.depart_t, t.arrive_t
        )?;
    }
    Ok(())
}

pub fn read_ground_truth<R: BufRead>(reader: R) -> std::io::Result<Vec<GroundTruthTrip>> {
    let bad = |line: usize, what: &str| {
        std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("ground truth line {line}: {what}"),
        )
    };
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(i + 1, "expected 6 columns"));
        }
        out.push(GroundTruthTrip {
            date: f[0].parse().map_err(|_| bad(i + 1, "bad date"))?,
            device_id: f[1].to_string(),
            origin_geoid: f[2].to_string(),
            dest_geoid: f[3].to_string(),
            depart_t: f[4].parse().map_err(|_| bad(i + 1, "bad depart_t"))?,
            arrive_t: f[5].parse().map_err(|_| bad(i + 1, "bad arrive_t"))?,
        });
    }
    Ok(out)
}
