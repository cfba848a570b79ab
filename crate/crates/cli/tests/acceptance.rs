//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! Oracles here are written fresh against the math, independent of the
//! library paths they check: all-subset motif scans with union-find
//! connectivity, Floyd-Warshall paths, direct triple counting, two-pass
//! Pearson, and a memoized full-table DTW.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mobnet_cli::config;
use mobnet_cli::manifest::sha256_file;
use mobnet_cli::pipeline::{self, with_pool, Scale, SynthOptions};
use mobnet_core::date::Date;
use mobnet_core::geodata::{haversine, GeoPoint, TractIndex};
use mobnet_core::graph::{gen, UGraph};
use mobnet_core::ingest;
use mobnet_core::macro_metrics::{
    assortativity, average_clustering, average_degree, average_shortest_path, density, diameter,
    giant_component_size, modularity, modularity_of_partition,
};
use mobnet_core::micro_metrics::rank_tracts;
use mobnet_core::motifs::{
    motif_attributes, motif_census, moving_average_7d, sample_census, AttributeConfig, VolumeStat,
};
use mobnet_core::similarity::{cosine, dtw, euclidean, mape, pearson, MapeMode};
use mobnet_core::synth::{self, ProviderProfile};

// --- independent oracles -----------------------------------------------

fn oracle_classify(g: &UGraph, quad: [u32; 4]) -> usize {
    let mut parent = [0usize, 1, 2, 3];
    fn find(parent: &mut [usize; 4], x: usize) -> usize {
        if parent[x] != x {
            parent[x] = find(parent, parent[x]);
        }
        parent[x]
    }
    let mut deg = [0u32; 4];
    let mut edges = 0u32;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if g.has_edge(quad[i], quad[j]) {
                edges += 1;
                deg[i] += 1;
                deg[j] += 1;
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let root = find(&mut parent, 0);
    if !(1..4).all(|i| find(&mut parent, i) == root) {
        return 0;
    }
    deg.sort_unstable();
    match (edges, deg) {
        (6, _) => 1,
        (5, _) => 2,
        (4, [2, 2, 2, 2]) => 3,
        (4, _) => 4,
        (3, [1, 1, 2, 2]) => 5,
        _ => 6,
    }
}

fn oracle_census(g: &UGraph) -> [u64; 7] {
    let n = g.node_count() as u32;
    let mut counts = [0u64; 7];
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                for d in (c + 1)..n {
                    counts[oracle_classify(g, [a, b, c, d])] += 1;
                }
            }
        }
    }
    counts
}

fn oracle_attr_medians(g: &UGraph, centroids: &[GeoPoint]) -> ([Option<f64>; 7], [Option<f64>; 7]) {
    let n = g.node_count() as u32;
    let mut dists: [Vec<f64>; 7] = Default::default();
    let mut vols: [Vec<f64>; 7] = Default::default();
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                for d in (c + 1)..n {
                    let quad = [a, b, c, d];
                    let t = oracle_classify(g, quad);
                    if t == 0 {
                        continue;
                    }
                    let mut dist_sum = 0.0;
                    let mut vol_sum = 0u64;
                    let mut k = 0u32;
                    for i in 0..4 {
                        for j in (i + 1)..4 {
                            if let Some(w) = g.weight_between(quad[i], quad[j]) {
                                dist_sum += haversine(
                                    centroids[quad[i] as usize],
                                    centroids[quad[j] as usize],
                                );
                                vol_sum += w;
                                k += 1;
                            }
                        }
                    }
                    dists[t].push(dist_sum / f64::from(k));
                    vols[t].push(vol_sum as f64 / f64::from(k));
                }
            }
        }
    }
    let median = |mut v: Vec<f64>| {
        if v.is_empty() {
            None
        } else {
            v.sort_by(f64::total_cmp);
            Some(v[(v.len() - 1) / 2])
        }
    };
    let mut md: [Option<f64>; 7] = Default::default();
    let mut mv: [Option<f64>; 7] = Default::default();
    for t in 1..7 {
        md[t] = median(std::mem::take(&mut dists[t]));
        mv[t] = median(std::mem::take(&mut vols[t]));
    }
    (md, mv)
}

fn seeded_er_graph(case: usize) -> (UGraph, Vec<GeoPoint>) {
    let seed = case as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xACCE);
    let n = 20 + case % 6;
    let p = [0.1, 0.3, 0.5][case % 3];
    let pairs = gen::gnp_edges(n, p, seed);
    let weighted: Vec<(u32, u32, u64)> = pairs
        .iter()
        .map(|&(a, b)| (a, b, rng.gen_range(1..=25)))
        .collect();
    let g = UGraph::from_edges(n, &weighted).unwrap();
    let centroids = (0..n)
        .map(|_| GeoPoint::new(rng.gen_range(40.0..41.0), rng.gen_range(-89.0..-88.0)).unwrap())
        .collect();
    (g, centroids)
}

#[test]
fn criterion_01_motif_census_matches_brute_force() {
    let start = Instant::now();
    for case in 0..50 {
        let (g, _) = seeded_er_graph(case);
        let census = motif_census(&g).unwrap();
        assert_eq!(census.counts, oracle_census(&g), "case {case}");
        let share_sum: f64 = census.shares().iter().sum();
        assert!((share_sum - 1.0).abs() < 1e-12, "case {case}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "[PASS] criterion 1: exhaustive census equals all-C(n,4) oracle on 50 seeded graphs in {elapsed:?}"
    );
}

#[test]
fn criterion_02_motif_attribute_medians_match_oracle() {
    for case in 0..50 {
        let (g, centroids) = seeded_er_graph(case);
        let census = motif_census(&g).unwrap();
        let attrs = motif_attributes(
            &g,
            &centroids,
            &census,
            VolumeStat::MeanEdgeWeight,
            &AttributeConfig::default(),
        )
        .unwrap();
        let (md, mv) = oracle_attr_medians(&g, &centroids);
        for t in 1..7 {
            assert_eq!(
                attrs.median_avg_distance_m[t], md[t],
                "case {case} type {t}"
            );
            assert_eq!(attrs.median_avg_volume[t], mv[t], "case {case} type {t}");
        }
    }
    println!("[PASS] criterion 2: attribute medians equal sort-based oracle medians exactly on 50 graphs");
}

const INF: u32 = u32::MAX / 4;

fn floyd_warshall(g: &UGraph) -> Vec<Vec<u32>> {
    let n = g.node_count();
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (u, v, _) in g.edges() {
        d[u as usize][v as usize] = 1;
        d[v as usize][u as usize] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k].saturating_add(d[k][j]);
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn oracle_macro(g: &UGraph) -> (Option<f64>, Option<u32>, usize, Option<f64>, Option<f64>) {
    let d = floyd_warshall(g);
    let n = d.len();
    let mut assigned = vec![false; n];
    let mut best: Vec<usize> = Vec::new();
    for s in 0..n {
        if assigned[s] {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&j| d[s][j] < INF).collect();
        for &m in &members {
            assigned[m] = true;
        }
        if members.len() > best.len() {
            best = members;
        }
    }
    let (aspl, diam) = if best.len() < 2 {
        (None, None)
    } else {
        let mut sum = 0u64;
        let mut max = 0u32;
        for &i in &best {
            for &j in &best {
                if i != j {
                    sum += u64::from(d[i][j]);
                    max = max.max(d[i][j]);
                }
            }
        }
        (
            Some(sum as f64 / (best.len() * (best.len() - 1)) as f64),
            Some(max),
        )
    };

    let clustering = if n == 0 {
        None
    } else {
        let mut total = 0.0;
        for v in 0..n as u32 {
            let nbrs = g.neighbors(v);
            if nbrs.len() < 2 {
                continue;
            }
            let mut closed = 0u64;
            let mut pairs = 0u64;
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    pairs += 1;
                    if g.has_edge(a, b) {
                        closed += 1;
                    }
                }
            }
            total += closed as f64 / pairs as f64;
        }
        Some(total / n as f64)
    };

    let assort = if g.edge_count() == 0 {
        None
    } else {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (u, v, _) in g.edges() {
            let (du, dv) = (g.degree(u) as f64, g.degree(v) as f64);
            xs.push(du);
            ys.push(dv);
            xs.push(dv);
            ys.push(du);
        }
        let m = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / m;
        let my = ys.iter().sum::<f64>() / m;
        let mut cov = 0.0;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            cov += (x - mx) * (y - my);
            vx += (x - mx) * (x - mx);
            vy += (y - my) * (y - my);
        }
        if vx == 0.0 || vy == 0.0 {
            None
        } else {
            Some(cov / (vx * vy).sqrt())
        }
    };

    (aspl, diam, best.len(), clustering, assort)
}

fn assert_close(a: Option<f64>, b: Option<f64>, what: &str, case: usize) {
    match (a, b) {
        (None, None) => {}
        (Some(x), Some(y)) => assert!((x - y).abs() < 1e-9, "case {case} {what}: {x} vs {y}"),
        _ => panic!("case {case} {what}: definedness mismatch {a:?} vs {b:?}"),
    }
}

#[test]
fn criterion_03_macro_metrics_match_brute_force() {
    for case in 0..100 {
        let n = 5 + (case * 7) % 46;
        let p = [0.05, 0.1, 0.2, 0.4, 0.7][case % 5];
        let g = UGraph::from_pairs(n, &gen::gnp_edges(n, p, case as u64 ^ 0xFACE)).unwrap();
        let (aspl, diam, giant, clustering, assort) = oracle_macro(&g);
        assert_close(
            average_degree(&g),
            Some(2.0 * g.edge_count() as f64 / n as f64),
            "avg_degree",
            case,
        );
        assert_close(average_clustering(&g), clustering, "clustering", case);
        assert_close(average_shortest_path(&g), aspl, "aspl", case);
        assert_eq!(diameter(&g), diam, "case {case} diameter");
        assert_close(assortativity(&g), assort, "assortativity", case);
        assert_close(
            density(&g),
            Some(2.0 * g.edge_count() as f64 / (n as f64 * (n as f64 - 1.0))),
            "density",
            case,
        );
        assert_eq!(giant_component_size(&g), giant, "case {case} giant");
    }

    // Closed-form spot checks.
    let k4 = UGraph::from_pairs(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
    assert_eq!(average_degree(&k4), Some(3.0));
    assert_eq!(average_clustering(&k4), Some(1.0));
    assert_eq!(average_shortest_path(&k4), Some(1.0));
    assert_eq!(density(&k4), Some(1.0));
    let star = UGraph::from_pairs(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
    assert!((assortativity(&star).unwrap() + 1.0).abs() < 1e-12);
    println!(
        "[PASS] criterion 3: macro metrics match independent oracles within 1e-9 on 100 graphs"
    );
}

#[test]
fn criterion_04_modularity_nonnegative_and_two_triangles() {
    for case in 0..100 {
        let n = 5 + (case * 11) % 46;
        let p = [0.05, 0.15, 0.3, 0.5][case % 4];
        let g = UGraph::from_pairs(n, &gen::gnp_edges(n, p, case as u64 ^ 0xBEEF)).unwrap();
        if let Some((partition, q)) = modularity(&g) {
            assert!(q >= 0.0, "case {case}: q = {q}");
            assert!((modularity_of_partition(&g, &partition) - q).abs() < 1e-12);
        }
    }
    let two_k3 = UGraph::from_pairs(6, &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]).unwrap();
    let (partition, q) = modularity(&two_k3).unwrap();
    assert!((q - 0.5).abs() < 1e-12, "q = {q}");
    assert_eq!(partition, vec![0, 0, 0, 1, 1, 1]);
    println!(
        "[PASS] criterion 4: greedy modularity Q >= 0 everywhere; two-triangle case gives Q = 0.5"
    );
}

fn oracle_dtw(a: &[f64], b: &[f64]) -> f64 {
    fn solve(a: &[f64], b: &[f64], i: usize, j: usize, memo: &mut Vec<Vec<Option<f64>>>) -> f64 {
        if let Some(v) = memo[i][j] {
            return v;
        }
        let cost = (a[i] - b[j]).abs();
        let v = match (i, j) {
            (0, 0) => cost,
            (0, _) => cost + solve(a, b, 0, j - 1, memo),
            (_, 0) => cost + solve(a, b, i - 1, 0, memo),
            _ => {
                cost + solve(a, b, i - 1, j, memo)
                    .min(solve(a, b, i, j - 1, memo))
                    .min(solve(a, b, i - 1, j - 1, memo))
            }
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len()]; a.len()];
    solve(a, b, a.len() - 1, b.len() - 1, &mut memo)
}

#[test]
fn criterion_05_dtw_matches_oracle_on_1000_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    for case in 0..1000 {
        let la = rng.gen_range(1..=29);
        let lb = rng.gen_range(1..=29);
        let a: Vec<f64> = (0..la).map(|_| rng.gen_range(0.0..10.0)).collect();
        let b: Vec<f64> = (0..lb).map(|_| rng.gen_range(0.0..10.0)).collect();
        let got = dtw(&a, &b).unwrap();
        assert_eq!(got, oracle_dtw(&a, &b), "case {case}");
        assert_eq!(dtw(&a, &a).unwrap(), 0.0);
        assert_eq!(dtw(&b, &a).unwrap(), got);
        let k = la.min(lb);
        let l1: f64 = a[..k].iter().zip(&b[..k]).map(|(x, y)| (x - y).abs()).sum();
        assert!(dtw(&a[..k], &b[..k]).unwrap() <= l1 + 1e-12);
    }
    println!("[PASS] criterion 5: DTW equals full-table oracle on 1000 pairs; identity, symmetry, L1 bound hold");
}

#[test]
fn criterion_06_ingest_round_trip_recovers_ground_truth() {
    // 250 devices x 29 days = 7250 device-days, noiseless, full panel.
    let world = synth::generate_world(8, 250, 11);
    let profile = ProviderProfile {
        name: "T".to_string(),
        penetration: 1.0,
        ping_interval_s: 600.0,
        noise_sigma_m: 0.0,
        dropout_p: 0.0,
    };
    let panel = synth::provider_panel(&world, &profile, 3);
    assert_eq!(panel.len(), 250);
    let start: Date = "2020-02-01".parse().unwrap();
    let end: Date = "2020-02-29".parse().unwrap();
    let device_days = 250 * 29;
    assert!(device_days >= 5000);

    let (idx, _) = TractIndex::load_tracts(world.to_geojson().as_bytes(), "GEOID").unwrap();
    let mut by_device: BTreeMap<String, Vec<ingest::Ping>> = BTreeMap::new();
    for date in Date::range_inclusive(start, end) {
        for p in synth::emit_day_pings(&world, &profile, date, 3, &panel) {
            by_device.entry(p.device_id.clone()).or_default().push(p);
        }
    }

    let mut truth = world.ground_truth_range(start, end);
    truth.sort_by(|a, b| {
        (a.device_id.as_str(), a.depart_t).cmp(&(b.device_id.as_str(), b.depart_t))
    });

    let mut extracted = Vec::new();
    for (device, mut pings) in by_device {
        pings.sort_by_key(|p| p.t);
        let mut stops = ingest::detect_stops(&pings, 100.0, 300).unwrap();
        ingest::assign_geoids(&mut stops, &idx);
        let (trips, dropped) = ingest::extract_trips(&stops);
        assert_eq!(dropped, 0);
        extracted.extend(trips.into_iter().map(|t| (device.clone(), t)));
    }
    extracted.sort_by(|a, b| (a.0.as_str(), a.1.depart_t).cmp(&(b.0.as_str(), b.1.depart_t)));

    assert_eq!(extracted.len(), truth.len(), "trip count mismatch");
    for ((device, trip), gt) in extracted.iter().zip(&truth) {
        assert_eq!(device, &gt.device_id);
        assert_eq!(trip.origin_geoid.as_deref(), Some(gt.origin_geoid.as_str()));
        assert_eq!(trip.dest_geoid.as_deref(), Some(gt.dest_geoid.as_str()));
        let gt_duration = gt.arrive_t - gt.depart_t;
        let delta = (trip.duration_s() - gt_duration).abs();
        assert!(
            delta as f64 <= profile.ping_interval_s,
            "duration off by {delta}s"
        );
    }
    println!(
        "[PASS] criterion 6: {} extracted trips identical to ground truth over {device_days} device-days",
        truth.len()
    );
}

// --- end-to-end determinism -------------------------------------------------

fn hash_tree(root: &Path) -> BTreeMap<String, String> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, String>) {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .unwrap()
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        paths.sort();
        for path in paths {
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, sha256_file(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn full_pipeline(dir: &Path, threads: usize) -> BTreeMap<String, String> {
    if dir.exists() {
        std::fs::remove_dir_all(dir).unwrap();
    }
    let opts = SynthOptions {
        out_dir: dir.to_path_buf(),
        tracts_side: 10,
        devices: 5000,
        world_seed: 1,
        emit_seed: 2,
        date_start: "2020-02-01".parse().unwrap(),
        date_end: "2020-02-29".parse().unwrap(),
        profiles: pipeline::default_profiles(),
    };
    with_pool(threads, || pipeline::cmd_synth(&opts)).unwrap();
    let cfg = config::load(&dir.join("config.toml")).unwrap();
    with_pool(threads, || {
        pipeline::cmd_ingest(&cfg)?;
        pipeline::cmd_build_network(&cfg)?;
        pipeline::cmd_analyze(&cfg, Scale::Macro)?;
        pipeline::cmd_analyze(&cfg, Scale::Motif)?;
        pipeline::cmd_analyze(&cfg, Scale::Micro)?;
        pipeline::cmd_compare(&cfg)?;
        pipeline::cmd_report(&cfg)
    })
    .unwrap();
    hash_tree(dir)
}

fn read_verdict_pairs(dir: &Path) -> Vec<String> {
    let mut pairs = Vec::new();
    for table in ["compare/macro_verdicts.csv", "compare/micro_verdicts.csv"] {
        let text = std::fs::read_to_string(dir.join(table)).unwrap();
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            pairs.push(cols[3].to_string());
        }
    }
    pairs
}

#[test]
fn criterion_07_and_08_end_to_end_determinism_and_sensitivity() {
    let start = Instant::now();
    let base = std::env::temp_dir().join("mobnet_acceptance_e2e");
    let dir_a = base.join("run_a");
    let dir_b = base.join("run_b");

    let digests_a = full_pipeline(&dir_a, 8);
    let digests_b = full_pipeline(&dir_b, 8);
    assert_eq!(digests_a, digests_b, "rerun at 8 threads not bit-identical");
    std::fs::remove_dir_all(&dir_b).unwrap();

    let digests_c = full_pipeline(&dir_b, 1);
    assert_eq!(digests_a, digests_c, "1-thread run not bit-identical");
    std::fs::remove_dir_all(&dir_b).unwrap();

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 600, "took {elapsed:?}");
    println!(
        "[PASS] criterion 7: three full runs bit-identical across reruns and thread counts {{1, 8}} in {elapsed:?}"
    );

    // Criterion 8: provider-induced divergence shows up as a non-constant
    // verdict table.
    let pairs = read_verdict_pairs(&dir_a);
    assert!(
        pairs.len() >= 8,
        "expected 8 verdict rows, got {}",
        pairs.len()
    );
    let mut distinct = pairs.clone();
    distinct.sort();
    distinct.dedup();
    assert!(distinct.len() >= 2, "verdict table is constant: {pairs:?}");
    std::fs::remove_dir_all(&base).unwrap();
    println!(
        "[PASS] criterion 8: verdict table names {} distinct closest pairs across metrics",
        distinct.len()
    );
}

#[test]
fn criterion_09_scale_anchored_to_published_network_size() {
    // Wayne-scale reference: 609 nodes, 30328 edges.
    let pairs = gen::gnm_edges(609, 30_328, 42);
    let g = UGraph::from_pairs(609, &pairs).unwrap();

    let start = Instant::now();
    let census = motif_census(&g).unwrap();
    let census_time = start.elapsed();
    assert!(census_time.as_secs() < 300, "counts took {census_time:?}");
    assert_eq!(census.counts.iter().sum::<u64>(), census.n_quads_total);

    let centroids: Vec<GeoPoint> = (0..609)
        .map(|i| {
            GeoPoint::new(
                40.0 + 0.01 * f64::from(i / 25),
                -88.0 + 0.01 * f64::from(i % 25),
            )
            .unwrap()
        })
        .collect();
    let start = Instant::now();
    let sampled = sample_census(&g, &centroids, 100_000, 7, VolumeStat::MeanEdgeWeight).unwrap();
    let sample_time = start.elapsed();
    assert!(sample_time.as_secs() < 60, "sampling took {sample_time:?}");
    let attrs = sampled.attributes.as_ref().unwrap();
    assert!(attrs.median_avg_volume.iter().skip(1).any(Option::is_some));

    // Sampled shares track exact shares on a graph where exact is cheap.
    let small = UGraph::from_pairs(100, &gen::gnm_edges(100, 2000, 99)).unwrap();
    let small_centroids: Vec<GeoPoint> = (0..100)
        .map(|i| GeoPoint::new(0.01 * f64::from(i % 10), 0.01 * f64::from(i / 10)).unwrap())
        .collect();
    let exact = motif_census(&small).unwrap();
    let approx = sample_census(
        &small,
        &small_centroids,
        100_000,
        7,
        VolumeStat::MeanEdgeWeight,
    )
    .unwrap();
    for t in 0..7 {
        let err = (exact.shares()[t] - approx.shares()[t]).abs();
        assert!(err < 0.01, "type {t} share error {err}");
    }
    println!(
        "[PASS] criterion 9: 609-node/30328-edge exhaustive census in {census_time:?}, 100k-quad sampling in {sample_time:?}, sampled share error < 0.01"
    );
}

#[test]
fn criterion_10_unit_examples_pass_as_tagged() {
    // Seven-day moving average.
    assert_eq!(moving_average_7d(&[2.5; 9]), vec![2.5; 9]);
    let ma = moving_average_7d(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 7.0]);
    assert!((ma[6] - 1.0).abs() < 1e-15);
    let ma = moving_average_7d(&[3.0, 6.0, 9.0, 12.0]);
    assert!((ma[2] - 6.0).abs() < 1e-15);

    // Rank with ties.
    assert_eq!(
        rank_tracts(&[Some(5.0), Some(3.0), Some(1.0)]),
        vec![1.0, 2.0, 3.0]
    );
    assert_eq!(
        rank_tracts(&[Some(5.0), Some(5.0), Some(1.0)]),
        vec![1.5, 1.5, 3.0]
    );
    assert_eq!(rank_tracts(&[Some(2.0)]), vec![1.0]);

    // Cosine.
    let a = [1.0, 2.0];
    assert!((cosine(&a, &a).unwrap().unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), Some(0.0));
    assert!((cosine(&[1.0, 2.0], &[-1.0, -2.0]).unwrap().unwrap() + 1.0).abs() < 1e-15);

    // MAPE.
    assert_eq!(
        mape(&[2.0, 4.0], &[2.0, 4.0], MapeMode::BaseA)
            .unwrap()
            .value,
        0.0
    );
    assert!((mape(&[2.0], &[3.0], MapeMode::BaseA).unwrap().value - 0.5).abs() < 1e-15);
    assert!((mape(&[2.0], &[3.0], MapeMode::Symmetric).unwrap().value - 0.4).abs() < 1e-15);

    // Pearson.
    let xs = [1.0, 2.0, 5.0, 7.0];
    let affine: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
    assert!((pearson(&xs, &affine).unwrap().unwrap() - 1.0).abs() < 1e-12);
    let negated: Vec<f64> = xs.iter().map(|x| -x).collect();
    assert!((pearson(&xs, &negated).unwrap().unwrap() + 1.0).abs() < 1e-12);
    assert_eq!(pearson(&[3.0, 3.0, 3.0], &xs[..3]).unwrap(), None);

    // Euclidean.
    assert_eq!(euclidean(&xs, &xs).unwrap(), 0.0);
    assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
    assert!(euclidean(&[], &[]).is_err());

    println!("[PASS] criterion 10: moving-average, rank, cosine, MAPE, Pearson, Euclidean unit examples all exact");
}
