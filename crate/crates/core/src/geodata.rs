//! Census-tract geometries, point-to-tract assignment, and great-circle
//! distance.
//!
//! The index is immutable after load; lookups are safe to run concurrently.

use std::collections::BTreeMap;

use rstar::{RTree, RTreeObject, AABB};
use thiserror::Error;

/// IUGG mean Earth radius, meters. One fixed constant keeps every distance
/// in the pipeline bit-reproducible.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("document is not a FeatureCollection")]
    NotFeatureCollection,
    #[error("no tracts in feature collection")]
    NoTracts,
    #[error("duplicate GEOID {0:?}")]
    DuplicateGeoid(String),
    #[error("tract {geoid:?}: ring is not closed (first vertex must equal last)")]
    UnclosedRing { geoid: String },
    #[error("tract {geoid:?}: ring has {got} vertices, need at least 4")]
    ShortRing { geoid: String, got: usize },
}

/// A position in degrees, latitude first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Returns `None` when either coordinate is out of range or non-finite.
    pub fn new(lat: f64, lon: f64) -> Option<Self> {
        let p = GeoPoint { lat, lon };
        p.is_valid().then_some(p)
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Great-circle distance in meters on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat_a = a.lat.to_radians();
    let lat_b = b.lat.to_radians();
    let d_lat = (b.lat - a.lat).to_radians();
    let d_lon = (b.lon - a.lon).to_radians();
    let h = (d_lat * 0.5).sin().powi(2) + lat_a.cos() * lat_b.cos() * (d_lon * 0.5).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().atan2((1.0 - h).sqrt())
}

/// Vertices in GeoJSON order: `[lon, lat]`, first vertex repeated at the end.
type Ring = Vec<[f64; 2]>;

#[derive(Debug, Clone)]
struct Polygon {
    outer: Ring,
    holes: Vec<Ring>,
}

#[derive(Debug, Clone)]
struct Tract {
    geoid: String,
    polygons: Vec<Polygon>,
    centroid: GeoPoint,
    bbox: [f64; 4], // min_lon, min_lat, max_lon, max_lat
}

#[derive(Debug, Clone)]
struct TractEnvelope {
    aabb: AABB<[f64; 2]>,
    tract_idx: u32,
}

impl RTreeObject for TractEnvelope {
    type Envelope = AABB<[f64; 2]>;

    fn envelope(&self) -> Self::Envelope {
        self.aabb
    }
}

/// Immutable spatial index over one county's census tracts.
pub struct TractIndex {
    tracts: Vec<Tract>,
    by_geoid: BTreeMap<String, u32>,
    tree: RTree<TractEnvelope>,
}

/// Per-feature problems that did not abort the load.
#[derive(Debug, Default)]
pub struct LoadDiagnostics {
    pub rejected: Vec<String>,
}

impl TractIndex {
    /// Parses a GeoJSON feature collection (RFC 7946 lon/lat order) into an
    /// index. `geoid_key` names the feature property holding the tract id,
    /// conventionally `"GEOID"`.
    ///
    /// Features without the id property or without Polygon/MultiPolygon
    /// geometry are skipped and reported in the diagnostics; duplicate ids
    /// and malformed rings abort the load.
    pub fn load_tracts(
        geojson: &[u8],
        geoid_key: &str,
    ) -> Result<(TractIndex, LoadDiagnostics), GeoError> {
        let doc: serde_json::Value = serde_json::from_slice(geojson)?;
        if doc.get("type").and_then(|t| t.as_str()) != Some("FeatureCollection") {
            return Err(GeoError::NotFeatureCollection);
        }
        let features = doc
            .get("features")
            .and_then(|f| f.as_array())
            .ok_or(GeoError::NotFeatureCollection)?;

        let mut diags = LoadDiagnostics::default();
        let mut tracts: Vec<Tract> = Vec::new();
        let mut by_geoid: BTreeMap<String, u32> = BTreeMap::new();

        for (i, feature) in features.iter().enumerate() {
            let geoid = match feature.get("properties").and_then(|p| p.get(geoid_key)) {
                Some(serde_json::Value::String(s)) if !s.is_empty() => s.clone(),
                Some(serde_json::Value::Number(n)) => n.to_string(),
                _ => {
                    diags
                        .rejected
                        .push(format!("feature {i}: missing property {geoid_key:?}"));
                    continue;
                }
            };
            let Some(geometry) = feature.get("geometry") else {
                diags
                    .rejected
                    .push(format!("feature {i} ({geoid}): no geometry"));
                continue;
            };
            let polygons = match parse_geometry(geometry, &geoid)? {
                Some(p) => p,
                None => {
                    diags.rejected.push(format!(
                        "feature {i} ({geoid}): geometry is not Polygon/MultiPolygon"
                    ));
                    continue;
                }
            };
            if by_geoid.contains_key(&geoid) {
                return Err(GeoError::DuplicateGeoid(geoid));
            }
            let centroid = outer_rings_centroid(&polygons);
            let bbox = polygons_bbox(&polygons);
            by_geoid.insert(geoid.clone(), tracts.len() as u32);
            tracts.push(Tract {
                geoid,
                polygons,
                centroid,
                bbox,
            });
        }

        if tracts.is_empty() {
            return Err(GeoError::NoTracts);
        }

        let envelopes = tracts
            .iter()
            .enumerate()
            .map(|(i, t)| TractEnvelope {
                aabb: AABB::from_corners([t.bbox[0], t.bbox[1]], [t.bbox[2], t.bbox[3]]),
                tract_idx: i as u32,
            })
            .collect();
        let tree = RTree::bulk_load(envelopes);

        Ok((
            TractIndex {
                tracts,
                by_geoid,
                tree,
            },
            diags,
        ))
    }

    pub fn len(&self) -> usize {
        self.tracts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracts.is_empty()
    }

    /// Geoids in lexicographic order.
    pub fn geoids(&self) -> impl Iterator<Item = &str> {
        self.by_geoid.keys().map(String::as_str)
    }

    pub fn contains_geoid(&self, geoid: &str) -> bool {
        self.by_geoid.contains_key(geoid)
    }

    pub fn centroid(&self, geoid: &str) -> Option<GeoPoint> {
        self.by_geoid
            .get(geoid)
            .map(|&i| self.tracts[i as usize].centroid)
    }

    /// Geoid of the tract containing `p`, or `None` when the point is
    /// outside every tract.
    ///
    /// Containment uses the even-odd rule after bbox-tree candidate
    /// filtering. A point exactly on an edge belongs to the
    /// lexicographically smallest candidate geoid.
    pub fn locate(&self, p: GeoPoint) -> Option<&str> {
        let probe = AABB::from_point([p.lon, p.lat]);
        let mut candidates: Vec<u32> = self
            .tree
            .locate_in_envelope_intersecting(&probe)
            .map(|e| e.tract_idx)
            .collect();
        candidates.sort_by(|&a, &b| {
            self.tracts[a as usize]
                .geoid
                .cmp(&self.tracts[b as usize].geoid)
        });
        self.locate_in(&candidates, p)
    }

    /// Reference scan over every polygon, bypassing the spatial index.
    /// Exists so the bbox-tree filtering can be checked for equivalence.
    pub fn locate_brute(&self, p: GeoPoint) -> Option<&str> {
        let mut candidates: Vec<u32> = (0..self.tracts.len() as u32).collect();
        candidates.sort_by(|&a, &b| {
            self.tracts[a as usize]
                .geoid
                .cmp(&self.tracts[b as usize].geoid)
        });
        self.locate_in(&candidates, p)
    }

    fn locate_in(&self, sorted_candidates: &[u32], p: GeoPoint) -> Option<&str> {
        for &idx in sorted_candidates {
            let tract = &self.tracts[idx as usize];
            if tract
                .polygons
                .iter()
                .any(|poly| polygon_contains(poly, p.lon, p.lat))
            {
                return Some(&tract.geoid);
            }
        }
        None
    }
}

fn parse_geometry(
    geometry: &serde_json::Value,
    geoid: &str,
) -> Result<Option<Vec<Polygon>>, GeoError> {
    let gtype = geometry.get("type").and_then(|t| t.as_str()).unwrap_or("");
    let coords = geometry.get("coordinates");
    match (gtype, coords) {
        ("Polygon", Some(c)) => Ok(parse_polygon(c, geoid)?.map(|p| vec![p])),
        ("MultiPolygon", Some(c)) => {
            let Some(parts) = c.as_array() else {
                return Ok(None);
            };
            let mut polygons = Vec::with_capacity(parts.len());
            for part in parts {
                match parse_polygon(part, geoid)? {
                    Some(p) => polygons.push(p),
                    None => return Ok(None),
                }
            }
            if polygons.is_empty() {
                Ok(None)
            } else {
                Ok(Some(polygons))
            }
        }
        _ => Ok(None),
    }
}

fn parse_polygon(coords: &serde_json::Value, geoid: &str) -> Result<Option<Polygon>, GeoError> {
    let Some(rings) = coords.as_array() else {
        return Ok(None);
    };
    if rings.is_empty() {
        return Ok(None);
    }
    let mut parsed: Vec<Ring> = Vec::with_capacity(rings.len());
    for ring in rings {
        let Some(vertices) = ring.as_array() else {
            return Ok(None);
        };
        let mut out: Ring = Vec::with_capacity(vertices.len());
        for v in vertices {
            let pair = v.as_array().and_then(|a| {
                let lon = a.first()?.as_f64()?;
                let lat = a.get(1)?.as_f64()?;
                Some([lon, lat])
            });
            match pair {
                Some(p) => out.push(p),
                None => return Ok(None),
            }
        }
        if out.len() < 4 {
            return Err(GeoError::ShortRing {
                geoid: geoid.to_string(),
                got: out.len(),
            });
        }
        if out.first() != out.last() {
            return Err(GeoError::UnclosedRing {
                geoid: geoid.to_string(),
            });
        }
        parsed.push(out);
    }
    let outer = parsed.remove(0);
    Ok(Some(Polygon {
        outer,
        holes: parsed,
    }))
}

/// Area-weighted planar centroid of the outer rings, in lon/lat space.
/// Tracts are small enough that the planar approximation is negligible at
/// county scale, and the computation is deterministic.
fn outer_rings_centroid(polygons: &[Polygon]) -> GeoPoint {
    let mut total_area = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for poly in polygons {
        let (area, x, y) = ring_centroid(&poly.outer);
        total_area += area.abs();
        cx += x * area.abs();
        cy += y * area.abs();
    }
    if total_area > 0.0 {
        GeoPoint {
            lat: cy / total_area,
            lon: cx / total_area,
        }
    } else {
        // Degenerate zero-area ring: fall back to the vertex mean.
        let mut n = 0.0;
        let (mut sx, mut sy) = (0.0, 0.0);
        for poly in polygons {
            for v in &poly.outer[..poly.outer.len() - 1] {
                sx += v[0];
                sy += v[1];
                n += 1.0;
            }
        }
        GeoPoint {
            lat: sy / n,
            lon: sx / n,
        }
    }
}

/// Signed shoelace area and planar centroid of one ring.
fn ring_centroid(ring: &Ring) -> (f64, f64, f64) {
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for w in ring.windows(2) {
        let [x0, y0] = w[0];
        let [x1, y1] = w[1];
        let cross = x0 * y1 - x1 * y0;
        area2 += cross;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    if area2 == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let area = area2 * 0.5;
    (area, cx / (3.0 * area2), cy / (3.0 * area2))
}

fn polygons_bbox(polygons: &[Polygon]) -> [f64; 4] {
    let mut bbox = [
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    ];
    for poly in polygons {
        for v in &poly.outer {
            bbox[0] = bbox[0].min(v[0]);
            bbox[1] = bbox[1].min(v[1]);
            bbox[2] = bbox[2].max(v[0]);
            bbox[3] = bbox[3].max(v[1]);
        }
    }
    bbox
}

/// Even-odd containment over all rings; crossing a hole boundary flips the
/// parity, so holes fall out naturally. Points exactly on any edge count as
/// contained (the caller's candidate ordering resolves ownership).
fn polygon_contains(poly: &Polygon, x: f64, y: f64) -> bool {
    if on_ring_edge(&poly.outer, x, y) {
        return true;
    }
    for hole in &poly.holes {
        if on_ring_edge(hole, x, y) {
            return true;
        }
    }
    let mut inside = ray_crossings_odd(&poly.outer, x, y);
    for hole in &poly.holes {
        if ray_crossings_odd(hole, x, y) {
            inside = !inside;
        }
    }
    inside
}

fn ray_crossings_odd(ring: &Ring, x: f64, y: f64) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let [x0, y0] = w[0];
        let [x1, y1] = w[1];
        if (y0 > y) != (y1 > y) {
            let x_cross = x0 + (y - y0) / (y1 - y0) * (x1 - x0);
            if x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_ring_edge(ring: &Ring, x: f64, y: f64) -> bool {
    for w in ring.windows(2) {
        let [x0, y0] = w[0];
        let [x1, y1] = w[1];
        let cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0);
        if cross != 0.0 {
            continue;
        }
        let dot = (x - x0) * (x1 - x0) + (y - y0) * (y1 - y0);
        let len2 = (x1 - x0) * (x1 - x0) + (y1 - y0) * (y1 - y0);
        if dot >= 0.0 && dot <= len2 {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_square_geojson(geoid: &str) -> String {
        format!(
            r#"{{"type":"FeatureCollection","features":[
                {{"type":"Feature","properties":{{"GEOID":"{geoid}"}},
                  "geometry":{{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}}}
            ]}}"#
        )
    }

    #[test]
    fn unit_square_centroid() {
        let doc = unit_square_geojson("00000000001");
        let (idx, diags) = TractIndex::load_tracts(doc.as_bytes(), "GEOID").unwrap();
        assert!(diags.rejected.is_empty());
        let c = idx.centroid("00000000001").unwrap();
        assert!((c.lat - 0.5).abs() < 1e-12);
        assert!((c.lon - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_collection_is_an_error() {
        let doc = r#"{"type":"FeatureCollection","features":[]}"#;
        assert!(matches!(
            TractIndex::load_tracts(doc.as_bytes(), "GEOID"),
            Err(GeoError::NoTracts)
        ));
    }

    #[test]
    fn duplicate_geoid_is_an_error() {
        let doc = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"GEOID":"00000000001"},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
            {"type":"Feature","properties":{"GEOID":"00000000001"},
             "geometry":{"type":"Polygon","coordinates":[[[2,2],[3,2],[3,3],[2,3],[2,2]]]}}
        ]}"#;
        assert!(matches!(
            TractIndex::load_tracts(doc.as_bytes(), "GEOID"),
            Err(GeoError::DuplicateGeoid(g)) if g == "00000000001"
        ));
    }

    #[test]
    fn unclosed_ring_is_an_error() {
        let doc = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"GEOID":"00000000001"},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}}
        ]}"#;
        assert!(matches!(
            TractIndex::load_tracts(doc.as_bytes(), "GEOID"),
            Err(GeoError::UnclosedRing { .. })
        ));
    }

    #[test]
    fn missing_geoid_rejects_feature_with_diagnostic() {
        let doc = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
            {"type":"Feature","properties":{"GEOID":"00000000002"},
             "geometry":{"type":"Polygon","coordinates":[[[2,2],[3,2],[3,3],[2,3],[2,2]]]}}
        ]}"#;
        let (idx, diags) = TractIndex::load_tracts(doc.as_bytes(), "GEOID").unwrap();
        assert_eq!(idx.len(), 1);
        assert_eq!(diags.rejected.len(), 1);
        assert!(diags.rejected[0].contains("feature 0"));
    }

    #[test]
    fn locate_interior_and_exterior() {
        let doc = unit_square_geojson("00000000001");
        let (idx, _) = TractIndex::load_tracts(doc.as_bytes(), "GEOID").unwrap();
        let inside = GeoPoint::new(0.5, 0.5).unwrap();
        let outside = GeoPoint::new(2.0, 2.0).unwrap();
        assert_eq!(idx.locate(inside), Some("00000000001"));
        assert_eq!(idx.locate(outside), None);
    }

    #[test]
    fn hole_interior_is_outside() {
        // Annulus: outer (0,0)-(4,4), hole (1,1)-(3,3).
        let doc = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"GEOID":"00000000001"},
             "geometry":{"type":"Polygon","coordinates":[
                [[0,0],[4,0],[4,4],[0,4],[0,0]],
                [[1,1],[3,1],[3,3],[1,3],[1,1]]
             ]}}
        ]}"#;
        let (idx, _) = TractIndex::load_tracts(doc.as_bytes(), "GEOID").unwrap();
        // Inside the hole: a rightward ray from (2,2) crosses hole edge at
        // x=3 and outer edge at x=4, an even count per the hand trace.
        assert_eq!(idx.locate(GeoPoint::new(2.0, 2.0).unwrap()), None);
        // In the annulus body: crossings at x=3 (hole), x=4 (outer)... from
        // (0.5, 2) the ray crosses hole twice and outer once, an odd count.
        assert_eq!(
            idx.locate(GeoPoint::new(2.0, 0.5).unwrap()),
            Some("00000000001")
        );
    }

    #[test]
    fn shared_edge_goes_to_smallest_geoid() {
        let doc = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"GEOID":"00000000002"},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
            {"type":"Feature","properties":{"GEOID":"00000000001"},
             "geometry":{"type":"Polygon","coordinates":[[[1,0],[2,0],[2,1],[1,1],[1,0]]]}}
        ]}"#;
        let (idx, _) = TractIndex::load_tracts(doc.as_bytes(), "GEOID").unwrap();
        // lon=1 is the shared edge
        let p = GeoPoint::new(0.5, 1.0).unwrap();
        assert_eq!(idx.locate(p), Some("00000000001"));
    }

    #[test]
    fn haversine_identity_and_reference_arcs() {
        let origin = GeoPoint::new(0.0, 0.0).unwrap();
        assert_eq!(haversine(origin, origin), 0.0);

        // One degree of longitude on the equator: R * pi/180.
        let one_east = GeoPoint::new(0.0, 1.0).unwrap();
        let expected = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        assert!((haversine(origin, one_east) - expected).abs() < 0.01);
        assert!((haversine(origin, one_east) - 111_195.08).abs() < 0.01);

        // Equator to pole: R * pi/2.
        let pole = GeoPoint::new(90.0, 0.0).unwrap();
        let quarter = EARTH_RADIUS_M * std::f64::consts::FRAC_PI_2;
        assert!((haversine(origin, pole) - quarter).abs() < 0.1);
        assert!((haversine(origin, pole) - 10_007_557.2).abs() < 0.1);
    }

    #[test]
    fn geopoint_range_validation() {
        assert!(GeoPoint::new(91.0, 0.0).is_none());
        assert!(GeoPoint::new(0.0, 180.5).is_none());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_none());
        assert!(GeoPoint::new(-90.0, 180.0).is_some());
    }
}
