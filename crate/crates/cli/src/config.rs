//! Run configuration: a single TOML document with explicit defaults, echoed
//! verbatim into the run manifest so every output is reproducible from the
//! manifest alone.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mobnet_core::date::Date;
use mobnet_core::motifs::{AttributeConfig, VolumeStat};
use mobnet_core::similarity::{CosineReduction, MapeMode};

use crate::CliError;

/// Environment variable overriding `[run] out_dir`.
pub const OUT_DIR_ENV: &str = "MOBNET_OUT_DIR";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub stops: StopsSection,
    #[serde(default)]
    pub motifs: MotifsSection,
    #[serde(default)]
    pub similarity: SimilaritySection,
    pub counties: Vec<CountySection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSection {
    pub date_start: String,
    pub date_end: String,
    pub out_dir: String,
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub tz_offset_s: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StopsSection {
    #[serde(default = "default_radius")]
    pub radius_m: f64,
    #[serde(default = "default_dwell")]
    pub min_dwell_s: i64,
}

impl Default for StopsSection {
    fn default() -> Self {
        StopsSection {
            radius_m: default_radius(),
            min_dwell_s: default_dwell(),
        }
    }
}

fn default_radius() -> f64 {
    mobnet_core::ingest::DEFAULT_STOP_RADIUS_M
}

fn default_dwell() -> i64 {
    mobnet_core::ingest::DEFAULT_MIN_DWELL_S
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotifsSection {
    /// "exact" or "sample".
    #[serde(default = "default_motif_mode")]
    pub mode: String,
    #[serde(default = "default_sample_size")]
    pub sample_size: u64,
    #[serde(default = "default_motif_seed")]
    pub seed: u64,
    #[serde(default = "default_median_threshold")]
    pub exact_median_threshold: u64,
    /// "mean" or "sum".
    #[serde(default = "default_volume_stat")]
    pub volume_stat: String,
}

impl Default for MotifsSection {
    fn default() -> Self {
        MotifsSection {
            mode: default_motif_mode(),
            sample_size: default_sample_size(),
            seed: default_motif_seed(),
            exact_median_threshold: default_median_threshold(),
            volume_stat: default_volume_stat(),
        }
    }
}

fn default_motif_mode() -> String {
    "exact".to_string()
}
fn default_sample_size() -> u64 {
    100_000
}
fn default_motif_seed() -> u64 {
    7
}
fn default_median_threshold() -> u64 {
    mobnet_core::motifs::DEFAULT_EXACT_MEDIAN_THRESHOLD
}
fn default_volume_stat() -> String {
    "mean".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilaritySection {
    /// "symmetric" or "base-a".
    #[serde(default = "default_mape_mode")]
    pub mape_mode: String,
    /// "mean", "median", or "majority".
    #[serde(default = "default_cosine_reduction")]
    pub cosine_reduction: String,
}

impl Default for SimilaritySection {
    fn default() -> Self {
        SimilaritySection {
            mape_mode: default_mape_mode(),
            cosine_reduction: default_cosine_reduction(),
        }
    }
}

fn default_mape_mode() -> String {
    "symmetric".to_string()
}
fn default_cosine_reduction() -> String {
    "mean".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountySection {
    pub fips: String,
    pub name: String,
    pub geojson: String,
    pub sources: Vec<SourceSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceSection {
    pub label: String,
    pub pings_dir: String,
}

/// Parsed, validated, path-resolved configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub raw: RunConfig,
    pub date_start: Date,
    pub date_end: Date,
    pub out_dir: PathBuf,
    pub threads: usize,
    pub tz_offset_s: i64,
    pub radius_m: f64,
    pub min_dwell_s: i64,
    pub motif_sample: Option<(u64, u64)>,
    pub attribute_config: AttributeConfig,
    pub volume_stat: VolumeStat,
    pub mape_mode: MapeMode,
    pub cosine_reduction: CosineReduction,
    pub counties: Vec<ResolvedCounty>,
}

#[derive(Debug, Clone)]
pub struct ResolvedCounty {
    pub fips: String,
    pub name: String,
    pub geojson: PathBuf,
    pub sources: Vec<(String, PathBuf)>,
}

impl Resolved {
    pub fn dates(&self) -> Vec<Date> {
        Date::range_inclusive(self.date_start, self.date_end).collect()
    }
}

/// Reads and resolves a config file; `MOBNET_OUT_DIR` overrides the
/// configured out_dir here, at the command boundary.
pub fn load(config_path: &Path) -> Result<Resolved, CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let raw: RunConfig = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;
    let mut resolved = resolve(raw, config_path.parent().unwrap_or(Path::new(".")))?;
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        if !dir.is_empty() {
            resolved.out_dir = PathBuf::from(dir);
        }
    }
    Ok(resolved)
}

pub fn resolve(raw: RunConfig, base: &Path) -> Result<Resolved, CliError> {
    let date_start: Date = raw
        .run
        .date_start
        .parse()
        .map_err(|e| CliError::Config(format!("date_start: {e}")))?;
    let date_end: Date = raw
        .run
        .date_end
        .parse()
        .map_err(|e| CliError::Config(format!("date_end: {e}")))?;
    if date_end < date_start {
        return Err(CliError::Config("date range is empty".to_string()));
    }
    if raw.counties.is_empty() {
        return Err(CliError::Config("need at least one county".to_string()));
    }

    let out_dir = base.join(&raw.run.out_dir);

    let motif_sample = match raw.motifs.mode.as_str() {
        "exact" => None,
        "sample" => {
            if raw.motifs.sample_size == 0 {
                return Err(CliError::Config(
                    "motifs.sample_size must be positive".into(),
                ));
            }
            Some((raw.motifs.sample_size, raw.motifs.seed))
        }
        other => {
            return Err(CliError::Config(format!(
                "motifs.mode must be \"exact\" or \"sample\", got {other:?}"
            )))
        }
    };
    let volume_stat = match raw.motifs.volume_stat.as_str() {
        "mean" => VolumeStat::MeanEdgeWeight,
        "sum" => VolumeStat::SumEdgeWeight,
        other => {
            return Err(CliError::Config(format!(
                "motifs.volume_stat must be \"mean\" or \"sum\", got {other:?}"
            )))
        }
    };
    let mape_mode = match raw.similarity.mape_mode.as_str() {
        "symmetric" => MapeMode::Symmetric,
        "base-a" => MapeMode::BaseA,
        other => {
            return Err(CliError::Config(format!(
                "similarity.mape_mode must be \"symmetric\" or \"base-a\", got {other:?}"
            )))
        }
    };
    let cosine_reduction = match raw.similarity.cosine_reduction.as_str() {
        "mean" => CosineReduction::Mean,
        "median" => CosineReduction::Median,
        "majority" => CosineReduction::MajorityOfDays,
        other => {
            return Err(CliError::Config(format!(
                "similarity.cosine_reduction must be \"mean\", \"median\", or \"majority\", got {other:?}"
            )))
        }
    };

    let mut counties = Vec::with_capacity(raw.counties.len());
    for county in &raw.counties {
        let mut labels: Vec<&str> = county.sources.iter().map(|s| s.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != county.sources.len() {
            return Err(CliError::Config(format!(
                "county {}: duplicate source labels",
                county.fips
            )));
        }
        if county.sources.is_empty() {
            return Err(CliError::Config(format!(
                "county {}: needs at least one source",
                county.fips
            )));
        }
        counties.push(ResolvedCounty {
            fips: county.fips.clone(),
            name: county.name.clone(),
            geojson: base.join(&county.geojson),
            sources: county
                .sources
                .iter()
                .map(|s| (s.label.clone(), base.join(&s.pings_dir)))
                .collect(),
        });
    }

    if raw.stops.min_dwell_s < 1 {
        return Err(CliError::Config(
            "stops.min_dwell_s must be at least 1".into(),
        ));
    }

    Ok(Resolved {
        date_start,
        date_end,
        out_dir,
        threads: raw.run.threads,
        tz_offset_s: raw.run.tz_offset_s,
        radius_m: raw.stops.radius_m,
        min_dwell_s: raw.stops.min_dwell_s,
        motif_sample,
        attribute_config: AttributeConfig {
            exact_median_threshold: raw.motifs.exact_median_threshold,
            ..AttributeConfig::default()
        },
        volume_stat,
        mape_mode,
        cosine_reduction,
        counties,
        raw,
    })
}
