//! Cross-source comparison of metric time series (DTW for the macro
//! scale) and of daily rank vectors (cosine for the micro scale), plus the
//! closest-pair verdicts.
//!
//! Missing points are pairwise-deleted for point-by-point measures and
//! dropped per series for DTW; both policies report how much they removed.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::date::Date;

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty series after missing-point handling")]
    Empty,
    #[error("need at least {need} points, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("all denominators zero")]
    AllDenominatorsZero,
    #[error("source {0:?} has no usable points")]
    EmptySource(String),
    #[error("pair {0:?} has no comparable days")]
    EmptyPair(String),
    #[error("series for {0:?} has non-increasing dates")]
    UnorderedDates(String),
    #[error("series for {0:?} has {1} points, limit is 31")]
    TooLong(String, usize),
}

/// One source's daily values for one metric in one county.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub source_label: String,
    pub county_fips: String,
    pub metric_name: String,
    pub values: Vec<(Date, Option<f64>)>,
}

impl MetricSeries {
    pub fn new(
        source_label: &str,
        county_fips: &str,
        metric_name: &str,
        values: Vec<(Date, Option<f64>)>,
    ) -> Result<Self, SimilarityError> {
        if values.len() > 31 {
            return Err(SimilarityError::TooLong(
                source_label.to_string(),
                values.len(),
            ));
        }
        if values.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(SimilarityError::UnorderedDates(source_label.to_string()));
        }
        Ok(MetricSeries {
            source_label: source_label.to_string(),
            county_fips: county_fips.to_string(),
            metric_name: metric_name.to_string(),
            values,
        })
    }

    pub fn present(&self) -> Vec<f64> {
        self.values.iter().filter_map(|(_, v)| *v).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|(_, v)| v.is_none()).count()
    }
}

/// Keeps indices where both sides are present; returns the deleted count.
pub fn pairwise_delete(
    a: &[Option<f64>],
    b: &[Option<f64>],
) -> Result<(Vec<f64>, Vec<f64>, usize), SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::LengthMismatch(a.len(), b.len()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut deleted = 0;
    for (x, y) in a.iter().zip(b) {
        match (x, y) {
            (Some(x), Some(y)) => {
                xs.push(*x);
                ys.push(*y);
            }
            _ => deleted += 1,
        }
    }
    Ok((xs, ys, deleted))
}

/// L2 norm of the pointwise difference.
pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(SimilarityError::Empty);
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MapeMode {
    /// Divide each pointwise distance by |a_i|.
    BaseA,
    /// Divide by the mean of |a_i| and |b_i|.
    #[default]
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapeScore {
    pub value: f64,
    /// Points skipped for a zero denominator.
    pub skipped: usize,
}

pub fn mape(a: &[f64], b: &[f64], mode: MapeMode) -> Result<MapeScore, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(SimilarityError::Empty);
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for (x, y) in a.iter().zip(b) {
        let denom = match mode {
            MapeMode::BaseA => x.abs(),
            MapeMode::Symmetric => (x.abs() + y.abs()) / 2.0,
        };
        if denom == 0.0 {
            skipped += 1;
        } else {
            sum += (x - y).abs() / denom;
            used += 1;
        }
    }
    if used == 0 {
        return Err(SimilarityError::AllDenominatorsZero);
    }
    Ok(MapeScore {
        value: sum / used as f64,
        skipped,
    })
}

/// Sample correlation; `None` when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<Option<f64>, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(SimilarityError::TooShort {
            need: 2,
            got: a.len(),
        });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Ok(None);
    }
    Ok(Some(cov / (va * vb).sqrt()))
}

/// Dynamic time warping with absolute-difference cost, no window, no path
/// normalization. Lengths may differ; both must be nonempty.
pub fn dtw(a: &[f64], b: &[f64]) -> Result<f64, SimilarityError> {
    if a.is_empty() || b.is_empty() {
        return Err(SimilarityError::Empty);
    }
    let m = b.len();
    let mut prev = vec![0.0f64; m];
    prev[0] = (a[0] - b[0]).abs();
    for j in 1..m {
        prev[j] = (a[0] - b[j]).abs() + prev[j - 1];
    }
    let mut cur = vec![0.0f64; m];
    for &ai in &a[1..] {
        cur[0] = (ai - b[0]).abs() + prev[0];
        for j in 1..m {
            let best = prev[j].min(cur[j - 1]).min(prev[j - 1]);
            cur[j] = (ai - b[j]).abs() + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// Dot product over the product of magnitudes; `None` on a zero vector.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<Option<f64>, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(SimilarityError::Empty);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(None);
    }
    Ok(Some(dot / (na * nb)))
}

/// Label for a source pair: single-char labels concatenate (SV, XV, SX),
/// longer ones join with a dash, preserving the configured source order.
pub fn pair_label(a: &str, b: &str) -> String {
    if a.chars().count() == 1 && b.chars().count() == 1 {
        format!("{a}{b}")
    } else {
        format!("{a}-{b}")
    }
}

/// Pair index order over three sources: (0,1), (0,2), (1,2).
pub const PAIR_INDICES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub label: String,
    pub score: f64,
    /// Points removed by the missing-point policy before scoring.
    pub dropped: usize,
}

/// The winning pair for one (county, metric), with all pairwise scores.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityVerdict {
    pub county_fips: String,
    pub metric_name: String,
    pub pair: String,
    pub scores: Vec<PairScore>,
    pub tie: bool,
}

fn decide(
    county_fips: &str,
    metric_name: &str,
    scores: Vec<PairScore>,
    larger_is_better: bool,
) -> SimilarityVerdict {
    let best = scores
        .iter()
        .map(|p| p.score)
        .reduce(|acc, s| {
            if larger_is_better {
                acc.max(s)
            } else {
                acc.min(s)
            }
        })
        .expect("three pairs present");
    let mut winners: Vec<&str> = scores
        .iter()
        .filter(|p| p.score == best)
        .map(|p| p.label.as_str())
        .collect();
    winners.sort_unstable();
    SimilarityVerdict {
        county_fips: county_fips.to_string(),
        metric_name: metric_name.to_string(),
        pair: winners[0].to_string(),
        tie: winners.len() > 1,
        scores,
    }
}

/// DTW-closest pair across exactly three sources. Missing points drop per
/// series; a source with no usable points is an error naming it.
pub fn closest_pair_dtw(series: &[MetricSeries; 3]) -> Result<SimilarityVerdict, SimilarityError> {
    for s in series.iter() {
        if s.present().is_empty() {
            return Err(SimilarityError::EmptySource(s.source_label.clone()));
        }
    }
    let mut scores = Vec::with_capacity(3);
    for (i, j) in PAIR_INDICES {
        let a = series[i].present();
        let b = series[j].present();
        scores.push(PairScore {
            label: pair_label(&series[i].source_label, &series[j].source_label),
            score: dtw(&a, &b)?,
            dropped: series[i].missing_count() + series[j].missing_count(),
        });
    }
    Ok(decide(
        &series[0].county_fips,
        &series[0].metric_name,
        scores,
        false,
    ))
}

/// How the daily cosine values reduce to one monthly score per pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CosineReduction {
    #[default]
    Mean,
    /// Lower median over present days.
    Median,
    /// Count of days the pair scores strictly-or-jointly best (joint days
    /// go to the lexicographically smallest label).
    MajorityOfDays,
}

/// Cosine-closest pair from per-day pairwise cosines (`daily[day][pair]`
/// in [`PAIR_INDICES`] order over `labels`).
pub fn closest_pair_cosine(
    county_fips: &str,
    metric_name: &str,
    labels: &[String; 3],
    daily: &[[Option<f64>; 3]],
    reduction: CosineReduction,
) -> Result<SimilarityVerdict, SimilarityError> {
    let pair_labels: Vec<String> = PAIR_INDICES
        .iter()
        .map(|&(i, j)| pair_label(&labels[i], &labels[j]))
        .collect();
    let mut per_pair: [Vec<f64>; 3] = Default::default();
    let mut dropped = [0usize; 3];
    for day in daily {
        for (k, v) in day.iter().enumerate() {
            match v {
                Some(x) => per_pair[k].push(*x),
                None => dropped[k] += 1,
            }
        }
    }
    for (k, vals) in per_pair.iter().enumerate() {
        if vals.is_empty() {
            return Err(SimilarityError::EmptyPair(pair_labels[k].clone()));
        }
    }

    let scores: Vec<PairScore> = match reduction {
        CosineReduction::Mean => per_pair
            .iter()
            .enumerate()
            .map(|(k, vals)| PairScore {
                label: pair_labels[k].clone(),
                score: vals.iter().sum::<f64>() / vals.len() as f64,
                dropped: dropped[k],
            })
            .collect(),
        CosineReduction::Median => per_pair
            .iter()
            .enumerate()
            .map(|(k, vals)| {
                let mut sorted = vals.clone();
                sorted.sort_by(f64::total_cmp);
                PairScore {
                    label: pair_labels[k].clone(),
                    score: sorted[(sorted.len() - 1) / 2],
                    dropped: dropped[k],
                }
            })
            .collect(),
        CosineReduction::MajorityOfDays => {
            let mut wins = [0u64; 3];
            for day in daily {
                let best = day
                    .iter()
                    .flatten()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                if best == f64::NEG_INFINITY {
                    continue;
                }
                // Joint best goes to the smallest pair label.
                let winner = PAIR_INDICES
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| day[k] == Some(best))
                    .map(|(k, _)| (pair_labels[k].as_str(), k))
                    .min()
                    .map(|(_, k)| k)
                    .expect("a best value exists");
                wins[winner] += 1;
            }
            (0..3)
                .map(|k| PairScore {
                    label: pair_labels[k].clone(),
                    score: wins[k] as f64,
                    dropped: dropped[k],
                })
                .collect()
        }
    };
    Ok(decide(county_fips, metric_name, scores, true))
}

// --- verdict table ---------------------------------------------------------
//
// Mirrors the published table layout: fips,county,metric,pair,
// score_<P>,score_<Q>,score_<R>,tie_flag. Score columns follow the
// convention (first,third), (second,third), (first,second).

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRow {
    pub fips: String,
    pub county: String,
    pub verdict: SimilarityVerdict,
}

/// Column order over [`PAIR_INDICES`]: SV, XV, SX for sources S, X, V.
pub const VERDICT_COLUMN_ORDER: [usize; 3] = [1, 2, 0];

pub fn write_verdicts<W: Write>(mut w: W, rows: &[VerdictRow]) -> std::io::Result<()> {
    let Some(first) = rows.first() else {
        writeln!(w, "fips,county,metric,pair,tie_flag")?;
        return Ok(());
    };
    let labels: Vec<&str> = VERDICT_COLUMN_ORDER
        .iter()
        .map(|&k| first.verdict.scores[k].label.as_str())
        .collect();
    writeln!(
        w,
        "fips,county,metric,pair,score_{},score_{},score_{},tie_flag",
        labels[0], labels[1], labels[2]
    )?;
    for row in rows {
        let s = &row.verdict.scores;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            row.fips,
            row.county,
            row.verdict.metric_name,
            row.verdict.pair,
            s[VERDICT_COLUMN_ORDER[0]].score,
            s[VERDICT_COLUMN_ORDER[1]].score,
            s[VERDICT_COLUMN_ORDER[2]].score,
            row.verdict.tie,
        )?;
    }
    Ok(())
}

pub fn read_verdicts<R: BufRead>(reader: R) -> std::io::Result<Vec<VerdictRow>> {
    let bad = |line: usize, what: &str| {
        std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("verdict table line {line}: {what}"),
        )
    };
    let mut out = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if i == 0 {
            labels = f
                .iter()
                .filter_map(|c| c.strip_prefix("score_"))
                .map(str::to_string)
                .collect();
            continue;
        }
        if f.len() != 8 {
            return Err(bad(i + 1, "expected 8 columns"));
        }
        let mut scores = vec![
            PairScore {
                label: String::new(),
                score: 0.0,
                dropped: 0
            };
            3
        ];
        for (col, &k) in VERDICT_COLUMN_ORDER.iter().enumerate() {
            scores[k] = PairScore {
                label: labels[col].clone(),
                score: f[4 + col].parse().map_err(|_| bad(i + 1, "bad score"))?,
                dropped: 0,
            };
        }
        out.push(VerdictRow {
            fips: f[0].to_string(),
            county: f[1].to_string(),
            verdict: SimilarityVerdict {
                county_fips: f[0].to_string(),
                metric_name: f[2].to_string(),
                pair: f[3].to_string(),
                scores,
                tie: f[7].parse().map_err(|_| bad(i + 1, "bad tie flag"))?,
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_examples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(euclidean(&a, &a).unwrap(), 0.0);
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean(&[], &[]), Err(SimilarityError::Empty));
        assert!(matches!(
            euclidean(&[1.0], &[1.0, 2.0]),
            Err(SimilarityError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn mape_examples() {
        let a = [2.0, 4.0];
        assert_eq!(mape(&a, &a, MapeMode::BaseA).unwrap().value, 0.0);
        let base = mape(&[2.0], &[3.0], MapeMode::BaseA).unwrap();
        assert!((base.value - 0.5).abs() < 1e-15);
        let sym = mape(&[2.0], &[3.0], MapeMode::Symmetric).unwrap();
        assert!((sym.value - 0.4).abs() < 1e-15);
        let skipping = mape(&[0.0, 2.0], &[1.0, 3.0], MapeMode::BaseA).unwrap();
        assert_eq!(skipping.skipped, 1);
        assert_eq!(
            mape(&[0.0], &[0.0], MapeMode::Symmetric),
            Err(SimilarityError::AllDenominatorsZero)
        );
    }

    #[test]
    fn pearson_examples() {
        let a = [1.0, 2.0, 5.0, 7.0];
        let affine: Vec<f64> = a.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pearson(&a, &affine).unwrap().unwrap() - 1.0).abs() < 1e-12);
        let negated: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!((pearson(&a, &negated).unwrap().unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&[3.0, 3.0, 3.0], &a[..3]).unwrap(), None);
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn dtw_examples() {
        let a = [1.0, 5.0, 2.0];
        assert_eq!(dtw(&a, &a).unwrap(), 0.0);
        // Both points of a map onto the single b point.
        assert_eq!(dtw(&[0.0, 0.0], &[1.0]).unwrap(), 2.0);
        // Warping duplicates the middle value.
        assert_eq!(dtw(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(dtw(&[], &[1.0]), Err(SimilarityError::Empty));
    }

    #[test]
    fn dtw_symmetry_and_l1_bound() {
        let a = [0.5, 3.0, 2.0, 8.0, 1.0];
        let b = [1.0, 2.5, 2.0, 7.0, 0.0];
        assert_eq!(dtw(&a, &b).unwrap(), dtw(&b, &a).unwrap());
        let l1: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        assert!(dtw(&a, &b).unwrap() <= l1 + 1e-12);
    }

    #[test]
    fn cosine_examples() {
        let a = [1.0, 2.0];
        assert!((cosine(&a, &a).unwrap().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), Some(0.0));
        assert!((cosine(&[1.0, 2.0], &[-1.0, -2.0]).unwrap().unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[0.0, 0.0], &a).unwrap(), None);
    }

    #[test]
    fn cosine_scale_invariance() {
        let a = [1.0, 3.0, 2.0];
        let b = [2.0, 1.0, 4.0];
        let base = cosine(&a, &b).unwrap().unwrap();
        let scaled: Vec<f64> = a.iter().map(|x| 7.5 * x).collect();
        assert!((cosine(&scaled, &b).unwrap().unwrap() - base).abs() < 1e-12);
        let negated: Vec<f64> = a.iter().map(|x| -2.0 * x).collect();
        assert!((cosine(&negated, &b).unwrap().unwrap() + base).abs() < 1e-12);
    }

    fn series(label: &str, vals: &[f64]) -> MetricSeries {
        let values = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| (Date::from_days(18_000 + i as i64), Some(v)))
            .collect();
        MetricSeries::new(label, "99001", "avg_degree", values).unwrap()
    }

    #[test]
    fn series_invariants_are_enforced() {
        let d = Date::from_days(18_000);
        assert!(matches!(
            MetricSeries::new("S", "99001", "m", vec![(d, Some(1.0)), (d, Some(2.0))]),
            Err(SimilarityError::UnorderedDates(_))
        ));
        let long: Vec<(Date, Option<f64>)> = (0..32)
            .map(|i| (Date::from_days(18_000 + i), Some(0.0)))
            .collect();
        assert!(matches!(
            MetricSeries::new("S", "99001", "m", long),
            Err(SimilarityError::TooLong(..))
        ));
    }

    #[test]
    fn identical_pair_dominates_dtw_verdict() {
        let s = series("S", &[1.0, 2.0, 3.0]);
        let x = series("X", &[5.0, 9.0, 1.0]);
        let v = series("V", &[1.0, 2.0, 3.0]);
        let verdict = closest_pair_dtw(&[s, x, v]).unwrap();
        assert_eq!(verdict.pair, "SV");
        assert!(!verdict.tie);
        let sv = verdict.scores.iter().find(|p| p.label == "SV").unwrap();
        assert_eq!(sv.score, 0.0);
    }

    #[test]
    fn all_identical_breaks_tie_lexicographically() {
        let s = series("S", &[1.0, 2.0]);
        let x = series("X", &[1.0, 2.0]);
        let v = series("V", &[1.0, 2.0]);
        let verdict = closest_pair_dtw(&[s, x, v]).unwrap();
        assert_eq!(verdict.pair, "SV");
        assert!(verdict.tie);
    }

    #[test]
    fn known_pairwise_distances_pick_the_smallest() {
        // dtw(S,X)=1, dtw(S,V)=2, dtw(X,V)=3 by construction on
        // single-point series.
        let s = series("S", &[0.0]);
        let x = series("X", &[1.0]);
        let v = series("V", &[-2.0]);
        let verdict = closest_pair_dtw(&[s, x, v]).unwrap();
        assert_eq!(verdict.pair, "SX");
        let by_label = |l: &str| verdict.scores.iter().find(|p| p.label == l).unwrap().score;
        assert_eq!(by_label("SX"), 1.0);
        assert_eq!(by_label("SV"), 2.0);
        assert_eq!(by_label("XV"), 3.0);
    }

    #[test]
    fn entirely_missing_source_is_named() {
        let s = series("S", &[1.0]);
        let v = series("V", &[2.0]);
        let x = MetricSeries::new(
            "X",
            "99001",
            "avg_degree",
            vec![(Date::from_days(18_000), None)],
        )
        .unwrap();
        assert_eq!(
            closest_pair_dtw(&[s, x, v]),
            Err(SimilarityError::EmptySource("X".to_string()))
        );
    }

    #[test]
    fn dtw_missing_points_drop_per_series() {
        let d = |i: i64| Date::from_days(18_000 + i);
        let s = MetricSeries::new(
            "S",
            "99001",
            "m",
            vec![(d(0), Some(1.0)), (d(1), None), (d(2), Some(3.0))],
        )
        .unwrap();
        let x = series("X", &[1.0, 3.0, 9.0]);
        let v = series("V", &[1.0, 3.0]);
        let verdict = closest_pair_dtw(&[s, x, v]).unwrap();
        // S reduces to [1,3], identical to V after its own drop.
        assert_eq!(verdict.pair, "SV");
        let sv = verdict.scores.iter().find(|p| p.label == "SV").unwrap();
        assert_eq!(sv.score, 0.0);
        assert_eq!(sv.dropped, 1);
    }

    fn labels() -> [String; 3] {
        ["S".to_string(), "X".to_string(), "V".to_string()]
    }

    #[test]
    fn cosine_verdict_mean_reduction() {
        // Pair order: SX, SV, XV.
        let daily = vec![
            [Some(0.2), Some(0.9), Some(0.5)],
            [Some(0.4), Some(0.7), Some(0.5)],
        ];
        let verdict = closest_pair_cosine(
            "99001",
            "avg_rog_m",
            &labels(),
            &daily,
            CosineReduction::Mean,
        )
        .unwrap();
        assert_eq!(verdict.pair, "SV");
        let sv = verdict.scores.iter().find(|p| p.label == "SV").unwrap();
        assert!((sv.score - 0.8).abs() < 1e-12);
    }

    #[test]
    fn cosine_verdict_majority_reduction() {
        let daily = vec![
            [Some(0.9), Some(0.1), Some(0.2)],
            [Some(0.8), Some(0.2), Some(0.1)],
            [Some(0.1), Some(0.9), Some(0.2)],
        ];
        let verdict = closest_pair_cosine(
            "99001",
            "avg_rog_m",
            &labels(),
            &daily,
            CosineReduction::MajorityOfDays,
        )
        .unwrap();
        assert_eq!(verdict.pair, "SX");
        let sx = verdict.scores.iter().find(|p| p.label == "SX").unwrap();
        assert_eq!(sx.score, 2.0);
    }

    #[test]
    fn cosine_verdict_median_reduction_uses_lower_median() {
        let daily = vec![
            [Some(0.1), Some(0.5), Some(0.9)],
            [Some(0.2), Some(0.6), Some(0.8)],
        ];
        let verdict = closest_pair_cosine(
            "99001",
            "avg_rog_m",
            &labels(),
            &daily,
            CosineReduction::Median,
        )
        .unwrap();
        // Lower medians: SX 0.1, SV 0.5, XV 0.8.
        assert_eq!(verdict.pair, "XV");
        let xv = verdict.scores.iter().find(|p| p.label == "XV").unwrap();
        assert_eq!(xv.score, 0.8);
    }

    #[test]
    fn cosine_pair_with_no_days_is_an_error() {
        let daily = vec![[None, Some(0.5), Some(0.9)]];
        assert_eq!(
            closest_pair_cosine("99001", "m", &labels(), &daily, CosineReduction::Mean),
            Err(SimilarityError::EmptyPair("SX".to_string()))
        );
    }

    #[test]
    fn verdict_table_round_trips() {
        let s = series("S", &[1.0, 2.0]);
        let x = series("X", &[4.0, 5.0]);
        let v = series("V", &[1.0, 2.5]);
        let verdict = closest_pair_dtw(&[s, x, v]).unwrap();
        let rows = vec![VerdictRow {
            fips: "99001".to_string(),
            county: "Synthville".to_string(),
            verdict,
        }];
        let mut buf = Vec::new();
        write_verdicts(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("fips,county,metric,pair,score_SV,score_XV,score_SX,tie_flag"));
        let back = read_verdicts(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].verdict.pair, rows[0].verdict.pair);
        for k in 0..3 {
            assert_eq!(
                back[0].verdict.scores[k].label,
                rows[0].verdict.scores[k].label
            );
            assert_eq!(
                back[0].verdict.scores[k].score,
                rows[0].verdict.scores[k].score
            );
        }
    }
}
