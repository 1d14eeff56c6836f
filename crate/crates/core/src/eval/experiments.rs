use serde::{Serialize, Serializer};

use super::dataset::{
    score_dataset, DatasetManifest, FailureKind, ImageFailure, ScoreOptions, ScoreTable,
};
use super::logistic::{fit_logistic, LogisticParams};
use super::{correlation, EvalError};
use crate::image_io::{decode, encode_jpeg, EncodedImage};
use crate::metric::{score_image, Metric, MetricResult, RgbImage};

/// Monotonicity and linearity of one metric against MOS.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub metric: Metric,
    /// SRCC of the raw scores.
    pub srcc: f64,
    /// PLCC of the logistic-mapped scores.
    pub plcc: f64,
    pub params: LogisticParams,
    pub residual_rmse: f64,
    pub n: usize,
}

impl CorrelationReport {
    pub fn fitted(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|&x| self.params.predict(x)).collect()
    }
}

#[derive(Serialize)]
struct ReportJson<'a> {
    metric: &'a str,
    srcc: f64,
    plcc: f64,
    beta: [f64; 5],
    rmse: f64,
    n: usize,
}

impl Serialize for CorrelationReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ReportJson {
            metric: self.metric.name(),
            srcc: self.srcc,
            plcc: self.plcc,
            beta: self.params.as_array(),
            rmse: self.residual_rmse,
            n: self.n,
        }
        .serialize(s)
    }
}

/// SRCC on raw scores and PLCC after the logistic mapping.
pub fn evaluate(table: &ScoreTable, metric: Metric) -> Result<CorrelationReport, EvalError> {
    if table.rows.is_empty() {
        return Err(EvalError::TooFewPoints { needed: 5, got: 0 });
    }
    let scores = table.scores(metric);
    let mos = table.mos();
    let srcc = correlation::srcc(&scores, &mos)?;
    let params = fit_logistic(&scores, &mos)?;
    let fitted: Vec<f64> = scores.iter().map(|&x| params.predict(x)).collect();
    let plcc = correlation::plcc(&fitted, &mos)?;
    Ok(CorrelationReport {
        metric,
        srcc,
        plcc,
        residual_rmse: params.rmse(&scores, &mos),
        params,
        n: scores.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSrcc {
    pub group_id: String,
    pub srcc: f64,
    pub n: usize,
}

/// SRCC within each group, groups listed in order of first appearance.
pub fn per_group_srcc(table: &ScoreTable, metric: Metric) -> Result<Vec<GroupSrcc>, EvalError> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let id = row.group_id.as_ref().ok_or(EvalError::NoGroups)?;
        match groups.iter_mut().find(|(g, _)| g == id) {
            Some((_, members)) => members.push(i),
            None => groups.push((id.clone(), vec![i])),
        }
    }
    if groups.is_empty() {
        return Err(EvalError::NoGroups);
    }
    groups
        .into_iter()
        .map(|(group_id, members)| {
            if members.len() < 2 {
                return Err(EvalError::GroupTooSmall {
                    group: group_id,
                    size: members.len(),
                });
            }
            let x: Vec<f64> = members
                .iter()
                .map(|&i| table.rows[i].score(metric))
                .collect();
            let y: Vec<f64> = members.iter().map(|&i| table.rows[i].mos).collect();
            Ok(GroupSrcc {
                srcc: correlation::srcc(&x, &y)?,
                n: members.len(),
                group_id,
            })
        })
        .collect()
}

fn evaluate_or_degenerate(
    table: &ScoreTable,
    metric: Metric,
) -> Result<Option<CorrelationReport>, EvalError> {
    match evaluate(table, metric) {
        Ok(r) => Ok(Some(r)),
        Err(EvalError::DegenerateInput(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricMisalignment {
    pub metric: Metric,
    /// `None` when the scores are constant and correlation is undefined.
    pub aligned: Option<CorrelationReport>,
    pub cropped: Option<CorrelationReport>,
    pub max_abs_score_delta: f64,
    pub max_rel_score_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MisalignmentReport {
    pub k: usize,
    pub metrics: Vec<MetricMisalignment>,
    #[serde(skip)]
    pub aligned_table: ScoreTable,
    #[serde(skip)]
    pub cropped_table: ScoreTable,
}

impl MisalignmentReport {
    pub fn metric(&self, metric: Metric) -> &MetricMisalignment {
        self.metrics
            .iter()
            .find(|m| m.metric == metric)
            .expect("every metric is reported")
    }
}

fn relative_delta(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs()
    }
}

/// Scores the manifest as-is and with `k` pixels cut from every border, against
/// the same MOS.
pub fn misalignment_experiment(
    manifest: &DatasetManifest,
    k: usize,
    opts: &ScoreOptions,
) -> Result<MisalignmentReport, EvalError> {
    let aligned_table = score_dataset(manifest, &ScoreOptions { crop: 0, ..*opts })?;
    let cropped_table = score_dataset(manifest, &ScoreOptions { crop: k, ..*opts })?;
    if aligned_table.rows.len() != cropped_table.rows.len() {
        // Only possible with skip_errors when an image is too small to crop.
        let cropped: std::collections::HashSet<&str> = cropped_table
            .rows
            .iter()
            .map(|r| r.image_path.as_str())
            .collect();
        let missing = aligned_table
            .rows
            .iter()
            .filter(|r| !cropped.contains(r.image_path.as_str()))
            .map(|r| ImageFailure {
                path: r.image_path.clone(),
                reason: format!("cannot crop {k} pixels from each border"),
                kind: FailureKind::InvalidInput,
            })
            .collect();
        return Err(EvalError::ImageFailures(missing));
    }

    let metrics = Metric::ALL
        .iter()
        .map(|&metric| {
            let (mut max_abs, mut max_rel) = (0.0f64, 0.0f64);
            for (a, c) in aligned_table.rows.iter().zip(&cropped_table.rows) {
                let (sa, sc) = (a.score(metric), c.score(metric));
                max_abs = max_abs.max((sa - sc).abs());
                max_rel = max_rel.max(relative_delta(sa, sc));
            }
            Ok(MetricMisalignment {
                metric,
                aligned: evaluate_or_degenerate(&aligned_table, metric)?,
                cropped: evaluate_or_degenerate(&cropped_table, metric)?,
                max_abs_score_delta: max_abs,
                max_rel_score_delta: max_rel,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    Ok(MisalignmentReport {
        k,
        metrics,
        aligned_table,
        cropped_table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderStep {
    pub quality: u8,
    pub encoded_bytes: usize,
    pub result: MetricResult,
    #[serde(skip)]
    pub encoded: EncodedImage,
    #[serde(skip)]
    pub decoded: RgbImage,
}

/// SRCC of each metric against the quality factor; `None` where undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monotonicity {
    pub nug: Option<f64>,
    pub mug: Option<f64>,
    pub mug_plus: Option<f64>,
}

impl Monotonicity {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Nug => self.nug,
            Metric::Mug => self.mug,
            Metric::MugPlus => self.mug_plus,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.nug.is_none() || self.mug.is_none() || self.mug_plus.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderReport {
    pub steps: Vec<LadderStep>,
    pub monotonicity: Monotonicity,
    pub degenerate: bool,
}

impl LadderReport {
    pub fn results(&self) -> Vec<MetricResult> {
        self.steps.iter().map(|s| s.result).collect()
    }
}

fn rank_against(
    qualities: &[f64],
    results: &[MetricResult],
    metric: Metric,
) -> Result<Option<f64>, EvalError> {
    let scores: Vec<f64> = results.iter().map(|r| r.score(metric)).collect();
    match correlation::srcc(&scores, qualities) {
        Ok(r) => Ok(Some(r)),
        Err(EvalError::DegenerateInput(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Encodes `src` at each quality (strictly decreasing), decodes and scores.
pub fn jpeg_ladder(src: &RgbImage, qualities: &[u8]) -> Result<LadderReport, EvalError> {
    let valid = qualities.len() >= 2
        && qualities.windows(2).all(|w| w[0] > w[1])
        && qualities.iter().all(|q| (1..=100).contains(q));
    if !valid {
        return Err(EvalError::InvalidLadder);
    }
    let steps = qualities
        .iter()
        .map(|&quality| {
            let encoded = encode_jpeg(src, quality)?;
            let decoded = decode(&encoded)?;
            let result = score_image(&decoded)?;
            Ok(LadderStep {
                quality,
                encoded_bytes: encoded.bytes.len(),
                result,
                encoded,
                decoded,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    let q: Vec<f64> = qualities.iter().map(|&q| f64::from(q)).collect();
    let results: Vec<MetricResult> = steps.iter().map(|s| s.result).collect();
    let monotonicity = Monotonicity {
        nug: rank_against(&q, &results, Metric::Nug)?,
        mug: rank_against(&q, &results, Metric::Mug)?,
        mug_plus: rank_against(&q, &results, Metric::MugPlus)?,
    };
    Ok(LadderReport {
        degenerate: monotonicity.is_degenerate(),
        steps,
        monotonicity,
    })
}
