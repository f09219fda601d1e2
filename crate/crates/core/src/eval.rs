//! Threshold-free evaluation: ROC AUC per series and benchmark summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if let Some(t) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Numeric {
            t: t as u64,
            scale: None,
            what: "NaN score".into(),
        });
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedAuc);
    }
    Ok((positives, negatives))
}

/// Area under the ROC curve as the Mann-Whitney statistic: the probability that
/// a random positive outscores a random negative, ties counting one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of midranks (1-based) of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        let tied_pos = order[i..j].iter().filter(|&&k| labels[k]).count();
        rank_sum += mid * tied_pos as f64;
        i = j;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// AUC by sweeping every distinct threshold and integrating the ROC polyline
/// with the trapezoid rule. Quadratic; kept as a reference for [`auc`].
pub fn brute_force_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let mut area = 0.0;
    let (mut fpr0, mut tpr0) = (0.0, 0.0);
    for &thr in &thresholds {
        let tp = scores
            .iter()
            .zip(labels)
            .filter(|(&s, &l)| l && s >= thr)
            .count();
        let fp = scores
            .iter()
            .zip(labels)
            .filter(|(&s, &l)| !l && s >= thr)
            .count();
        let (fpr, tpr) = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        area += (fpr - fpr0) * (tpr + tpr0) / 2.0;
        fpr0 = fpr;
        tpr0 = tpr;
    }
    Ok(area)
}

/// Widen each positive label to `radius` samples on either side.
pub fn dilate_labels(labels: &[bool], radius: usize) -> Vec<bool> {
    if radius == 0 {
        return labels.to_vec();
    }
    let mut out = vec![false; labels.len()];
    for (i, _) in labels.iter().enumerate().filter(|(_, &l)| l) {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius).min(labels.len() - 1);
        out[lo..=hi].iter_mut().for_each(|v| *v = true);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub median: f64,
    /// Median absolute deviation about the median, unscaled.
    pub mad: f64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Empty("no values to summarize".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = median(&sorted);
    let mut dev: Vec<f64> = sorted.iter().map(|v| (v - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    Ok(Summary {
        n,
        mean,
        std: var.sqrt(),
        median: med,
        mad: median(&dev),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesAuc {
    pub id: String,
    /// `None` when the series has a single label class.
    pub auc: Option<f64>,
    #[serde(default)]
    pub skipped: bool,
    /// Set when the detector ranks anomalies below normal points (AUC < 0.5).
    #[serde(default)]
    pub flagged: bool,
}

impl SeriesAuc {
    /// Score one series; single-class series come back skipped.
    pub fn evaluate(id: impl Into<String>, scores: &[f64], labels: &[bool]) -> Result<Self> {
        let id = id.into();
        match auc(scores, labels) {
            Ok(a) => Ok(Self {
                id,
                auc: Some(a),
                skipped: false,
                flagged: a < 0.5,
            }),
            Err(Error::UndefinedAuc) => Ok(Self {
                id,
                auc: None,
                skipped: true,
                flagged: false,
            }),
            Err(e) => Err(e),
        }
    }
}

/// Benchmark-level result for one detector configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub benchmark: String,
    pub method: String,
    pub basis: String,
    pub components: usize,
    pub aggregation: String,
    pub per_series: Vec<SeriesAuc>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub median: Option<f64>,
    pub mad: Option<f64>,
    pub n_series: usize,
    pub n_skipped: usize,
    /// Files that could not be loaded or scored.
    #[serde(default)]
    pub n_malformed: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl BenchmarkReport {
    /// Builds the report, sorting series by id and summarizing the non-skipped AUCs.
    pub fn new(
        benchmark: impl Into<String>,
        method: impl Into<String>,
        basis: impl Into<String>,
        components: usize,
        aggregation: impl Into<String>,
        mut per_series: Vec<SeriesAuc>,
    ) -> Self {
        per_series.sort_by(|a, b| a.id.cmp(&b.id));
        let aucs: Vec<f64> = per_series.iter().filter_map(|s| s.auc).collect();
        let summary = summarize(&aucs).ok();
        Self {
            benchmark: benchmark.into(),
            method: method.into(),
            basis: basis.into(),
            components,
            aggregation: aggregation.into(),
            n_series: per_series.len(),
            n_skipped: per_series.iter().filter(|s| s.skipped).count(),
            mean: summary.map(|s| s.mean),
            std: summary.map(|s| s.std),
            median: summary.map(|s| s.median),
            mad: summary.map(|s| s.mad),
            per_series,
            n_malformed: 0,
            config: None,
        }
    }

    pub fn flagged(&self) -> impl Iterator<Item = &SeriesAuc> {
        self.per_series.iter().filter(|s| s.flagged)
    }
}
