//! Detector followed by aggregation, per series.

use serde::{Deserialize, Serialize};

use crate::aggregate::{mincorr_offline, AggregationRule, Aggregator, MincorrMode};
use crate::dataset::SeriesRecord;
use crate::detector::{Basis, Detector, DetectorConfig, Mode};
use crate::error::Result;
use crate::eval::{dilate_labels, SeriesAuc};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    #[serde(flatten)]
    pub detector: DetectorConfig,
    pub aggregation: AggregationRule,
    pub mincorr_mode: MincorrMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            detector: DetectorConfig::default(),
            aggregation: AggregationRule::Norm,
            mincorr_mode: MincorrMode::Streaming,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredSeries {
    /// One score vector per sample.
    pub alphas: Vec<Vec<f64>>,
    pub final_scores: Vec<f64>,
    /// Detector arithmetic operations for the whole run.
    pub ops: u64,
}

/// Row label used in result tables, e.g. `multiscale-lagmatrix`.
pub fn method_name(mode: Mode, basis: Basis) -> &'static str {
    match (mode, basis) {
        (Mode::Fixed, Basis::Identity) => "fixed-scale",
        (Mode::Fixed, Basis::Haar) => "fixed-scale-haar",
        (Mode::Multiscale, Basis::Identity) => "multiscale-lagmatrix",
        (Mode::Multiscale, Basis::Haar) => "multiscale-haar",
        (Mode::Hierarchical, Basis::Identity) => "hierarchical-approx",
        (Mode::Hierarchical, Basis::Haar) => "hierarchical-haar",
    }
}

pub fn score_values(config: &PipelineConfig, values: &[f64]) -> Result<ScoredSeries> {
    let mut detector = Detector::new(config.detector.clone())?;
    let dim = detector.num_scores();
    let offline = config.aggregation == AggregationRule::Mincorr
        && config.mincorr_mode == MincorrMode::Offline;
    let mut aggregator = Aggregator::new(config.aggregation, dim, config.detector.epsilon)?;

    let mut alphas = Vec::with_capacity(values.len());
    let mut final_scores = Vec::with_capacity(values.len());
    for &x in values {
        let a = detector.step(x)?.alphas;
        if !offline {
            final_scores.push(aggregator.push(&a)?);
        }
        alphas.push(a);
    }
    if offline && !alphas.is_empty() {
        final_scores = mincorr_offline(&alphas)?.1;
    }
    Ok(ScoredSeries {
        alphas,
        final_scores,
        ops: detector.ops(),
    })
}

/// Score a labeled series and compute its AUC, optionally widening labels by
/// `dilation` samples.
pub fn evaluate_record(
    config: &PipelineConfig,
    record: &SeriesRecord,
    dilation: usize,
) -> Result<(ScoredSeries, SeriesAuc)> {
    let scored = score_values(config, &record.values)?;
    let labels = dilate_labels(&record.labels, dilation);
    let auc = SeriesAuc::evaluate(record.id.clone(), &scored.final_scores, &labels)?;
    Ok((scored, auc))
}
