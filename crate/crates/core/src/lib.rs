//! Streaming multiscale anomaly detection for univariate time series.
//!
//! Each incoming sample is embedded into lag vectors at dyadic window sizes,
//! optionally rotated into the Haar basis, and fed to a PAST subspace tracker
//! per scale. The squared reconstruction errors form a per-scale score vector,
//! which is aggregated into a single anomaly score and evaluated with ROC AUC.
//!
//! ```
//! use mspca::{Detector, DetectorConfig, Mode};
//!
//! let mut det = Detector::new(DetectorConfig { mode: Mode::Multiscale, scales: 3, ..Default::default() })?;
//! for t in 0..100 {
//!     let scores = det.step((t as f64 * 0.3).sin())?;
//!     assert_eq!(scores.alphas.len(), 3);
//! }
//! # Ok::<(), mspca::Error>(())
//! ```

pub mod aggregate;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod eval;
pub mod haar;
pub mod lag;
pub mod past;
pub mod pipeline;

pub use aggregate::{agg_norm, AggregationRule, Aggregator, GramAccumulator, MincorrMode};
pub use dataset::{generate_synthetic, SeriesRecord, SynthSpec};
pub use detector::{Basis, Detector, DetectorConfig, Mode, ScoreVector};
pub use error::{Error, Result};
pub use eval::{auc, BenchmarkReport, SeriesAuc, Summary};
pub use haar::{haar_basis, HaarBasis};
pub use lag::{LagView, SampleBuffer};
pub use past::{batch_first_pc, PastOutput, PastState};
pub use pipeline::{score_values, PipelineConfig, ScoredSeries};
