//! Collapsing the per-scale score vector into one anomaly score per step.
//!
//! * `norm`: `|alpha_t|^2`.
//! * `pca2`: reconstruction error of a second single-direction tracker run on the
//!   score vectors themselves.
//! * `mincorr`: the score of the scale whose row of the Gram matrix
//!   `G = sum_t alpha_t alpha_t^T` has the smallest sum (the scale least correlated
//!   with the others). The streaming variant uses the running Gram matrix; the
//!   offline variant fixes one scale from the whole series.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::past::PastState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationRule {
    Norm,
    Pca2,
    Mincorr,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MincorrMode {
    #[default]
    Streaming,
    Offline,
}

impl AggregationRule {
    pub const ALL: [AggregationRule; 3] = [
        AggregationRule::Norm,
        AggregationRule::Pca2,
        AggregationRule::Mincorr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AggregationRule::Norm => "norm",
            AggregationRule::Pca2 => "pca2",
            AggregationRule::Mincorr => "mincorr",
        }
    }
}

impl MincorrMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MincorrMode::Streaming => "streaming",
            MincorrMode::Offline => "offline",
        }
    }
}

impl fmt::Display for AggregationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for MincorrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AggregationRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "norm" => Ok(AggregationRule::Norm),
            "pca2" => Ok(AggregationRule::Pca2),
            "mincorr" => Ok(AggregationRule::Mincorr),
            other => Err(Error::Config(format!("unknown aggregation '{other}'"))),
        }
    }
}

impl FromStr for MincorrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "streaming" => Ok(MincorrMode::Streaming),
            "offline" => Ok(MincorrMode::Offline),
            other => Err(Error::Config(format!("unknown mincorr mode '{other}'"))),
        }
    }
}

/// Squared Euclidean norm of the score vector.
pub fn agg_norm(alpha: &[f64]) -> f64 {
    alpha.iter().map(|a| a * a).sum()
}

/// Running `G = sum_s alpha_s alpha_s^T`.
#[derive(Clone, Debug)]
pub struct GramAccumulator {
    dim: usize,
    gram: Vec<f64>,
    n: u64,
}

impl GramAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            gram: vec![0.0; dim * dim],
            n: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> u64 {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.dim + j]
    }

    pub fn update(&mut self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: alpha.len(),
            });
        }
        for (i, &ai) in alpha.iter().enumerate() {
            for (g, &aj) in self.gram[i * self.dim..(i + 1) * self.dim]
                .iter_mut()
                .zip(alpha)
            {
                *g += ai * aj;
            }
        }
        self.n += 1;
        Ok(())
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.gram
            .chunks(self.dim)
            .map(|row| row.iter().sum())
            .collect()
    }

    /// `argmin_j sum_i G_ji`, ties to the smallest index. Scale 0 while empty.
    pub fn least_correlated(&self) -> usize {
        let mut best = 0;
        let mut best_sum = f64::INFINITY;
        for (j, row) in self.gram.chunks(self.dim).enumerate() {
            let s: f64 = row.iter().sum();
            if s < best_sum {
                best = j;
                best_sum = s;
            }
        }
        best
    }
}

/// Streaming aggregator for one series.
#[derive(Clone, Debug)]
pub struct Aggregator {
    rule: AggregationRule,
    inner: Option<PastState>,
    gram: Option<GramAccumulator>,
}

impl Aggregator {
    /// `dim` is the length of the score vectors; `epsilon` seeds the inner tracker
    /// of the `pca2` rule.
    pub fn new(rule: AggregationRule, dim: usize, epsilon: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config(
                "score vectors must have at least one entry".into(),
            ));
        }
        let (inner, gram) = match rule {
            AggregationRule::Norm => (None, None),
            AggregationRule::Pca2 => (Some(PastState::new(dim, 1, epsilon)?), None),
            AggregationRule::Mincorr => (None, Some(GramAccumulator::new(dim))),
        };
        Ok(Self { rule, inner, gram })
    }

    pub fn rule(&self) -> AggregationRule {
        self.rule
    }

    pub fn push(&mut self, alpha: &[f64]) -> Result<f64> {
        match self.rule {
            AggregationRule::Norm => Ok(agg_norm(alpha)),
            AggregationRule::Pca2 => {
                let inner = self.inner.as_mut().expect("pca2 aggregator owns a tracker");
                Ok(inner.update(alpha)?.score)
            }
            AggregationRule::Mincorr => {
                let gram = self
                    .gram
                    .as_mut()
                    .expect("mincorr aggregator owns a Gram matrix");
                gram.update(alpha)?;
                Ok(alpha[gram.least_correlated()])
            }
        }
    }

    pub fn state_len(&self) -> usize {
        self.inner.as_ref().map_or(0, PastState::state_len)
            + self.gram.as_ref().map_or(0, |g| g.gram.len())
    }
}

/// Two-pass least-correlated scale: picks `j*` from the Gram matrix of the whole
/// series and returns it with the column `alpha_t^{j*}`.
pub fn mincorr_offline(alphas: &[Vec<f64>]) -> Result<(usize, Vec<f64>)> {
    let dim = alphas
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Empty("no score vectors to aggregate".into()))?;
    let mut gram = GramAccumulator::new(dim);
    for a in alphas {
        gram.update(a)?;
    }
    let j = gram.least_correlated();
    Ok((j, alphas.iter().map(|a| a[j]).collect()))
}

/// Aggregate a full series of score vectors.
pub fn aggregate_series(
    rule: AggregationRule,
    mincorr_mode: MincorrMode,
    alphas: &[Vec<f64>],
    epsilon: f64,
) -> Result<Vec<f64>> {
    if rule == AggregationRule::Mincorr && mincorr_mode == MincorrMode::Offline {
        return mincorr_offline(alphas).map(|(_, scores)| scores);
    }
    let Some(dim) = alphas.first().map(Vec::len) else {
        return Ok(Vec::new());
    };
    let mut agg = Aggregator::new(rule, dim, epsilon)?;
    alphas.iter().map(|a| agg.push(a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::past::DEFAULT_EPSILON;
    use proptest::prelude::*;

    #[test]
    fn norm_examples() {
        assert_eq!(agg_norm(&[3.0, 4.0]), 25.0);
        assert_eq!(agg_norm(&[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(agg_norm(&[1.5]), 2.25);
    }

    #[test]
    fn pca2_identical_vectors() {
        let mut agg = Aggregator::new(AggregationRule::Pca2, 3, DEFAULT_EPSILON).unwrap();
        for _ in 0..20 {
            let s = agg.push(&[0.3, 1.2, 0.7]).unwrap();
            assert!(s < 1e-24, "{s}");
        }
    }

    #[test]
    fn pca2_single_scale_is_exact() {
        let mut agg = Aggregator::new(AggregationRule::Pca2, 1, DEFAULT_EPSILON).unwrap();
        for a in [0.0, 0.0, 3.0, 0.1, 17.0, 2.5] {
            assert_eq!(agg.push(&[a]).unwrap(), 0.0);
        }
    }

    #[test]
    fn pca2_flags_orthogonal_outlier() {
        // 100 vectors along (1, 1), then one with an extra component of size m
        // along (1, -1)/sqrt 2, then more normal vectors.
        let m = 1.0;
        let mut stream: Vec<[f64; 2]> = (0..100)
            .map(|k| {
                let c = 1.0 + 0.5 * ((k % 7) as f64 / 7.0);
                [c, c]
            })
            .collect();
        let out_idx = stream.len();
        let h = m / 2f64.sqrt();
        stream.push([1.0 + h, 1.0 - h]);
        stream.extend((0..20).map(|_| [1.2, 1.2]));

        let mut agg = Aggregator::new(AggregationRule::Pca2, 2, DEFAULT_EPSILON).unwrap();
        let scores: Vec<f64> = stream.iter().map(|a| agg.push(a).unwrap()).collect();
        let outlier = scores[out_idx];
        assert!((outlier - m * m).abs() < 0.1 * m * m, "outlier {outlier}");
        for (k, s) in scores.iter().enumerate() {
            if k != out_idx {
                assert!(*s < 1e-2 * m * m, "score {s} at {k}");
            }
        }
    }

    #[test]
    fn mincorr_offline_example() {
        let zeta = 1e-3;
        let alphas = vec![
            vec![1.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![1.0, 1.0, zeta],
        ];
        let (j, scores) = mincorr_offline(&alphas).unwrap();
        assert_eq!(j, 2);
        assert_eq!(scores, vec![0.0, 0.0, zeta]);
    }

    #[test]
    fn mincorr_streaming_first_step_picks_min() {
        let mut agg = Aggregator::new(AggregationRule::Mincorr, 4, DEFAULT_EPSILON).unwrap();
        assert_eq!(agg.push(&[0.4, 0.9, 0.2, 0.5]).unwrap(), 0.2);
    }

    #[test]
    fn mincorr_single_scale() {
        let mut agg = Aggregator::new(AggregationRule::Mincorr, 1, DEFAULT_EPSILON).unwrap();
        for a in [0.5, 2.0, 0.0] {
            assert_eq!(agg.push(&[a]).unwrap(), a);
        }
    }

    #[test]
    fn empty_gram_and_ties() {
        let g = GramAccumulator::new(3);
        assert_eq!(g.least_correlated(), 0);
        let mut agg = Aggregator::new(AggregationRule::Mincorr, 3, DEFAULT_EPSILON).unwrap();
        assert_eq!(agg.push(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        let (j, _) = mincorr_offline(&[vec![2.0, 2.0]]).unwrap();
        assert_eq!(j, 0);
    }

    #[test]
    fn dimension_errors() {
        let mut agg = Aggregator::new(AggregationRule::Mincorr, 2, DEFAULT_EPSILON).unwrap();
        assert!(agg.push(&[1.0]).is_err());
        assert!(Aggregator::new(AggregationRule::Norm, 0, DEFAULT_EPSILON).is_err());
        assert!(mincorr_offline(&[]).is_err());
    }

    proptest! {
        #[test]
        fn mincorr_emits_an_entry_and_agrees_offline(
            rows in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 4), 1..60)
        ) {
            let mut agg = Aggregator::new(AggregationRule::Mincorr, 4, DEFAULT_EPSILON).unwrap();
            let mut last_j = 0;
            for a in &rows {
                let s = agg.push(a).unwrap();
                prop_assert!(a.contains(&s));
                last_j = agg.gram.as_ref().unwrap().least_correlated();
            }
            let (j, col) = mincorr_offline(&rows).unwrap();
            prop_assert_eq!(j, last_j);
            prop_assert_eq!(col.len(), rows.len());
        }

        #[test]
        fn norm_orders_like_euclidean_norm(
            a in prop::collection::vec(0.0f64..100.0, 3),
            b in prop::collection::vec(0.0f64..100.0, 3),
        ) {
            let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            if na < nb {
                prop_assert!(agg_norm(&a) <= agg_norm(&b));
            }
        }
    }
}
