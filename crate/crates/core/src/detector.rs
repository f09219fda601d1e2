//! Per-sample anomaly scoring over one or many dyadic lag windows.
//!
//! Three modes share the same tracker machinery:
//!
//! * `fixed`: one window of size `fixed_p`.
//! * `multiscale`: independent trackers on windows `2^j`, `j = 1..J`.
//! * `hierarchical`: the base tracker sees the 2-sample window; the tracker at
//!   scale `j + 1` sees the pair `[pi_t^j, pi_{t-2^j}^j]` of projections emitted
//!   by scale `j`. Scores at each level are relative to the level below.
//!
//! Every tracker and basis application counts its arithmetic so the
//! `O(T P)` versus `O(T log P)` cost of the two multiscale modes can be measured.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{analyze_fast, check_power_of_two};
use crate::lag::SampleBuffer;
use crate::past::{PastOutput, PastState, DEFAULT_EPSILON};

/// Largest supported `J`; windows up to `2^16` samples.
pub const MAX_SCALES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fixed,
    Multiscale,
    Hierarchical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Identity,
    Haar,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Fixed, Mode::Multiscale, Mode::Hierarchical];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Fixed => "fixed",
            Mode::Multiscale => "multiscale",
            Mode::Hierarchical => "hierarchical",
        }
    }
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Identity, Basis::Haar];

    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Identity => "identity",
            Basis::Haar => "haar",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" => Ok(Mode::Fixed),
            "multiscale" => Ok(Mode::Multiscale),
            "hierarchical" => Ok(Mode::Hierarchical),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" => Ok(Basis::Identity),
            "haar" => Ok(Basis::Haar),
            other => Err(Error::Config(format!("unknown basis '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub mode: Mode,
    pub basis: Basis,
    /// Number of dyadic scales `J`; windows are `2^1 ..= 2^J`.
    pub scales: usize,
    /// Window size in fixed mode.
    pub fixed_p: usize,
    /// Tracked principal directions per scale (1 or 2).
    pub components: usize,
    pub epsilon: f64,
    /// Hierarchical mode only: rotate each projection pair above the base scale
    /// with the 2-point Haar basis.
    pub haar_upper_levels: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Multiscale,
            basis: Basis::Identity,
            scales: 6,
            fixed_p: 4,
            components: 1,
            epsilon: DEFAULT_EPSILON,
            haar_upper_levels: false,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.components) {
            return Err(Error::Config(format!(
                "components must be 1 or 2, got {}",
                self.components
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must satisfy 0 < epsilon < 1, got {}",
                self.epsilon
            )));
        }
        match self.mode {
            Mode::Fixed => {
                if self.fixed_p == 0 {
                    return Err(Error::Config("fixed_p must be >= 1".into()));
                }
                if self.fixed_p > 1 << MAX_SCALES {
                    return Err(Error::Config(format!(
                        "fixed_p {} exceeds the window limit {}",
                        self.fixed_p,
                        1usize << MAX_SCALES
                    )));
                }
                if self.basis == Basis::Haar && !self.fixed_p.is_power_of_two() {
                    return Err(Error::Config(format!(
                        "basis=haar requires a power-of-two window, got fixed_p={}",
                        self.fixed_p
                    )));
                }
                if self.components > self.fixed_p {
                    return Err(Error::Config(format!(
                        "cannot track {} components in a window of {}",
                        self.components, self.fixed_p
                    )));
                }
            }
            Mode::Multiscale | Mode::Hierarchical => {
                if !(1..=MAX_SCALES).contains(&self.scales) {
                    return Err(Error::Config(format!(
                        "scales must be in 1..={MAX_SCALES}, got {}",
                        self.scales
                    )));
                }
            }
        }
        Ok(())
    }

    /// Length of the score vector emitted per step.
    pub fn num_scores(&self) -> usize {
        match self.mode {
            Mode::Fixed => 1,
            Mode::Multiscale | Mode::Hierarchical => self.scales,
        }
    }

    /// Largest window `P` the detector looks at.
    pub fn max_window(&self) -> usize {
        match self.mode {
            Mode::Fixed => self.fixed_p,
            Mode::Multiscale | Mode::Hierarchical => 1 << self.scales,
        }
    }
}

/// Per-scale scores at one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector {
    pub t: u64,
    pub alphas: Vec<f64>,
}

/// Lag window, optional Haar change of basis and a tracker.
#[derive(Clone, Debug)]
struct ScaleTracker {
    basis: Basis,
    lag: Vec<f64>,
    coeffs: Vec<f64>,
    past: PastState,
    basis_ops: u64,
}

impl ScaleTracker {
    fn new(window: usize, basis: Basis, cfg: &DetectorConfig) -> Result<Self> {
        if basis == Basis::Haar {
            check_power_of_two(window)?;
        }
        Ok(Self {
            basis,
            lag: vec![0.0; window],
            coeffs: match basis {
                Basis::Identity => Vec::new(),
                Basis::Haar => vec![0.0; window],
            },
            past: PastState::new(window, cfg.components, cfg.epsilon)?,
            basis_ops: 0,
        })
    }

    fn step(&mut self, samples: &SampleBuffer) -> Result<PastOutput> {
        samples.lag_into(&mut self.lag)?;
        match self.basis {
            Basis::Identity => self.past.update(&self.lag),
            Basis::Haar => {
                self.basis_ops += analyze_fast(&self.lag, &mut self.coeffs)?;
                self.past.update(&self.coeffs)
            }
        }
    }

    fn ops(&self) -> u64 {
        self.past.ops() + self.basis_ops
    }

    fn state_len(&self) -> usize {
        self.lag.len() + self.coeffs.len() + self.past.state_len()
    }
}

/// Level `j >= 2` of the hierarchy.
#[derive(Clone, Debug)]
struct UpperLevel {
    past: PastState,
    rotate: bool,
    rotate_ops: u64,
}

impl UpperLevel {
    fn step(&mut self, current: f64, delayed: f64) -> Result<PastOutput> {
        let z = if self.rotate {
            self.rotate_ops += 4;
            [
                (current + delayed) * FRAC_1_SQRT_2,
                (current - delayed) * FRAC_1_SQRT_2,
            ]
        } else {
            [current, delayed]
        };
        self.past.update(&z)
    }
}

#[derive(Clone, Debug)]
enum Engine {
    /// Fixed or multiscale: independent trackers over the shared sample buffer.
    Scales(Vec<ScaleTracker>),
    Hierarchy {
        base: Box<ScaleTracker>,
        upper: Vec<UpperLevel>,
        /// `delays[j]` holds the last `2^(j+1) + 1` leading projections of level
        /// `j + 1` (zero-based `j`), newest first.
        delays: Vec<SampleBuffer>,
    },
}

/// Streaming detector; feed one sample at a time with [`Detector::step`].
#[derive(Clone, Debug)]
pub struct Detector {
    config: DetectorConfig,
    samples: SampleBuffer,
    engine: Engine,
    t: u64,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        let (capacity, engine) = match config.mode {
            Mode::Fixed => (
                config.fixed_p,
                Engine::Scales(vec![ScaleTracker::new(
                    config.fixed_p,
                    config.basis,
                    &config,
                )?]),
            ),
            Mode::Multiscale => {
                let trackers = (1..=config.scales)
                    .map(|j| ScaleTracker::new(1 << j, config.basis, &config))
                    .collect::<Result<Vec<_>>>()?;
                (1 << config.scales, Engine::Scales(trackers))
            }
            Mode::Hierarchical => {
                let base = Box::new(ScaleTracker::new(2, config.basis, &config)?);
                let upper = (2..=config.scales)
                    .map(|_| {
                        Ok(UpperLevel {
                            past: PastState::new(2, config.components, config.epsilon)?,
                            rotate: config.basis == Basis::Haar && config.haar_upper_levels,
                            rotate_ops: 0,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let delays = (1..config.scales)
                    .map(|j| SampleBuffer::new((1 << j) + 1))
                    .collect::<Result<Vec<_>>>()?;
                (
                    2,
                    Engine::Hierarchy {
                        base,
                        upper,
                        delays,
                    },
                )
            }
        };
        Ok(Self {
            samples: SampleBuffer::new(capacity)?,
            engine,
            config,
            t: 0,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Number of samples consumed.
    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn num_scores(&self) -> usize {
        self.config.num_scores()
    }

    /// Consume one sample and return its per-scale scores.
    pub fn step(&mut self, x: f64) -> Result<ScoreVector> {
        let mut alphas = vec![0.0; self.num_scores()];
        let t = self.t;
        self.step_into(x, &mut alphas)?;
        Ok(ScoreVector { t, alphas })
    }

    /// Like [`Detector::step`], writing the scores into `alphas`.
    pub fn step_into(&mut self, x: f64, alphas: &mut [f64]) -> Result<()> {
        if alphas.len() != self.num_scores() {
            return Err(Error::DimensionMismatch {
                expected: self.num_scores(),
                got: alphas.len(),
            });
        }
        let t = self.t;
        self.samples.ingest(x)?;
        let with_context = |e: Error, j: usize| match e {
            Error::Numeric { what, .. } => Error::Numeric {
                t,
                scale: None,
                what,
            }
            .at_scale(j),
            other => other,
        };
        match &mut self.engine {
            Engine::Scales(trackers) => {
                for (j, (tracker, alpha)) in trackers.iter_mut().zip(alphas.iter_mut()).enumerate()
                {
                    *alpha = tracker
                        .step(&self.samples)
                        .map_err(|e| with_context(e, j + 1))?
                        .score;
                }
            }
            Engine::Hierarchy {
                base,
                upper,
                delays,
            } => {
                let out = base.step(&self.samples).map_err(|e| with_context(e, 1))?;
                alphas[0] = out.score;
                let mut projection = out.leading();
                for (j, (level, alpha)) in upper.iter_mut().zip(alphas[1..].iter_mut()).enumerate()
                {
                    let delay = &mut delays[j];
                    delay
                        .ingest(projection)
                        .map_err(|e| with_context(e, j + 1))?;
                    let lag = 1usize << (j + 1);
                    // repeats the earliest projection until the history is long enough
                    let delayed = delay.lagged(lag).unwrap_or(projection);
                    let out = level
                        .step(projection, delayed)
                        .map_err(|e| with_context(e, j + 2))?;
                    *alpha = out.score;
                    projection = out.leading();
                }
            }
        }
        self.t += 1;
        Ok(())
    }

    /// Run a whole series, returning one score vector per sample.
    pub fn run(&mut self, xs: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut all = Vec::with_capacity(xs.len());
        for &x in xs {
            all.push(self.step(x)?.alphas);
        }
        Ok(all)
    }

    /// Cumulative arithmetic operations spent on tracker updates and basis
    /// applications.
    pub fn ops(&self) -> u64 {
        match &self.engine {
            Engine::Scales(trackers) => trackers.iter().map(ScaleTracker::ops).sum(),
            Engine::Hierarchy { base, upper, .. } => {
                base.ops()
                    + upper
                        .iter()
                        .map(|l| l.past.ops() + l.rotate_ops)
                        .sum::<u64>()
            }
        }
    }

    /// Number of floating-point values held by the detector, independent of how
    /// many samples have been consumed.
    pub fn state_len(&self) -> usize {
        let engine = match &self.engine {
            Engine::Scales(trackers) => trackers.iter().map(ScaleTracker::state_len).sum(),
            Engine::Hierarchy {
                base,
                upper,
                delays,
            } => {
                base.state_len()
                    + upper.iter().map(|l| l.past.state_len()).sum::<usize>()
                    + delays.iter().map(SampleBuffer::capacity).sum::<usize>()
            }
        };
        self.samples.capacity() + engine
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: Mode, basis: Basis, scales: usize, fixed_p: usize) -> DetectorConfig {
        DetectorConfig {
            mode,
            basis,
            scales,
            fixed_p,
            ..DetectorConfig::default()
        }
    }

    fn sinusoid(n: usize, period: f64) -> Vec<f64> {
        (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * t as f64 / period).sin())
            .collect()
    }

    #[test]
    fn validation() {
        assert!(cfg(Mode::Fixed, Basis::Haar, 1, 5).validate().is_err());
        assert!(cfg(Mode::Fixed, Basis::Haar, 1, 8).validate().is_ok());
        assert!(cfg(Mode::Fixed, Basis::Identity, 1, 0).validate().is_err());
        assert!(cfg(Mode::Multiscale, Basis::Identity, 0, 4)
            .validate()
            .is_err());
        assert!(cfg(Mode::Multiscale, Basis::Identity, MAX_SCALES + 1, 4)
            .validate()
            .is_err());
        let mut c = cfg(Mode::Fixed, Basis::Identity, 1, 1);
        c.components = 2;
        assert!(c.validate().is_err());
        assert!("Hierarchical".parse::<Mode>().is_ok());
        assert!("wavelet".parse::<Basis>().is_err());
    }

    #[test]
    fn fixed_point_window_converges_on_constant() {
        let mut det = Detector::new(cfg(Mode::Fixed, Basis::Identity, 1, 1)).unwrap();
        for _ in 0..50 {
            let s = det.step(2.5).unwrap();
            assert!(s.alphas[0] < 1e-24);
        }
    }

    #[test]
    fn first_sample_scores_zero_in_either_basis() {
        for basis in Basis::ALL {
            let mut det = Detector::new(cfg(Mode::Fixed, basis, 1, 4)).unwrap();
            assert!(det.step(1.7).unwrap().alphas[0] < 1e-24);
        }
    }

    #[test]
    fn step_response_peaks_inside_window() {
        let mut det = Detector::new(cfg(Mode::Fixed, Basis::Identity, 1, 8)).unwrap();
        let xs: Vec<f64> = (0..160).map(|t| if t < 100 { 0.0 } else { 10.0 }).collect();
        let scores: Vec<f64> = det.run(&xs).unwrap().into_iter().map(|a| a[0]).collect();
        let argmax = (90..130)
            .max_by(|&a, &b| scores[a].total_cmp(&scores[b]))
            .unwrap();
        assert!((100..=107).contains(&argmax), "argmax {argmax}");
        assert!(scores[..100].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn spike_is_the_global_maximum() {
        let mut xs = sinusoid(1000, 37.0);
        xs[500] += 6.0;
        for mode in [Mode::Multiscale, Mode::Hierarchical] {
            let mut det = Detector::new(cfg(mode, Basis::Identity, 3, 4)).unwrap();
            let norms: Vec<f64> = det
                .run(&xs)
                .unwrap()
                .iter()
                .map(|a| a.iter().map(|v| v * v).sum())
                .collect();
            let argmax = (0..norms.len())
                .max_by(|&a, &b| norms[a].total_cmp(&norms[b]))
                .unwrap();
            assert!((500..=508).contains(&argmax), "{mode}: argmax {argmax}");
        }
    }

    #[test]
    fn numeric_error_carries_time() {
        let mut det = Detector::new(cfg(Mode::Multiscale, Basis::Identity, 2, 4)).unwrap();
        det.step(1.0).unwrap();
        let err = det.step(f64::NAN).unwrap_err();
        assert!(matches!(err, Error::NonFiniteInput { t: 1, .. }));
        let err = det.step(1e200).and_then(|_| det.step(1e200)).unwrap_err();
        assert!(
            matches!(err, Error::Numeric { scale: Some(1), .. }),
            "{err}"
        );
    }

    #[test]
    fn haar_is_a_rotation_of_the_identity_run() {
        // PAST is equivariant under orthogonal changes of basis, so the two bases
        // agree up to rounding.
        let mut xs = sinusoid(600, 23.0);
        xs[300] += 3.0;
        for mode in [Mode::Multiscale, Mode::Hierarchical] {
            let id = Detector::new(cfg(mode, Basis::Identity, 4, 4))
                .unwrap()
                .run(&xs)
                .unwrap();
            let hr = Detector::new(cfg(mode, Basis::Haar, 4, 4))
                .unwrap()
                .run(&xs)
                .unwrap();
            for (a, b) in id.iter().flatten().zip(hr.iter().flatten()) {
                assert!(
                    (a - b).abs() <= 1e-8 * (1.0 + a.abs()),
                    "{mode}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn state_size_independent_of_length() {
        let mut det = Detector::new(cfg(Mode::Hierarchical, Basis::Identity, 10, 4)).unwrap();
        let before = det.state_len();
        det.run(&sinusoid(3000, 50.0)).unwrap();
        assert_eq!(det.state_len(), before);
        assert!(before < 4 * 1024 + 64 * 10);
    }

    #[test]
    fn op_count_starts_at_zero() {
        let det = Detector::new(cfg(Mode::Multiscale, Basis::Identity, 3, 4)).unwrap();
        assert_eq!(det.ops(), 0);
    }
}
