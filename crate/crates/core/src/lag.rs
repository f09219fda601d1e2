//! Lag embedding of a univariate stream.
//!
//! A [`SampleBuffer`] keeps the most recent `capacity` samples of the stream and
//! materializes the lag vector `[x_t, x_{t-1}, ..., x_{t-p+1}]` for any window
//! `p <= capacity`. Before `p` samples have been seen, positions that precede the
//! first ingested sample are filled with the oldest sample still available.

use crate::error::{Error, Result};

/// Fixed-capacity ring of the most recent samples.
#[derive(Clone, Debug)]
pub struct SampleBuffer {
    ring: Vec<f64>,
    /// Slot that the next sample will be written to.
    head: usize,
    count_seen: u64,
}

impl SampleBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("sample buffer capacity must be >= 1".into()));
        }
        Ok(Self {
            ring: vec![0.0; capacity],
            head: 0,
            count_seen: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.ring.len()
    }

    /// Total number of samples ingested since construction.
    pub fn count_seen(&self) -> u64 {
        self.count_seen
    }

    /// Number of samples that can be retrieved, `min(count_seen, capacity)`.
    pub fn len(&self) -> usize {
        self.count_seen.min(self.ring.len() as u64) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.count_seen == 0
    }

    /// Push one sample, evicting the oldest one when full.
    ///
    /// Non-finite samples are rejected and leave the buffer untouched.
    pub fn ingest(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFiniteInput {
                t: self.count_seen,
                value: x,
            });
        }
        self.ring[self.head] = x;
        self.head = (self.head + 1) % self.ring.len();
        self.count_seen += 1;
        Ok(())
    }

    /// Sample `lag` steps in the past (`lag = 0` is the newest), padded with the
    /// oldest available sample when the history is shorter than `lag + 1`.
    ///
    /// The caller guarantees the buffer is non-empty and `lag < capacity`.
    #[inline]
    fn padded(&self, lag: usize) -> f64 {
        let lag = lag.min(self.len() - 1);
        let cap = self.ring.len();
        self.ring[(self.head + cap - 1 - lag) % cap]
    }

    /// Sample `lag` steps back with the padding rule applied, or `None` when the
    /// buffer is empty or `lag >= capacity`.
    pub fn lagged(&self, lag: usize) -> Option<f64> {
        (!self.is_empty() && lag < self.ring.len()).then(|| self.padded(lag))
    }

    /// Retrievable samples, newest first.
    pub fn iter_newest_first(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.padded(k))
    }

    /// Write the lag vector of window `p` into `out` (which must have length `p`).
    pub fn lag_into(&self, out: &mut [f64]) -> Result<()> {
        let p = out.len();
        self.check_window(p)?;
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = self.padded(k);
        }
        Ok(())
    }

    pub fn lag_vector(&self, p: usize) -> Result<LagView> {
        let mut values = vec![0.0; p];
        self.lag_into(&mut values)?;
        Ok(LagView(values))
    }

    fn check_window(&self, p: usize) -> Result<()> {
        if p == 0 {
            return Err(Error::Config("lag window must be >= 1".into()));
        }
        if p > self.ring.len() {
            return Err(Error::Config(format!(
                "lag window {p} exceeds buffer capacity {}",
                self.ring.len()
            )));
        }
        if self.is_empty() {
            return Err(Error::State(
                "lag vector requested from an empty buffer".into(),
            ));
        }
        Ok(())
    }
}

/// A lag vector, newest sample at index 0.
#[derive(Clone, Debug, PartialEq)]
pub struct LagView(Vec<f64>);

impl LagView {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for LagView {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_ingest() {
        let mut buf = SampleBuffer::new(4).unwrap();
        buf.ingest(5.0).unwrap();
        assert_eq!(buf.count_seen(), 1);
        assert_eq!(buf.iter_newest_first().collect::<Vec<_>>(), vec![5.0]);
    }

    #[test]
    fn eviction_at_capacity() {
        let mut buf = SampleBuffer::new(2).unwrap();
        for x in [1.0, 2.0, 3.0] {
            buf.ingest(x).unwrap();
        }
        assert_eq!(buf.iter_newest_first().collect::<Vec<_>>(), vec![3.0, 2.0]);
        assert_eq!(buf.count_seen(), 3);
    }

    #[test]
    fn rejects_non_finite() {
        let mut buf = SampleBuffer::new(2).unwrap();
        buf.ingest(1.0).unwrap();
        assert!(matches!(
            buf.ingest(f64::NAN),
            Err(Error::NonFiniteInput { t: 1, .. })
        ));
        assert!(buf.ingest(f64::INFINITY).is_err());
        assert_eq!(buf.count_seen(), 1);
    }

    #[test]
    fn lag_vector_full_history() {
        let mut buf = SampleBuffer::new(4).unwrap();
        for x in [1.0, 2.0, 3.0] {
            buf.ingest(x).unwrap();
        }
        assert_eq!(buf.lag_vector(2).unwrap().as_slice(), &[3.0, 2.0]);
    }

    #[test]
    fn lag_vector_pads_with_oldest() {
        let mut buf = SampleBuffer::new(4).unwrap();
        buf.ingest(5.0).unwrap();
        assert_eq!(buf.lag_vector(4).unwrap().as_slice(), &[5.0; 4]);
        buf.ingest(6.0).unwrap();
        assert_eq!(buf.lag_vector(4).unwrap().as_slice(), &[6.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn point_window() {
        let mut buf = SampleBuffer::new(3).unwrap();
        buf.ingest(1.0).unwrap();
        buf.ingest(7.2).unwrap();
        assert_eq!(buf.lag_vector(1).unwrap().as_slice(), &[7.2]);
    }

    #[test]
    fn window_errors() {
        let mut buf = SampleBuffer::new(2).unwrap();
        assert!(matches!(buf.lag_vector(1), Err(Error::State(_))));
        buf.ingest(1.0).unwrap();
        assert!(matches!(buf.lag_vector(3), Err(Error::Config(_))));
        assert!(matches!(buf.lag_vector(0), Err(Error::Config(_))));
        assert!(SampleBuffer::new(0).is_err());
    }

    proptest! {
        #[test]
        fn full_history_is_literal_slice(
            xs in prop::collection::vec(-1e6f64..1e6, 1..80),
            cap in 1usize..32,
            p_raw in 1usize..32,
        ) {
            let p = p_raw.min(cap);
            let mut buf = SampleBuffer::new(cap).unwrap();
            let mut prev: Option<Vec<f64>> = None;
            for (t, &x) in xs.iter().enumerate() {
                buf.ingest(x).unwrap();
                let lag = buf.lag_vector(p).unwrap().into_vec();
                if t + 1 >= p {
                    let expect: Vec<f64> = xs[t + 1 - p..=t].iter().rev().copied().collect();
                    prop_assert_eq!(&lag, &expect);
                }
                if let Some(prev) = prev {
                    prop_assert_eq!(&lag[1..], &prev[..p - 1]);
                }
                prop_assert_eq!(buf.lag_vector(1).unwrap().into_vec(), vec![x]);
                prev = Some(lag);
            }
        }
    }
}
