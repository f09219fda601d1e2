//! Streaming principal-subspace tracking with the PAST update.
//!
//! Each tracked direction `w` carries an energy accumulator `sigma2`. For an input
//! `z` the first direction is updated as
//!
//! ```text
//! y      = w^T z
//! sigma2 = sigma2 + y^2
//! e      = z - y w
//! w      = w + (y / sigma2) e,   then renormalized to unit length
//! pi     = w^T z
//! ```
//!
//! and the reconstruction is `pi w`. A second direction, when requested, runs the
//! same update on the deflated residual `z - pi_1 w_1`. The anomaly score is the
//! squared reconstruction error `|z~ - z|^2`.
//!
//! A direction starting at zero never moves (`y` stays 0), so each direction is
//! seeded with the first input residual that is not numerically zero.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub const MAX_COMPONENTS: usize = 2;
pub const DEFAULT_EPSILON: f64 = 1e-4;

/// A deflated residual smaller than this fraction of the input norm is treated as
/// zero when deciding whether to seed the second direction.
const SEED_RELATIVE_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct PastState {
    dim: usize,
    components: usize,
    epsilon: f64,
    /// `components` rows of length `dim`.
    directions: Vec<f64>,
    energies: [f64; MAX_COMPONENTS],
    initialized: [bool; MAX_COMPONENTS],
    residual: Vec<f64>,
    reconstruction: Vec<f64>,
    steps: u64,
    ops: u64,
}

/// Result of one tracker update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PastOutput {
    projections: [f64; MAX_COMPONENTS],
    components: usize,
    /// Squared reconstruction error.
    pub score: f64,
}

impl PastOutput {
    /// `pi_i = w_i^T r_i` for each tracked direction (0 for a direction not yet seeded).
    pub fn projections(&self) -> &[f64] {
        &self.projections[..self.components]
    }

    /// Projection on the leading direction.
    pub fn leading(&self) -> f64 {
        self.projections[0]
    }
}

impl PastState {
    pub fn new(dim: usize, components: usize, epsilon: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("tracker dimension must be >= 1".into()));
        }
        if !(1..=MAX_COMPONENTS).contains(&components) {
            return Err(Error::Config(format!(
                "number of components must be 1 or 2, got {components}"
            )));
        }
        if components > dim {
            return Err(Error::Config(format!(
                "cannot track {components} components in dimension {dim}"
            )));
        }
        if !(epsilon.is_finite() && epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must satisfy 0 < epsilon < 1, got {epsilon}"
            )));
        }
        Ok(Self {
            dim,
            components,
            epsilon,
            directions: vec![0.0; components * dim],
            energies: [epsilon; MAX_COMPONENTS],
            initialized: [false; MAX_COMPONENTS],
            residual: vec![0.0; dim],
            reconstruction: vec![0.0; dim],
            steps: 0,
            ops: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Unit direction `i`, or `None` until it has been seeded.
    pub fn direction(&self, i: usize) -> Option<&[f64]> {
        (i < self.components && self.initialized[i])
            .then(|| &self.directions[i * self.dim..(i + 1) * self.dim])
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.energies[i]
    }

    pub fn is_initialized(&self, i: usize) -> bool {
        i < self.components && self.initialized[i]
    }

    /// Reconstruction `z~` produced by the latest update.
    pub fn reconstruction(&self) -> &[f64] {
        &self.reconstruction
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Arithmetic operations performed so far.
    pub fn ops(&self) -> u64 {
        self.ops
    }

    /// Number of floating-point values held by the tracker.
    pub fn state_len(&self) -> usize {
        self.directions.len() + 2 * MAX_COMPONENTS + self.residual.len() + self.reconstruction.len()
    }

    pub fn update(&mut self, z: &[f64]) -> Result<PastOutput> {
        let d = self.dim;
        if z.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: z.len(),
            });
        }
        let t = self.steps;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                t,
                scale: None,
                what: "non-finite tracker input".into(),
            });
        }

        let mut ops = 0u64;
        self.residual.copy_from_slice(z);
        self.reconstruction.iter_mut().for_each(|v| *v = 0.0);
        let mut z_norm2 = None;
        let mut projections = [0.0; MAX_COMPONENTS];

        #[allow(clippy::needless_range_loop)]
        for i in 0..self.components {
            let r = &mut self.residual;
            let w = &mut self.directions[i * d..(i + 1) * d];

            if !self.initialized[i] {
                let n2 = dot(r, r);
                ops += d as u64;
                let seed = if i == 0 {
                    n2 > 0.0
                } else {
                    let zn2 = *z_norm2.get_or_insert_with(|| dot(z, z));
                    n2 > SEED_RELATIVE_TOL * SEED_RELATIVE_TOL * zn2
                };
                if !seed {
                    continue;
                }
                let inv = 1.0 / n2.sqrt();
                for (wv, rv) in w.iter_mut().zip(r.iter()) {
                    *wv = rv * inv;
                }
                ops += d as u64 + 1;
                self.initialized[i] = true;
            }

            let y = dot(w, r);
            self.energies[i] += y * y;
            let gain = y / self.energies[i];
            // w += gain * (r - y w)
            for (wv, rv) in w.iter_mut().zip(r.iter()) {
                let e = rv - y * *wv;
                *wv += gain * e;
            }
            let norm = dot(w, w).sqrt();
            w.iter_mut().for_each(|v| *v /= norm);
            let pi = dot(w, r);
            ops += 6 * d as u64 + 3;

            for (rec, wv) in self.reconstruction.iter_mut().zip(w.iter()) {
                *rec += pi * wv;
            }
            ops += d as u64;
            if i + 1 < self.components {
                for (rv, wv) in r.iter_mut().zip(w.iter()) {
                    *rv -= pi * wv;
                }
                ops += d as u64;
            }
            projections[i] = pi;
        }

        let score: f64 = self
            .reconstruction
            .iter()
            .zip(z)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        ops += d as u64;

        self.steps += 1;
        self.ops += ops;

        if !score.is_finite()
            || projections.iter().any(|p| !p.is_finite())
            || self.energies.iter().any(|s| !s.is_finite())
        {
            return Err(Error::Numeric {
                t,
                scale: None,
                what: "non-finite value in tracker update".into(),
            });
        }
        Ok(PastOutput {
            projections,
            components: self.components,
            score,
        })
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Leading principal direction of the rows of `data` by full eigendecomposition of
/// the (uncentered) Gram matrix `X^T X`, i.e. the unit `w` minimizing
/// `sum_t |x_t - w w^T x_t|^2`. Sign is fixed so the largest-magnitude entry is
/// positive.
///
/// Reference for the streaming tracker; not used on the streaming path.
pub fn batch_first_pc(data: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = data.first().map(Vec::len).unwrap_or(0);
    if d == 0 {
        return Err(Error::Empty(
            "batch PCA needs at least one non-empty row".into(),
        ));
    }
    if data.len() < d {
        return Err(Error::Config(format!(
            "batch PCA needs at least as many rows as columns ({} < {d})",
            data.len()
        )));
    }
    if let Some(bad) = data.iter().find(|row| row.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.len(),
        });
    }
    let x = DMatrix::from_fn(data.len(), d, |r, c| data[r][c]);
    let gram = x.transpose() * &x;
    if gram.iter().all(|v| *v == 0.0) {
        return Err(Error::State("batch PCA on all-zero data".into()));
    }
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.imax();
    let mut w: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    let norm = dot(&w, &w).sqrt();
    let pivot = w
        .iter()
        .copied()
        .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
    let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
    w.iter_mut().for_each(|v| *v *= sign / norm);
    Ok(w)
}

/// Total rank-1 reconstruction error `sum_t |x_t - w w^T x_t|^2` for unit `w`.
pub fn reconstruction_objective(data: &[Vec<f64>], w: &[f64]) -> f64 {
    data.iter()
        .map(|x| {
            let p = dot(w, x);
            x.iter()
                .zip(w)
                .map(|(a, b)| (a - p * b).powi(2))
                .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn seeded_state(w: &[f64], energy: f64) -> PastState {
        let mut s = PastState::new(w.len(), 1, DEFAULT_EPSILON).unwrap();
        s.directions.copy_from_slice(w);
        s.energies[0] = energy;
        s.initialized[0] = true;
        s
    }

    #[test]
    fn init_validation() {
        let s = PastState::new(4, 1, 1e-4).unwrap();
        assert_eq!(s.energy(0), 1e-4);
        assert!(s.direction(0).is_none());
        assert!(PastState::new(2, 2, 0.0).is_err());
        assert!(PastState::new(1, 2, 1e-4).is_err());
        assert!(PastState::new(0, 1, 1e-4).is_err());
        assert!(PastState::new(3, 3, 1e-4).is_err());
        assert!(PastState::new(3, 1, f64::NAN).is_err());
    }

    #[test]
    fn one_dimensional_seed() {
        let mut s = PastState::new(1, 1, 1e-4).unwrap();
        s.update(&[0.0]).unwrap();
        assert!(s.direction(0).is_none());
        s.update(&[-3.0]).unwrap();
        assert_eq!(s.direction(0).unwrap(), &[-1.0]);
    }

    #[test]
    fn aligned_input_is_exact() {
        let a = 2.5;
        let mut s = seeded_state(&[1.0, 0.0], DEFAULT_EPSILON);
        let out = s.update(&[a, 0.0]).unwrap();
        assert_eq!(s.direction(0).unwrap(), &[1.0, 0.0]);
        assert_eq!(out.projections(), &[a]);
        assert_eq!(s.reconstruction(), &[a, 0.0]);
        assert_eq!(out.score, 0.0);
    }

    #[test]
    fn orthogonal_input_is_pure_residual() {
        let b = 1.5;
        let mut s = seeded_state(&[1.0, 0.0], DEFAULT_EPSILON);
        let out = s.update(&[0.0, b]).unwrap();
        assert_eq!(s.direction(0).unwrap(), &[1.0, 0.0]);
        assert_eq!(out.leading(), 0.0);
        assert_eq!(s.reconstruction(), &[0.0, 0.0]);
        assert_eq!(out.score, b * b);
        assert_eq!(s.energy(0), DEFAULT_EPSILON);
    }

    #[test]
    fn first_sample_seeds_direction() {
        let mut s = PastState::new(3, 1, DEFAULT_EPSILON).unwrap();
        let out = s.update(&[3.0, 0.0, 4.0]).unwrap();
        let w = s.direction(0).unwrap();
        assert!((w[0] - 0.6).abs() < 1e-15 && w[1] == 0.0 && (w[2] - 0.8).abs() < 1e-15);
        assert!(out.score < 1e-24);
        assert!((out.leading() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn zero_input_before_seed_scores_zero() {
        let mut s = PastState::new(2, 2, DEFAULT_EPSILON).unwrap();
        let out = s.update(&[0.0, 0.0]).unwrap();
        assert_eq!(out.score, 0.0);
        assert!(!s.is_initialized(0));
    }

    #[test]
    fn second_component_seeds_on_residual() {
        let mut s = PastState::new(2, 2, DEFAULT_EPSILON).unwrap();
        s.update(&[1.0, 0.0]).unwrap();
        assert!(s.is_initialized(0));
        assert!(!s.is_initialized(1));
        let out = s.update(&[0.0, 1.0]).unwrap();
        assert!(s.is_initialized(1));
        // Two directions span the plane, so everything is reconstructed.
        assert!(out.score < 1e-20, "score {}", out.score);
    }

    #[test]
    fn errors() {
        let mut s = PastState::new(3, 1, DEFAULT_EPSILON).unwrap();
        assert!(matches!(
            s.update(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
        s.update(&[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            s.update(&[f64::NAN, 0.0, 0.0]),
            Err(Error::Numeric { t: 1, .. })
        ));
    }

    #[test]
    fn batch_rank_one() {
        let data: Vec<Vec<f64>> = (1..=6)
            .map(|k| vec![3.0 * k as f64, 4.0 * k as f64])
            .collect();
        let w = batch_first_pc(&data).unwrap();
        assert!((w[0] - 0.6).abs() < 1e-12 && (w[1] - 0.8).abs() < 1e-12);
        // negated data gives the same sign-normalized answer
        let neg: Vec<Vec<f64>> = data
            .iter()
            .map(|r| r.iter().map(|v| -v).collect())
            .collect();
        assert_eq!(batch_first_pc(&neg).unwrap().len(), 2);
        assert!((batch_first_pc(&neg).unwrap()[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn batch_isotropic_checks_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<Vec<f64>> = (0..400)
            .map(|_| (0..2).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let w = batch_first_pc(&data).unwrap();
        let best = reconstruction_objective(&data, &w);
        for k in 0..64 {
            let th = k as f64 * std::f64::consts::PI / 64.0;
            assert!(best <= reconstruction_objective(&data, &[th.cos(), th.sin()]) + 1e-9);
        }
    }

    #[test]
    fn batch_dominant_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let scales = [1.0, 4.0, 1.0, 1.0];
        let data: Vec<Vec<f64>> = (0..100)
            .map(|_| {
                scales
                    .iter()
                    .map(|s| s * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                    .collect()
            })
            .collect();
        let w = batch_first_pc(&data).unwrap();
        let angle = w[1].abs().min(1.0).acos().to_degrees();
        assert!(angle < 5.0, "angle {angle}");
    }

    #[test]
    fn batch_errors() {
        assert!(batch_first_pc(&[]).is_err());
        assert!(batch_first_pc(&[vec![1.0, 2.0]]).is_err());
        assert!(batch_first_pc(&[vec![0.0, 0.0], vec![0.0, 0.0]]).is_err());
    }

    proptest! {
        #[test]
        fn invariants_hold_over_stream(
            seed in any::<u64>(),
            dim in 1usize..7,
            two in any::<bool>(),
            len in 1usize..120,
        ) {
            let k = if two && dim >= 2 { 2 } else { 1 };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = PastState::new(dim, k, DEFAULT_EPSILON).unwrap();
            let mut prev_energy = [DEFAULT_EPSILON; 2];
            for _ in 0..len {
                let z: Vec<f64> = (0..dim).map(|_| 3.0 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
                let out = s.update(&z).unwrap();
                prop_assert!(out.score >= 0.0);
                #[allow(clippy::needless_range_loop)]
                for i in 0..k {
                    if let Some(w) = s.direction(i) {
                        prop_assert!((dot(w, w).sqrt() - 1.0).abs() < 1e-10);
                    }
                    prop_assert!(s.energy(i) >= prev_energy[i]);
                    prev_energy[i] = s.energy(i);
                }
                if k == 1 {
                    let z2 = dot(&z, &z);
                    let pi = out.leading();
                    prop_assert!((out.score - (z2 - pi * pi)).abs() <= 1e-8 * z2.max(1e-300));
                }
            }
        }
    }
}
