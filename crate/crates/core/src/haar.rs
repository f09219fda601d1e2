//! Orthonormal Haar basis.
//!
//! `H_1 = [1]` and `H_2N = (1/sqrt 2) [H_N (x) [1, 1] ; I_N (x) [1, -1]]`, so the
//! first row is the scaling function and the following rows are detail functions
//! ordered coarse to fine. The change of basis applied to a lag vector is `H^T x`.
//!
//! [`HaarBasis`] keeps the dense matrix and is the reference. The detector uses
//! [`analyze_fast`], an O(N) evaluation of the same product that keeps no matrix.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

/// Dense `N x N` Haar analysis matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarBasis {
    size: usize,
    matrix: Vec<f64>,
}

impl HaarBasis {
    pub fn new(n: usize) -> Result<Self> {
        check_power_of_two(n)?;
        let mut size = 1;
        let mut matrix = vec![1.0];
        while size < n {
            let next = size * 2;
            let mut grown = vec![0.0; next * next];
            // H_N (x) [1, 1]
            for r in 0..size {
                for c in 0..size {
                    let v = matrix[r * size + c] * FRAC_1_SQRT_2;
                    grown[r * next + 2 * c] = v;
                    grown[r * next + 2 * c + 1] = v;
                }
            }
            // I_N (x) [1, -1]
            for r in 0..size {
                grown[(size + r) * next + 2 * r] = FRAC_1_SQRT_2;
                grown[(size + r) * next + 2 * r + 1] = -FRAC_1_SQRT_2;
            }
            matrix = grown;
            size = next;
        }
        Ok(Self { size, matrix })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Row-major entries.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.size + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.matrix[row * self.size..(row + 1) * self.size]
    }

    /// `H^T x` by dense matrix-vector product.
    pub fn analyze(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let n = self.size;
        let mut out = vec![0.0; n];
        for (r, &xr) in x.iter().enumerate() {
            let row = &self.matrix[r * n..(r + 1) * n];
            for (o, &h) in out.iter_mut().zip(row) {
                *o += h * xr;
            }
        }
        Ok(out)
    }

    /// `H z`, the inverse of [`HaarBasis::analyze`].
    pub fn synthesize(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z.len())?;
        let n = self.size;
        Ok((0..n)
            .map(|r| {
                self.matrix[r * n..(r + 1) * n]
                    .iter()
                    .zip(z)
                    .map(|(h, v)| h * v)
                    .sum()
            })
            .collect())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.size {
            return Err(Error::DimensionMismatch {
                expected: self.size,
                got: len,
            });
        }
        Ok(())
    }
}

pub fn haar_basis(n: usize) -> Result<HaarBasis> {
    HaarBasis::new(n)
}

pub(crate) fn check_power_of_two(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::Config(format!(
            "Haar basis size must be a power of two >= 1, got {n}"
        )));
    }
    Ok(())
}

/// Computes `H_N^T x` in O(N) without materializing `H_N`.
///
/// Unrolls the recursion: with `x = [a; b]`, `H_2N^T x` interleaves
/// `(u_i + b_i) / sqrt 2` and `(u_i - b_i) / sqrt 2` where `u = H_N^T a`.
/// Returns the number of arithmetic operations performed.
pub fn analyze_fast(x: &[f64], out: &mut [f64]) -> Result<u64> {
    let n = x.len();
    check_power_of_two(n)?;
    if out.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: out.len(),
        });
    }
    out[0] = x[0];
    let mut ops = 0;
    let mut half = 1;
    while half < n {
        // Descending so that out[i] is read before slots 2i, 2i+1 are written.
        for i in (0..half).rev() {
            let u = out[i];
            let b = x[half + i];
            out[2 * i] = (u + b) * FRAC_1_SQRT_2;
            out[2 * i + 1] = (u - b) * FRAC_1_SQRT_2;
        }
        ops += 4 * half as u64;
        half *= 2;
    }
    Ok(ops)
}
