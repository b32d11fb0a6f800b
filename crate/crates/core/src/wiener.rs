//! Least-squares Wiener filter estimation and application.
//!
//! Coefficients minimize `|a - P h|^2` where each row of `P` holds a point's
//! reconstructed attribute followed by its six neighbors. The normal
//! equations `A h = c` with `A = P^T P` and `c = P^T a` are solved by a
//! Cholesky factorization after a small Tikhonov term is added. The term
//! pulls `h` toward the identity filter rather than toward zero, so the
//! solved filter is never worse in-sample than leaving the attribute alone.

#![allow(clippy::needless_range_loop)]

use crate::color::quantize_u8;
use crate::error::{Error, Result};
use crate::neighbor::FILTER_ORDER as K;

/// Relative ridge weight: `eps = RIDGE_SCALE * trace(A) / k`.
pub const RIDGE_SCALE: f64 = 1e-6;

/// Accumulated `A = P^T P`, `c = P^T a`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEquation {
    pub a: [[f64; K]; K],
    pub c: [f64; K],
    pub sample_count: usize,
}

impl Default for NormalEquation {
    fn default() -> Self {
        NormalEquation { a: [[0.0; K]; K], c: [0.0; K], sample_count: 0 }
    }
}

impl NormalEquation {
    /// Adds one row and its target value.
    #[inline]
    pub fn push(&mut self, row: &[f64; K], target: f64) {
        for i in 0..K {
            let ri = row[i];
            self.c[i] += ri * target;
            for j in i..K {
                self.a[i][j] += ri * row[j];
            }
        }
        self.sample_count += 1;
    }

    fn symmetrize(&mut self) {
        for i in 0..K {
            for j in 0..i {
                self.a[i][j] = self.a[j][i];
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..K).map(|i| self.a[i][i]).sum()
    }

    /// The ridge weight used by [`solve`].
    pub fn ridge(&self) -> f64 {
        RIDGE_SCALE * self.trace() / K as f64
    }
}

/// Builds the normal equations from all rows, in ascending row order.
pub fn accumulate(rows: &[[f64; K]], original: &[f64]) -> Result<NormalEquation> {
    if rows.len() != original.len() {
        return Err(Error::LengthMismatch { expected: rows.len(), found: original.len() });
    }
    Ok(accumulate_subset(rows, original, 0..rows.len()))
}

/// Builds the normal equations from the selected rows. `indices` must be
/// ascending for encoder/decoder agreement.
pub fn accumulate_subset(
    rows: &[[f64; K]],
    original: &[f64],
    indices: impl IntoIterator<Item = usize>,
) -> NormalEquation {
    let mut eq = NormalEquation::default();
    for i in indices {
        eq.push(&rows[i], original[i]);
    }
    eq.symmetrize();
    eq
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterCoefficients {
    pub h: [f64; K],
}

impl FilterCoefficients {
    pub const IDENTITY: FilterCoefficients = {
        let mut h = [0.0; K];
        h[0] = 1.0;
        FilterCoefficients { h }
    };

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solution {
    pub coefficients: FilterCoefficients,
    /// Set when the system could not be factorized and the identity filter
    /// was substituted.
    pub degraded: bool,
}

/// Solves `(A + eps I) h = c + eps e0`.
pub fn solve(eq: &NormalEquation) -> Solution {
    let degraded = Solution { coefficients: FilterCoefficients::IDENTITY, degraded: true };
    let eps = eq.ridge();
    if eq.sample_count == 0 || !eps.is_finite() || eps <= 0.0 {
        return degraded;
    }
    let mut m = eq.a;
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += eps;
    }
    let mut rhs = eq.c;
    rhs[0] += eps;
    match cholesky_solve(m, rhs) {
        Some(h) if h.iter().all(|v| v.is_finite()) => {
            Solution { coefficients: FilterCoefficients { h }, degraded: false }
        }
        _ => degraded,
    }
}

/// In-place `L L^T` factorization followed by two triangular solves.
fn cholesky_solve(mut m: [[f64; K]; K], mut b: [f64; K]) -> Option<[f64; K]> {
    for j in 0..K {
        let mut d = m[j][j];
        for k in 0..j {
            d -= m[j][k] * m[j][k];
        }
        if d.is_nan() || d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        m[j][j] = d;
        for i in j + 1..K {
            let mut s = m[i][j];
            for k in 0..j {
                s -= m[i][k] * m[j][k];
            }
            m[i][j] = s / d;
        }
    }
    for i in 0..K {
        let mut s = b[i];
        for k in 0..i {
            s -= m[i][k] * b[k];
        }
        b[i] = s / m[i][i];
    }
    for i in (0..K).rev() {
        let mut s = b[i];
        for k in i + 1..K {
            s -= m[k][i] * b[k];
        }
        b[i] = s / m[i][i];
    }
    Some(b)
}

/// Row-wise dot products `P h` before any rounding.
pub fn filter_real(rows: &[[f64; K]], h: &FilterCoefficients) -> Vec<f64> {
    rows.iter().map(|r| dot(r, &h.h)).collect()
}

#[inline]
pub fn dot(row: &[f64; K], h: &[f64; K]) -> f64 {
    row.iter().zip(h).map(|(a, b)| a * b).sum()
}

/// Filters and re-quantizes to 8 bits.
pub fn apply(rows: &[[f64; K]], h: &FilterCoefficients) -> Vec<u8> {
    rows.iter().map(|r| quantize_u8(dot(r, &h.h))).collect()
}

pub fn sse(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), found: y.len() });
    }
    Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub fn mse(x: &[f64], y: &[f64]) -> Result<f64> {
    let total = sse(x, y)?;
    Ok(if x.is_empty() { 0.0 } else { total / x.len() as f64 })
}
