//! Variance-based Luma classification.

use crate::error::{Error, Result};
use crate::neighbor::FILTER_ORDER as K;

/// Lower bounds of classes 2..=5. Each class owns `[lower, upper)`.
pub const THRESHOLDS: [f64; 4] = [10.0, 20.0, 40.0, 60.0];

pub const CLASS_COUNT: usize = 5;

/// Class id in `1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarianceClass(u8);

impl VarianceClass {
    pub fn new(id: u8) -> Option<Self> {
        (1..=CLASS_COUNT as u8).contains(&id).then_some(VarianceClass(id))
    }

    pub fn id(self) -> u8 {
        self.0
    }

    /// Zero-based slot for buffers indexed by class.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

/// Population variance of the seven Luma taps.
///
/// Evaluated as `(k * sum(x^2) - sum(x)^2) / k^2`, which is exact for 8-bit
/// integer taps, so the class boundary decision cannot depend on rounding.
pub fn point_variance(row: &[f64; K]) -> f64 {
    let k = K as f64;
    let sum: f64 = row.iter().sum();
    let sum_sq: f64 = row.iter().map(|v| v * v).sum();
    ((k * sum_sq - sum * sum) / (k * k)).max(0.0)
}

pub fn categorize(v: f64) -> Result<VarianceClass> {
    if v.is_nan() || v < 0.0 || v.is_infinite() {
        return Err(Error::InvalidVariance(v));
    }
    let below = THRESHOLDS.iter().filter(|&&t| v >= t).count();
    Ok(VarianceClass(below as u8 + 1))
}

/// Classifies every row of a Luma neighbor matrix.
pub fn classify_rows(rows: &[[f64; K]]) -> Vec<VarianceClass> {
    rows.iter()
        .map(|r| categorize(point_variance(r)).expect("variance of finite taps is finite and non-negative"))
        .collect()
}
