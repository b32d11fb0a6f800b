//! Lagrangian rate-distortion gate for filter flags.

/// `lambda = 0.85 * 2^((qp - 12) / 3)`.
pub fn lambda(qp: u8) -> f64 {
    0.85 * ((f64::from(qp) - 12.0) / 3.0).exp2()
}

pub fn rd_cost(d_sse: f64, r_bits: f64, lambda: f64) -> f64 {
    d_sse + lambda * r_bits
}

/// Bits charged to the unfiltered branch: the flag alone.
pub const FLAG_BITS: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdDecision {
    pub flag: bool,
    pub cost_filtered: f64,
    pub cost_unfiltered: f64,
    pub coeff_bits: u32,
}

impl RdDecision {
    /// Cost of whichever branch was selected.
    pub fn selected_cost(&self) -> f64 {
        if self.flag {
            self.cost_filtered
        } else {
            self.cost_unfiltered
        }
    }
}

/// Compares filtering (`coeff_bits` includes its flag bit) against leaving
/// the component alone (one flag bit). Ties keep the filter off.
pub fn decide(d_unf: f64, d_fil: f64, coeff_bits: u32, lambda: f64) -> RdDecision {
    let cost_filtered = rd_cost(d_fil, f64::from(coeff_bits), lambda);
    let cost_unfiltered = rd_cost(d_unf, f64::from(FLAG_BITS), lambda);
    RdDecision { flag: cost_filtered < cost_unfiltered, cost_filtered, cost_unfiltered, coeff_bits }
}
