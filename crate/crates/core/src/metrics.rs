//! Quality and cost metrics.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

pub const PEAK: f64 = 255.0;

/// Sum of squared differences between two equally long 8-bit signals.
pub fn sse_u8(original: &[u8], candidate: &[u8]) -> Result<f64> {
    if original.len() != candidate.len() {
        return Err(Error::LengthMismatch { expected: original.len(), found: candidate.len() });
    }
    Ok(original
        .iter()
        .zip(candidate)
        .map(|(&a, &b)| {
            let d = i64::from(a) - i64::from(b);
            (d * d) as f64
        })
        .sum())
}

/// PSNR from an SSE over `n` samples. Returns `f64::INFINITY` when `sse == 0`.
pub fn psnr_from_sse(sse: f64, n: usize) -> f64 {
    if sse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK * n as f64 / sse).log10()
    }
}

pub fn psnr(original: &[u8], candidate: &[u8]) -> Result<f64> {
    let sse = sse_u8(original, candidate)?;
    Ok(psnr_from_sse(sse, original.len()))
}

/// `(7 Y + Cb + Cr) / 9`.
pub fn weighted_psnr(luma: f64, cb: f64, cr: f64) -> f64 {
    (7.0 * luma + cb + cr) / 9.0
}

/// Bits per output point.
pub fn bpop(bits: f64, points: usize) -> f64 {
    bits / points as f64
}

pub fn complexity_ratio(t_proposed: f64, t_anchor: f64) -> Result<f64> {
    if t_anchor.is_nan() || t_anchor <= 0.0 {
        return Err(Error::ZeroAnchorTime);
    }
    Ok(100.0 * t_proposed / t_anchor)
}

/// One point of a rate-distortion curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub bpop: f64,
    pub psnr: f64,
}

/// Least-squares cubic fit `y = p0 + p1 x + p2 x^2 + p3 x^3`, solved through
/// the normal equations on centered, scaled abscissae.
fn cubic_fit(x: &[f64], y: &[f64]) -> Result<[f64; 4]> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let scale = x.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::BdRate("degenerate quality axis".into()));
    }
    let mut a = [[0.0f64; 4]; 4];
    let mut b = [0.0f64; 4];
    for (&xi, &yi) in x.iter().zip(y) {
        let t = (xi - mean) / scale;
        let pow = [1.0, t, t * t, t * t * t];
        for r in 0..4 {
            for c in 0..4 {
                a[r][c] += pow[r] * pow[c];
            }
            b[r] += pow[r] * yi;
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).expect("non-empty range");
        if a[piv][col].abs() < 1e-12 {
            return Err(Error::BdRate("singular cubic fit".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut t = [0.0f64; 4];
    for r in (0..4).rev() {
        let s: f64 = (r + 1..4).map(|c| a[r][c] * t[c]).sum();
        t[r] = (b[r] - s) / a[r][r];
    }
    // Expand p(x) = sum t_k ((x - mean)/scale)^k into monomials of x.
    let (m, s) = (mean, scale);
    let q = [t[0], t[1] / s, t[2] / (s * s), t[3] / (s * s * s)];
    Ok([
        q[0] - q[1] * m + q[2] * m * m - q[3] * m * m * m,
        q[1] - 2.0 * q[2] * m + 3.0 * q[3] * m * m,
        q[2] - 3.0 * q[3] * m,
        q[3],
    ])
}

fn integral(p: &[f64; 4], lo: f64, hi: f64) -> f64 {
    let prim = |x: f64| p[0] * x + p[1] * x * x / 2.0 + p[2] * x.powi(3) / 3.0 + p[3] * x.powi(4) / 4.0;
    prim(hi) - prim(lo)
}

/// Bjøntegaard delta rate of `test` against `anchor`, in percent.
///
/// Fits `log10(bpop)` as a cubic polynomial of PSNR for each curve and
/// averages the difference over the overlapping PSNR interval. Negative
/// values mean `test` needs fewer bits for the same quality.
pub fn bd_rate(anchor: &[RatePoint], test: &[RatePoint]) -> Result<f64> {
    for (name, curve) in [("anchor", anchor), ("test", test)] {
        if curve.len() < 4 {
            return Err(Error::BdRate(format!("{name} curve has {} points, need at least 4", curve.len())));
        }
        if curve.iter().any(|p| p.bpop.is_nan() || p.bpop <= 0.0 || !p.psnr.is_finite()) {
            return Err(Error::BdRate(format!("{name} curve needs positive rates and finite PSNR")));
        }
    }
    let split = |c: &[RatePoint]| -> (Vec<f64>, Vec<f64>) {
        (c.iter().map(|p| p.psnr).collect(), c.iter().map(|p| p.bpop.log10()).collect())
    };
    let (qa, ra) = split(anchor);
    let (qb, rb) = split(test);
    let pa = cubic_fit(&qa, &ra)?;
    let pb = cubic_fit(&qb, &rb)?;
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = min(&qa).max(min(&qb));
    let hi = max(&qa).min(max(&qb));
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(Error::BdRate("quality ranges do not overlap".into()));
    }
    let avg = (integral(&pb, lo, hi) - integral(&pa, lo, hi)) / (hi - lo);
    Ok((10f64.powf(avg) - 1.0) * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_examples() {
        assert_eq!(psnr(&[1, 2, 3], &[1, 2, 3]).unwrap(), f64::INFINITY);
        let a = vec![10u8; 100];
        let b = vec![11u8; 100];
        assert!((psnr(&a, &b).unwrap() - 48.1308).abs() < 1e-4);
        assert!(psnr(&a, &b[..5]).is_err());
    }

    #[test]
    fn weighted_examples() {
        assert_eq!(weighted_psnr(37.5, 37.5, 37.5), 37.5);
        assert!((weighted_psnr(45.0, 50.0, 50.0) - 46.1111).abs() < 1e-4);
        assert!((weighted_psnr(40.0, 40.0, 49.0) - 41.0).abs() < 1e-12);
    }

    #[test]
    fn complexity_examples() {
        assert_eq!(complexity_ratio(2.0, 2.0).unwrap(), 100.0);
        assert!((complexity_ratio(1.11, 1.0).unwrap() - 111.0).abs() < 1e-9);
        assert_eq!(complexity_ratio(0.0, 3.0).unwrap(), 0.0);
        assert!(complexity_ratio(1.0, 0.0).is_err());
    }

    #[test]
    fn cubic_fit_recovers_polynomial() {
        let x = [30.0, 32.0, 35.0, 37.0, 41.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 - 0.1 * v + 0.003 * v * v - 1e-5 * v * v * v).collect();
        let p = cubic_fit(&x, &y).unwrap();
        for (i, want) in [0.5, -0.1, 0.003, -1e-5].into_iter().enumerate() {
            assert!((p[i] - want).abs() < 1e-7, "{i}: {} vs {want}", p[i]);
        }
    }
}
