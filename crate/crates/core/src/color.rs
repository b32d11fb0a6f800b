//! RGB <-> YCbCr conversion (BT.709, full range).
//!
//! Both directions round half away from zero and clamp to `[0, 255]` so that
//! every consumer of a frame derives the same integer attributes.

use crate::cloud::ColorTriple;
use crate::error::{Error, Result};

const KR: f64 = 0.2126;
const KB: f64 = 0.0722;
const KG: f64 = 1.0 - KR - KB;
const CB_SCALE: f64 = 2.0 * (1.0 - KB);
const CR_SCALE: f64 = 2.0 * (1.0 - KR);

/// Rounds half away from zero and clamps into the 8-bit range.
#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn channel(v: i64) -> Result<f64> {
    if (0..=255).contains(&v) {
        Ok(v as f64)
    } else {
        Err(Error::ColorOutOfRange(v))
    }
}

pub fn rgb_to_ycbcr(r: i64, g: i64, b: i64) -> Result<ColorTriple> {
    let (r, g, b) = (channel(r)?, channel(g)?, channel(b)?);
    let y = KR * r + KG * g + KB * b;
    let cb = (b - y) / CB_SCALE + 128.0;
    let cr = (r - y) / CR_SCALE + 128.0;
    Ok(ColorTriple::new(quantize_u8(y), quantize_u8(cb), quantize_u8(cr)))
}

pub fn ycbcr_to_rgb(t: ColorTriple) -> [u8; 3] {
    let [y, cb, cr] = t.channels().map(f64::from);
    let r = y + CR_SCALE * (cr - 128.0);
    let b = y + CB_SCALE * (cb - 128.0);
    let g = (y - KR * r - KB * b) / KG;
    [quantize_u8(r), quantize_u8(g), quantize_u8(b)]
}
