//! Sidecar stream carrying per-frame filter flags and coefficients.
//!
//! Layout:
//!
//! ```text
//! header (9 bytes): "PCWF" | version u8 = 1 | qp u8 | gof_size u8 | k u8 = 7 | mode u8
//! frame*          : bit-packed, MSB first, zero-padded to a byte boundary
//!   luma flags    : 1 bit (BWF, CIWF) or flag_Luma [+ 5 class bits if set] (VCWF)
//!   chroma flags  : Cb bit, Cr bit
//!   coefficients  : for frames that carry them, one record per set flag in
//!                   flag order; a record is 7 x s1.14 fixed point (16 bits each)
//! ```
//!
//! BWF frames always carry coefficients. Under CIWF and VCWF only the first
//! frame of each group of frames does; the rest reuse them.

use crate::classify::CLASS_COUNT;
use crate::error::{Error, Result};
use crate::neighbor::FILTER_ORDER as K;
use crate::pipeline::EnhancementMode;
use crate::wiener::FilterCoefficients;

pub const MAGIC: &[u8; 4] = b"PCWF";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 9;

pub const FRACTION_BITS: u32 = 14;
pub const COEFF_BITS: u32 = 16;
/// Size of one serialized coefficient set.
pub const SET_BITS: u32 = COEFF_BITS * K as u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamHeader {
    pub qp: u8,
    pub gof_size: u8,
    pub mode: EnhancementMode,
}

impl StreamHeader {
    /// Whether frame `index` carries coefficient records.
    pub fn carries_coefficients(&self, index: usize) -> bool {
        match self.mode {
            EnhancementMode::Bwf => true,
            EnhancementMode::Ciwf | EnhancementMode::Vcwf => index.is_multiple_of(self.gof_size.max(1) as usize),
        }
    }
}

/// Seven s1.14 fixed-point taps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantizedFilter(pub [i16; K]);

impl QuantizedFilter {
    /// Rounds to the nearest representable value; out-of-range taps are
    /// clamped. Returns how many taps were clamped.
    pub fn quantize(coefficients: &FilterCoefficients) -> (Self, usize) {
        let scale = f64::from(1u32 << FRACTION_BITS);
        let mut clamped = 0;
        let raw = coefficients.h.map(|v| {
            let q = (v * scale).round();
            if q < f64::from(i16::MIN) || q > f64::from(i16::MAX) || q.is_nan() {
                clamped += 1;
            }
            if q.is_nan() {
                0
            } else {
                q.clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
            }
        });
        (QuantizedFilter(raw), clamped)
    }

    pub fn dequantize(&self) -> FilterCoefficients {
        let scale = f64::from(1u32 << FRACTION_BITS);
        FilterCoefficients { h: self.0.map(|v| f64::from(v) / scale) }
    }
}

/// Luma signalling: one flag, or the class-wise flags of VCWF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LumaFlags {
    Single(bool),
    /// `flag_Luma` is the OR of the class flags and is what goes on the wire first.
    Classified([bool; CLASS_COUNT]),
}

impl LumaFlags {
    pub fn any(&self) -> bool {
        match self {
            LumaFlags::Single(f) => *f,
            LumaFlags::Classified(f) => f.iter().any(|&b| b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePayload {
    pub luma: LumaFlags,
    /// Cb, Cr.
    pub chroma: [bool; 2],
    /// One record per set flag, in stream order, on frames that carry them.
    pub coefficients: Vec<QuantizedFilter>,
}

impl FramePayload {
    /// Set-level flags in stream order: the Luma set(s), then Cb, then Cr.
    pub fn set_flags(&self) -> Vec<bool> {
        let mut flags = match self.luma {
            LumaFlags::Single(f) => vec![f],
            LumaFlags::Classified(f) => f.to_vec(),
        };
        flags.extend_from_slice(&self.chroma);
        flags
    }

    pub fn flagged_sets(&self) -> usize {
        self.set_flags().into_iter().filter(|&f| f).count()
    }

    /// Number of flag bits as written (padding excluded).
    pub fn flag_bits(&self) -> u32 {
        let luma = match self.luma {
            LumaFlags::Single(_) => 1,
            LumaFlags::Classified(f) if f.iter().any(|&b| b) => 1 + CLASS_COUNT as u32,
            LumaFlags::Classified(_) => 1,
        };
        luma + 2
    }

    pub fn coefficient_bits(&self) -> u32 {
        self.coefficients.len() as u32 * SET_BITS
    }

    /// Unpadded frame size in bits.
    pub fn bit_len(&self) -> u32 {
        self.flag_bits() + self.coefficient_bits()
    }

    /// Frame size on the wire, padding included.
    pub fn byte_len(&self) -> usize {
        self.bit_len().div_ceil(8) as usize
    }

    /// Payload with every flag cleared, matching `mode`.
    pub fn disabled(mode: EnhancementMode) -> Self {
        let luma = match mode {
            EnhancementMode::Vcwf => LumaFlags::Classified([false; CLASS_COUNT]),
            _ => LumaFlags::Single(false),
        };
        FramePayload { luma, chroma: [false; 2], coefficients: Vec::new() }
    }

    fn validate(&self, header: &StreamHeader, index: usize) -> Result<()> {
        let classified = matches!(self.luma, LumaFlags::Classified(_));
        if classified != (header.mode == EnhancementMode::Vcwf) {
            return Err(Error::InvalidArgument(format!(
                "frame {index}: luma signalling does not match mode {:?}",
                header.mode
            )));
        }
        let expected = if header.carries_coefficients(index) { self.flagged_sets() } else { 0 };
        if self.coefficients.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "frame {index}: {} coefficient records, expected {expected}",
                self.coefficients.len()
            )));
        }
        Ok(())
    }
}

struct BitWriter {
    bytes: Vec<u8>,
    used: u32,
}

impl BitWriter {
    fn new(bytes: Vec<u8>) -> Self {
        BitWriter { bytes, used: 0 }
    }

    fn bit(&mut self, b: bool) {
        if self.used == 0 {
            self.bytes.push(0);
        }
        if b {
            *self.bytes.last_mut().unwrap() |= 0x80 >> self.used;
        }
        self.used = (self.used + 1) % 8;
    }

    fn bits(&mut self, value: u16, count: u32) {
        for i in (0..count).rev() {
            self.bit((value >> i) & 1 == 1);
        }
    }

    fn align(&mut self) {
        self.used = 0;
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    used: u32,
    frame: usize,
}

impl BitReader<'_> {
    fn bit(&mut self) -> Result<bool> {
        let byte =
            *self.bytes.get(self.pos).ok_or_else(|| Error::parse(self.pos, Some(self.frame), "truncated frame"))?;
        let b = byte & (0x80 >> self.used) != 0;
        self.used += 1;
        if self.used == 8 {
            self.used = 0;
            self.pos += 1;
        }
        Ok(b)
    }

    fn bits(&mut self, count: u32) -> Result<u16> {
        let mut v = 0u16;
        for _ in 0..count {
            v = (v << 1) | u16::from(self.bit()?);
        }
        Ok(v)
    }

    fn align(&mut self) -> Result<()> {
        if self.used != 0 {
            let rest = self.bytes[self.pos] & (0xff >> self.used);
            if rest != 0 {
                return Err(Error::parse(self.pos, Some(self.frame), "non-zero padding bits"));
            }
            self.used = 0;
            self.pos += 1;
        }
        Ok(())
    }
}

pub fn serialize(header: &StreamHeader, payloads: &[FramePayload]) -> Result<Vec<u8>> {
    if header.gof_size == 0 {
        return Err(Error::InvalidGofSize(0));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payloads.iter().map(FramePayload::byte_len).sum::<usize>());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[VERSION, header.qp, header.gof_size, K as u8, header.mode as u8]);
    let mut w = BitWriter::new(out);
    for (index, p) in payloads.iter().enumerate() {
        p.validate(header, index)?;
        match p.luma {
            LumaFlags::Single(f) => w.bit(f),
            LumaFlags::Classified(flags) => {
                let any = flags.iter().any(|&b| b);
                w.bit(any);
                if any {
                    flags.iter().for_each(|&b| w.bit(b));
                }
            }
        }
        p.chroma.iter().for_each(|&b| w.bit(b));
        for q in &p.coefficients {
            for &v in &q.0 {
                w.bits(v as u16, COEFF_BITS);
            }
        }
        w.align();
    }
    Ok(w.bytes)
}

pub fn parse(bytes: &[u8]) -> Result<(StreamHeader, Vec<FramePayload>)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::parse(bytes.len(), None, "truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::parse(0, None, "bad magic"));
    }
    if bytes[4] != VERSION {
        return Err(Error::parse(4, None, format!("unsupported version {}", bytes[4])));
    }
    let (qp, gof_size, k, mode) = (bytes[5], bytes[6], bytes[7], bytes[8]);
    if gof_size == 0 {
        return Err(Error::parse(6, None, "gof size 0"));
    }
    if k as usize != K {
        return Err(Error::parse(7, None, format!("filter order {k} unsupported")));
    }
    let mode = EnhancementMode::from_u8(mode).ok_or_else(|| Error::parse(8, None, format!("reserved mode {mode}")))?;
    let header = StreamHeader { qp, gof_size, mode };

    let mut r = BitReader { bytes, pos: HEADER_LEN, used: 0, frame: 0 };
    let mut payloads = Vec::new();
    while r.pos < bytes.len() {
        r.frame = payloads.len();
        let luma = match mode {
            EnhancementMode::Vcwf => {
                let mut flags = [false; CLASS_COUNT];
                if r.bit()? {
                    for f in flags.iter_mut() {
                        *f = r.bit()?;
                    }
                    if !flags.iter().any(|&b| b) {
                        return Err(Error::parse(r.pos, Some(r.frame), "flag_Luma set without any class flag"));
                    }
                }
                LumaFlags::Classified(flags)
            }
            _ => LumaFlags::Single(r.bit()?),
        };
        let chroma = [r.bit()?, r.bit()?];
        let mut payload = FramePayload { luma, chroma, coefficients: Vec::new() };
        if header.carries_coefficients(r.frame) {
            for _ in 0..payload.flagged_sets() {
                let mut taps = [0i16; K];
                for t in taps.iter_mut() {
                    *t = r.bits(COEFF_BITS)? as i16;
                }
                payload.coefficients.push(QuantizedFilter(taps));
            }
        }
        r.align()?;
        payloads.push(payload);
    }
    Ok((header, payloads))
}
