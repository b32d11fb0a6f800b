//! Encoder and decoder paths for the three enhancement modes.
//!
//! Every frame is processed in Morton order. A frame is described by a list
//! of coefficient *sets* in stream order: one Luma set (or five, one per
//! variance class, under VCWF) followed by the Cb and Cr sets. Each set owns
//! a component and a subset of points.
//!
//! * BWF estimates and transmits fresh coefficients on every frame.
//! * CIWF estimates on the first frame of each group of frames (GOF) and
//!   reuses the buffered coefficients on the rest.
//! * VCWF is CIWF with the Luma set split by neighborhood variance.
//!
//! Both sides filter with the *dequantized* coefficients, so the decoder
//! output matches the encoder output bit for bit.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bitstream::{FramePayload, LumaFlags, QuantizedFilter, StreamHeader, SET_BITS};
use crate::classify::{classify_rows, VarianceClass, CLASS_COUNT};
use crate::cloud::{sort_by_morton, PointCloud, CHANNELS};
use crate::color::quantize_u8;
use crate::error::{Error, Result};
use crate::neighbor::{neighbor_matrix, NeighborMatrix};
use crate::rdo::{decide, lambda, RdDecision, FLAG_BITS};
use crate::surrogate::{code_sequence, QuantizerConfig, SequenceCoding};
use crate::wiener::{accumulate_subset, dot, filter_real, solve, FilterCoefficients};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum EnhancementMode {
    Bwf = 0,
    Ciwf = 1,
    Vcwf = 2,
}

impl EnhancementMode {
    pub const ALL: [EnhancementMode; 3] = [EnhancementMode::Bwf, EnhancementMode::Ciwf, EnhancementMode::Vcwf];

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(EnhancementMode::Bwf),
            1 => Some(EnhancementMode::Ciwf),
            2 => Some(EnhancementMode::Vcwf),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnhancementMode::Bwf => "bwf",
            EnhancementMode::Ciwf => "ciwf",
            EnhancementMode::Vcwf => "vcwf",
        }
    }
}

impl fmt::Display for EnhancementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnhancementMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bwf" => Ok(EnhancementMode::Bwf),
            "ciwf" => Ok(EnhancementMode::Ciwf),
            "vcwf" => Ok(EnhancementMode::Vcwf),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

/// Identifies a coefficient set within a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetId {
    Luma,
    LumaClass(VarianceClass),
    Cb,
    Cr,
}

impl SetId {
    pub fn component(self) -> usize {
        match self {
            SetId::Luma | SetId::LumaClass(_) => 0,
            SetId::Cb => 1,
            SetId::Cr => 2,
        }
    }
}

/// A set together with the points it filters.
#[derive(Debug, Clone)]
pub struct SetSpec {
    pub id: SetId,
    /// Ascending point indices (Morton order).
    pub members: Vec<usize>,
}

/// Prepared frame: Morton-sorted reconstruction, its neighbor matrix and
/// its coefficient sets.
#[derive(Debug, Clone)]
pub struct FrameContext {
    pub reconstructed: PointCloud,
    pub neighbors: NeighborMatrix,
    pub sets: Vec<SetSpec>,
}

impl FrameContext {
    pub fn new(reconstructed: &PointCloud, mode: EnhancementMode) -> Result<Self> {
        let reconstructed = sort_by_morton(reconstructed);
        let neighbors = neighbor_matrix(&reconstructed)?;
        let all: Vec<usize> = (0..reconstructed.len()).collect();
        let mut sets = Vec::with_capacity(CLASS_COUNT + 2);
        match mode {
            EnhancementMode::Vcwf => {
                let mut members: Vec<Vec<usize>> = vec![Vec::new(); CLASS_COUNT];
                for (i, class) in classify_rows(neighbors.component(0)).into_iter().enumerate() {
                    members[class.index()].push(i);
                }
                for (j, m) in members.into_iter().enumerate() {
                    let class = VarianceClass::new(j as u8 + 1).expect("class in range");
                    sets.push(SetSpec { id: SetId::LumaClass(class), members: m });
                }
            }
            _ => sets.push(SetSpec { id: SetId::Luma, members: all.clone() }),
        }
        sets.push(SetSpec { id: SetId::Cb, members: all.clone() });
        sets.push(SetSpec { id: SetId::Cr, members: all });
        Ok(FrameContext { reconstructed, neighbors, sets })
    }

    /// Filtered value of point `i` in `set` under `h`.
    #[inline]
    fn filtered(&self, component: usize, i: usize, h: &FilterCoefficients) -> u8 {
        quantize_u8(dot(&self.neighbors.component(component)[i], &h.h))
    }

    /// Applies the enabled sets. `coefficients[s]` must be present for every
    /// enabled set `s`.
    pub fn render(&self, flags: &[bool], coefficients: &[Option<FilterCoefficients>]) -> Result<PointCloud> {
        if flags.len() != self.sets.len() || coefficients.len() != self.sets.len() {
            return Err(Error::PayloadMismatch(format!("expected {} sets, got {}", self.sets.len(), flags.len())));
        }
        let mut colors = self.reconstructed.colors().to_vec();
        for ((set, &on), h) in self.sets.iter().zip(flags).zip(coefficients) {
            if !on {
                continue;
            }
            let h = h
                .as_ref()
                .ok_or_else(|| Error::PayloadMismatch(format!("set {:?} enabled without coefficients", set.id)))?;
            let c = set.id.component();
            for &i in &set.members {
                colors[i].set(c, self.filtered(c, i, h));
            }
        }
        self.reconstructed.with_colors(colors)
    }
}

/// RD bookkeeping for one set of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetDecision {
    pub set: SetId,
    pub members: usize,
    /// SSE against the original, unfiltered and filtered (post-rounding).
    pub d_unfiltered: f64,
    pub d_filtered: f64,
    pub decision: RdDecision,
    /// True when the solver fell back to the identity filter.
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub frame: usize,
    pub carries_coefficients: bool,
    pub sets: Vec<SetDecision>,
    pub payload_bits: u32,
}

#[derive(Debug, Clone)]
pub struct EncodedSequence {
    pub header: StreamHeader,
    pub filtered: Vec<PointCloud>,
    pub payloads: Vec<FramePayload>,
    pub reports: Vec<FrameReport>,
}

fn sorted_pair(original: &PointCloud, ctx: &FrameContext, frame: usize) -> Result<PointCloud> {
    let original = sort_by_morton(original);
    if !original.same_geometry(&ctx.reconstructed) {
        return Err(Error::GeometryMismatch { frame });
    }
    Ok(original)
}

fn sse_u8(original: &[u8], candidate: impl Iterator<Item = u8>, members: &[usize]) -> f64 {
    let cand: Vec<u8> = candidate.collect();
    members
        .iter()
        .zip(cand)
        .map(|(&i, v)| {
            let d = f64::from(original[i]) - f64::from(v);
            d * d
        })
        .sum()
}

struct FrameOutcome {
    filtered: PointCloud,
    payload: FramePayload,
    report: FrameReport,
    /// Dequantized coefficients of transmitted sets, for the GOF buffer.
    transmitted: Vec<Option<FilterCoefficients>>,
}

/// Encodes one frame. With `buffer == None` coefficients are estimated and
/// transmitted; otherwise the buffered sets are reused.
fn encode_frame(
    frame: usize,
    original: &PointCloud,
    reconstructed: &PointCloud,
    mode: EnhancementMode,
    qp: u8,
    buffer: Option<&[Option<FilterCoefficients>]>,
) -> Result<FrameOutcome> {
    let ctx = FrameContext::new(reconstructed, mode)?;
    let original = sorted_pair(original, &ctx, frame)?;
    let lam = lambda(qp);
    let carries = buffer.is_none();

    let orig_components: [Vec<u8>; CHANNELS] = std::array::from_fn(|c| original.component(c));
    let recon_components: [Vec<u8>; CHANNELS] = std::array::from_fn(|c| ctx.reconstructed.component(c));

    let mut flags = Vec::with_capacity(ctx.sets.len());
    let mut used: Vec<Option<FilterCoefficients>> = Vec::with_capacity(ctx.sets.len());
    let mut quantized: Vec<Option<QuantizedFilter>> = Vec::with_capacity(ctx.sets.len());
    let mut decisions = Vec::with_capacity(ctx.sets.len());

    for (s, set) in ctx.sets.iter().enumerate() {
        let c = set.id.component();
        let d_unf = sse_u8(&orig_components[c], set.members.iter().map(|&i| recon_components[c][i]), &set.members);
        let mut degraded = false;
        let (candidate, q) = if set.members.is_empty() {
            (None, None)
        } else if carries {
            let target: Vec<f64> = orig_components[c].iter().map(|&v| f64::from(v)).collect();
            let eq = accumulate_subset(ctx.neighbors.component(c), &target, set.members.iter().copied());
            let sol = solve(&eq);
            degraded = sol.degraded;
            let (q, _clamped) = QuantizedFilter::quantize(&sol.coefficients);
            (Some(q.dequantize()), Some(q))
        } else {
            (buffer.and_then(|b| b[s]), None)
        };

        let decision = match &candidate {
            Some(h) => {
                let d_fil =
                    sse_u8(&orig_components[c], set.members.iter().map(|&i| ctx.filtered(c, i, h)), &set.members);
                let bits = if carries { SET_BITS + FLAG_BITS } else { FLAG_BITS };
                let decision = decide(d_unf, d_fil, bits, lam);
                decisions.push(SetDecision {
                    set: set.id,
                    members: set.members.len(),
                    d_unfiltered: d_unf,
                    d_filtered: d_fil,
                    decision,
                    degraded,
                });
                decision.flag
            }
            None => {
                // Nothing to apply: empty class, or set never transmitted in this GOF.
                let cost = d_unf + lam * f64::from(FLAG_BITS);
                let decision =
                    RdDecision { flag: false, cost_filtered: f64::INFINITY, cost_unfiltered: cost, coeff_bits: 0 };
                decisions.push(SetDecision {
                    set: set.id,
                    members: set.members.len(),
                    d_unfiltered: d_unf,
                    d_filtered: d_unf,
                    decision,
                    degraded,
                });
                false
            }
        };
        flags.push(decision);
        used.push(if decision { candidate } else { None });
        quantized.push(if decision { q } else { None });
    }

    let payload = build_payload(mode, &flags, carries.then_some(&quantized[..]));
    let filtered = ctx.render(&flags, &used)?;
    let transmitted = if carries { used } else { Vec::new() };
    Ok(FrameOutcome {
        filtered,
        report: FrameReport { frame, carries_coefficients: carries, sets: decisions, payload_bits: payload.bit_len() },
        payload,
        transmitted,
    })
}

fn build_payload(mode: EnhancementMode, flags: &[bool], quantized: Option<&[Option<QuantizedFilter>]>) -> FramePayload {
    let n = flags.len();
    let luma = match mode {
        EnhancementMode::Vcwf => {
            let mut f = [false; CLASS_COUNT];
            f.copy_from_slice(&flags[..CLASS_COUNT]);
            LumaFlags::Classified(f)
        }
        _ => LumaFlags::Single(flags[0]),
    };
    let coefficients = quantized.map(|q| q.iter().flatten().copied().collect()).unwrap_or_default();
    FramePayload { luma, chroma: [flags[n - 2], flags[n - 1]], coefficients }
}

/// Encodes frames forming one group: the first frame (or every frame under
/// BWF) estimates coefficients, the others reuse them.
fn encode_gof(
    first_index: usize,
    originals: &[PointCloud],
    reconstructed: &[PointCloud],
    mode: EnhancementMode,
    qp: u8,
) -> Result<Vec<FrameOutcome>> {
    if originals.len() != reconstructed.len() {
        return Err(Error::LengthMismatch { expected: originals.len(), found: reconstructed.len() });
    }
    if originals.is_empty() {
        return Ok(Vec::new());
    }
    if mode == EnhancementMode::Bwf {
        return originals
            .par_iter()
            .zip(reconstructed)
            .enumerate()
            .map(|(t, (o, r))| encode_frame(first_index + t, o, r, mode, qp, None))
            .collect();
    }
    let first = encode_frame(first_index, &originals[0], &reconstructed[0], mode, qp, None)?;
    let buffer = first.transmitted.clone();
    let rest: Vec<FrameOutcome> = originals[1..]
        .par_iter()
        .zip(&reconstructed[1..])
        .enumerate()
        .map(|(t, (o, r))| encode_frame(first_index + t + 1, o, r, mode, qp, Some(&buffer)))
        .collect::<Result<_>>()?;
    Ok(std::iter::once(first).chain(rest).collect())
}

fn unzip_outcomes(outcomes: Vec<FrameOutcome>) -> (Vec<PointCloud>, Vec<FramePayload>, Vec<FrameReport>) {
    let mut filtered = Vec::with_capacity(outcomes.len());
    let mut payloads = Vec::with_capacity(outcomes.len());
    let mut reports = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        filtered.push(o.filtered);
        payloads.push(o.payload);
        reports.push(o.report);
    }
    (filtered, payloads, reports)
}

/// Basic per-frame filter.
pub fn enhance_frame_bwf(
    original: &PointCloud,
    reconstructed: &PointCloud,
    qp: u8,
) -> Result<(PointCloud, FramePayload)> {
    let o = encode_frame(0, original, reconstructed, EnhancementMode::Bwf, qp, None)?;
    Ok((o.filtered, o.payload))
}

/// Treats the slices as a single group of frames with coefficient inheritance.
pub fn enhance_gof_ciwf(
    originals: &[PointCloud],
    reconstructed: &[PointCloud],
    qp: u8,
) -> Result<(Vec<PointCloud>, Vec<FramePayload>)> {
    let (f, p, _) = unzip_outcomes(encode_gof(0, originals, reconstructed, EnhancementMode::Ciwf, qp)?);
    Ok((f, p))
}

/// As [`enhance_gof_ciwf`], with class-wise Luma sets.
pub fn enhance_gof_vcwf(
    originals: &[PointCloud],
    reconstructed: &[PointCloud],
    qp: u8,
) -> Result<(Vec<PointCloud>, Vec<FramePayload>)> {
    let (f, p, _) = unzip_outcomes(encode_gof(0, originals, reconstructed, EnhancementMode::Vcwf, qp)?);
    Ok((f, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    pub mode: EnhancementMode,
    pub qp: u8,
    pub gof_size: u8,
}

/// Splits the sequence into groups of `gof_size` frames and encodes each.
pub fn encode_sequence(
    originals: &[PointCloud],
    reconstructed: &[PointCloud],
    cfg: EncoderConfig,
) -> Result<EncodedSequence> {
    if cfg.gof_size == 0 {
        return Err(Error::InvalidGofSize(0));
    }
    if originals.len() != reconstructed.len() {
        return Err(Error::LengthMismatch { expected: originals.len(), found: reconstructed.len() });
    }
    let g = cfg.gof_size as usize;
    let mut outcomes = Vec::with_capacity(originals.len());
    for (k, (o, r)) in originals.chunks(g).zip(reconstructed.chunks(g)).enumerate() {
        outcomes.extend(encode_gof(k * g, o, r, cfg.mode, cfg.qp)?);
    }
    let (filtered, payloads, reports) = unzip_outcomes(outcomes);
    Ok(EncodedSequence {
        header: StreamHeader { qp: cfg.qp, gof_size: cfg.gof_size, mode: cfg.mode },
        filtered,
        payloads,
        reports,
    })
}

/// Surrogate coding with the filter in the loop.
#[derive(Debug, Clone)]
pub struct InLoopCoding {
    /// Pre-filter reconstructions and residual bits, in Morton order.
    pub codec: SequenceCoding,
    /// Filtered frames (the references of the following inter frames) and
    /// their payloads.
    pub encoded: EncodedSequence,
}

/// Codes `originals` with the surrogate codec at `cfg.qp`, filtering every
/// reconstruction before it is used as the next inter reference. Frames are
/// processed sequentially because each reference depends on the previous
/// filter decision.
pub fn encode_in_loop(originals: &[PointCloud], cfg: EncoderConfig) -> Result<InLoopCoding> {
    if cfg.gof_size == 0 {
        return Err(Error::InvalidGofSize(0));
    }
    let sorted: Vec<PointCloud> = originals.iter().map(sort_by_morton).collect();
    let g = cfg.gof_size as usize;
    let mut outcomes = Vec::with_capacity(sorted.len());
    let mut buffer: Vec<Option<FilterCoefficients>> = Vec::new();
    let hook = |t: usize, o: &PointCloud, r: &PointCloud| -> Result<PointCloud> {
        let inherit = cfg.mode != EnhancementMode::Bwf && !t.is_multiple_of(g);
        let out = encode_frame(t, o, r, cfg.mode, cfg.qp, inherit.then_some(&buffer[..]))?;
        if !inherit {
            buffer = out.transmitted.clone();
        }
        let filtered = out.filtered.clone();
        outcomes.push(out);
        Ok(filtered)
    };
    let codec = code_sequence(&sorted, QuantizerConfig::new(cfg.qp), Some(hook))?;
    let (filtered, payloads, reports) = unzip_outcomes(outcomes);
    Ok(InLoopCoding {
        codec,
        encoded: EncodedSequence {
            header: StreamHeader { qp: cfg.qp, gof_size: cfg.gof_size, mode: cfg.mode },
            filtered,
            payloads,
            reports,
        },
    })
}

/// Re-runs the decoder side: Morton sort, neighbor gathering,
/// classification and filtering with the signalled coefficients.
pub fn decode_replay(
    reconstructed: &[PointCloud],
    header: &StreamHeader,
    payloads: &[FramePayload],
) -> Result<Vec<PointCloud>> {
    if reconstructed.len() != payloads.len() {
        return Err(Error::PayloadMismatch(format!(
            "{} reconstructed frames but {} payload frames",
            reconstructed.len(),
            payloads.len()
        )));
    }
    let mut out = Vec::with_capacity(payloads.len());
    let mut buffer: Vec<Option<FilterCoefficients>> = Vec::new();
    for (t, (recon, payload)) in reconstructed.iter().zip(payloads).enumerate() {
        let ctx = FrameContext::new(recon, header.mode)?;
        let flags = payload.set_flags();
        if flags.len() != ctx.sets.len() {
            return Err(Error::PayloadMismatch(format!(
                "frame {t}: luma signalling does not match mode {}",
                header.mode
            )));
        }
        let coefficients = if header.carries_coefficients(t) {
            if payload.coefficients.len() != payload.flagged_sets() {
                return Err(Error::PayloadMismatch(format!("frame {t}: coefficient count does not match flags")));
            }
            let mut records = payload.coefficients.iter();
            let sets: Vec<Option<FilterCoefficients>> =
                flags.iter().map(|&f| if f { records.next().map(QuantizedFilter::dequantize) } else { None }).collect();
            buffer = sets.clone();
            sets
        } else {
            if flags.iter().zip(&buffer).any(|(&f, b)| f && b.is_none()) || buffer.len() != flags.len() {
                return Err(Error::PayloadMismatch(format!("frame {t}: enables a set that was never transmitted")));
            }
            buffer.clone()
        };
        out.push(ctx.render(&flags, &coefficients)?);
    }
    Ok(out)
}

/// In-sample, pre-rounding Luma SSE of one global filter versus one filter
/// per variance class, both solved without quantization and applied to
/// every point. Returns `(global, per_class)`.
pub fn luma_refinement(original: &PointCloud, reconstructed: &PointCloud) -> Result<(f64, f64)> {
    let ctx = FrameContext::new(reconstructed, EnhancementMode::Vcwf)?;
    let original = sorted_pair(original, &ctx, 0)?;
    let target: Vec<f64> = original.component(0).into_iter().map(f64::from).collect();
    let rows = ctx.neighbors.component(0);
    let sse_of = |members: &[usize], h: &FilterCoefficients| -> f64 {
        members.iter().map(|&i| (target[i] - dot(&rows[i], &h.h)).powi(2)).sum()
    };
    let global_h = solve(&accumulate_subset(rows, &target, 0..rows.len())).coefficients;
    let global = filter_real(rows, &global_h).iter().zip(&target).map(|(f, a)| (a - f).powi(2)).sum();
    let per_class = ctx.sets[..CLASS_COUNT]
        .iter()
        .filter(|s| !s.members.is_empty())
        .map(|s| {
            let h = solve(&accumulate_subset(rows, &target, s.members.iter().copied())).coefficients;
            sse_of(&s.members, &h)
        })
        .sum();
    Ok((global, per_class))
}
