//! Stand-in attribute codec.
//!
//! Intra frames quantize each attribute uniformly; inter frames quantize the
//! difference to a (possibly enhanced) reference frame. Rates are order-0
//! empirical entropies of the quantization indices.

use std::collections::HashMap;

use crate::cloud::{ColorTriple, PointCloud, CHANNELS};
use crate::color::quantize_u8;
use crate::error::{Error, Result};
use crate::morton::encode;
use crate::neighbor::build_index;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizerConfig {
    pub qp: u8,
}

impl QuantizerConfig {
    pub fn new(qp: u8) -> Self {
        QuantizerConfig { qp }
    }

    /// `2^((qp - 4) / 6)`.
    pub fn qstep(&self) -> f64 {
        ((f64::from(self.qp) - 4.0) / 6.0).exp2()
    }
}

/// A coded frame and the estimated rate of its quantization indices.
#[derive(Debug, Clone)]
pub struct CodedFrame {
    pub reconstructed: PointCloud,
    pub bits: f64,
}

/// Sum over symbols of `-log2(count / total)`.
pub fn order0_entropy_bits(symbols: &[i32]) -> f64 {
    if symbols.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<i32, usize> = HashMap::new();
    for &s in symbols {
        *counts.entry(s).or_default() += 1;
    }
    let total = symbols.len() as f64;
    // Sort for a summation order independent of hash iteration.
    let mut counts: Vec<(i32, usize)> = counts.into_iter().collect();
    counts.sort_unstable();
    counts
        .into_iter()
        .map(|(_, c)| {
            let c = c as f64;
            -c * (c / total).log2()
        })
        .sum()
}

fn quantize_index(v: f64, qstep: f64) -> i32 {
    (v / qstep).round() as i32
}

fn dequantize(index: i32, qstep: f64) -> f64 {
    (f64::from(index) * qstep).round()
}

/// Per-component entropy of a point-major symbol array.
fn component_bits(symbols: &[[i32; CHANNELS]]) -> f64 {
    (0..CHANNELS).map(|c| order0_entropy_bits(&symbols.iter().map(|s| s[c]).collect::<Vec<_>>())).sum()
}

pub fn intra_code(original: &PointCloud, cfg: QuantizerConfig) -> CodedFrame {
    let q = cfg.qstep();
    let mut symbols = Vec::with_capacity(original.len());
    let colors = original
        .colors()
        .iter()
        .map(|c| {
            let idx = c.channels().map(|v| quantize_index(f64::from(v), q));
            symbols.push(idx);
            let [a, b, d] = idx.map(|i| quantize_u8(dequantize(i, q)));
            ColorTriple::new(a, b, d)
        })
        .collect();
    let reconstructed = original.with_colors(colors).expect("same length");
    CodedFrame { reconstructed, bits: component_bits(&symbols) }
}

/// Maps every point of `current` to a point of `reference`: the same voxel
/// when it is occupied, otherwise the nearest occupied voxel (squared
/// Euclidean distance, ties broken by smaller Morton code).
pub fn correspondence(current: &PointCloud, reference: &PointCloud) -> Result<Vec<usize>> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    if current.same_geometry(reference) {
        return Ok((0..current.len()).collect());
    }
    let table = build_index(reference)?;
    let refs = reference.positions();
    Ok(current
        .positions()
        .iter()
        .map(|&p| {
            if let Some(i) = table.lookup(encode(p)) {
                return i;
            }
            nearest_by_shells(p, refs, |q| table.lookup(encode(q)))
        })
        .collect())
}

const MAX_SHELL: i32 = 16;

fn nearest_by_shells(
    p: crate::cloud::VoxelPosition,
    refs: &[crate::cloud::VoxelPosition],
    probe: impl Fn(crate::cloud::VoxelPosition) -> Option<usize>,
) -> usize {
    let key = |i: usize| {
        let q = refs[i];
        let d: i64 = p.coords().iter().zip(q.coords()).map(|(&a, b)| (a as i64 - b as i64).pow(2)).sum();
        (d, encode(q))
    };
    let mut best: Option<(i64, crate::morton::MortonCode, usize)> = None;
    for r in 1..=MAX_SHELL {
        if let Some((d, _, _)) = best {
            if (r as i64) * (r as i64) > d {
                break;
            }
        }
        for dx in -r..=r {
            for dy in -r..=r {
                for dz in -r..=r {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                        continue;
                    }
                    let Some(q) = p.offset([dx, dy, dz]) else { continue };
                    if let Some(i) = probe(q) {
                        let (d, m) = key(i);
                        if best.is_none_or(|(bd, bm, _)| (d, m) < (bd, bm)) {
                            best = Some((d, m, i));
                        }
                    }
                }
            }
        }
    }
    if let Some((d, _, i)) = best {
        if d <= (MAX_SHELL as i64) * (MAX_SHELL as i64) {
            return i;
        }
    }
    // Sparse reference: exhaustive scan.
    (0..refs.len()).min_by_key(|&i| key(i)).expect("reference is non-empty")
}

/// Codes `original_cur` as a quantized residual against `reference`.
pub fn inter_code(original_cur: &PointCloud, reference: &PointCloud, cfg: QuantizerConfig) -> Result<CodedFrame> {
    let map = correspondence(original_cur, reference)?;
    let q = cfg.qstep();
    let ref_colors = reference.colors();
    let mut symbols = Vec::with_capacity(original_cur.len());
    let colors = original_cur
        .colors()
        .iter()
        .zip(&map)
        .map(|(cur, &j)| {
            let pred = ref_colors[j].channels();
            let mut out = [0u8; CHANNELS];
            let mut idx = [0i32; CHANNELS];
            for c in 0..CHANNELS {
                let residual = f64::from(cur.get(c)) - f64::from(pred[c]);
                idx[c] = quantize_index(residual, q);
                out[c] = quantize_u8(f64::from(pred[c]) + dequantize(idx[c], q));
            }
            symbols.push(idx);
            ColorTriple::new(out[0], out[1], out[2])
        })
        .collect();
    Ok(CodedFrame { reconstructed: original_cur.with_colors(colors)?, bits: component_bits(&symbols) })
}

/// Largest deviation between the coding error computed directly and the
/// propagated form `A_cur - A_ref - dA + D_ref`.
pub fn propagation_identity_check(a_cur: &[f64], a_ref: &[f64], a_ref_hat: &[f64], delta: &[f64]) -> Result<f64> {
    let n = a_cur.len();
    for v in [a_ref, a_ref_hat, delta] {
        if v.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: v.len() });
        }
    }
    Ok((0..n)
        .map(|i| {
            let d_ref = a_ref[i] - a_ref_hat[i];
            let a_cur_hat = a_ref_hat[i] + delta[i];
            let direct = a_cur[i] - a_cur_hat;
            let propagated = a_cur[i] - a_ref[i] - delta[i] + d_ref;
            (direct - propagated).abs()
        })
        .fold(0.0, f64::max))
}

/// Result of coding a whole sequence.
#[derive(Debug, Clone)]
pub struct SequenceCoding {
    pub reconstructed: Vec<PointCloud>,
    /// Reference used for each inter frame (index 0 is unused and equals the
    /// intra reconstruction).
    pub references: Vec<PointCloud>,
    pub bits: Vec<f64>,
}

/// Intra-codes the first frame and inter-codes the rest against the previous
/// reconstruction. `in_loop`, when given, maps `(frame index, original,
/// reconstruction)` to the reference handed to the next frame.
pub fn code_sequence<F>(
    originals: &[PointCloud],
    cfg: QuantizerConfig,
    mut in_loop: Option<F>,
) -> Result<SequenceCoding>
where
    F: FnMut(usize, &PointCloud, &PointCloud) -> Result<PointCloud>,
{
    let mut out = SequenceCoding { reconstructed: Vec::new(), references: Vec::new(), bits: Vec::new() };
    let mut reference: Option<PointCloud> = None;
    for (t, original) in originals.iter().enumerate() {
        let coded = match &reference {
            None => intra_code(original, cfg),
            Some(r) => inter_code(original, r, cfg)?,
        };
        let next = match in_loop.as_mut() {
            Some(f) => f(t, original, &coded.reconstructed)?,
            None => coded.reconstructed.clone(),
        };
        out.references.push(reference.replace(next.clone()).unwrap_or_else(|| next.clone()));
        out.reconstructed.push(coded.reconstructed);
        out.bits.push(coded.bits);
    }
    Ok(out)
}
