//! Morton (Z-order) codes for voxel positions.
//!
//! Bit `3i` of a code holds bit `i` of Z, bit `3i + 1` holds Y and bit
//! `3i + 2` holds X. Coordinates are limited to 21 bits so that bit 63 is
//! never produced by [`encode`].

use crate::cloud::VoxelPosition;
use crate::error::Result;

/// Mask selecting the Z bits of a code; `<< 1` selects Y and `<< 2` selects X.
pub const DIMENSION_MASK: u64 = 0x9249_2492_4924_9249;

/// Per-dimension masks in (Z, Y, X) order.
pub const DIMENSION_MASKS: [u64; 3] = [DIMENSION_MASK, DIMENSION_MASK << 1, DIMENSION_MASK << 2];

pub const COORD_BITS: u32 = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MortonCode(pub u64);

impl MortonCode {
    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }
}

/// One row of the coplanar search table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchEntry {
    pub index: u8,
    pub delta: [i32; 3],
    pub offset: u64,
}

/// The six coplanar neighbor offsets, in the column order shared by encoder
/// and decoder.
pub const SEARCH_TABLE: [SearchEntry; 6] = [
    SearchEntry { index: 1, delta: [1, 0, 0], offset: 0x0000_0000_0000_0004 },
    SearchEntry { index: 2, delta: [0, 1, 0], offset: 0x0000_0000_0000_0002 },
    SearchEntry { index: 3, delta: [0, 0, 1], offset: 0x0000_0000_0000_0001 },
    SearchEntry { index: 4, delta: [-1, 0, 0], offset: 0x4924_9249_2492_4924 },
    SearchEntry { index: 5, delta: [0, -1, 0], offset: 0x2492_4924_9249_2492 },
    SearchEntry { index: 6, delta: [0, 0, -1], offset: 0x9249_2492_4924_9249 },
];

#[inline]
fn spread(v: u32) -> u64 {
    let mut w = u64::from(v) & 0x1f_ffff;
    w = (w | w << 32) & 0x001f_0000_0000_ffff;
    w = (w | w << 16) & 0x001f_0000_ff00_00ff;
    w = (w | w << 8) & 0x100f_00f0_0f00_f00f;
    w = (w | w << 4) & 0x10c3_0c30_c30c_30c3;
    w = (w | w << 2) & 0x1249_2492_4924_9249;
    w
}

#[inline]
fn compact(code: u64) -> u32 {
    let mut w = code & 0x1249_2492_4924_9249;
    w = (w ^ (w >> 2)) & 0x10c3_0c30_c30c_30c3;
    w = (w ^ (w >> 4)) & 0x100f_00f0_0f00_f00f;
    w = (w ^ (w >> 8)) & 0x001f_0000_ff00_00ff;
    w = (w ^ (w >> 16)) & 0x001f_0000_0000_ffff;
    w = (w ^ (w >> 32)) & 0x1f_ffff;
    w as u32
}

/// Interleaves an already validated position.
#[inline]
pub fn encode(p: VoxelPosition) -> MortonCode {
    MortonCode(spread(p.z()) | spread(p.y()) << 1 | spread(p.x()) << 2)
}

/// Validating variant taking raw coordinates.
pub fn encode_xyz(x: u32, y: u32, z: u32) -> Result<MortonCode> {
    Ok(encode(VoxelPosition::new(x, y, z)?))
}

/// Inverse of [`encode`]. Bit 63 (a 22nd Z bit) is ignored.
#[inline]
pub fn decode(code: MortonCode) -> VoxelPosition {
    let c = code.0;
    VoxelPosition::from_raw(compact(c >> 2), compact(c >> 1), compact(c))
}

/// Adds a per-dimension two's-complement offset to `a`.
///
/// Each dimension is added in isolation: the bits belonging to the other two
/// dimensions are saturated to one so a carry ripples straight through them.
/// Returns `None` when any coordinate leaves `[0, 2^21)`. x and y own 21
/// slots each, so their steps are limited to `[-2^20, 2^20)`.
#[inline]
pub fn offset_add(a: MortonCode, offset: u64) -> Option<MortonCode> {
    let mut out = 0u64;
    for mask in DIMENSION_MASKS {
        let step = offset & mask;
        if step == 0 {
            out |= a.0 & mask;
            continue;
        }
        let (sum, carry) = (a.0 | !mask).overflowing_add(step);
        // Top bit of this dimension's field acts as the sign of the step.
        let negative = step & top_bit(mask) != 0;
        if negative != carry {
            return None;
        }
        out |= sum & mask;
    }
    if out >> 63 != 0 {
        return None;
    }
    Some(MortonCode(out))
}

#[inline]
fn top_bit(mask: u64) -> u64 {
    1u64 << (63 - mask.leading_zeros())
}

/// The addition exactly as `((a & m) + (b & m)) | ...` without carry
/// saturation. Kept only to document where it diverges from [`offset_add`].
#[cfg(test)]
pub(crate) fn offset_add_unsaturated(a: MortonCode, offset: u64) -> u64 {
    DIMENSION_MASKS.iter().map(|&m| (a.0 & m).wrapping_add(offset & m)).fold(0, |acc, v| acc | v)
}
