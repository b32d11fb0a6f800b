//! Voxelized point-cloud frames.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::morton::{self, MortonCode, COORD_BITS};

pub const MAX_COORD: u32 = (1 << COORD_BITS) - 1;

/// Number of color components carried per point.
pub const CHANNELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelPosition {
    x: u32,
    y: u32,
    z: u32,
}

impl VoxelPosition {
    pub fn new(x: u32, y: u32, z: u32) -> Result<Self> {
        for (axis, v) in [('x', x), ('y', y), ('z', z)] {
            if v > MAX_COORD {
                return Err(Error::CoordinateOutOfRange { axis, value: v as i64 });
            }
        }
        Ok(VoxelPosition { x, y, z })
    }

    pub fn from_i64(x: i64, y: i64, z: i64) -> Result<Self> {
        let check = |axis, v: i64| {
            if (0..=MAX_COORD as i64).contains(&v) {
                Ok(v as u32)
            } else {
                Err(Error::CoordinateOutOfRange { axis, value: v })
            }
        };
        Ok(VoxelPosition { x: check('x', x)?, y: check('y', y)?, z: check('z', z)? })
    }

    /// Caller guarantees each coordinate is below 2^21.
    #[inline]
    pub(crate) fn from_raw(x: u32, y: u32, z: u32) -> Self {
        debug_assert!(x <= MAX_COORD && y <= MAX_COORD && z <= MAX_COORD);
        VoxelPosition { x, y, z }
    }

    #[inline]
    pub fn x(&self) -> u32 {
        self.x
    }
    #[inline]
    pub fn y(&self) -> u32 {
        self.y
    }
    #[inline]
    pub fn z(&self) -> u32 {
        self.z
    }

    #[inline]
    pub fn coords(&self) -> [u32; 3] {
        [self.x, self.y, self.z]
    }

    /// Position shifted by `delta`, or `None` when it leaves the coordinate range.
    pub fn offset(&self, delta: [i32; 3]) -> Option<Self> {
        let mut out = [0u32; 3];
        for (o, (c, d)) in out.iter_mut().zip(self.coords().into_iter().zip(delta)) {
            let v = c as i64 + d as i64;
            if !(0..=MAX_COORD as i64).contains(&v) {
                return None;
            }
            *o = v as u32;
        }
        Some(VoxelPosition::from_raw(out[0], out[1], out[2]))
    }
}

/// Luma, Cb and Cr in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ColorTriple([u8; 3]);

impl ColorTriple {
    pub const fn new(c1: u8, c2: u8, c3: u8) -> Self {
        ColorTriple([c1, c2, c3])
    }

    pub fn from_i64(c: [i64; 3]) -> Result<Self> {
        let mut out = [0u8; 3];
        for (o, v) in out.iter_mut().zip(c) {
            *o = u8::try_from(v).map_err(|_| Error::ColorOutOfRange(v))?;
        }
        Ok(ColorTriple(out))
    }

    #[inline]
    pub fn channels(&self) -> [u8; 3] {
        self.0
    }

    #[inline]
    pub fn get(&self, component: usize) -> u8 {
        self.0[component]
    }

    #[inline]
    pub fn set(&mut self, component: usize, value: u8) {
        self.0[component] = value;
    }
}

/// One frame: unique voxel positions paired with colors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointCloud {
    positions: Vec<VoxelPosition>,
    colors: Vec<ColorTriple>,
    morton_sorted: bool,
}

impl PointCloud {
    pub fn new(positions: Vec<VoxelPosition>, colors: Vec<ColorTriple>) -> Result<Self> {
        if positions.len() != colors.len() {
            return Err(Error::LengthMismatch { expected: positions.len(), found: colors.len() });
        }
        if positions.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut seen = HashSet::with_capacity(positions.len());
        for p in &positions {
            if !seen.insert(*p) {
                return Err(Error::DuplicatePosition { x: p.x, y: p.y, z: p.z });
            }
        }
        let morton_sorted = positions.windows(2).all(|w| morton::encode(w[0]) < morton::encode(w[1]));
        Ok(PointCloud { positions, colors, morton_sorted })
    }

    pub fn from_points(points: impl IntoIterator<Item = (VoxelPosition, ColorTriple)>) -> Result<Self> {
        let (positions, colors) = points.into_iter().unzip();
        Self::new(positions, colors)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    /// Always false for a constructed cloud; present for API symmetry.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    #[inline]
    pub fn positions(&self) -> &[VoxelPosition] {
        &self.positions
    }

    #[inline]
    pub fn colors(&self) -> &[ColorTriple] {
        &self.colors
    }

    #[inline]
    pub fn is_morton_sorted(&self) -> bool {
        self.morton_sorted
    }

    pub fn iter(&self) -> impl Iterator<Item = (VoxelPosition, ColorTriple)> + '_ {
        self.positions.iter().copied().zip(self.colors.iter().copied())
    }

    /// Values of one color component in point order.
    pub fn component(&self, component: usize) -> Vec<u8> {
        self.colors.iter().map(|c| c.get(component)).collect()
    }

    pub fn morton_codes(&self) -> Vec<MortonCode> {
        self.positions.iter().map(|&p| morton::encode(p)).collect()
    }

    /// Same geometry, new colors.
    pub fn with_colors(&self, colors: Vec<ColorTriple>) -> Result<Self> {
        if colors.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: colors.len() });
        }
        Ok(PointCloud { positions: self.positions.clone(), colors, morton_sorted: self.morton_sorted })
    }

    /// Replaces one component; `values` must have one entry per point.
    pub fn with_component(&self, component: usize, values: &[u8]) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: values.len() });
        }
        let mut colors = self.colors.clone();
        for (c, &v) in colors.iter_mut().zip(values) {
            c.set(component, v);
        }
        self.with_colors(colors)
    }

    pub fn same_geometry(&self, other: &PointCloud) -> bool {
        self.positions == other.positions
    }

    pub fn bounding_max(&self) -> [u32; 3] {
        self.positions.iter().fold([0; 3], |acc, p| [acc[0].max(p.x), acc[1].max(p.y), acc[2].max(p.z)])
    }
}

/// Returns the cloud reordered by ascending Morton code.
///
/// Positions are unique by construction, so the order is total and the sort
/// is idempotent.
pub fn sort_by_morton(cloud: &PointCloud) -> PointCloud {
    if cloud.morton_sorted {
        return cloud.clone();
    }
    let mut keyed: Vec<(MortonCode, VoxelPosition, ColorTriple)> =
        cloud.iter().map(|(p, c)| (morton::encode(p), p, c)).collect();
    keyed.sort_by_key(|k| k.0);
    let (positions, colors) = keyed.into_iter().map(|(_, p, c)| (p, c)).unzip();
    PointCloud { positions, colors, morton_sorted: true }
}

/// Ordered frames plus the group-of-frames length used for coefficient sharing.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub frames: Vec<PointCloud>,
    pub gof_size: usize,
}

impl FrameSequence {
    pub const DEFAULT_GOF: usize = 8;

    pub fn new(frames: Vec<PointCloud>, gof_size: usize) -> Result<Self> {
        if gof_size == 0 || gof_size > 255 {
            return Err(Error::InvalidGofSize(gof_size));
        }
        Ok(FrameSequence { frames, gof_size })
    }

    pub fn gofs(&self) -> impl Iterator<Item = &[PointCloud]> {
        self.frames.chunks(self.gof_size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: u32, y: u32, z: u32) -> VoxelPosition {
        VoxelPosition::new(x, y, z).unwrap()
    }

    fn c(v: u8) -> ColorTriple {
        ColorTriple::new(v, 128, 128)
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        let err = PointCloud::new(vec![p(1, 2, 3), p(1, 2, 3)], vec![c(1), c(2)]).unwrap_err();
        assert!(matches!(err, Error::DuplicatePosition { x: 1, y: 2, z: 3 }));
        assert!(matches!(PointCloud::new(vec![], vec![]), Err(Error::EmptyCloud)));
        assert!(PointCloud::new(vec![p(0, 0, 0)], vec![]).is_err());
    }

    #[test]
    fn coordinate_range() {
        assert!(VoxelPosition::new(MAX_COORD, 0, 0).is_ok());
        assert!(VoxelPosition::new(MAX_COORD + 1, 0, 0).is_err());
        assert!(VoxelPosition::from_i64(0, -1, 0).is_err());
    }

    #[test]
    fn sort_is_stable_pairing_and_idempotent() {
        let cloud = PointCloud::new(vec![p(1, 0, 0), p(0, 0, 1), p(0, 1, 0), p(0, 0, 0)], vec![c(4), c(1), c(2), c(0)])
            .unwrap();
        assert!(!cloud.is_morton_sorted());
        let sorted = sort_by_morton(&cloud);
        assert!(sorted.is_morton_sorted());
        assert_eq!(sorted.positions(), &[p(0, 0, 0), p(0, 0, 1), p(0, 1, 0), p(1, 0, 0)]);
        assert_eq!(sorted.component(0), vec![0, 1, 2, 4]);
        assert_eq!(sort_by_morton(&sorted), sorted);
    }

    #[test]
    fn single_point_sort() {
        let cloud = PointCloud::new(vec![p(7, 7, 7)], vec![c(9)]).unwrap();
        assert!(cloud.is_morton_sorted());
        assert_eq!(sort_by_morton(&cloud), cloud);
    }

    #[test]
    fn gof_size_validated() {
        assert!(FrameSequence::new(vec![], 0).is_err());
        assert!(FrameSequence::new(vec![], 256).is_err());
        assert_eq!(FrameSequence::new(vec![], 8).unwrap().gof_size, 8);
    }
}
