//! Stationarity analysis: octree blocks, Morton-ordered subblocks and lag-1
//! autocovariance between neighboring subblocks.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::cloud::{PointCloud, CHANNELS};
use crate::error::{Error, Result};
use crate::morton::{encode, encode_xyz};

pub const DEFAULT_SUBBLOCKS: usize = 100;

/// Population mean and variance of each component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub mean: [f64; CHANNELS],
    pub variance: [f64; CHANNELS],
}

fn moments(values: &[[f64; CHANNELS]]) -> Moments {
    let n = values.len() as f64;
    let mut m = Moments::default();
    if values.is_empty() {
        return m;
    }
    for c in 0..CHANNELS {
        let mean = values.iter().map(|v| v[c]).sum::<f64>() / n;
        m.mean[c] = mean;
        m.variance[c] = values.iter().map(|v| (v[c] - mean).powi(2)).sum::<f64>() / n;
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct OctreeBlock {
    /// Cube coordinates at the segmentation depth.
    pub cube: [u32; 3],
    /// Indices into the source cloud, in Morton order.
    pub members: Vec<usize>,
    pub moments: Moments,
}

/// Bits needed for the largest coordinate of `cloud` (at least 1).
pub fn geometry_bits(cloud: &PointCloud) -> u32 {
    let max = cloud.bounding_max().into_iter().max().unwrap_or(0);
    (u32::BITS - max.leading_zeros()).max(1)
}

/// Segments with the octree sized to the cloud's own extent.
pub fn octree_segment(cloud: &PointCloud, depth: u32) -> Result<Vec<OctreeBlock>> {
    octree_segment_in(cloud, depth, geometry_bits(cloud))
}

/// Assigns each point to the depth-`depth` cube of a `2^max_bits` octree
/// (coordinates shifted right by `max_bits - depth`) and returns the
/// non-empty cubes in Morton order of their cube index.
pub fn octree_segment_in(cloud: &PointCloud, depth: u32, max_bits: u32) -> Result<Vec<OctreeBlock>> {
    if depth == 0 {
        return Err(Error::InvalidArgument("octree depth must be at least 1".into()));
    }
    if max_bits < geometry_bits(cloud) {
        return Err(Error::InvalidArgument(format!("cloud does not fit in a {max_bits}-bit octree")));
    }
    let shift = max_bits.saturating_sub(depth);

    let mut order: Vec<usize> = (0..cloud.len()).collect();
    let codes: Vec<u64> = cloud.positions().iter().map(|p| encode(*p).value()).collect();
    order.sort_by_key(|&i| codes[i]);

    let mut buckets: BTreeMap<u64, ([u32; 3], Vec<usize>)> = BTreeMap::new();
    for i in order {
        let cube = cloud.positions()[i].coords().map(|v| v >> shift);
        let key = encode_xyz(cube[0], cube[1], cube[2])?.value();
        buckets.entry(key).or_insert_with(|| (cube, Vec::new())).1.push(i);
    }
    let colors = cloud.colors();
    Ok(buckets
        .into_values()
        .map(|(cube, members)| {
            let values: Vec<[f64; CHANNELS]> = members.iter().map(|&i| colors[i].channels().map(f64::from)).collect();
            OctreeBlock { cube, moments: moments(&values), members }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubblockStats {
    pub counts: Vec<usize>,
    pub moments: Vec<Moments>,
    /// `gamma1[s]` pairs run `s` with run `s + 1`.
    pub gamma1: Vec<[f64; CHANNELS]>,
}

/// Sizes of `m` contiguous runs over `count` points; the first
/// `count % m` runs take one extra point.
pub fn run_lengths(count: usize, m: usize) -> Vec<usize> {
    let m = m.min(count);
    if m == 0 {
        return Vec::new();
    }
    let (base, extra) = (count / m, count % m);
    (0..m).map(|s| base + usize::from(s < extra)).collect()
}

/// Covariance of two runs paired by rank, truncated to the shorter run.
pub fn paired_covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let (a, b) = (&a[..n], &b[..n]);
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n as f64
}

/// Splits a block's members (already in Morton order) into `m` runs.
pub fn subblock_stats(cloud: &PointCloud, block: &OctreeBlock, m: usize) -> Result<SubblockStats> {
    if block.members.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if m == 0 {
        return Err(Error::InvalidArgument("subblock count must be at least 1".into()));
    }
    let colors = cloud.colors();
    let values: Vec<[f64; CHANNELS]> = block.members.iter().map(|&i| colors[i].channels().map(f64::from)).collect();
    let counts = run_lengths(values.len(), m);
    let mut runs = Vec::with_capacity(counts.len());
    let mut start = 0;
    for &len in &counts {
        runs.push(&values[start..start + len]);
        start += len;
    }
    let moments = runs.iter().map(|r| moments(r)).collect();
    let gamma1 = runs
        .windows(2)
        .map(|w| {
            std::array::from_fn(|c| {
                let a: Vec<f64> = w[0].iter().map(|v| v[c]).collect();
                let b: Vec<f64> = w[1].iter().map(|v| v[c]).collect();
                paired_covariance(&a, &b)
            })
        })
        .collect();
    Ok(SubblockStats { counts, moments, gamma1 })
}

pub const WSS_HEADER: [&str; 13] = [
    "kind",
    "block",
    "subblock",
    "count",
    "mean_y",
    "mean_cb",
    "mean_cr",
    "var_y",
    "var_cb",
    "var_cr",
    "gamma1_y",
    "gamma1_cb",
    "gamma1_cr",
];

/// Writes one `block` row per non-empty octree block followed by its
/// `subblock` rows. `gamma1_*` on a subblock row pairs it with the next
/// subblock and is empty on the last one.
pub fn wss_report<W: Write>(cloud: &PointCloud, depth: u32, max_bits: Option<u32>, m: usize, out: W) -> Result<()> {
    let bits = max_bits.unwrap_or_else(|| geometry_bits(cloud));
    let blocks = octree_segment_in(cloud, depth, bits)?;
    let subs: Vec<SubblockStats> = blocks.par_iter().map(|b| subblock_stats(cloud, b, m)).collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(WSS_HEADER)?;
    let f = |v: f64| format!("{v:.6}");
    for (b, (block, sub)) in blocks.iter().zip(&subs).enumerate() {
        let mut row = vec!["block".to_string(), b.to_string(), String::new(), block.members.len().to_string()];
        row.extend(block.moments.mean.map(f));
        row.extend(block.moments.variance.map(f));
        row.extend(std::iter::repeat_n(String::new(), 3));
        w.write_record(&row)?;
        for (s, (count, mo)) in sub.counts.iter().zip(&sub.moments).enumerate() {
            let mut row = vec!["subblock".to_string(), b.to_string(), s.to_string(), count.to_string()];
            row.extend(mo.mean.map(f));
            row.extend(mo.variance.map(f));
            match sub.gamma1.get(s) {
                Some(g) => row.extend(g.map(f)),
                None => row.extend(std::iter::repeat_n(String::new(), 3)),
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
