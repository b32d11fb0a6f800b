//! Coplanar neighbor gathering over a Morton-keyed occupancy table.
//!
//! For each point the six face-adjacent voxels are probed through
//! [`offset_add`] and looked up in an [`IndexTable`]. Empty or out-of-range
//! neighbors contribute the point's own attribute ("virtual attribute").

use std::collections::HashMap;

use rayon::prelude::*;

use crate::cloud::{PointCloud, CHANNELS};
use crate::error::{Error, Result};
use crate::morton::{encode, offset_add, MortonCode, SEARCH_TABLE};

/// Filter taps per point: the point itself plus six coplanar neighbors.
pub const FILTER_ORDER: usize = 7;

/// Dense backing is used while the bounding cube holds at most 2^24 voxels.
pub const DENSE_VOLUME_BITS: u32 = 24;

/// Dense tables are split into lazily allocated slices of 2^18 codes.
pub const SLICE_BITS: u32 = 18;

const EMPTY: u32 = u32::MAX;

#[derive(Debug, Clone)]
enum Backing {
    Dense { slices: Vec<Option<Box<[u32]>>>, volume: u64 },
    Hashed(HashMap<u64, u32>),
}

/// Occupancy lookup from Morton code to point serial number.
#[derive(Debug, Clone)]
pub struct IndexTable {
    backing: Backing,
    len: usize,
}

impl IndexTable {
    pub fn lookup(&self, code: MortonCode) -> Option<usize> {
        match &self.backing {
            Backing::Dense { slices, volume } => {
                if code.0 >= *volume {
                    return None;
                }
                let slice = slices[(code.0 >> SLICE_BITS) as usize].as_ref()?;
                let v = slice[(code.0 & ((1 << SLICE_BITS) - 1)) as usize];
                (v != EMPTY).then_some(v as usize)
            }
            Backing::Hashed(map) => map.get(&code.0).map(|&v| v as usize),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.backing, Backing::Dense { .. })
    }

    /// Number of indexed points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Indexes every point of `cloud` by its Morton code. Serial numbers are the
/// point indices of `cloud` as given.
pub fn build_index(cloud: &PointCloud) -> Result<IndexTable> {
    let max = cloud.bounding_max().into_iter().max().unwrap_or(0);
    let axis_bits = 32 - max.leading_zeros();
    let backing = if 3 * axis_bits <= DENSE_VOLUME_BITS {
        let volume = 1u64 << (3 * axis_bits);
        let slice_len = 1usize << SLICE_BITS;
        let slice_count = volume.div_ceil(slice_len as u64) as usize;
        let mut slices: Vec<Option<Box<[u32]>>> = vec![None; slice_count];
        for (serial, &p) in cloud.positions().iter().enumerate() {
            let code = encode(p).0;
            let slice = slices[(code >> SLICE_BITS) as usize]
                .get_or_insert_with(|| vec![EMPTY; slice_len.min(volume as usize)].into_boxed_slice());
            let cell = &mut slice[(code & (slice_len as u64 - 1)) as usize];
            if *cell != EMPTY {
                return Err(duplicate(cloud, serial));
            }
            *cell = serial as u32;
        }
        Backing::Dense { slices, volume }
    } else {
        let mut map = HashMap::with_capacity(cloud.len());
        for (serial, &p) in cloud.positions().iter().enumerate() {
            if map.insert(encode(p).0, serial as u32).is_some() {
                return Err(duplicate(cloud, serial));
            }
        }
        Backing::Hashed(map)
    };
    Ok(IndexTable { backing, len: cloud.len() })
}

fn duplicate(cloud: &PointCloud, serial: usize) -> Error {
    let p = cloud.positions()[serial];
    Error::DuplicatePosition { x: p.x(), y: p.y(), z: p.z() }
}

/// Per-component `n x 7` attribute rows plus neighbor occupancy flags.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborMatrix {
    rows: [Vec<[f64; FILTER_ORDER]>; CHANNELS],
    occupancy: Vec<[bool; 6]>,
}

impl NeighborMatrix {
    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    pub fn component(&self, component: usize) -> &[[f64; FILTER_ORDER]] {
        &self.rows[component]
    }

    pub fn occupancy(&self) -> &[[bool; 6]] {
        &self.occupancy
    }

    fn from_neighbors(cloud: &PointCloud, neighbors: Vec<[Option<usize>; 6]>) -> Self {
        let colors = cloud.colors();
        let mut rows: [Vec<[f64; FILTER_ORDER]>; CHANNELS] = Default::default();
        for r in rows.iter_mut() {
            r.reserve_exact(colors.len());
        }
        let mut occupancy = Vec::with_capacity(colors.len());
        for (i, nb) in neighbors.iter().enumerate() {
            for (c, rows_c) in rows.iter_mut().enumerate() {
                let own = f64::from(colors[i].get(c));
                let mut row = [own; FILTER_ORDER];
                for (slot, n) in row[1..].iter_mut().zip(nb) {
                    if let Some(j) = n {
                        *slot = f64::from(colors[*j].get(c));
                    }
                }
                rows_c.push(row);
            }
            occupancy.push(nb.map(|n| n.is_some()));
        }
        NeighborMatrix { rows, occupancy }
    }
}

/// Gathers the 7-tap rows for every point using the search table and `table`.
pub fn gather_neighbors(cloud: &PointCloud, table: &IndexTable) -> NeighborMatrix {
    let neighbors: Vec<[Option<usize>; 6]> = cloud
        .positions()
        .par_iter()
        .map(|&p| {
            let code = encode(p);
            SEARCH_TABLE.map(|e| offset_add(code, e.offset).and_then(|m| table.lookup(m)))
        })
        .collect();
    NeighborMatrix::from_neighbors(cloud, neighbors)
}

/// Convenience wrapper: builds the index and gathers in one call.
pub fn neighbor_matrix(cloud: &PointCloud) -> Result<NeighborMatrix> {
    let table = build_index(cloud)?;
    Ok(gather_neighbors(cloud, &table))
}

/// Reference implementation: for every point, scans the whole cloud for each
/// exact coplanar offset. Quadratic; used to validate [`gather_neighbors`].
pub fn brute_force_neighbors(cloud: &PointCloud) -> NeighborMatrix {
    let positions = cloud.positions();
    let neighbors = positions
        .iter()
        .map(|p| {
            SEARCH_TABLE.map(|e| {
                let target = p.offset(e.delta)?;
                positions.iter().position(|q| *q == target)
            })
        })
        .collect();
    NeighborMatrix::from_neighbors(cloud, neighbors)
}
