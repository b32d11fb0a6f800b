use pcwf_core::cloud::{VoxelPosition, MAX_COORD};
use pcwf_core::morton::{decode, encode, offset_add, MortonCode, SEARCH_TABLE};
use proptest::prelude::*;

/// Spreads the two's-complement bits of each delta over every Morton slot of
/// its dimension, including bit 63 for z.
fn offset_word(delta: [i32; 3]) -> u64 {
    let mut w = 0u64;
    for bit in 0..64 {
        let dim = match bit % 3 {
            0 => 2,
            1 => 1,
            _ => 0,
        };
        let v = i64::from(delta[dim]) as u64;
        if (v >> (bit / 3)) & 1 == 1 {
            w |= 1 << bit;
        }
    }
    w
}

fn cartesian(p: VoxelPosition, delta: [i32; 3]) -> Option<MortonCode> {
    let q: Vec<i64> = p.coords().iter().zip(delta).map(|(&c, d)| i64::from(c) + i64::from(d)).collect();
    if q.iter().any(|&c| c < 0 || c > i64::from(MAX_COORD)) {
        return None;
    }
    Some(encode(VoxelPosition::new(q[0] as u32, q[1] as u32, q[2] as u32).unwrap()))
}

#[test]
fn search_table_offsets_match_spread_deltas() {
    for e in SEARCH_TABLE {
        assert_eq!(e.offset, offset_word(e.delta), "entry {}", e.index);
    }
}

#[test]
fn offset_add_exhaustive_small_cube() {
    for x in 0..8 {
        for y in 0..8 {
            for z in 0..8 {
                let p = VoxelPosition::new(x, y, z).unwrap();
                let a = encode(p);
                for dx in -8..=8 {
                    for dy in -8..=8 {
                        for dz in -8..=8 {
                            let d = [dx, dy, dz];
                            assert_eq!(offset_add(a, offset_word(d)), cartesian(p, d), "{:?} + {d:?}", p.coords());
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn faces_of_the_full_range() {
    let top = VoxelPosition::new(MAX_COORD, MAX_COORD, MAX_COORD).unwrap();
    let bottom = VoxelPosition::new(0, 0, 0).unwrap();
    for e in SEARCH_TABLE {
        assert_eq!(offset_add(encode(top), e.offset), cartesian(top, e.delta));
        assert_eq!(offset_add(encode(bottom), e.offset), cartesian(bottom, e.delta));
    }
}

fn position() -> impl Strategy<Value = VoxelPosition> {
    (0..=MAX_COORD, 0..=MAX_COORD, 0..=MAX_COORD).prop_map(|(x, y, z)| VoxelPosition::new(x, y, z).unwrap())
}

proptest! {
    #[test]
    fn encode_decode_round_trip(p in position()) {
        prop_assert_eq!(decode(encode(p)), p);
    }

    #[test]
    fn encoding_is_monotone_in_each_axis(p in position(), axis in 0usize..3) {
        let mut c = p.coords();
        prop_assume!(c[axis] < MAX_COORD);
        c[axis] += 1;
        let q = VoxelPosition::new(c[0], c[1], c[2]).unwrap();
        prop_assert!(encode(q) > encode(p));
    }

    #[test]
    fn offset_add_matches_cartesian(p in position(), d in prop::array::uniform3(-(1i32 << 20)..(1i32 << 20))) {
        prop_assert_eq!(offset_add(encode(p), offset_word(d)), cartesian(p, d));
    }
}
