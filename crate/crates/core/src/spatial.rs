//! Uniform grid buckets for neighbor queries in low ambient dimension.
//!
//! Used by the graph builders (antipode buckets with cell side equal to the
//! connection chord), by AB percolation clustering (cell side 1) and by the
//! embedding's nearest-sample queries.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

pub const MAX_GRID_DIM: usize = 8;

/// Multiply-xor hasher for the small integer cell keys; avoids SipHash
/// overhead in the hot bucket lookups.
#[derive(Default, Clone)]
pub struct CellHasher(u64);

impl Hasher for CellHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut v = [0u8; 8];
            v[..chunk.len()].copy_from_slice(chunk);
            self.0 = (self.0 ^ u64::from_le_bytes(v))
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .rotate_left(29);
        }
    }
}

type Key = [i32; MAX_GRID_DIM];
type Map = HashMap<Key, Vec<u32>, BuildHasherDefault<CellHasher>>;

#[derive(Debug, Clone)]
pub struct GridBuckets {
    dim: usize,
    cell: f64,
    map: Map,
}

impl GridBuckets {
    pub fn new(dim: usize, cell: f64) -> Self {
        assert!(dim >= 1 && dim <= MAX_GRID_DIM, "grid dimension {dim}");
        assert!(cell > 0.0 && cell.is_finite());
        Self {
            dim,
            cell,
            map: Map::default(),
        }
    }

    pub fn cell_side(&self) -> f64 {
        self.cell
    }

    fn key_of(&self, p: &[f64]) -> Key {
        debug_assert_eq!(p.len(), self.dim);
        let mut key = [0i32; MAX_GRID_DIM];
        for (i, &c) in p.iter().enumerate() {
            key[i] = (c / self.cell).floor() as i32;
        }
        key
    }

    pub fn insert(&mut self, p: &[f64], idx: u32) {
        let key = self.key_of(p);
        self.map.entry(key).or_default().push(idx);
    }

    /// Visit every stored index whose cell lies within Chebyshev distance
    /// `radius_cells` of the cell containing `p`.
    pub fn for_each_near<F: FnMut(u32)>(&self, p: &[f64], radius_cells: i32, mut f: F) {
        let center = self.key_of(p);
        let mut offset = [-radius_cells; MAX_GRID_DIM];
        // Only the first `dim` coordinates vary; the rest stay zero.
        for o in offset.iter_mut().skip(self.dim) {
            *o = 0;
        }
        loop {
            let mut key = [0i32; MAX_GRID_DIM];
            for i in 0..self.dim {
                key[i] = center[i] + offset[i];
            }
            if let Some(bucket) = self.map.get(&key) {
                for &idx in bucket {
                    f(idx);
                }
            }
            // Odometer increment over the first `dim` offsets.
            let mut i = 0;
            loop {
                if i == self.dim {
                    return;
                }
                offset[i] += 1;
                if offset[i] <= radius_cells {
                    break;
                }
                offset[i] = -radius_cells;
                i += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_points_in_neighbor_cells() {
        let mut grid = GridBuckets::new(2, 1.0);
        grid.insert(&[0.5, 0.5], 0);
        grid.insert(&[1.2, 0.4], 1);
        grid.insert(&[5.0, 5.0], 2);
        let mut seen = Vec::new();
        grid.for_each_near(&[0.9, 0.9], 1, |i| seen.push(i));
        seen.sort();
        assert_eq!(seen, vec![0, 1]);
    }

    #[test]
    fn negative_coordinates_bucket_correctly() {
        let mut grid = GridBuckets::new(3, 0.25);
        grid.insert(&[-0.1, -0.1, -0.1], 7);
        let mut seen = Vec::new();
        grid.for_each_near(&[0.05, 0.05, 0.05], 1, |i| seen.push(i));
        assert_eq!(seen, vec![7]);
    }

    #[test]
    fn radius_zero_visits_only_own_cell() {
        let mut grid = GridBuckets::new(1, 1.0);
        grid.insert(&[0.5], 0);
        grid.insert(&[1.5], 1);
        let mut seen = Vec::new();
        grid.for_each_near(&[0.2], 0, |i| seen.push(i));
        assert_eq!(seen, vec![0]);
    }
}
