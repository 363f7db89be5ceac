//! Uniform spatial hash for neighbour queries.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use super::geometry::Vec2;

/// Multiplicative hasher for small integer keys. Cell keys are not
/// attacker-controlled, so SipHash's DoS resistance buys nothing here.
#[derive(Default)]
struct CellHasher(u64);

impl Hasher for CellHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_i64(&mut self, v: i64) {
        self.write_u64(v as u64);
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0.rotate_left(5) ^ v).wrapping_mul(0x51_7c_c1_b7_27_22_0a_95);
    }
}

/// Buckets point indices by square cell. A query scans every cell that
/// overlaps the bounding box of the query disc, so it is exact for any
/// radius. With a cell twice the query radius that is at most 2×2 cells.
#[derive(Debug, Clone)]
pub struct SpatialHash {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>, BuildHasherDefault<CellHasher>>,
}

impl SpatialHash {
    pub fn new(cell: f64) -> Self {
        assert!(cell > 0.0, "cell size must be positive");
        Self {
            cell,
            buckets: HashMap::default(),
        }
    }

    fn key(&self, p: Vec2) -> (i64, i64) {
        (self.coord(p.x), self.coord(p.y))
    }

    fn coord(&self, v: f64) -> i64 {
        (v / self.cell).floor() as i64
    }

    pub fn clear(&mut self) {
        self.buckets.values_mut().for_each(Vec::clear);
    }

    pub fn insert(&mut self, index: usize, p: Vec2) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(index);
    }

    /// Indices of points strictly closer than `radius` to `p`, ascending.
    pub fn query(&self, p: Vec2, radius: f64, points: &[Vec2]) -> Vec<usize> {
        let r_sq = radius * radius;
        let mut out = Vec::new();
        for cx in self.coord(p.x - radius)..=self.coord(p.x + radius) {
            for cy in self.coord(p.y - radius)..=self.coord(p.y + radius) {
                if let Some(bucket) = self.buckets.get(&(cx, cy)) {
                    out.extend(
                        bucket
                            .iter()
                            .copied()
                            .filter(|&j| (points[j] - p).norm_sq() < r_sq),
                    );
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Reference all-pairs query with the same contract as [`SpatialHash::query`].
pub fn brute_force_query(
    p: Vec2,
    radius: f64,
    points: &[Vec2],
    include: impl Fn(usize) -> bool,
) -> Vec<usize> {
    let r_sq = radius * radius;
    (0..points.len())
        .filter(|&j| include(j) && (points[j] - p).norm_sq() < r_sq)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Vec2> = (0..500)
            .map(|_| Vec2::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)))
            .collect();
        let mut hash = SpatialHash::new(3.0);
        for (i, &p) in pts.iter().enumerate() {
            hash.insert(i, p);
        }
        for &p in pts.iter().take(100) {
            assert_eq!(
                hash.query(p, 1.5, &pts),
                brute_force_query(p, 1.5, &pts, |_| true)
            );
            assert_eq!(
                hash.query(p, 3.0, &pts),
                brute_force_query(p, 3.0, &pts, |_| true)
            );
            assert_eq!(
                hash.query(p, 7.5, &pts),
                brute_force_query(p, 7.5, &pts, |_| true)
            );
        }
    }
}
