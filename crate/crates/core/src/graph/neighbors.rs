//! Fixed-radius neighbour search with cell lists.

use rayon::prelude::*;

use crate::manifold::{ManifoldSpec, PointCloud};

/// Points sorted by cell key; lookups binary-search the key array.
struct CellIndex {
    keys: Vec<u64>,
    order: Vec<u32>,
    cells: i64,
    cell: f64,
    origin: f64,
    periodic: bool,
    dim: usize,
}

impl CellIndex {
    fn new(cloud: &PointCloud, radius: f64) -> Option<Self> {
        let (origin, extent, periodic) = match cloud.manifold {
            ManifoldSpec::FlatTorus { side } => (0.0, side, true),
            ManifoldSpec::Sphere => (-1.0, 2.0, false),
        };
        let cells = (extent / radius).floor() as i64;
        // with fewer than three cells per axis the stencil would revisit cells
        if cells < 3 {
            return None;
        }
        let cell = extent / cells as f64;
        let dim = cloud.dim();
        let mut idx = Self {
            keys: Vec::new(),
            order: Vec::new(),
            cells,
            cell,
            origin,
            periodic,
            dim,
        };
        let mut tagged: Vec<(u64, u32)> = cloud
            .points()
            .enumerate()
            .map(|(i, p)| (idx.key(&idx.coords_of(p)), i as u32))
            .collect();
        tagged.sort_unstable();
        idx.keys = tagged.iter().map(|t| t.0).collect();
        idx.order = tagged.iter().map(|t| t.1).collect();
        Some(idx)
    }

    fn coords_of(&self, p: &[f64]) -> [i64; 3] {
        let mut c = [0i64; 3];
        for (a, x) in p.iter().enumerate() {
            c[a] = (((x - self.origin) / self.cell).floor() as i64).clamp(0, self.cells - 1);
        }
        c
    }

    fn key(&self, c: &[i64; 3]) -> u64 {
        let m = self.cells as u64;
        (0..self.dim).fold(0u64, |k, a| k * m + c[a] as u64)
    }

    fn bucket(&self, key: u64) -> &[u32] {
        let lo = self.keys.partition_point(|&k| k < key);
        let hi = self.keys.partition_point(|&k| k <= key);
        &self.order[lo..hi]
    }

    /// Visits every point in the 3^dim stencil around `p`.
    fn for_each_candidate(&self, p: &[f64], mut f: impl FnMut(u32)) {
        let c = self.coords_of(p);
        let offsets: &[i64] = &[-1, 0, 1];
        let mut d = [0i64; 3];
        let span = if self.dim == 3 { 3 } else { 1 };
        for &d0 in offsets {
            for &d1 in offsets {
                for &d2 in &offsets[..span] {
                    let d2 = if self.dim == 3 { d2 } else { 0 };
                    d[0] = c[0] + d0;
                    d[1] = c[1] + d1;
                    d[2] = c[2] + d2;
                    let mut ok = true;
                    for v in d.iter_mut().take(self.dim) {
                        if self.periodic {
                            *v = v.rem_euclid(self.cells);
                        } else if *v < 0 || *v >= self.cells {
                            ok = false;
                        }
                    }
                    if ok {
                        for &j in self.bucket(self.key(&d)) {
                            f(j);
                        }
                    }
                }
            }
        }
    }
}

/// For every node `i`, the sorted list of `(j, distance)` with `j > i` and
/// kernel distance `≤ radius`.
pub(crate) fn upper_neighbors(cloud: &PointCloud, radius: f64) -> Vec<Vec<(u32, f64)>> {
    let m = cloud.manifold;
    let n = cloud.len();
    let index = CellIndex::new(cloud, radius);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let x = cloud.point(i);
            let mut row = Vec::new();
            match &index {
                Some(idx) => idx.for_each_candidate(x, |j| {
                    if (j as usize) > i {
                        let d = m.kernel_distance(x, cloud.point(j as usize));
                        if d <= radius {
                            row.push((j, d));
                        }
                    }
                }),
                None => {
                    for j in i + 1..n {
                        let d = m.kernel_distance(x, cloud.point(j));
                        if d <= radius {
                            row.push((j as u32, d));
                        }
                    }
                }
            }
            row.sort_unstable_by_key(|e| e.0);
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{sample_points, DensitySpec};

    fn brute(cloud: &PointCloud, r: f64) -> Vec<Vec<u32>> {
        let n = cloud.len();
        (0..n)
            .map(|i| {
                (i + 1..n)
                    .filter(|&j| cloud.manifold.kernel_distance(cloud.point(i), cloud.point(j)) <= r)
                    .map(|j| j as u32)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn cell_lists_match_brute_force() {
        for (m, r) in [
            (ManifoldSpec::unit_torus(), 0.07),
            (ManifoldSpec::torus(2.5).unwrap(), 0.3),
            (ManifoldSpec::sphere(), 0.2),
            (ManifoldSpec::unit_torus(), 0.4),
        ] {
            let cloud = sample_points(m, DensitySpec::uniform(m), 700, 5).unwrap();
            let fast: Vec<Vec<u32>> = upper_neighbors(&cloud, r)
                .into_iter()
                .map(|row| row.into_iter().map(|e| e.0).collect())
                .collect();
            assert_eq!(fast, brute(&cloud, r), "{m:?} r={r}");
        }
    }
}
