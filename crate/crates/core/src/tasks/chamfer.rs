//! Point sets and chamfer distance with a uniform-grid nearest-neighbor index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    points: Vec<[f64; 3]>,
}

impl PointSet {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::arg("point coordinates must be finite"));
        }
        Ok(PointSet { points })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[inline]
fn dist2(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    let dz = p[2] - q[2];
    dx * dx + dy * dy + dz * dz
}

/// Uniform grid over a bounding box; points bucketed by cell.
struct GridIndex<'a> {
    points: &'a [[f64; 3]],
    lo: [f64; 3],
    cell: f64,
    dims: [usize; 3],
    start: Vec<usize>,
    order: Vec<usize>,
}

impl<'a> GridIndex<'a> {
    fn new(points: &'a [[f64; 3]], lo: [f64; 3], hi: [f64; 3]) -> Self {
        let span = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max).max(1e-12);
        // about two points per occupied cell for surface-like sets
        let per_axis = ((points.len() as f64 / 2.0).sqrt().ceil() as usize).clamp(1, 256);
        let cell = span / per_axis as f64;
        let dims = [0, 1, 2].map(|a| (((hi[a] - lo[a]) / cell).floor() as usize + 1).min(per_axis + 1));
        let mut index = GridIndex { points, lo, cell, dims, start: Vec::new(), order: Vec::new() };
        let ncell = dims[0] * dims[1] * dims[2];
        let ids: Vec<usize> = points.iter().map(|p| index.flat(index.cell_of(p))).collect();
        let mut start = vec![0usize; ncell + 1];
        for &id in &ids {
            start[id + 1] += 1;
        }
        for k in 0..ncell {
            start[k + 1] += start[k];
        }
        let mut fill = start.clone();
        let mut order = vec![0usize; points.len()];
        for (pi, &id) in ids.iter().enumerate() {
            order[fill[id]] = pi;
            fill[id] += 1;
        }
        index.start = start;
        index.order = order;
        index
    }

    fn cell_of(&self, p: &[f64; 3]) -> [usize; 3] {
        [0, 1, 2].map(|a| {
            let u = ((p[a] - self.lo[a]) / self.cell).floor();
            (u.max(0.0) as usize).min(self.dims[a] - 1)
        })
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    fn scan_cell(&self, c: [usize; 3], q: &[f64; 3], best: &mut f64) {
        let id = self.flat(c);
        for &pi in &self.order[self.start[id]..self.start[id + 1]] {
            let d = dist2(q, &self.points[pi]);
            if d < *best {
                *best = d;
            }
        }
    }

    /// Squared distance from `q` to its nearest indexed point.
    fn nearest(&self, q: &[f64; 3]) -> f64 {
        let c = self.cell_of(q);
        let mut best = f64::INFINITY;
        let max_ring = self.dims.iter().max().copied().unwrap_or(1);
        for ring in 0..=max_ring {
            let lo = c.map(|v| v as isize - ring as isize);
            let hi = c.map(|v| v as isize + ring as isize);
            for z in lo[2].max(0)..=hi[2].min(self.dims[2] as isize - 1) {
                for y in lo[1].max(0)..=hi[1].min(self.dims[1] as isize - 1) {
                    let on_shell_zy = z == lo[2] || z == hi[2] || y == lo[1] || y == hi[1];
                    for x in lo[0].max(0)..=hi[0].min(self.dims[0] as isize - 1) {
                        if on_shell_zy || x == lo[0] || x == hi[0] {
                            self.scan_cell([x as usize, y as usize, z as usize], q, &mut best);
                        }
                    }
                }
            }
            // anything outside the searched block is at least this far away
            let mut bound = f64::INFINITY;
            for a in 0..3 {
                if lo[a] > 0 {
                    bound = bound.min(q[a] - (self.lo[a] + lo[a] as f64 * self.cell));
                }
                if hi[a] < self.dims[a] as isize - 1 {
                    bound = bound.min(self.lo[a] + (hi[a] + 1) as f64 * self.cell - q[a]);
                }
            }
            if bound == f64::INFINITY {
                break;
            }
            let margin = (bound - 1e-9 * self.cell).max(0.0);
            if best <= margin * margin {
                break;
            }
        }
        best
    }
}

fn bounds(sets: &[&[[f64; 3]]]) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in sets.iter().flat_map(|s| s.iter()) {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}

const QUERY_CHUNK: usize = 1024;

fn mean_nearest(queries: &[[f64; 3]], index: &GridIndex) -> f64 {
    let chunks = queries.len().div_ceil(QUERY_CHUNK);
    let parts: Vec<Vec<f64>> = par::map_indexed(chunks, |c| {
        let end = ((c + 1) * QUERY_CHUNK).min(queries.len());
        queries[c * QUERY_CHUNK..end].iter().map(|q| index.nearest(q)).collect()
    });
    parts.iter().flatten().sum::<f64>() / queries.len() as f64
}

/// `½·mean_a min_b ‖a−b‖² + ½·mean_b min_a ‖a−b‖²`.
pub fn chamfer_distance(a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::arg("chamfer distance needs two non-empty point sets"));
    }
    let (lo, hi) = bounds(&[&a.points, &b.points]);
    let index_a = GridIndex::new(&a.points, lo, hi);
    let index_b = GridIndex::new(&b.points, lo, hi);
    Ok(0.5 * mean_nearest(&a.points, &index_b) + 0.5 * mean_nearest(&b.points, &index_a))
}

/// Unsquared variant: mean Euclidean nearest-neighbor distances.
pub fn chamfer_distance_root(a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::arg("chamfer distance needs two non-empty point sets"));
    }
    let (lo, hi) = bounds(&[&a.points, &b.points]);
    let index_a = GridIndex::new(&a.points, lo, hi);
    let index_b = GridIndex::new(&b.points, lo, hi);
    let side = |qs: &[[f64; 3]], idx: &GridIndex| qs.iter().map(|q| idx.nearest(q).sqrt()).sum::<f64>() / qs.len() as f64;
    Ok(0.5 * side(&a.points, &index_b) + 0.5 * side(&b.points, &index_a))
}

/// Quadratic reference implementation.
pub fn chamfer_distance_brute_force(a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::arg("chamfer distance needs two non-empty point sets"));
    }
    let side = |qs: &[[f64; 3]], ps: &[[f64; 3]]| {
        qs.iter().map(|q| ps.iter().map(|p| dist2(q, p)).fold(f64::INFINITY, f64::min)).sum::<f64>() / qs.len() as f64
    };
    Ok(0.5 * side(&a.points, &b.points) + 0.5 * side(&b.points, &a.points))
}
