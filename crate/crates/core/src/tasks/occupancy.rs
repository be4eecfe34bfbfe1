//! Occupancy fields, point sampling and boundary-voxel surfaces.

use std::borrow::Cow;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{chamfer_distance, PointSet};
use crate::error::{Error, Result};
use crate::math::{DenseMatrix, Prng};
use crate::network::{predict, NetworkParams, NetworkSpec};
use crate::training::{bce_loss, TaskBinding};

/// Closed-form solids inside [−1, 1]³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "shape")]
pub enum AnalyticShape {
    Sphere { radius: f64 },
    /// Ring in the xy-plane.
    Torus { major: f64, minor: f64 },
    /// Axis-aligned cube with a concentric ball removed.
    BoxMinusSphere { half_extent: f64, radius: f64 },
}

impl AnalyticShape {
    pub const UNIT_BALL: AnalyticShape = AnalyticShape::Sphere { radius: 1.0 };

    pub fn sphere() -> Self {
        AnalyticShape::Sphere { radius: 0.5 }
    }

    pub fn torus() -> Self {
        AnalyticShape::Torus { major: 0.5, minor: 0.2 }
    }

    pub fn box_minus_sphere() -> Self {
        AnalyticShape::BoxMinusSphere { half_extent: 0.5, radius: 0.65 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalyticShape::Sphere { .. } => "sphere",
            AnalyticShape::Torus { .. } => "torus",
            AnalyticShape::BoxMinusSphere { .. } => "box-minus-sphere",
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let [x, y, z] = p;
        match *self {
            AnalyticShape::Sphere { radius } => x * x + y * y + z * z <= radius * radius,
            AnalyticShape::Torus { major, minor } => {
                let q = (x * x + y * y).sqrt() - major;
                q * q + z * z <= minor * minor
            }
            AnalyticShape::BoxMinusSphere { half_extent, radius } => {
                x.abs().max(y.abs()).max(z.abs()) <= half_extent && x * x + y * y + z * z > radius * radius
            }
        }
    }
}

impl FromStr for AnalyticShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(AnalyticShape::sphere()),
            "torus" => Ok(AnalyticShape::torus()),
            "box-minus-sphere" | "box_minus_sphere" => Ok(AnalyticShape::box_minus_sphere()),
            "unit-ball" | "unit_ball" => Ok(AnalyticShape::UNIT_BALL),
            _ => Err(Error::arg(format!("unknown shape {s:?} (sphere, torus, box-minus-sphere, unit-ball)"))),
        }
    }
}

/// Voxel centers of an `r³` lattice over [−1, 1]³, x fastest.
pub fn lattice_points(r: usize) -> DenseMatrix {
    let c = |i: usize| -1.0 + (2 * i + 1) as f64 / r as f64;
    let mut data = Vec::with_capacity(3 * r * r * r);
    for k in 0..r {
        for j in 0..r {
            for i in 0..r {
                data.extend_from_slice(&[c(i), c(j), c(k)]);
            }
        }
    }
    DenseMatrix::from_vec(r * r * r, 3, data).expect("lattice shape")
}

/// Scalar values on a cubic lattice over `[−extent, extent]³`, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub resolution: usize,
    pub extent: f64,
    pub threshold: f64,
    pub values: Vec<f32>,
}

impl VoxelGrid {
    pub fn new(resolution: usize, extent: f64, threshold: f64, values: Vec<f32>) -> Result<Self> {
        if resolution == 0 || values.len() != resolution.pow(3) {
            return Err(Error::shape(format!("{} values for a {resolution}^3 grid", values.len())));
        }
        if !(extent > 0.0) {
            return Err(Error::arg(format!("grid extent must be positive, got {extent}")));
        }
        Ok(VoxelGrid { resolution, extent, threshold, values })
    }

    /// Samples a shape at the voxel centers of the unit cube lattice.
    pub fn rasterize(shape: &AnalyticShape, resolution: usize) -> Self {
        let pts = lattice_points(resolution);
        let values = (0..pts.rows())
            .map(|k| {
                let p = pts.row(k);
                if shape.contains([p[0], p[1], p[2]]) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        VoxelGrid { resolution, extent: 1.0, threshold: 0.5, values }
    }

    /// Nearest-voxel lookup; points outside the grid are empty.
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let r = self.resolution;
        let mut idx = [0usize; 3];
        for (a, &x) in p.iter().enumerate() {
            if x.abs() > self.extent {
                return false;
            }
            let u = ((x + self.extent) / (2.0 * self.extent) * r as f64).floor();
            idx[a] = (u.max(0.0) as usize).min(r - 1);
        }
        self.values[(idx[2] * r + idx[1]) * r + idx[0]] as f64 > self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OccupancyField {
    Analytic(AnalyticShape),
    Voxel(VoxelGrid),
}

impl OccupancyField {
    pub fn query(&self, p: [f64; 3]) -> bool {
        match self {
            OccupancyField::Analytic(s) => s.contains(p),
            OccupancyField::Voxel(g) => g.contains(p),
        }
    }

    pub fn label(&self, p: [f64; 3]) -> f64 {
        if self.query(p) {
            1.0
        } else {
            0.0
        }
    }
}

/// `n` uniform points in [−1, 1]³ (rows of the matrix) with 0/1 labels.
pub fn sample_occupancy(field: &OccupancyField, n: usize, prng: &mut Prng) -> Result<(DenseMatrix, Vec<f64>)> {
    if n == 0 {
        return Err(Error::arg("sample count must be positive"));
    }
    let mut coords = Vec::with_capacity(3 * n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let p = [prng.uniform(-1.0, 1.0)?, prng.uniform(-1.0, 1.0)?, prng.uniform(-1.0, 1.0)?];
        coords.extend_from_slice(&p);
        labels.push(field.label(p));
    }
    Ok((DenseMatrix::from_vec(n, 3, coords)?, labels))
}

/// Centers of lattice voxels whose thresholded state differs from at least
/// one in-bounds 6-neighbor. `values` is an `r³` lattice over [−1, 1]³,
/// x fastest; occupied means `value > threshold`.
pub fn extract_boundary_points(values: &[f64], r: usize, threshold: f64) -> Result<PointSet> {
    if r < 2 || values.len() != r * r * r {
        return Err(Error::shape(format!("{} values for a {r}^3 lattice", values.len())));
    }
    let occ = |i: usize, j: usize, k: usize| values[(k * r + j) * r + i] > threshold;
    let c = |i: usize| -1.0 + (2 * i + 1) as f64 / r as f64;
    let mut points = Vec::new();
    for k in 0..r {
        for j in 0..r {
            for i in 0..r {
                let here = occ(i, j, k);
                let differs = (i > 0 && occ(i - 1, j, k) != here)
                    || (i + 1 < r && occ(i + 1, j, k) != here)
                    || (j > 0 && occ(i, j - 1, k) != here)
                    || (j + 1 < r && occ(i, j + 1, k) != here)
                    || (k > 0 && occ(i, j, k - 1) != here)
                    || (k + 1 < r && occ(i, j, k + 1) != here);
                if differs {
                    points.push([c(i), c(j), c(k)]);
                }
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyResult(format!("no occupancy boundary on the {r}^3 lattice")));
    }
    PointSet::new(points)
}

/// Occupancy supervision with binary cross-entropy on a fixed point sample,
/// evaluated by chamfer distance between boundary surfaces.
pub struct OccupancyTask {
    pub field: OccupancyField,
    pub eval_resolution: usize,
    coords: DenseMatrix,
    labels: DenseMatrix,
    lattice: DenseMatrix,
    reference: PointSet,
}

impl OccupancyTask {
    pub fn new(field: OccupancyField, num_points: usize, eval_resolution: usize, seed: u64) -> Result<Self> {
        let mut prng = Prng::new(seed);
        let (coords, labels) = sample_occupancy(&field, num_points, &mut prng)?;
        let labels = DenseMatrix::from_vec(num_points, 1, labels)?;
        let lattice = lattice_points(eval_resolution);
        let truth: Vec<f64> = (0..lattice.rows())
            .map(|k| {
                let p = lattice.row(k);
                field.label([p[0], p[1], p[2]])
            })
            .collect();
        let reference = extract_boundary_points(&truth, eval_resolution, 0.5)?;
        Ok(OccupancyTask { field, eval_resolution, coords, labels, lattice, reference })
    }

    pub fn reference_surface(&self) -> &PointSet {
        &self.reference
    }

    /// Network occupancy probabilities on the evaluation lattice.
    pub fn predict_lattice(&self, spec: &NetworkSpec, params: &NetworkParams) -> Result<Vec<f64>> {
        Ok(predict(spec, params, &self.lattice)?.into_vec())
    }

    pub fn predicted_surface(&self, spec: &NetworkSpec, params: &NetworkParams) -> Result<PointSet> {
        let values = self.predict_lattice(spec, params)?;
        extract_boundary_points(&values, self.eval_resolution, 0.5)
    }
}

impl TaskBinding for OccupancyTask {
    fn num_samples(&self) -> usize {
        self.coords.rows()
    }

    fn inputs(&self, indices: Option<&[usize]>) -> Cow<'_, DenseMatrix> {
        match indices {
            None => Cow::Borrowed(&self.coords),
            Some(idx) => Cow::Owned(self.coords.select_rows(idx)),
        }
    }

    fn loss(&self, outputs: &DenseMatrix, indices: Option<&[usize]>) -> Result<(f64, DenseMatrix)> {
        match indices {
            None => bce_loss(outputs, &self.labels),
            Some(idx) => bce_loss(outputs, &self.labels.select_rows(idx)),
        }
    }

    /// Chamfer distance to the reference surface; infinite while the
    /// predicted surface is empty.
    fn evaluate(&self, spec: &NetworkSpec, params: &NetworkParams) -> Result<f64> {
        match self.predicted_surface(spec, params) {
            Ok(surface) => chamfer_distance(&surface, &self.reference),
            Err(Error::EmptyResult(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    }

    fn metric_name(&self) -> &'static str {
        "chamfer"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_membership() {
        let f = OccupancyField::Analytic(AnalyticShape::UNIT_BALL);
        assert_eq!(f.label([0.0, 0.0, 0.0]), 1.0);
        assert_eq!(f.label([0.99, 0.99, 0.99]), 0.0);
    }

    #[test]
    fn sphere_volume_fraction() {
        let f = OccupancyField::Analytic(AnalyticShape::sphere());
        let (_, labels) = sample_occupancy(&f, 100_000, &mut Prng::new(5)).unwrap();
        let frac = labels.iter().sum::<f64>() / labels.len() as f64;
        assert!((frac - std::f64::consts::PI / 48.0).abs() < 0.01, "{frac}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = OccupancyField::Analytic(AnalyticShape::torus());
        let a = sample_occupancy(&f, 500, &mut Prng::new(9)).unwrap();
        let b = sample_occupancy(&f, 500, &mut Prng::new(9)).unwrap();
        assert_eq!(a, b);
        assert!(sample_occupancy(&f, 0, &mut Prng::new(9)).is_err());
    }

    #[test]
    fn voxel_and_analytic_agree_at_centers() {
        for shape in [AnalyticShape::sphere(), AnalyticShape::torus(), AnalyticShape::box_minus_sphere()] {
            let grid = VoxelGrid::rasterize(&shape, 24);
            let pts = lattice_points(24);
            for k in 0..pts.rows() {
                let p = pts.row(k);
                let p = [p[0], p[1], p[2]];
                assert_eq!(grid.contains(p), shape.contains(p), "{} at {p:?}", shape.name());
            }
        }
    }

    #[test]
    fn empty_grid_has_no_boundary() {
        assert!(matches!(extract_boundary_points(&vec![0.0; 512], 8, 0.5), Err(Error::EmptyResult(_))));
    }

    #[test]
    fn half_space_boundary_is_two_planes() {
        let r = 16;
        let pts = lattice_points(r);
        let values: Vec<f64> = (0..pts.rows()).map(|k| if pts[(k, 0)] < 0.0 { 1.0 } else { 0.0 }).collect();
        let b = extract_boundary_points(&values, r, 0.5).unwrap();
        assert_eq!(b.len(), 2 * r * r);
        assert!(b.points().iter().all(|p| (p[0].abs() - 1.0 / r as f64).abs() < 1e-12));
    }

    #[test]
    fn sphere_boundary_near_true_radius() {
        let r = 32;
        let shape = AnalyticShape::sphere();
        let pts = lattice_points(r);
        let values: Vec<f64> =
            (0..pts.rows()).map(|k| if shape.contains([pts[(k, 0)], pts[(k, 1)], pts[(k, 2)]]) { 1.0 } else { 0.0 }).collect();
        let b = extract_boundary_points(&values, r, 0.5).unwrap();
        let diag = 3f64.sqrt() * 2.0 / r as f64;
        for p in b.points() {
            let d = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!((d - 0.5).abs() <= diag, "{p:?}");
        }
    }
}
