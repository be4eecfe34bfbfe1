//! Parallel-beam Radon transform as a sparse linear operator.
//!
//! Ray `(θ, t)` is the line `t·(cosθ, sinθ) + s·(−sinθ, cosθ)`. Detector
//! offsets are cell centers spanning [−1, 1]. Samples along a ray sit at
//! midpoints `s = (k + ½)·Δs` with `Δs = 1 / max(H, W)`; only samples inside
//! the [−1, 1]² support contribute, each with bilinear weights on the pixel
//! centers (clamped to the outermost centers) times `Δs`.

use std::borrow::Cow;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{make_coordinate_grid, ImageGrid};
use crate::error::{Error, Result};
use crate::math::{par, DenseMatrix};
use crate::network::{predict, NetworkParams, NetworkSpec};
use crate::training::{psnr, TaskBinding};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadonGeometry {
    pub height: usize,
    pub width: usize,
    pub num_angles: usize,
    pub num_detectors: usize,
}

impl RadonGeometry {
    pub fn new(height: usize, width: usize, num_angles: usize, num_detectors: usize) -> Result<Self> {
        if height == 0 || width == 0 || num_angles == 0 || num_detectors == 0 {
            return Err(Error::arg(format!(
                "radon geometry needs positive sizes, got {height}x{width}, {num_angles} angles, {num_detectors} detectors"
            )));
        }
        Ok(RadonGeometry { height, width, num_angles, num_detectors })
    }

    pub fn num_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn num_rays(&self) -> usize {
        self.num_angles * self.num_detectors
    }

    /// `k·π / num_angles` for `k = 0..num_angles`.
    pub fn angles(&self) -> Vec<f64> {
        (0..self.num_angles).map(|k| k as f64 * PI / self.num_angles as f64).collect()
    }

    pub fn detector_offset(&self, d: usize) -> f64 {
        -1.0 + (2 * d + 1) as f64 / self.num_detectors as f64
    }

    pub fn step(&self) -> f64 {
        1.0 / self.height.max(self.width) as f64
    }
}

/// Projections over uniformly spaced angles in [0, π); values are stored
/// angle-major, detector fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sinogram {
    pub num_angles: usize,
    pub num_detectors: usize,
    pub angles: Vec<f64>,
    pub values: Vec<f64>,
}

impl Sinogram {
    pub fn get(&self, angle: usize, detector: usize) -> f64 {
        self.values[angle * self.num_detectors + detector]
    }

    pub fn zeros(geometry: &RadonGeometry) -> Self {
        Sinogram {
            num_angles: geometry.num_angles,
            num_detectors: geometry.num_detectors,
            angles: geometry.angles(),
            values: vec![0.0; geometry.num_rays()],
        }
    }

    /// Single-channel image with one row per angle.
    pub fn to_image(&self) -> ImageGrid {
        ImageGrid {
            height: self.num_angles,
            width: self.num_detectors,
            channels: 1,
            pixels: self.values.clone(),
        }
    }

    /// Inverse of [`Sinogram::to_image`]; angles are assumed uniform in [0, π).
    pub fn from_image(img: &ImageGrid) -> Result<Self> {
        if img.channels != 1 {
            return Err(Error::arg("sinogram images must have one channel"));
        }
        let geometry = RadonGeometry::new(1, 1, img.height, img.width)?;
        let s = Sinogram {
            num_angles: img.height,
            num_detectors: img.width,
            angles: geometry.angles(),
            values: img.pixels.clone(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.num_angles * self.num_detectors || self.angles.len() != self.num_angles {
            return Err(Error::shape(format!(
                "sinogram {}x{} holds {} values and {} angles",
                self.num_angles,
                self.num_detectors,
                self.values.len(),
                self.angles.len()
            )));
        }
        if !self.angles.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::arg("sinogram angles must be strictly increasing"));
        }
        if !self.values.iter().all(|v| v.is_finite()) {
            return Err(Error::arg("sinogram values must be finite"));
        }
        Ok(())
    }
}

/// Compressed sparse rows (rays) of the projection matrix, plus the
/// transposed layout for the adjoint.
#[derive(Debug, Clone)]
pub struct RadonOperator {
    geometry: RadonGeometry,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    col_ptr: Vec<usize>,
    t_rows: Vec<usize>,
    t_weights: Vec<f64>,
}

fn bilinear(coord: f64, n: usize) -> (usize, f64) {
    // continuous index of the pixel center grid
    let u = ((coord + 1.0) * n as f64 / 2.0 - 0.5).clamp(0.0, (n - 1) as f64);
    if n == 1 {
        return (0, 0.0);
    }
    let i0 = (u.floor() as usize).min(n - 2);
    (i0, u - i0 as f64)
}

impl RadonOperator {
    pub fn new(geometry: RadonGeometry) -> Result<Self> {
        let g = RadonGeometry::new(geometry.height, geometry.width, geometry.num_angles, geometry.num_detectors)?;
        let angles = g.angles();
        let ds = g.step();
        let half = (2f64.sqrt() / ds).ceil() as i64;
        let (h, w) = (g.height, g.width);

        let rays: Vec<Vec<(usize, f64)>> = par::map_indexed(g.num_rays(), |r| {
            let (a, d) = (r / g.num_detectors, r % g.num_detectors);
            let (sin, cos) = angles[a].sin_cos();
            let t = g.detector_offset(d);
            let mut entries: Vec<(usize, f64)> = Vec::new();
            for k in -half..half {
                let s = (k as f64 + 0.5) * ds;
                let x = t * cos - s * sin;
                let y = t * sin + s * cos;
                if x.abs() > 1.0 || y.abs() > 1.0 {
                    continue;
                }
                let (j0, fx) = bilinear(x, w);
                let (i0, fy) = bilinear(y, h);
                let j1 = (j0 + 1).min(w - 1);
                let i1 = (i0 + 1).min(h - 1);
                for (i, wy) in [(i0, 1.0 - fy), (i1, fy)] {
                    for (j, wx) in [(j0, 1.0 - fx), (j1, fx)] {
                        let wt = wx * wy * ds;
                        if wt != 0.0 {
                            entries.push((i * w + j, wt));
                        }
                    }
                }
            }
            entries.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
            for (c, v) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            merged
        });

        let nnz: usize = rays.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(g.num_rays() + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut weights = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for ray in &rays {
            for &(c, v) in ray {
                cols.push(c);
                weights.push(v);
            }
            row_ptr.push(cols.len());
        }

        // transpose by counting sort; rows stay in increasing order per column
        let n = g.num_pixels();
        let mut col_ptr = vec![0usize; n + 1];
        for &c in &cols {
            col_ptr[c + 1] += 1;
        }
        for k in 0..n {
            col_ptr[k + 1] += col_ptr[k];
        }
        let mut fill = col_ptr.clone();
        let mut t_rows = vec![0usize; nnz];
        let mut t_weights = vec![0.0; nnz];
        for r in 0..g.num_rays() {
            for e in row_ptr[r]..row_ptr[r + 1] {
                let slot = &mut fill[cols[e]];
                t_rows[*slot] = r;
                t_weights[*slot] = weights[e];
                *slot += 1;
            }
        }

        Ok(RadonOperator { geometry: g, row_ptr, cols, weights, col_ptr, t_rows, t_weights })
    }

    pub fn geometry(&self) -> &RadonGeometry {
        &self.geometry
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Pixel indices touched by one ray.
    pub fn ray_support(&self, ray: usize) -> &[usize] {
        &self.cols[self.row_ptr[ray]..self.row_ptr[ray + 1]]
    }

    /// `P f` for a row-major pixel vector.
    pub fn apply(&self, pixels: &[f64]) -> Result<Vec<f64>> {
        if pixels.len() != self.geometry.num_pixels() {
            return Err(Error::shape(format!(
                "radon operator expects {} pixels, got {}",
                self.geometry.num_pixels(),
                pixels.len()
            )));
        }
        Ok(par::map_indexed(self.geometry.num_rays(), |r| {
            let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            self.cols[lo..hi].iter().zip(&self.weights[lo..hi]).map(|(&c, &w)| w * pixels[c]).sum()
        }))
    }

    /// `Pᵀ g`, accumulated per pixel in increasing ray order.
    pub fn apply_transpose(&self, rays: &[f64]) -> Result<Vec<f64>> {
        if rays.len() != self.geometry.num_rays() {
            return Err(Error::shape(format!(
                "radon adjoint expects {} rays, got {}",
                self.geometry.num_rays(),
                rays.len()
            )));
        }
        Ok(par::map_indexed(self.geometry.num_pixels(), |p| {
            let (lo, hi) = (self.col_ptr[p], self.col_ptr[p + 1]);
            self.t_rows[lo..hi].iter().zip(&self.t_weights[lo..hi]).map(|(&r, &w)| w * rays[r]).sum()
        }))
    }
}

pub fn radon_forward(img: &ImageGrid, op: &RadonOperator) -> Result<Sinogram> {
    if img.channels != 1 {
        return Err(Error::arg(format!("radon transform needs one channel, got {}", img.channels)));
    }
    let g = op.geometry();
    if img.height != g.height || img.width != g.width {
        return Err(Error::shape(format!(
            "image {}x{} does not match operator grid {}x{}",
            img.height, img.width, g.height, g.width
        )));
    }
    Ok(Sinogram {
        num_angles: g.num_angles,
        num_detectors: g.num_detectors,
        angles: g.angles(),
        values: op.apply(&img.pixels)?,
    })
}

/// Builds the operator for the given sizes and projects the image.
pub fn radon_transform(img: &ImageGrid, num_angles: usize, num_detectors: usize) -> Result<Sinogram> {
    let op = RadonOperator::new(RadonGeometry::new(img.height, img.width, num_angles, num_detectors)?)?;
    radon_forward(img, &op)
}

fn check_sinogram(sino: &Sinogram, op: &RadonOperator) -> Result<()> {
    let g = op.geometry();
    if sino.num_angles != g.num_angles || sino.num_detectors != g.num_detectors || sino.values.len() != g.num_rays() {
        return Err(Error::shape(format!(
            "sinogram {}x{} does not match operator geometry {}x{}",
            sino.num_angles, sino.num_detectors, g.num_angles, g.num_detectors
        )));
    }
    Ok(())
}

pub fn radon_adjoint(sino: &Sinogram, op: &RadonOperator) -> Result<ImageGrid> {
    check_sinogram(sino, op)?;
    let g = op.geometry();
    ImageGrid::new(g.height, g.width, 1, op.apply_transpose(&sino.values)?)
}

/// Mean squared sinogram residual of the network output on the pixel grid,
/// with its gradient `(2/M)·Pᵀ(P f − y)` as an `(H·W) × 1` matrix.
pub fn ct_loss(outputs: &DenseMatrix, target: &Sinogram, op: &RadonOperator) -> Result<(f64, DenseMatrix)> {
    check_sinogram(target, op)?;
    let g = op.geometry();
    if outputs.shape() != (g.num_pixels(), 1) {
        return Err(Error::shape(format!(
            "ct loss expects {}x1 outputs, got {}x{}",
            g.num_pixels(),
            outputs.rows(),
            outputs.cols()
        )));
    }
    let proj = op.apply(outputs.as_slice())?;
    let m = g.num_rays() as f64;
    let residual: Vec<f64> = proj.iter().zip(&target.values).map(|(p, y)| p - y).collect();
    let loss = residual.iter().map(|r| r * r).sum::<f64>() / m;
    let scaled: Vec<f64> = residual.iter().map(|r| 2.0 * r / m).collect();
    let grad = op.apply_transpose(&scaled)?;
    Ok((loss, DenseMatrix::from_vec(g.num_pixels(), 1, grad)?))
}

/// Reconstruction supervised only through projections of the full pixel grid.
pub struct CtTask {
    /// When absent, quality is measured in the projection domain.
    pub ground_truth: Option<ImageGrid>,
    pub sinogram: Sinogram,
    operator: RadonOperator,
    coords: DenseMatrix,
}

impl CtTask {
    /// Simulates the measurements from a known image.
    pub fn new(ground_truth: ImageGrid, num_angles: usize, num_detectors: usize) -> Result<Self> {
        let geometry = RadonGeometry::new(ground_truth.height, ground_truth.width, num_angles, num_detectors)?;
        let operator = RadonOperator::new(geometry)?;
        let sinogram = radon_forward(&ground_truth, &operator)?;
        let coords = make_coordinate_grid(ground_truth.height, ground_truth.width);
        Ok(CtTask { ground_truth: Some(ground_truth), sinogram, operator, coords })
    }

    /// Reconstructs an `height × width` image from stored measurements.
    pub fn from_sinogram(sinogram: Sinogram, height: usize, width: usize) -> Result<Self> {
        sinogram.validate()?;
        let geometry = RadonGeometry::new(height, width, sinogram.num_angles, sinogram.num_detectors)?;
        if sinogram.angles != geometry.angles() {
            return Err(Error::config("sinogram angles must be uniform in [0, pi)"));
        }
        let operator = RadonOperator::new(geometry)?;
        Ok(CtTask { ground_truth: None, sinogram, operator, coords: make_coordinate_grid(height, width) })
    }

    pub fn operator(&self) -> &RadonOperator {
        &self.operator
    }

    pub fn reconstruct(&self, spec: &NetworkSpec, params: &NetworkParams) -> Result<ImageGrid> {
        let g = self.operator.geometry();
        let out = predict(spec, params, &self.coords)?;
        ImageGrid::from_matrix(g.height, g.width, &out)
    }
}

impl TaskBinding for CtTask {
    fn num_samples(&self) -> usize {
        self.coords.rows()
    }

    fn inputs(&self, _indices: Option<&[usize]>) -> Cow<'_, DenseMatrix> {
        Cow::Borrowed(&self.coords)
    }

    fn loss(&self, outputs: &DenseMatrix, indices: Option<&[usize]>) -> Result<(f64, DenseMatrix)> {
        if indices.is_some() {
            return Err(Error::arg("ct loss is defined on the full pixel grid only"));
        }
        ct_loss(outputs, &self.sinogram, &self.operator)
    }

    fn supports_minibatch(&self) -> bool {
        false
    }

    /// Image PSNR against the ground truth (peak 1), or projection PSNR with
    /// the largest measured magnitude as peak.
    fn evaluate(&self, spec: &NetworkSpec, params: &NetworkParams) -> Result<f64> {
        let rec = self.reconstruct(spec, params)?;
        match &self.ground_truth {
            Some(gt) => psnr(&rec.pixels, &gt.pixels, 1.0),
            None => {
                let proj = self.operator.apply(&rec.pixels)?;
                let peak = self.sinogram.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
                psnr(&proj, &self.sinogram.values, peak)
            }
        }
    }

    fn metric_name(&self) -> &'static str {
        "psnr"
    }
}
