use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::math::DenseMatrix;
use crate::network::{predict, NetworkParams, NetworkSpec};
use crate::training::{mse_loss, psnr, TaskBinding};

/// Image with values in [0, 1], stored row-major with interleaved channels.
/// Pixel `(i, j)` sits at `(x, y) = (-1 + (2j+1)/w, -1 + (2i+1)/h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub pixels: Vec<f64>,
}

impl ImageGrid {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != height * width * channels {
            return Err(Error::shape(format!(
                "{} values for a {height}x{width}x{channels} image",
                pixels.len()
            )));
        }
        if channels == 0 {
            return Err(Error::shape("image needs at least one channel"));
        }
        Ok(ImageGrid { height, width, channels, pixels })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        ImageGrid { height, width, channels, pixels: vec![0.0; height * width * channels] }
    }

    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.pixels[(i * self.width + j) * self.channels + c]
    }

    pub fn set(&mut self, i: usize, j: usize, c: usize, v: f64) {
        self.pixels[(i * self.width + j) * self.channels + c] = v;
    }

    pub fn num_pixels(&self) -> usize {
        self.height * self.width
    }

    /// Pixels as a `(h*w) x channels` matrix.
    pub fn as_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_vec(self.num_pixels(), self.channels, self.pixels.clone()).expect("consistent image shape")
    }

    pub fn from_matrix(height: usize, width: usize, m: &DenseMatrix) -> Result<Self> {
        if m.rows() != height * width {
            return Err(Error::shape(format!("{} rows for a {height}x{width} image", m.rows())));
        }
        Self::new(height, width, m.cols(), m.as_slice().to_vec())
    }

    /// Copy with every value clipped to [0, 1].
    pub fn clipped(&self) -> ImageGrid {
        ImageGrid { pixels: self.pixels.iter().map(|v| v.clamp(0.0, 1.0)).collect(), ..self.clone() }
    }

    /// Left-right mirror.
    pub fn mirrored(&self) -> ImageGrid {
        let mut out = self.clone();
        for i in 0..self.height {
            for j in 0..self.width {
                for c in 0..self.channels {
                    out.set(i, j, c, self.get(i, self.width - 1 - j, c));
                }
            }
        }
        out
    }

    /// Averages `factor x factor` blocks.
    pub fn downsample(&self, factor: usize) -> Result<ImageGrid> {
        if factor == 0 || !self.height.is_multiple_of(factor) || !self.width.is_multiple_of(factor) {
            return Err(Error::arg(format!("cannot downsample {}x{} by {factor}", self.height, self.width)));
        }
        let (h, w) = (self.height / factor, self.width / factor);
        let mut out = ImageGrid::zeros(h, w, self.channels);
        let norm = (factor * factor) as f64;
        for i in 0..h {
            for j in 0..w {
                for c in 0..self.channels {
                    let mut s = 0.0;
                    for di in 0..factor {
                        for dj in 0..factor {
                            s += self.get(i * factor + di, j * factor + dj, c);
                        }
                    }
                    out.set(i, j, c, s / norm);
                }
            }
        }
        Ok(out)
    }

    /// Absolute difference per pixel, single channel (channel mean).
    pub fn abs_diff(&self, other: &ImageGrid) -> Result<ImageGrid> {
        if (self.height, self.width, self.channels) != (other.height, other.width, other.channels) {
            return Err(Error::shape("images differ in shape"));
        }
        let mut out = ImageGrid::zeros(self.height, self.width, 1);
        for p in 0..self.num_pixels() {
            let mut s = 0.0;
            for c in 0..self.channels {
                let k = p * self.channels + c;
                s += (self.pixels[k] - other.pixels[k]).abs();
            }
            out.pixels[p] = s / self.channels as f64;
        }
        Ok(out)
    }
}

/// Pixel-center coordinates of an `h x w` grid, row-major, columns `(x, y)`.
pub fn make_coordinate_grid(h: usize, w: usize) -> DenseMatrix {
    let mut data = Vec::with_capacity(h * w * 2);
    for i in 0..h {
        let y = -1.0 + (2 * i + 1) as f64 / h as f64;
        for j in 0..w {
            data.push(-1.0 + (2 * j + 1) as f64 / w as f64);
            data.push(y);
        }
    }
    DenseMatrix::from_vec(h * w, 2, data).expect("grid shape")
}

/// Deterministic RGB test image with smooth shading, sharp edges and
/// textures at several frequencies.
pub fn bundled_test_image(size: usize) -> ImageGrid {
    let mut img = ImageGrid::zeros(size, size, 3);
    for i in 0..size {
        for j in 0..size {
            let x = -1.0 + (2 * j + 1) as f64 / size as f64;
            let y = -1.0 + (2 * i + 1) as f64 / size as f64;
            // sky-like vertical gradient
            let mut rgb = [0.25 + 0.35 * (1.0 - y) / 2.0, 0.45 + 0.25 * (1.0 - y) / 2.0, 0.85 - 0.2 * (y + 1.0) / 2.0];
            // sun disk
            let r = ((x - 0.45).powi(2) + (y + 0.5).powi(2)).sqrt();
            if r < 0.22 {
                rgb = [0.98, 0.85, 0.35];
            }
            // hills with a wavy skyline
            let skyline = 0.15 + 0.12 * (3.1 * x).sin() + 0.05 * (9.0 * x + 0.4).sin();
            if y > skyline {
                let shade = 0.5 + 0.5 * (y - skyline);
                let stripes = 0.5 + 0.5 * (22.0 * (x + 0.6 * y)).sin();
                rgb = [0.15 + 0.2 * shade, 0.35 + 0.25 * shade * stripes, 0.12 + 0.1 * stripes];
            }
            // house: wall, roof and a checker window
            if (-0.75..-0.2).contains(&x) && (0.05..0.6).contains(&y) {
                rgb = [0.75, 0.3, 0.25];
                if (-0.62..-0.38).contains(&x) && (0.15..0.38).contains(&y) {
                    let cx = ((x + 0.62) / 0.06).floor() as i64;
                    let cy = ((y - 0.15) / 0.0575).floor() as i64;
                    let v = if (cx + cy) % 2 == 0 { 0.95 } else { 0.1 };
                    rgb = [v, v, 0.8 * v + 0.1];
                }
            }
            if (-0.25..=0.05).contains(&y) && (x + 0.475).abs() < (y + 0.25) * 1.1 {
                rgb = [0.35, 0.18, 0.12];
            }
            // fine diagonal texture on the right
            if x > 0.55 && y > 0.3 {
                let t = 0.5 + 0.5 * (40.0 * (x - y)).cos();
                rgb = [0.3 + 0.5 * t, 0.3 + 0.4 * t, 0.2 + 0.3 * t];
            }
            for (c, v) in rgb.into_iter().enumerate() {
                img.set(i, j, c, v.clamp(0.0, 1.0));
            }
        }
    }
    img
}

/// Direct supervision of pixel values from their coordinates.
pub struct ImageFitTask {
    pub image: ImageGrid,
    coords: DenseMatrix,
    targets: DenseMatrix,
    /// Clip predictions to [0, 1] before computing PSNR.
    pub clip: bool,
}

impl ImageFitTask {
    pub fn new(image: ImageGrid) -> Self {
        let coords = make_coordinate_grid(image.height, image.width);
        let targets = image.as_matrix();
        ImageFitTask { image, coords, targets, clip: false }
    }

    pub fn reconstruct(&self, spec: &NetworkSpec, params: &NetworkParams) -> Result<ImageGrid> {
        let out = predict(spec, params, &self.coords)?;
        ImageGrid::from_matrix(self.image.height, self.image.width, &out)
    }
}

impl TaskBinding for ImageFitTask {
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
            None => mse_loss(outputs, &self.targets),
            Some(idx) => mse_loss(outputs, &self.targets.select_rows(idx)),
        }
    }

    fn evaluate(&self, spec: &NetworkSpec, params: &NetworkParams) -> Result<f64> {
        let rec = self.reconstruct(spec, params)?;
        let rec = if self.clip { rec.clipped() } else { rec };
        psnr(&rec.pixels, &self.image.pixels, 1.0)
    }

    fn metric_name(&self) -> &'static str {
        "psnr"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pixel_grid() {
        let g = make_coordinate_grid(1, 1);
        assert_eq!(g.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn two_by_two_grid() {
        let g = make_coordinate_grid(2, 2);
        assert_eq!(g.as_slice(), &[-0.5, -0.5, 0.5, -0.5, -0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn grid_bounds_and_symmetry() {
        for (h, w) in [(3, 5), (64, 64), (7, 2)] {
            let g = make_coordinate_grid(h, w);
            let xs: Vec<f64> = (0..g.rows()).map(|r| g[(r, 0)]).collect();
            let ys: Vec<f64> = (0..g.rows()).map(|r| g[(r, 1)]).collect();
            let fold = |v: &[f64], f: fn(f64, f64) -> f64, init| v.iter().copied().fold(init, f);
            assert!((fold(&xs, f64::min, 9.0) - (-1.0 + 1.0 / w as f64)).abs() < 1e-15);
            assert!((fold(&xs, f64::max, -9.0) - (1.0 - 1.0 / w as f64)).abs() < 1e-15);
            assert!((fold(&ys, f64::min, 9.0) - (-1.0 + 1.0 / h as f64)).abs() < 1e-15);
            assert!(xs.iter().chain(&ys).all(|v| v.abs() < 1.0));
            // flipping columns negates x
            for i in 0..h {
                for j in 0..w {
                    let a = g[(i * w + j, 0)];
                    let b = g[(i * w + (w - 1 - j), 0)];
                    assert!((a + b).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn bundled_image_has_range_and_detail() {
        let img = bundled_test_image(64);
        assert_eq!(img.pixels.len(), 64 * 64 * 3);
        assert!(img.pixels.iter().all(|v| (0.0..=1.0).contains(v)));
        let mean = img.pixels.iter().sum::<f64>() / img.pixels.len() as f64;
        let var = img.pixels.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / img.pixels.len() as f64;
        assert!(var > 0.02);
        assert_eq!(img, bundled_test_image(64));
    }

    #[test]
    fn downsample_and_mirror() {
        let img = ImageGrid::new(2, 2, 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(img.downsample(2).unwrap().pixels, vec![0.5]);
        assert_eq!(img.mirrored().pixels, vec![1.0, 0.0, 0.0, 1.0]);
        assert!(img.downsample(3).is_err());
    }
}
