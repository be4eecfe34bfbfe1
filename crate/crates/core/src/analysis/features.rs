//! First-layer feature maps and their spectral complexity.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::network::{forward, NetworkParams, NetworkSpec};
use crate::tasks::{make_coordinate_grid, ImageGrid};

/// Relative magnitude a spectral peak must reach to be counted.
pub const PEAK_FRACTION: f64 = 0.1;

/// Post-activation output of every first-layer neuron on an `h × w` grid,
/// each normalized to [0, 1] independently (constant maps become 0).
pub fn first_layer_features(spec: &NetworkSpec, params: &NetworkParams, h: usize, w: usize) -> Result<Vec<ImageGrid>> {
    if spec.d_in != 2 {
        return Err(Error::arg(format!("feature maps need 2D input, network has {}", spec.d_in)));
    }
    if h == 0 || w == 0 {
        return Err(Error::arg("feature grid must be non-empty"));
    }
    let (_, cache) = forward(spec, params, &make_coordinate_grid(h, w))?;
    let post = cache.layer_post(0);
    (0..post.cols())
        .map(|k| {
            let mut v: Vec<f64> = (0..post.rows()).map(|p| post[(p, k)]).collect();
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for x in &mut v {
                *x = if hi > lo { (*x - lo) / (hi - lo) } else { 0.0 };
            }
            ImageGrid::new(h, w, 1, v)
        })
        .collect()
}

/// Tiles single-channel images row by row into a near-square mosaic with a
/// one-pixel black gap.
pub fn tile_mosaic(tiles: &[ImageGrid]) -> Result<ImageGrid> {
    let first = tiles.first().ok_or_else(|| Error::arg("mosaic needs at least one tile"))?;
    let (h, w) = (first.height, first.width);
    if tiles.iter().any(|t| t.height != h || t.width != w || t.channels != 1) {
        return Err(Error::shape("mosaic tiles must share one single-channel shape"));
    }
    let cols = (tiles.len() as f64).sqrt().ceil() as usize;
    let rows = tiles.len().div_ceil(cols);
    let mut out = ImageGrid::zeros(rows * (h + 1) - 1, cols * (w + 1) - 1, 1);
    for (k, t) in tiles.iter().enumerate() {
        let (r0, c0) = ((k / cols) * (h + 1), (k % cols) * (w + 1));
        for i in 0..h {
            for j in 0..w {
                out.set(r0 + i, c0 + j, 0, t.get(i, j, 0));
            }
        }
    }
    Ok(out)
}

/// Mosaic of the first-layer feature maps.
pub fn dump_first_layer_features(spec: &NetworkSpec, params: &NetworkParams, h: usize, w: usize) -> Result<ImageGrid> {
    tile_mosaic(&first_layer_features(spec, params, h, w)?)
}

/// Magnitude of the 2D DFT of a Hann-windowed, mean-removed tile.
pub fn magnitude_spectrum(tile: &ImageGrid) -> Result<Vec<f64>> {
    if tile.channels != 1 {
        return Err(Error::arg("spectrum needs a single-channel tile"));
    }
    let (h, w) = (tile.height, tile.width);
    let mean = tile.pixels.iter().sum::<f64>() / tile.pixels.len() as f64;
    let hann = |k: usize, n: usize| {
        if n <= 1 {
            1.0
        } else {
            0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()
        }
    };
    let mut buf: Vec<Complex<f64>> = (0..h * w)
        .map(|p| Complex::new((tile.pixels[p] - mean) * hann(p / w, h) * hann(p % w, w), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft_forward(w);
    for row in buf.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(h);
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for j in 0..w {
        for i in 0..h {
            col[i] = buf[i * w + j];
        }
        col_fft.process(&mut col);
        for i in 0..h {
            buf[i * w + j] = col[i];
        }
    }
    Ok(buf.iter().map(|c| c.norm()).collect())
}

/// Local maxima (8-neighborhood, periodic) of the magnitude spectrum at or
/// above [`PEAK_FRACTION`] of its maximum. Ties go to the first in scan order.
pub fn fft_peak_count(tile: &ImageGrid) -> Result<usize> {
    let mag = magnitude_spectrum(tile)?;
    let (h, w) = (tile.height, tile.width);
    let max = mag.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Ok(0);
    }
    let mut count = 0;
    for i in 0..h {
        for j in 0..w {
            let p = i * w + j;
            let v = mag[p];
            if v < PEAK_FRACTION * max {
                continue;
            }
            let mut is_peak = true;
            'scan: for di in [h - 1, 0, 1] {
                for dj in [w - 1, 0, 1] {
                    let q = ((i + di) % h) * w + (j + dj) % w;
                    if q == p {
                        continue;
                    }
                    if mag[q] > v || (mag[q] == v && q < p) {
                        is_peak = false;
                        break 'scan;
                    }
                }
            }
            if is_peak {
                count += 1;
            }
        }
    }
    Ok(count)
}

pub fn mean_peak_count(tiles: &[ImageGrid]) -> Result<f64> {
    if tiles.is_empty() {
        return Err(Error::arg("no tiles"));
    }
    let mut total = 0;
    for t in tiles {
        total += fft_peak_count(t)?;
    }
    Ok(total as f64 / tiles.len() as f64)
}
